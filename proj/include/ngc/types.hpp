#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ngc {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using MatXi = Eigen::MatrixXi;
using Index = Eigen::Index;

/// Bad numeric settings (cutoff above Nyquist, negative threshold, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or out-of-range data (short series, mismatched shapes, ...).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Optimization blew up (non-finite loss).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ChannelId {
    std::string agent;
    std::string joint;

    std::string label() const { return agent + "_" + joint; }

    bool operator==(const ChannelId& o) const {
        return agent == o.agent && joint == o.joint;
    }
};

/// Raw 3D marker trajectories for one trial.
struct MarkerPanel {
    double fs = 0.0;
    std::vector<ChannelId> markers;
    std::vector<MatX> positions;  // per marker: frames x 3, meters

    Index frames() const { return positions.empty() ? 0 : positions.front().rows(); }
};

/// Rectangular multichannel scalar series (speeds or normalized values).
struct JointPanel {
    double fs = 0.0;
    std::vector<ChannelId> channels;
    MatX values;  // frames x channels

    Index frames() const { return values.rows(); }
    Index dim() const { return values.cols(); }

    Index channel_index(const std::string& label) const {
        for (Index c = 0; c < static_cast<Index>(channels.size()); ++c)
            if (channels[c].label() == label) return c;
        return -1;
    }
};

struct MinMax {
    double lo = 0.0;
    double hi = 0.0;
};

/// Normalized stack of trials feeding model training.
struct TrialDataset {
    double fs = 0.0;
    std::vector<ChannelId> channels;
    Index agent_split = 0;          // index of the first agent-B channel
    std::vector<MatX> trials;       // each T x p, values in [0,1]
    std::vector<MinMax> channel_range;  // pre-normalization per-channel range

    Index n_trials() const { return static_cast<Index>(trials.size()); }
    Index frames() const { return trials.empty() ? 0 : trials.front().rows(); }
    Index dim() const { return static_cast<Index>(channels.size()); }

    Index channel_index(const std::string& label) const {
        for (Index c = 0; c < dim(); ++c)
            if (channels[c].label() == label) return c;
        return -1;
    }
};

/// SplitMix64; used everywhere randomness is needed so that seeding is
/// a pure function of (seed, counter...) and independent of scheduling.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [-a, a].
    double symmetric(double a) { return (2.0 * uniform() - 1.0) * a; }

    /// Standard normal (Box-Muller, one draw per call pair kept internal).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

/// Deterministic stream split: child seed from a parent seed and counters.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    SplitMix64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (a + 1)) ^ (0xc2b2ae3d27d4eb4fULL * (b + 1)));
    return rng.next();
}

}  // namespace ngc
