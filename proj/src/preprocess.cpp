#include "ngc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace ngc {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/// Expand a monic polynomial from its roots; returns real coefficients
/// (descending powers). Roots must come in conjugate pairs.
std::array<double, 5> poly_from_roots(const std::array<std::complex<double>, 4>& roots) {
    std::array<std::complex<double>, 5> c{};
    c[0] = 1.0;
    for (int r = 0; r < 4; ++r) {
        for (int i = r + 1; i >= 1; --i) c[i] = c[i] - roots[r] * c[i - 1];
    }
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) out[i] = c[i].real();
    return out;
}

/// One pass of a direct-form-II-transposed IIR filter with initial state zi.
VecX lfilter(const ButterworthCoeffs& f, const VecX& x, const Eigen::Vector4d& zi) {
    VecX y(x.size());
    Eigen::Vector4d z = zi;
    for (Index n = 0; n < x.size(); ++n) {
        const double xn = x[n];
        const double yn = f.b[0] * xn + z[0];
        z[0] = f.b[1] * xn + z[1] - f.a[1] * yn;
        z[1] = f.b[2] * xn + z[2] - f.a[2] * yn;
        z[2] = f.b[3] * xn + z[3] - f.a[3] * yn;
        z[3] = f.b[4] * xn - f.a[4] * yn;
        y[n] = yn;
    }
    return y;
}

/// Steady-state filter state for a unit step input, so that a constant
/// signal passes through without transient.
Eigen::Vector4d lfilter_zi(const ButterworthCoeffs& f) {
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    for (int i = 0; i < 4; ++i) A(i, 0) = -f.a[i + 1];
    for (int i = 0; i < 3; ++i) A(i, i + 1) = 1.0;
    Eigen::Vector4d B;
    for (int i = 0; i < 4; ++i) B[i] = f.b[i + 1] - f.a[i + 1] * f.b[0];
    Eigen::Matrix4d M = Eigen::Matrix4d::Identity() - A;
    return M.colPivHouseholderQr().solve(B);
}

constexpr Index kPadLen = 15;  // 3 * (filter length)

}  // namespace

double ButterworthCoeffs::magnitude_at(double freq_hz, double fs) const {
    const double w = 2.0 * kPi * freq_hz / fs;
    const std::complex<double> zinv = std::exp(std::complex<double>(0.0, -w));
    std::complex<double> num = 0.0, den = 0.0, zp = 1.0;
    for (int i = 0; i < 5; ++i) {
        num += b[i] * zp;
        den += a[i] * zp;
        zp *= zinv;
    }
    return std::abs(num / den);
}

ButterworthCoeffs design_butterworth_lowpass(double cutoff_hz, double fs) {
    if (fs <= 0.0) throw ConfigError("sampling rate must be positive");
    if (cutoff_hz <= 0.0 || cutoff_hz >= fs / 2.0)
        throw ConfigError("cutoff must lie in (0, Nyquist); got " + std::to_string(cutoff_hz) +
                          " Hz at fs " + std::to_string(fs) + " Hz");

    // Analog prototype poles scaled to the prewarped cutoff.
    const double warped = 2.0 * fs * std::tan(kPi * cutoff_hz / fs);
    const int order = 4;
    std::array<std::complex<double>, 4> zpoles;
    for (int k = 0; k < order; ++k) {
        const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
        const std::complex<double> s = warped * std::exp(std::complex<double>(0.0, theta));
        zpoles[k] = (2.0 * fs + s) / (2.0 * fs - s);  // bilinear transform
    }

    ButterworthCoeffs f;
    f.a = poly_from_roots(zpoles);
    // Zeros all at z = -1: (1 + z^-1)^4.
    f.b = {1.0, 4.0, 6.0, 4.0, 1.0};
    const double a_dc = f.a[0] + f.a[1] + f.a[2] + f.a[3] + f.a[4];
    const double gain = a_dc / 16.0;  // unity gain at DC
    for (double& bi : f.b) bi *= gain;
    return f;
}

VecX filtfilt(const ButterworthCoeffs& coeffs, const VecX& x) {
    const Index n = x.size();
    if (n <= kPadLen)
        throw InputError("series of length " + std::to_string(n) +
                         " is too short for zero-phase filtering (needs > " +
                         std::to_string(kPadLen) + ")");

    // Odd reflection at both ends damps the startup transient.
    VecX ext(n + 2 * kPadLen);
    for (Index i = 0; i < kPadLen; ++i) ext[i] = 2.0 * x[0] - x[kPadLen - i];
    ext.segment(kPadLen, n) = x;
    for (Index i = 0; i < kPadLen; ++i) ext[n + kPadLen + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    const Eigen::Vector4d zi = lfilter_zi(coeffs);
    VecX fwd = lfilter(coeffs, ext, zi * ext[0]);
    VecX rev = fwd.reverse();
    VecX bwd = lfilter(coeffs, rev, zi * rev[0]);
    VecX out = bwd.reverse();
    return out.segment(kPadLen, n);
}

VecX lowpass_filter(const VecX& signal, double cutoff_hz, double fs) {
    return filtfilt(design_butterworth_lowpass(cutoff_hz, fs), signal);
}

VecX resultant_velocity(const MatX& positions, double fs) {
    const Index n = positions.rows();
    if (n < 2) throw InputError("need at least 2 frames to differentiate");
    MatX vel(n, positions.cols());
    vel.row(0) = (positions.row(1) - positions.row(0)) * fs;
    vel.row(n - 1) = (positions.row(n - 1) - positions.row(n - 2)) * fs;
    if (n > 2)
        vel.middleRows(1, n - 2) =
            (positions.bottomRows(n - 2) - positions.topRows(n - 2)) * (fs / 2.0);
    return vel.rowwise().norm();
}

Index detect_release(const VecX& reference_channel) {
    if (reference_channel.size() == 0) throw InputError("empty reference channel");
    Index best = 0;
    reference_channel.maxCoeff(&best);  // Eigen returns the first maximum
    return best;
}

JointPanel clip_window(const JointPanel& panel, Index event_idx, double pre_s, double post_s) {
    const Index pre = static_cast<Index>(std::llround(pre_s * panel.fs));
    const Index post = static_cast<Index>(std::llround(post_s * panel.fs));
    const Index start = event_idx - pre;
    const Index stop = event_idx + post;
    if (start < 0 || stop > panel.frames()) {
        std::ostringstream msg;
        msg << "window [" << start << ", " << stop << ") around event frame " << event_idx
            << " exceeds recording of " << panel.frames() << " frames";
        throw InputError(msg.str());
    }
    JointPanel out;
    out.fs = panel.fs;
    out.channels = panel.channels;
    out.values = panel.values.middleRows(start, stop - start);
    return out;
}

JointPanel downsample(const JointPanel& panel, int factor) {
    if (factor <= 0) throw ConfigError("downsample factor must be positive");
    JointPanel out;
    out.fs = panel.fs / factor;
    out.channels = panel.channels;
    const Index n = (panel.frames() + factor - 1) / factor;
    out.values.resize(n, panel.dim());
    for (Index i = 0; i < n; ++i) out.values.row(i) = panel.values.row(i * factor);
    return out;
}

NormalizeResult normalize_minmax(std::vector<MatX>& trials) {
    NormalizeResult res;
    if (trials.empty()) return res;
    const Index p = trials.front().cols();
    res.range.resize(p);
    for (Index j = 0; j < p; ++j) {
        double lo = trials.front()(0, j), hi = lo;
        for (const MatX& t : trials) {
            lo = std::min(lo, t.col(j).minCoeff());
            hi = std::max(hi, t.col(j).maxCoeff());
        }
        res.range[j] = {lo, hi};
        if (hi > lo) {
            const double scale = 1.0 / (hi - lo);
            for (MatX& t : trials) t.col(j) = (t.col(j).array() - lo) * scale;
        } else {
            for (MatX& t : trials) t.col(j).setZero();
            res.warnings.push_back("channel " + std::to_string(j) +
                                   " is constant; normalized to zeros");
        }
    }
    return res;
}

ChannelId apply_handedness(const ChannelId& ch,
                           const std::map<std::string, std::string>& handedness) {
    auto it = handedness.find(ch.agent);
    if (it == handedness.end()) return ch;
    const bool right_handed = it->second != "left";
    const std::string back = right_handed ? "right_" : "left_";
    const std::string front = right_handed ? "left_" : "right_";
    ChannelId out = ch;
    if (ch.joint.rfind(back, 0) == 0)
        out.joint = "back_" + ch.joint.substr(back.size());
    else if (ch.joint.rfind(front, 0) == 0)
        out.joint = "front_" + ch.joint.substr(front.size());
    return out;
}

JointPanel differentiate(const JointPanel& panel) {
    const Index n = panel.frames();
    if (n < 2) throw InputError("need at least 2 frames to differentiate");
    JointPanel out;
    out.fs = panel.fs;
    out.channels = panel.channels;
    out.values.resize(n, panel.dim());
    out.values.row(0) = (panel.values.row(1) - panel.values.row(0)) * panel.fs;
    out.values.row(n - 1) = (panel.values.row(n - 1) - panel.values.row(n - 2)) * panel.fs;
    if (n > 2)
        out.values.middleRows(1, n - 2) =
            (panel.values.bottomRows(n - 2) - panel.values.topRows(n - 2)) * (panel.fs / 2.0);
    return out;
}

namespace {

/// Channel order: all channels of the first-seen agent, then the second.
/// agent_split is the boundary; more than two agents is rejected.
std::pair<std::vector<Index>, Index> agent_order(const std::vector<ChannelId>& channels) {
    std::vector<std::string> agents;
    for (const ChannelId& ch : channels)
        if (std::find(agents.begin(), agents.end(), ch.agent) == agents.end())
            agents.push_back(ch.agent);
    if (agents.size() != 2)
        throw InputError("expected exactly 2 agents, found " + std::to_string(agents.size()));
    std::vector<Index> order;
    for (const std::string& a : agents)
        for (Index c = 0; c < static_cast<Index>(channels.size()); ++c)
            if (channels[c].agent == a) order.push_back(c);
    Index split = 0;
    for (const ChannelId& ch : channels)
        if (ch.agent == agents[0]) ++split;
    return {order, split};
}

}  // namespace

TrialDataset assemble_dataset(std::vector<JointPanel> trials, const PairConfig& config) {
    if (trials.empty()) throw InputError("no trials");
    for (size_t t = 1; t < trials.size(); ++t)
        if (trials[t].channels != trials[0].channels)
            throw InputError("trial " + std::to_string(t) + " has a different channel set");

    if (!config.handedness.empty())
        for (JointPanel& panel : trials)
            for (ChannelId& ch : panel.channels) ch = apply_handedness(ch, config.handedness);

    if (config.align) {
        const Index ref = trials[0].channel_index(config.reference_channel);
        if (ref < 0)
            throw InputError("reference channel '" + config.reference_channel + "' not found");
        for (size_t t = 0; t < trials.size(); ++t) {
            JointPanel& panel = trials[t];
            const Index event = detect_release(panel.values.col(ref));
            try {
                panel = clip_window(panel, event, config.pre_s, config.post_s);
            } catch (const InputError& e) {
                throw InputError("trial " + std::to_string(t) + ": " + e.what());
            }
        }
    }

    for (JointPanel& panel : trials)
        if (config.downsample_factor != 1) panel = downsample(panel, config.downsample_factor);

    const auto [order, split] = agent_order(trials[0].channels);

    TrialDataset ds;
    ds.fs = trials[0].fs;
    ds.agent_split = split;
    for (Index c : order) ds.channels.push_back(trials[0].channels[c]);
    for (const JointPanel& panel : trials) {
        if (panel.frames() != trials[0].frames())
            throw InputError("trials have inconsistent frame counts after clipping");
        MatX m(panel.frames(), panel.dim());
        for (Index c = 0; c < panel.dim(); ++c) m.col(c) = panel.values.col(order[c]);
        ds.trials.push_back(std::move(m));
    }

    switch (config.normalize) {
        case NormalizeMode::Pair: {
            NormalizeResult norm = normalize_minmax(ds.trials);
            ds.channel_range = norm.range;
            break;
        }
        case NormalizeMode::Trial:
            for (MatX& t : ds.trials) {
                std::vector<MatX> one{std::move(t)};
                normalize_minmax(one);
                t = std::move(one[0]);
            }
            break;
        case NormalizeMode::None:
            break;
    }
    return ds;
}

TrialDataset build_dataset(const std::vector<MarkerPanel>& trials, const PairConfig& config) {
    if (trials.empty()) throw InputError("no trials");
    std::vector<JointPanel> panels;
    panels.reserve(trials.size());
    for (size_t t = 0; t < trials.size(); ++t) {
        const MarkerPanel& mp = trials[t];
        if (mp.markers != trials[0].markers)
            throw InputError("trial " + std::to_string(t) + " has a different marker set");
        JointPanel panel;
        panel.fs = mp.fs;
        panel.channels = mp.markers;
        panel.values.resize(mp.frames(), static_cast<Index>(mp.markers.size()));
        for (size_t m = 0; m < mp.markers.size(); ++m) {
            MatX filtered(mp.positions[m].rows(), 3);
            for (int axis = 0; axis < 3; ++axis) {
                try {
                    filtered.col(axis) =
                        lowpass_filter(mp.positions[m].col(axis), config.cutoff_hz, mp.fs);
                } catch (const InputError& e) {
                    throw InputError("trial " + std::to_string(t) + ", marker " +
                                     mp.markers[m].label() + ": " + e.what());
                }
            }
            panel.values.col(static_cast<Index>(m)) = resultant_velocity(filtered, mp.fs);
        }
        panels.push_back(std::move(panel));
    }
    return assemble_dataset(std::move(panels), config);
}

}  // namespace ngc
