#pragma once

#include <array>
#include <map>

#include "ngc/types.hpp"

namespace ngc {

/// 4th-order IIR section, a[0] == 1.
struct ButterworthCoeffs {
    std::array<double, 5> b{};
    std::array<double, 5> a{};

    /// Magnitude of the (single-pass) frequency response at freq_hz.
    double magnitude_at(double freq_hz, double fs) const;
};

/// Bilinear-transform lowpass design, unity gain at DC.
ButterworthCoeffs design_butterworth_lowpass(double cutoff_hz, double fs);

/// Forward-backward (zero phase) application with odd-reflection padding
/// and steady-state initial conditions.
VecX filtfilt(const ButterworthCoeffs& coeffs, const VecX& x);

/// Zero-phase 4th-order Butterworth low pass.
VecX lowpass_filter(const VecX& signal, double cutoff_hz, double fs);

/// Per-frame Euclidean norm of the finite-difference velocity.
/// Central differences on interior frames, one-sided at the edges.
VecX resultant_velocity(const MatX& positions, double fs);

/// Index of the global maximum; earliest index wins ties.
Index detect_release(const VecX& reference_channel);

/// Window [event - round(pre_s*fs), event + round(post_s*fs)).
JointPanel clip_window(const JointPanel& panel, Index event_idx, double pre_s, double post_s);

/// Keep every factor-th frame starting at frame 0.
JointPanel downsample(const JointPanel& panel, int factor);

enum class NormalizeMode { Pair, Trial, None };

struct NormalizeResult {
    std::vector<MinMax> range;          // pooled per channel (Pair mode)
    std::vector<std::string> warnings;  // constant channels, etc.
};

/// In-place (x - min) / (max - min) per channel, min/max pooled over all
/// trials. Constant channels map to zero and produce a warning.
NormalizeResult normalize_minmax(std::vector<MatX>& trials);

struct PairConfig {
    std::string reference_channel;  // "<agent>_<joint>" label, post-relabeling
    double cutoff_hz = 10.0;
    double pre_s = 2.0;
    double post_s = 0.5;
    int downsample_factor = 5;
    NormalizeMode normalize = NormalizeMode::Pair;
    bool align = true;  // detect release and clip; off for pre-aligned data
    std::map<std::string, std::string> handedness;  // agent -> "right" | "left"
};

/// Rename side-specific joints ("right_*"/"left_*") to "back_*"/"front_*"
/// according to the agent's dominant side.
ChannelId apply_handedness(const ChannelId& ch,
                           const std::map<std::string, std::string>& handedness);

/// Full marker pipeline for one pair:
/// filter -> resultant velocity -> release alignment -> clip -> downsample,
/// per trial, then pooled min-max normalization.
TrialDataset build_dataset(const std::vector<MarkerPanel>& trials, const PairConfig& config);

/// Same tail of the pipeline for speed panels that skipped the marker stage
/// (optional alignment + clip, downsample, normalize).
TrialDataset assemble_dataset(std::vector<JointPanel> trials, const PairConfig& config);

/// Central-difference time derivative of every channel (the acceleration
/// input variant); keeps panel shape.
JointPanel differentiate(const JointPanel& panel);

}  // namespace ngc
