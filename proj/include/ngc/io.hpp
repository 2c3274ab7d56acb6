#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ngc/causality.hpp"
#include "ngc/cmlp.hpp"
#include "ngc/preprocess.hpp"
#include "ngc/types.hpp"

namespace ngc::io {

namespace fs = std::filesystem;

/// Wide marker CSV: header `time,<agent>_<joint>_x,<agent>_<joint>_y,...`.
MarkerPanel read_marker_csv(const fs::path& path);

/// Velocity CSV: header `time,<agent>_<joint>,...`.
JointPanel read_velocity_csv(const fs::path& path);
void write_velocity_csv(const fs::path& path, const JointPanel& panel);

/// Per-pair dataset description. Relative trial paths resolve against the
/// manifest's directory.
struct DatasetManifest {
    enum class Format { Marker, Velocity };
    Format format = Format::Velocity;
    std::vector<fs::path> trial_files;
    std::string reference_channel;
    double fs = 0.0;
    std::optional<double> pre_s, post_s;
    std::optional<int> downsample_factor;
    std::optional<double> cutoff_hz;
    std::optional<std::string> normalize;  // "pair" | "trial" | "none"
    bool align = true;
    std::map<std::string, std::string> handedness;
    std::string name;  // pair label; defaults to the manifest stem
};

DatasetManifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const DatasetManifest& manifest);

/// Assemble the manifest's trials through the preprocessing pipeline.
TrialDataset load_dataset(const DatasetManifest& manifest, const PairConfig& config);

void write_matrix_csv(const fs::path& path, const NgcMatrix& matrix);
NgcMatrix read_matrix_csv(const fs::path& path);

/// Lag CSV with empty cells for missing entries.
void write_lag_csv(const fs::path& path, const LagMatrix& lags);

void write_tensor_json(const fs::path& path, const NgcTensor& tensor);
NgcTensor read_tensor_json(const fs::path& path);

/// JSON manifest plus a flat little-endian float64 sidecar, per model:
/// W1 in (h, j, k) row-major, then b1, W2, b2.
void save_bank(const fs::path& json_path, const CmlpBank& bank,
               const std::vector<ChannelId>& channels, Index agent_split, double fs);

struct LoadedBank {
    CmlpBank bank;
    std::vector<ChannelId> channels;
    Index agent_split = 0;
    double fs = 0.0;
};

LoadedBank load_bank(const fs::path& json_path);

std::string format_double(double v);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace ngc::io
