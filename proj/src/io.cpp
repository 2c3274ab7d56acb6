#include "ngc/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ngc::io {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

/// "<agent>_<rest>": agent is the token before the first underscore.
ChannelId parse_channel(const std::string& header, const fs::path& path) {
    const auto us = header.find('_');
    if (us == std::string::npos || us == 0 || us + 1 >= header.size())
        throw InputError(path.string() + ": column '" + header +
                         "' is not of the form <agent>_<joint>");
    return {header.substr(0, us), header.substr(us + 1)};
}

double parse_double(const std::string& cell, const fs::path& path, size_t line_no) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": cannot parse value '" + cell + "'");
    }
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path,
                                                  std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    header = split(strip_cr(line), ',');

    std::vector<std::vector<double>> rows;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (size_t c = 0; c < cells.size(); ++c) row[c] = parse_double(cells[c], path, line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path.string() + ": no data rows");
    return rows;
}

double infer_fs(const std::vector<std::vector<double>>& rows, const fs::path& path) {
    if (rows.size() < 2) throw InputError(path.string() + ": need at least 2 frames");
    const double dt = rows[1][0] - rows[0][0];
    if (dt <= 0.0) throw InputError(path.string() + ": time column must increase");
    return 1.0 / dt;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MarkerPanel read_marker_csv(const fs::path& path) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(path, header);
    if (header.empty() || header[0] != "time")
        throw InputError(path.string() + ": first column must be 'time'");
    if ((header.size() - 1) % 3 != 0)
        throw InputError(path.string() + ": marker columns must come in x/y/z triplets");

    MarkerPanel panel;
    panel.fs = infer_fs(rows, path);
    const size_t n_markers = (header.size() - 1) / 3;
    const char axes[3] = {'x', 'y', 'z'};
    for (size_t m = 0; m < n_markers; ++m) {
        const std::string& hx = header[1 + 3 * m];
        if (hx.size() < 3 || hx.substr(hx.size() - 2) != "_x")
            throw InputError(path.string() + ": column '" + hx + "' should end in _x");
        const std::string base = hx.substr(0, hx.size() - 2);
        for (int a = 1; a < 3; ++a) {
            const std::string expected = base + "_" + axes[a];
            if (header[1 + 3 * m + a] != expected)
                throw InputError(path.string() + ": expected column '" + expected + "', got '" +
                                 header[1 + 3 * m + a] + "'");
        }
        panel.markers.push_back(parse_channel(base, path));
        MatX pos(static_cast<Index>(rows.size()), 3);
        for (size_t r = 0; r < rows.size(); ++r)
            for (int a = 0; a < 3; ++a) pos(static_cast<Index>(r), a) = rows[r][1 + 3 * m + a];
        panel.positions.push_back(std::move(pos));
    }
    return panel;
}

JointPanel read_velocity_csv(const fs::path& path) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(path, header);
    if (header.empty() || header[0] != "time")
        throw InputError(path.string() + ": first column must be 'time'");

    JointPanel panel;
    panel.fs = infer_fs(rows, path);
    for (size_t c = 1; c < header.size(); ++c) panel.channels.push_back(parse_channel(header[c], path));
    panel.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(header.size() - 1));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 1; c < header.size(); ++c)
            panel.values(static_cast<Index>(r), static_cast<Index>(c - 1)) = rows[r][c];
    return panel;
}

void write_velocity_csv(const fs::path& path, const JointPanel& panel) {
    std::ostringstream out;
    out << "time";
    for (const ChannelId& ch : panel.channels) out << ',' << ch.label();
    out << '\n';
    for (Index t = 0; t < panel.frames(); ++t) {
        out << format_double(static_cast<double>(t) / panel.fs);
        for (Index c = 0; c < panel.dim(); ++c) out << ',' << format_double(panel.values(t, c));
        out << '\n';
    }
    write_text(path, out.str());
}

DatasetManifest read_manifest(const fs::path& path) {
    json j = json::parse(read_text(path));
    DatasetManifest m;
    const std::string fmt = j.value("format", "velocity");
    if (fmt == "marker")
        m.format = DatasetManifest::Format::Marker;
    else if (fmt == "velocity")
        m.format = DatasetManifest::Format::Velocity;
    else
        throw ConfigError(path.string() + ": unknown format '" + fmt + "'");

    if (!j.contains("trials") || !j["trials"].is_array() || j["trials"].empty())
        throw ConfigError(path.string() + ": 'trials' must be a non-empty array");
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    for (const auto& t : j["trials"]) {
        fs::path p = t.get<std::string>();
        m.trial_files.push_back(p.is_absolute() ? p : base / p);
    }
    m.reference_channel = j.value("reference_channel", "");
    m.fs = j.value("fs", 0.0);
    if (j.contains("window")) {
        m.pre_s = j["window"].value("pre_s", 2.0);
        m.post_s = j["window"].value("post_s", 0.5);
    }
    if (j.contains("downsample_factor")) m.downsample_factor = j["downsample_factor"].get<int>();
    if (j.contains("cutoff_hz")) m.cutoff_hz = j["cutoff_hz"].get<double>();
    if (j.contains("normalize")) m.normalize = j["normalize"].get<std::string>();
    m.align = j.value("align", m.format == DatasetManifest::Format::Marker);
    if (j.contains("handedness"))
        for (auto& [agent, side] : j["handedness"].items())
            m.handedness[agent] = side.get<std::string>();
    m.name = j.value("name", path.stem().string());
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    json j;
    j["format"] = m.format == DatasetManifest::Format::Marker ? "marker" : "velocity";
    j["trials"] = json::array();
    for (const fs::path& t : m.trial_files) j["trials"].push_back(t.string());
    if (!m.reference_channel.empty()) j["reference_channel"] = m.reference_channel;
    if (m.fs > 0.0) j["fs"] = m.fs;
    if (m.pre_s && m.post_s) j["window"] = {{"pre_s", *m.pre_s}, {"post_s", *m.post_s}};
    if (m.downsample_factor) j["downsample_factor"] = *m.downsample_factor;
    if (m.cutoff_hz) j["cutoff_hz"] = *m.cutoff_hz;
    if (m.normalize) j["normalize"] = *m.normalize;
    j["align"] = m.align;
    if (!m.handedness.empty()) j["handedness"] = m.handedness;
    j["name"] = m.name;
    write_text(path, j.dump(2) + "\n");
}

TrialDataset load_dataset(const DatasetManifest& manifest, const PairConfig& config) {
    if (manifest.format == DatasetManifest::Format::Marker) {
        std::vector<MarkerPanel> trials;
        for (const fs::path& f : manifest.trial_files) trials.push_back(read_marker_csv(f));
        return build_dataset(trials, config);
    }
    std::vector<JointPanel> trials;
    for (const fs::path& f : manifest.trial_files) trials.push_back(read_velocity_csv(f));
    return assemble_dataset(std::move(trials), config);
}

void write_matrix_csv(const fs::path& path, const NgcMatrix& matrix) {
    std::ostringstream out;
    out << "target\\source";
    for (const ChannelId& ch : matrix.channels) out << ',' << ch.label();
    out << '\n';
    for (Index i = 0; i < matrix.p(); ++i) {
        out << matrix.channels[i].label();
        for (Index j = 0; j < matrix.p(); ++j) out << ',' << format_double(matrix.values(i, j));
        out << '\n';
    }
    write_text(path, out.str());
}

NgcMatrix read_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    const auto header = split(strip_cr(line), ',');
    if (header.size() < 2) throw InputError(path.string() + ": no channel columns");

    NgcMatrix m;
    for (size_t c = 1; c < header.size(); ++c) m.channels.push_back(parse_channel(header[c], path));
    const Index p = static_cast<Index>(m.channels.size());
    m.values.resize(p, p);
    size_t line_no = 1;
    for (Index i = 0; i < p; ++i) {
        if (!std::getline(in, line))
            throw InputError(path.string() + ": expected " + std::to_string(p) + " rows");
        ++line_no;
        const auto cells = split(strip_cr(line), ',');
        if (static_cast<Index>(cells.size()) != p + 1)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad row width");
        for (Index j = 0; j < p; ++j) m.values(i, j) = parse_double(cells[j + 1], path, line_no);
    }
    // First agent's channel count gives the split.
    m.agent_split = 0;
    for (const ChannelId& ch : m.channels)
        if (ch.agent == m.channels.front().agent) ++m.agent_split;
    return m;
}

void write_lag_csv(const fs::path& path, const LagMatrix& lags) {
    std::ostringstream out;
    out << "target\\source";
    for (const ChannelId& ch : lags.channels) out << ',' << ch.label();
    out << '\n';
    for (Index i = 0; i < lags.p(); ++i) {
        out << lags.channels[i].label();
        for (Index j = 0; j < lags.p(); ++j) {
            out << ',';
            if (std::isfinite(lags.seconds(i, j))) out << format_double(lags.seconds(i, j));
        }
        out << '\n';
    }
    write_text(path, out.str());
}

void write_tensor_json(const fs::path& path, const NgcTensor& tensor) {
    json j;
    j["p"] = tensor.p();
    j["K"] = tensor.K;
    j["fs"] = tensor.fs;
    j["agent_split"] = tensor.agent_split;
    j["channels"] = json::array();
    for (const ChannelId& ch : tensor.channels) j["channels"].push_back(ch.label());
    std::vector<double> flat;
    flat.reserve(tensor.p() * tensor.p() * tensor.K);
    for (Index i = 0; i < tensor.p(); ++i)
        for (Index j2 = 0; j2 < tensor.p(); ++j2)
            for (int k = 0; k < tensor.K; ++k) flat.push_back(tensor.values[i](j2, k));
    j["values"] = flat;  // (i, j, k) row-major
    write_text(path, j.dump() + "\n");
}

NgcTensor read_tensor_json(const fs::path& path) {
    json j = json::parse(read_text(path));
    NgcTensor t;
    const Index p = j.at("p").get<Index>();
    t.K = j.at("K").get<int>();
    t.fs = j.at("fs").get<double>();
    t.agent_split = j.at("agent_split").get<Index>();
    for (const auto& label : j.at("channels"))
        t.channels.push_back(parse_channel(label.get<std::string>(), path));
    const auto flat = j.at("values").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != p * p * t.K)
        throw InputError(path.string() + ": tensor size mismatch");
    size_t idx = 0;
    for (Index i = 0; i < p; ++i) {
        MatX slab(p, t.K);
        for (Index j2 = 0; j2 < p; ++j2)
            for (int k = 0; k < t.K; ++k) slab(j2, k) = flat[idx++];
        t.values.push_back(std::move(slab));
    }
    return t;
}

namespace {

void append_f64(std::string& buf, double v) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double take_f64(const std::string& buf, size_t& off) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + b])) << (8 * b);
    off += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_bank(const fs::path& json_path, const CmlpBank& bank,
               const std::vector<ChannelId>& channels, Index agent_split, double fs) {
    const fs::path bin_path = fs::path(json_path).replace_extension(".bin");

    std::string blob;
    for (const CmlpWeights& m : bank.models) {
        for (int h = 0; h < m.H; ++h)
            for (Index j = 0; j < m.p; ++j)
                for (int k = 1; k <= m.K; ++k) append_f64(blob, m.w1(h, m.col(j, k)));
        for (int h = 0; h < m.H; ++h) append_f64(blob, m.b1[h]);
        for (int h = 0; h < m.H; ++h) append_f64(blob, m.w2[h]);
        append_f64(blob, m.b2);
    }
    write_text(bin_path, blob);

    json j;
    j["p"] = bank.p();
    j["K"] = bank.config.max_lag;
    j["H"] = bank.config.hidden_units;
    j["fs"] = fs;
    j["agent_split"] = agent_split;
    j["channels"] = json::array();
    for (const ChannelId& ch : channels) j["channels"].push_back(ch.label());
    j["config"] = {{"max_lag", bank.config.max_lag},
                   {"hidden_units", bank.config.hidden_units},
                   {"learning_rate", bank.config.learning_rate},
                   {"lambda", bank.config.lambda},
                   {"penalty_scale", bank.config.penalty_scale},
                   {"iterations", bank.config.iterations},
                   {"seed", bank.config.seed}};
    j["r2"] = std::vector<double>(bank.r2.data(), bank.r2.data() + bank.r2.size());
    j["final_loss"] =
        std::vector<double>(bank.final_loss.data(), bank.final_loss.data() + bank.final_loss.size());
    j["weights_file"] = bin_path.filename().string();
    j["weights_layout"] = "per model: W1 (h,j,k row-major), b1, W2, b2; little-endian f64";
    write_text(json_path, j.dump(2) + "\n");
}

LoadedBank load_bank(const fs::path& json_path) {
    json j = json::parse(read_text(json_path));
    LoadedBank out;
    const Index p = j.at("p").get<Index>();
    const int K = j.at("K").get<int>();
    const int H = j.at("H").get<int>();
    out.fs = j.at("fs").get<double>();
    out.agent_split = j.at("agent_split").get<Index>();
    for (const auto& label : j.at("channels"))
        out.channels.push_back(parse_channel(label.get<std::string>(), json_path));

    TrainConfig cfg;
    const json& c = j.at("config");
    cfg.max_lag = c.at("max_lag").get<int>();
    cfg.hidden_units = c.at("hidden_units").get<int>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.lambda = c.at("lambda").get<double>();
    cfg.penalty_scale = c.value("penalty_scale", 1.0);
    cfg.iterations = c.at("iterations").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    out.bank.config = cfg;

    const auto r2 = j.at("r2").get<std::vector<double>>();
    const auto fl = j.at("final_loss").get<std::vector<double>>();
    out.bank.r2 = Eigen::Map<const VecX>(r2.data(), static_cast<Index>(r2.size()));
    out.bank.final_loss = Eigen::Map<const VecX>(fl.data(), static_cast<Index>(fl.size()));

    const fs::path bin_path =
        json_path.parent_path() / j.at("weights_file").get<std::string>();
    const std::string blob = read_text(bin_path);
    const size_t per_model = (static_cast<size_t>(H) * p * K + 2 * H + 1) * 8;
    if (blob.size() != per_model * static_cast<size_t>(p))
        throw InputError(bin_path.string() + ": sidecar size mismatch");

    size_t off = 0;
    for (Index i = 0; i < p; ++i) {
        CmlpWeights m = CmlpWeights::zeros(i, p, K, H);
        for (int h = 0; h < H; ++h)
            for (Index jj = 0; jj < p; ++jj)
                for (int k = 1; k <= K; ++k) m.w1(h, m.col(jj, k)) = take_f64(blob, off);
        for (int h = 0; h < H; ++h) m.b1[h] = take_f64(blob, off);
        for (int h = 0; h < H; ++h) m.w2[h] = take_f64(blob, off);
        m.b2 = take_f64(blob, off);
        out.bank.models.push_back(std::move(m));
    }
    return out;
}

}  // namespace ngc::io
