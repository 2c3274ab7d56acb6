#pragma once

#include <optional>
#include <string>

#include "ngc/cmlp.hpp"
#include "ngc/types.hpp"

namespace ngc {

enum class GroupNorm { L2, L1 };

/// Causal strength per (target i, source j, lag k).
struct NgcTensor {
    double fs = 0.0;
    std::vector<ChannelId> channels;
    Index agent_split = 0;
    int K = 0;
    std::vector<MatX> values;  // values[i] is p x K; (j, k-1) entry

    Index p() const { return static_cast<Index>(values.size()); }
};

/// Lag-summed p x p causal strength matrix; entry (i, j) is source j -> target i.
struct NgcMatrix {
    std::vector<ChannelId> channels;
    Index agent_split = 0;
    MatX values;

    Index p() const { return values.rows(); }
};

/// Block means of the causal matrix: intra-agent (pp, bb) and inter-agent
/// (pb: A-source -> B-target, bp: B-source -> A-target). Intra blocks need
/// at least two channels; ratios are to the four-index sum.
struct CausalIndexes {
    std::optional<double> pp, bb;
    double pb = 0.0, bp = 0.0;
    std::optional<double> ratio_pp, ratio_bb, ratio_pb, ratio_bp;
};

/// Per-entry lag (seconds) maximizing the causal strength; NaN where the
/// lag-summed strength did not exceed the threshold.
struct LagMatrix {
    double fs = 0.0;
    std::vector<ChannelId> channels;
    Index agent_split = 0;
    MatX seconds;  // NaN = missing
    double threshold = 0.0;

    Index p() const { return seconds.rows(); }
};

/// Block means of present lag entries. A block is excluded when more than
/// 90% of its candidate entries are missing.
struct LagIndexes {
    std::optional<double> pp, bb, pb, bp;
    double present_pp = 0.0, present_bb = 0.0, present_pb = 0.0, present_bp = 0.0;
};

/// Mean causal matrix over pairs plus its two inter-agent slices.
struct InterpersonalSets {
    MatX mean;    // p x p
    MatX a_to_b;  // targets in agent B, sources in agent A
    MatX b_to_a;  // targets in agent A, sources in agent B
};

/// Group norm over the hidden-unit weights of each (source, lag) column.
NgcTensor extract_tensor(const CmlpBank& bank, const std::vector<ChannelId>& channels,
                         Index agent_split, double fs, GroupNorm norm = GroupNorm::L2);

/// Sum over lags.
NgcMatrix aggregate_matrix(const NgcTensor& tensor);

CausalIndexes causal_indexes(const NgcMatrix& matrix);

/// Mean of all off-diagonal entries.
double ngc_threshold(const NgcMatrix& matrix);

LagMatrix lag_matrix(const NgcTensor& tensor, double threshold);

LagIndexes lag_indexes(const LagMatrix& lags);

/// Fraction of off-diagonal entries strictly greater than zero.
double variable_usage_rate(const NgcMatrix& matrix);

InterpersonalSets interpersonal_sets(const std::vector<NgcMatrix>& matrices);

/// Graphviz text: one node per channel (colored by agent), one directed
/// edge j -> i per above-threshold entry, penwidth proportional to strength.
std::string to_dot(const NgcMatrix& matrix, double threshold);

}  // namespace ngc
