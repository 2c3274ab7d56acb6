#include "ngc/causality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ngc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

NgcTensor extract_tensor(const CmlpBank& bank, const std::vector<ChannelId>& channels,
                         Index agent_split, double fs, GroupNorm norm) {
    NgcTensor t;
    t.fs = fs;
    t.channels = channels;
    t.agent_split = agent_split;
    const Index p = bank.p();
    t.values.reserve(p);
    for (Index i = 0; i < p; ++i) {
        const CmlpWeights& m = bank.models[i];
        t.K = m.K;
        MatX slab(p, m.K);
        for (Index j = 0; j < p; ++j)
            for (int k = 1; k <= m.K; ++k) {
                const auto col = m.w1.col(m.col(j, k));
                slab(j, k - 1) = norm == GroupNorm::L2 ? col.norm() : col.lpNorm<1>();
            }
        t.values.push_back(std::move(slab));
    }
    return t;
}

NgcMatrix aggregate_matrix(const NgcTensor& tensor) {
    NgcMatrix m;
    m.channels = tensor.channels;
    m.agent_split = tensor.agent_split;
    const Index p = tensor.p();
    m.values.resize(p, p);
    for (Index i = 0; i < p; ++i) m.values.row(i) = tensor.values[i].rowwise().sum().transpose();
    return m;
}

namespace {

/// Mean over a rectangular block of the matrix, skipping the diagonal.
std::optional<double> block_mean(const MatX& values, Index i0, Index i1, Index j0, Index j1,
                                 bool intra) {
    Index count = 0;
    double sum = 0.0;
    for (Index i = i0; i < i1; ++i)
        for (Index j = j0; j < j1; ++j) {
            if (i == j) continue;
            sum += values(i, j);
            ++count;
        }
    if (intra && count == 0) return std::nullopt;
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

CausalIndexes causal_indexes(const NgcMatrix& matrix) {
    const Index p = matrix.p();
    const Index s = matrix.agent_split;
    if (s <= 0 || s >= p) throw InputError("agent_split must lie strictly inside (0, p)");

    CausalIndexes idx;
    idx.pp = block_mean(matrix.values, 0, s, 0, s, true);
    idx.bb = block_mean(matrix.values, s, p, s, p, true);
    idx.pb = *block_mean(matrix.values, s, p, 0, s, false);  // A sources -> B targets
    idx.bp = *block_mean(matrix.values, 0, s, s, p, false);  // B sources -> A targets

    if (idx.pp && idx.bb) {
        const double sum = *idx.pp + *idx.bb + idx.pb + idx.bp;
        if (sum > 0.0) {
            idx.ratio_pp = *idx.pp / sum;
            idx.ratio_bb = *idx.bb / sum;
            idx.ratio_pb = idx.pb / sum;
            idx.ratio_bp = idx.bp / sum;
        }
    }
    return idx;
}

double ngc_threshold(const NgcMatrix& matrix) {
    const Index p = matrix.p();
    if (p < 2) return 0.0;
    const double total = matrix.values.sum() - matrix.values.diagonal().sum();
    return total / static_cast<double>(p * (p - 1));
}

LagMatrix lag_matrix(const NgcTensor& tensor, double threshold) {
    LagMatrix lm;
    lm.fs = tensor.fs;
    lm.channels = tensor.channels;
    lm.agent_split = tensor.agent_split;
    lm.threshold = threshold;
    const Index p = tensor.p();
    lm.seconds = MatX::Constant(p, p, kNaN);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const auto lags = tensor.values[i].row(j);
            if (lags.sum() <= threshold) continue;
            Index best = 0;
            lags.maxCoeff(&best);  // first maximum = smallest lag
            lm.seconds(i, j) = static_cast<double>(best + 1) / tensor.fs;
        }
    return lm;
}

namespace {

struct BlockLag {
    std::optional<double> mean;
    double present = 0.0;
};

BlockLag lag_block(const MatX& sec, Index i0, Index i1, Index j0, Index j1) {
    Index candidates = 0, present = 0;
    double sum = 0.0;
    for (Index i = i0; i < i1; ++i)
        for (Index j = j0; j < j1; ++j) {
            if (i == j) continue;
            ++candidates;
            if (std::isfinite(sec(i, j))) {
                sum += sec(i, j);
                ++present;
            }
        }
    BlockLag out;
    if (candidates == 0) return out;
    out.present = static_cast<double>(present) / static_cast<double>(candidates);
    // Excluded when more than 90% of candidates are missing.
    if (present > 0 && 10 * present >= candidates) out.mean = sum / static_cast<double>(present);
    return out;
}

}  // namespace

LagIndexes lag_indexes(const LagMatrix& lags) {
    const Index p = lags.p();
    const Index s = lags.agent_split;
    LagIndexes out;
    const BlockLag pp = lag_block(lags.seconds, 0, s, 0, s);
    const BlockLag bb = lag_block(lags.seconds, s, p, s, p);
    const BlockLag pb = lag_block(lags.seconds, s, p, 0, s);
    const BlockLag bp = lag_block(lags.seconds, 0, s, s, p);
    out.pp = pp.mean;
    out.bb = bb.mean;
    out.pb = pb.mean;
    out.bp = bp.mean;
    out.present_pp = pp.present;
    out.present_bb = bb.present;
    out.present_pb = pb.present;
    out.present_bp = bp.present;
    return out;
}

double variable_usage_rate(const NgcMatrix& matrix) {
    const Index p = matrix.p();
    if (p < 2) return 0.0;
    Index used = 0;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            if (i != j && matrix.values(i, j) > 0.0) ++used;
    return static_cast<double>(used) / static_cast<double>(p * (p - 1));
}

InterpersonalSets interpersonal_sets(const std::vector<NgcMatrix>& matrices) {
    if (matrices.empty()) throw InputError("no pairs");
    const NgcMatrix& first = matrices.front();
    for (const NgcMatrix& m : matrices) {
        if (m.channels != first.channels || m.agent_split != first.agent_split)
            throw InputError("pairs have inconsistent channel labeling");
    }
    InterpersonalSets sets;
    sets.mean = MatX::Zero(first.p(), first.p());
    for (const NgcMatrix& m : matrices) sets.mean += m.values;
    sets.mean /= static_cast<double>(matrices.size());
    const Index s = first.agent_split;
    const Index p = first.p();
    sets.a_to_b = sets.mean.block(s, 0, p - s, s);
    sets.b_to_a = sets.mean.block(0, s, s, p - s);
    return sets;
}

std::string to_dot(const NgcMatrix& matrix, double threshold) {
    const Index p = matrix.p();

    std::vector<Index> order(p);
    for (Index i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return matrix.channels[a].label() < matrix.channels[b].label();
    });

    double max_v = 0.0;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            if (i != j && matrix.values(i, j) > threshold) max_v = std::max(max_v, matrix.values(i, j));
    const double width_scale = max_v > 0.0 ? 5.0 / max_v : 1.0;

    char buf[160];
    std::ostringstream dot;
    std::snprintf(buf, sizeof(buf), "// threshold = %.17g\n", threshold);
    dot << "digraph ngc {\n" << buf;
    dot << "  rankdir=LR;\n  node [style=filled];\n";
    for (Index i : order) {
        const ChannelId& ch = matrix.channels[i];
        const bool agent_a = i < matrix.agent_split;
        std::snprintf(buf, sizeof(buf), "  \"%s\" [fillcolor=\"%s\"];\n", ch.label().c_str(),
                      agent_a ? "lightsalmon" : "lightblue");
        dot << buf;
    }
    // Edge direction is source j -> target i.
    for (Index j : order)
        for (Index i : order) {
            if (i == j || matrix.values(i, j) <= threshold) continue;
            std::snprintf(buf, sizeof(buf), "  \"%s\" -> \"%s\" [penwidth=%.6g, weight=1];\n",
                          matrix.channels[j].label().c_str(), matrix.channels[i].label().c_str(),
                          matrix.values(i, j) * width_scale);
            dot << buf;
        }
    dot << "}\n";
    return dot.str();
}

}  // namespace ngc
