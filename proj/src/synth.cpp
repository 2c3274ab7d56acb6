#include "ngc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ngc/preprocess.hpp"
#include "ngc/stats.hpp"

namespace ngc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<ChannelId> synthetic_channels(Index n_a, Index n_b) {
    std::vector<ChannelId> channels;
    char buf[16];
    for (Index m = 0; m < n_a; ++m) {
        std::snprintf(buf, sizeof(buf), "ch%02d", static_cast<int>(m));
        channels.push_back({"A", buf});
    }
    for (Index m = 0; m < n_b; ++m) {
        std::snprintf(buf, sizeof(buf), "ch%02d", static_cast<int>(m));
        channels.push_back({"B", buf});
    }
    return channels;
}

}  // namespace

double companion_spectral_radius(const std::vector<MatX>& coeffs) {
    if (coeffs.empty()) return 0.0;
    const Index p = coeffs[0].rows();
    const Index L = static_cast<Index>(coeffs.size());
    MatX companion = MatX::Zero(p * L, p * L);
    for (Index l = 0; l < L; ++l) companion.block(0, l * p, p, p) = coeffs[l];
    if (L > 1)
        companion.block(p, 0, p * (L - 1), p * (L - 1)) =
            MatX::Identity(p * (L - 1), p * (L - 1));
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

VarSpec random_var_spec(Index p, int lag_order, double density, std::uint64_t seed) {
    VarSpec spec;
    spec.p = p;
    spec.lag_order = lag_order;
    spec.seed = seed;
    spec.coeffs.assign(lag_order, MatX::Zero(p, p));

    SplitMix64 rng(split_seed(seed, 0xA17));
    for (Index i = 0; i < p; ++i) spec.coeffs[0](i, i) = 0.3 + 0.3 * rng.uniform();

    std::vector<std::pair<Index, Index>> cells;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            if (i != j) cells.emplace_back(i, j);
    for (size_t i = cells.size(); i > 1; --i)
        std::swap(cells[i - 1], cells[rng.next() % i]);

    const auto n_edges = static_cast<size_t>(std::llround(density * cells.size()));
    for (size_t e = 0; e < n_edges && e < cells.size(); ++e) {
        const auto [i, j] = cells[e];
        const int lag = static_cast<int>(rng.next() % lag_order);
        const double mag = 0.3 + 0.3 * rng.uniform();
        spec.coeffs[lag](i, j) = rng.uniform() < 0.5 ? -mag : mag;
    }

    double radius = companion_spectral_radius(spec.coeffs);
    while (radius >= 0.95) {
        for (MatX& a : spec.coeffs) a *= 0.9 * 0.95 / radius;
        radius = companion_spectral_radius(spec.coeffs);
    }
    return spec;
}

GeneratedData gen_var(const VarSpec& spec) {
    if (static_cast<int>(spec.coeffs.size()) != spec.lag_order)
        throw ConfigError("coefficient tensor must have lag_order slabs");
    const double radius = companion_spectral_radius(spec.coeffs);
    if (radius >= 1.0)
        throw ConfigError("unstable VAR: companion spectral radius " + std::to_string(radius));
    const Index p = spec.p;
    const int L = spec.lag_order;
    const Index burn = 10 * L;

    GeneratedData out;
    out.truth = MatXi::Zero(p, p);
    out.truth_lag_frames = MatX::Constant(p, p, kNaN);
    for (int l = 0; l < L; ++l)
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j < p; ++j)
                if (i != j && spec.coeffs[l](i, j) != 0.0) {
                    out.truth(i, j) = 1;
                    if (!std::isfinite(out.truth_lag_frames(i, j)))
                        out.truth_lag_frames(i, j) = l + 1;
                }

    out.data.fs = 50.0;
    out.data.channels = synthetic_channels(p / 2 > 0 ? p / 2 : 1, p - (p / 2 > 0 ? p / 2 : 1));
    out.data.agent_split = p / 2 > 0 ? p / 2 : 1;

    for (Index trial = 0; trial < spec.n_trials; ++trial) {
        SplitMix64 rng(split_seed(spec.seed, 0x7A8, static_cast<std::uint64_t>(trial)));
        MatX x = MatX::Zero(burn + spec.T, p);
        for (Index t = 0; t < burn + spec.T; ++t) {
            VecX step = VecX::Zero(p);
            for (int l = 0; l < L; ++l)
                if (t > l) step += spec.coeffs[l] * x.row(t - l - 1).transpose();
            for (Index i = 0; i < p; ++i) step[i] += spec.noise_sd * rng.gaussian();
            x.row(t) = step.transpose();
        }
        out.data.trials.push_back(x.bottomRows(spec.T));
    }
    normalize_minmax(out.data.trials);
    return out;
}

int CoupledAgentSpec::coupling_delay_frames() const {
    return static_cast<int>(std::llround(coupling_delay_s * fs));
}

GeneratedData gen_coupled_agents(const CoupledAgentSpec& spec) {
    const int D = spec.coupling_delay_frames();
    if (D < 1 || D >= spec.T)
        throw ConfigError("coupling delay of " + std::to_string(D) +
                          " frames must lie in [1, T)");
    if (spec.n_a < 1 || spec.n_b < 1) throw ConfigError("need at least one channel per agent");
    const Index p = spec.n_a + spec.n_b;
    const Index burn = 10 * std::max({spec.intra_lag_a, spec.intra_lag_b, D, 5});
    const Index total = burn + spec.T;

    GeneratedData out;
    out.truth = MatXi::Zero(p, p);
    out.truth_lag_frames = MatX::Constant(p, p, kNaN);
    for (Index m = 1; m < spec.n_a; ++m) {
        out.truth(m, m - 1) = 1;
        out.truth_lag_frames(m, m - 1) = spec.intra_lag_a;
    }
    for (Index m = 1; m < spec.n_b; ++m) {
        out.truth(spec.n_a + m, spec.n_a + m - 1) = 1;
        out.truth_lag_frames(spec.n_a + m, spec.n_a + m - 1) = spec.intra_lag_b;
    }
    for (Index m = 0; m < spec.n_b; ++m) {
        const Index src = m % spec.n_a;
        out.truth(spec.n_a + m, src) = 1;
        out.truth_lag_frames(spec.n_a + m, src) = D;
    }

    out.data.fs = spec.fs;
    out.data.channels = synthetic_channels(spec.n_a, spec.n_b);
    out.data.agent_split = spec.n_a;

    // Root oscillator: AR(2) with poles at radius 0.96, ~2 cycles/s at 50 Hz.
    const double theta = 2.0 * 3.141592653589793 * 2.0 / spec.fs;
    const double ar1 = 2.0 * 0.96 * std::cos(theta);
    const double ar2 = -0.96 * 0.96;

    for (Index trial = 0; trial < spec.n_trials; ++trial) {
        SplitMix64 rng(split_seed(spec.seed, 0xC0B, static_cast<std::uint64_t>(trial)));
        MatX x = MatX::Zero(total, p);
        for (Index t = 0; t < total; ++t) {
            // Agent A chain.
            for (Index m = 0; m < spec.n_a; ++m) {
                double v = spec.noise_sd * rng.gaussian();
                if (m == 0) {
                    if (t >= 1) v += ar1 * x(t - 1, 0);
                    if (t >= 2) v += ar2 * x(t - 2, 0);
                    v += 2.0 * spec.noise_sd * rng.gaussian();
                } else {
                    if (t >= 1) v += spec.self_coeff * x(t - 1, m);
                    if (t >= spec.intra_lag_a) v += spec.chain_gain * x(t - spec.intra_lag_a, m - 1);
                }
                x(t, m) = v;
            }
            // Agent B chain plus one-way coupling from A.
            for (Index m = 0; m < spec.n_b; ++m) {
                const Index c = spec.n_a + m;
                double v = spec.noise_sd * rng.gaussian();
                if (t >= 1) v += spec.self_coeff * x(t - 1, c);
                if (m > 0 && t >= spec.intra_lag_b)
                    v += spec.chain_gain * x(t - spec.intra_lag_b, c - 1);
                if (t >= D) {
                    const double u = x(t - D, m % spec.n_a);
                    v += spec.coupling_gain *
                         (spec.nonlinear ? std::tanh(spec.tanh_gain * u) : u);
                }
                x(t, c) = v;
            }
        }
        out.data.trials.push_back(x.bottomRows(spec.T));
    }
    normalize_minmax(out.data.trials);
    return out;
}

GcOracleResult linear_gc_oracle(const TrialDataset& dataset, int max_lag, double alpha) {
    const Index T = dataset.frames();
    const Index p = dataset.dim();
    const int L = max_lag;
    if (T <= 2 * L + 1)
        throw ConfigError("need T > 2*max_lag + 1 (T = " + std::to_string(T) + ")");

    const Index per_trial = T - L;
    const Index N = per_trial * dataset.n_trials();

    // Lagged regressors per channel, pooled across trials.
    std::vector<MatX> lagged(p, MatX(N, L));
    MatX current(N, p);
    Index row = 0;
    for (const MatX& trial : dataset.trials) {
        for (Index t = L; t < T; ++t, ++row) {
            current.row(row) = trial.row(t);
            for (Index j = 0; j < p; ++j)
                for (int l = 1; l <= L; ++l) lagged[j](row, l - 1) = trial(t - l, j);
        }
    }

    GcOracleResult res;
    res.alpha = alpha;
    res.pvalues = MatX::Constant(p, p, kNaN);
    res.adjacency = MatXi::Zero(p, p);

    const Index k_full = 2 * L + 1;
    for (Index i = 0; i < p; ++i) {
        MatX restricted(N, L + 1);
        restricted.col(0).setOnes();
        restricted.rightCols(L) = lagged[i];
        Eigen::ColPivHouseholderQR<MatX> qr_r(restricted);
        const double sse_r =
            (current.col(i) - restricted * qr_r.solve(current.col(i))).squaredNorm();

        for (Index j = 0; j < p; ++j) {
            if (i == j) continue;
            MatX full(N, k_full);
            full.col(0).setOnes();
            full.middleCols(1, L) = lagged[i];
            full.rightCols(L) = lagged[j];
            Eigen::ColPivHouseholderQR<MatX> qr_f(full);
            if (qr_f.rank() < k_full) continue;  // reported missing
            const double sse_f = (current.col(i) - full * qr_f.solve(current.col(i))).squaredNorm();
            const double df2 = static_cast<double>(N - k_full);
            if (sse_f <= 0.0 || df2 <= 0.0) continue;
            const double f = ((sse_r - sse_f) / L) / (sse_f / df2);
            const double pv = f_sf(std::max(f, 0.0), static_cast<double>(L), df2);
            res.pvalues(i, j) = pv;
            res.adjacency(i, j) = pv < alpha ? 1 : 0;
        }
    }
    return res;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied score runs.
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double rank_sum = 0.0;
    size_t n_pos = 0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k]) {
            rank_sum += rank[k];
            ++n_pos;
        }
    const size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    const double u = rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

SupportMetrics support_metrics(const NgcMatrix& estimated, const MatXi& truth, double threshold) {
    const Index p = estimated.p();
    if (truth.rows() != p || truth.cols() != p)
        throw InputError("estimate and truth shapes differ");

    SupportMetrics m;
    std::vector<double> scores;
    std::vector<int> labels;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const bool hit = estimated.values(i, j) > threshold;
            const bool pos = truth(i, j) != 0;
            m.tp += hit && pos;
            m.fp += hit && !pos;
            m.fn += !hit && pos;
            m.tn += !hit && !pos;
            scores.push_back(estimated.values(i, j));
            labels.push_back(pos ? 1 : 0);
        }
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.auroc = auroc(scores, labels);
    return m;
}

}  // namespace ngc
