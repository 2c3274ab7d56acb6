#pragma once

#include <cstdint>

#include "ngc/causality.hpp"
#include "ngc/types.hpp"

namespace ngc {

/// Stable vector-autoregression specification.
struct VarSpec {
    Index p = 10;
    int lag_order = 3;
    std::vector<MatX> coeffs;  // coeffs[l] is p x p, lag l+1; (target, source)
    double noise_sd = 0.1;
    Index T = 1000;
    Index n_trials = 1;
    std::uint64_t seed = 0;
};

/// Largest |eigenvalue| of the VAR companion matrix; < 1 means stationary.
double companion_spectral_radius(const std::vector<MatX>& coeffs);

/// Random stable VAR with the given off-diagonal edge density. Every channel
/// keeps a self lag-1 term; cross terms are placed uniformly at random and
/// the whole system is rescaled until the spectral radius is below 0.95.
VarSpec random_var_spec(Index p, int lag_order, double density, std::uint64_t seed);

struct GeneratedData {
    TrialDataset data;
    MatXi truth;           // (target, source) adjacency, zero diagonal
    MatX truth_lag_frames; // frames of the generating lag, NaN where no edge
};

GeneratedData gen_var(const VarSpec& spec);

/// Two chained agents with strictly one-way A -> B coupling.
///
/// Agent A: channel 0 is a noise-driven damped oscillator; channel m feeds
/// from channel m-1 at intra_lag_a frames. Agent B mirrors the chain and
/// every B channel additionally receives the designated A channel at the
/// coupling delay, optionally through a saturating tanh.
struct CoupledAgentSpec {
    Index n_a = 13;
    Index n_b = 14;
    int intra_lag_a = 2;     // frames
    int intra_lag_b = 2;     // frames
    double coupling_delay_s = 0.5;
    double coupling_gain = 0.5;
    bool nonlinear = false;
    double tanh_gain = 8.0;  // saturation slope inside the tanh
    double self_coeff = 0.55;
    double chain_gain = 0.4;
    double noise_sd = 0.03;
    double fs = 50.0;
    Index T = 125;
    Index n_trials = 10;
    std::uint64_t seed = 0;

    int coupling_delay_frames() const;
};

GeneratedData gen_coupled_agents(const CoupledAgentSpec& spec);

/// Classical nested-OLS Granger F-test, pooled across trials.
struct GcOracleResult {
    MatX pvalues;     // NaN on the diagonal and where regression failed
    MatXi adjacency;  // p < alpha
    double alpha = 0.05;
};

GcOracleResult linear_gc_oracle(const TrialDataset& dataset, int max_lag, double alpha = 0.05);

/// Binary support metrics against a truth adjacency, diagonal excluded;
/// scores above `threshold` count as detected edges.
struct SupportMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auroc = 0.5;
    Index tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Rank-based AUROC with midrank tie handling; 0.5 when one class is empty.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

SupportMetrics support_metrics(const NgcMatrix& estimated, const MatXi& truth,
                               double threshold = 0.0);

}  // namespace ngc
