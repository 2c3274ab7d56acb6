#pragma once

#include <cstdint>

#include "ngc/types.hpp"

namespace ngc {

struct TrainConfig {
    int max_lag = 50;       // K, in frames
    int hidden_units = 32;  // H
    double learning_rate = 0.05;
    double lambda = 0.003;
    double penalty_scale = 1.0;  // multiplies lambda; compensates for the
                                 // mean-over-samples loss convention
    int iterations = 2000;
    std::uint64_t seed = 0;

    double effective_lambda() const { return lambda * penalty_scale; }

    void validate() const;
};

/// One-hidden-layer ReLU predictor for a single target channel.
///
/// First-layer weights are stored as an H x (p*K) matrix whose column
/// j*K + (k-1) holds the hidden-unit weights for source channel j at lag k,
/// so a per-lag group is a column and a per-source group is a K-column block.
struct CmlpWeights {
    Index target = 0;
    Index p = 0;
    int K = 0;
    int H = 0;
    MatX w1;    // H x (p*K)
    VecX b1;
    VecX w2;
    double b2 = 0.0;

    Index col(Index source, int lag) const { return source * K + (lag - 1); }

    static CmlpWeights zeros(Index target, Index p, int K, int H);
};

/// Design matrix shared by every target model of one dataset: row
/// (trial, t) holds the flattened lag window, column j*K + (k-1) = x[t-k, j].
struct LaggedDesign {
    MatX inputs;   // N x (p*K)
    MatX targets;  // N x p, column i = x[t, i]
    Index p = 0;
    int K = 0;

    Index samples() const { return inputs.rows(); }
};

LaggedDesign build_design(const TrialDataset& dataset, int K);

/// Prediction for one lag window; window.row(k-1) = x_{t-k} (length p).
double forward(const CmlpWeights& model, const MatX& window);

/// Mean squared prediction error over all trials and valid time steps.
double smooth_loss(const CmlpWeights& model, const LaggedDesign& design);

struct CmlpGradient {
    MatX w1;
    VecX b1;
    VecX w2;
    double b2 = 0.0;
};

/// Exact gradient of smooth_loss by backpropagation; the ReLU subgradient
/// at zero is taken as zero.
CmlpGradient gradient(const CmlpWeights& model, const LaggedDesign& design);

/// Proximal map of the two-level group penalty
///   Omega(W1[:,j,:]) = ||W1[:,j,:]||_2 + sum_k ||W1[:,j,k]||_2:
/// block soft-threshold each per-lag column, then the whole source block.
MatX prox_gsgl(const MatX& w1, double threshold, int K);

/// Group-penalty value sum_j Omega(W1[:,j,:]).
double group_penalty(const MatX& w1, int K);

struct TrainedModel {
    CmlpWeights weights;
    std::vector<double> objective_trace;  // penalized objective per iteration
    double final_loss = 0.0;
    double r2 = 0.0;  // NaN when the target has zero variance
};

/// Proximal gradient descent (ISTA): gradient step on the smooth loss, then
/// prox of the group penalty on the first layer. Deterministic given seed.
TrainedModel ista_train(const LaggedDesign& design, const TrainConfig& config, Index target);

struct CmlpBank {
    TrainConfig config;
    std::vector<CmlpWeights> models;  // models[i].target == i
    VecX r2;
    VecX final_loss;

    Index p() const { return static_cast<Index>(models.size()); }
};

/// Train one model per channel. Models are independent; `threads` only
/// controls scheduling and cannot change results.
CmlpBank train_bank(const TrialDataset& dataset, const TrainConfig& config, int threads = 1);

/// 1 - SSE/SST per target; NaN where the target is constant.
VecX r2_score(const CmlpBank& bank, const TrialDataset& dataset);

double mean_finite(const VecX& v);

}  // namespace ngc
