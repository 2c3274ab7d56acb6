#include "ngc/cmlp.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace ngc {

void TrainConfig::validate() const {
    if (max_lag < 1) throw ConfigError("max_lag must be >= 1");
    if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (lambda < 0.0 || penalty_scale < 0.0) throw ConfigError("lambda must be >= 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
}

CmlpWeights CmlpWeights::zeros(Index target, Index p, int K, int H) {
    CmlpWeights w;
    w.target = target;
    w.p = p;
    w.K = K;
    w.H = H;
    w.w1 = MatX::Zero(H, p * K);
    w.b1 = VecX::Zero(H);
    w.w2 = VecX::Zero(H);
    w.b2 = 0.0;
    return w;
}

LaggedDesign build_design(const TrialDataset& dataset, int K) {
    const Index T = dataset.frames();
    const Index p = dataset.dim();
    if (T <= K) throw ConfigError("trial length must exceed max_lag");

    LaggedDesign d;
    d.p = p;
    d.K = K;
    const Index per_trial = T - K;
    const Index N = per_trial * dataset.n_trials();
    d.inputs.resize(N, p * K);
    d.targets.resize(N, p);

    Index row = 0;
    for (const MatX& trial : dataset.trials) {
        for (Index t = K; t < T; ++t, ++row) {
            d.targets.row(row) = trial.row(t);
            for (Index j = 0; j < p; ++j)
                for (int k = 1; k <= K; ++k) d.inputs(row, j * K + (k - 1)) = trial(t - k, j);
        }
    }
    return d;
}

double forward(const CmlpWeights& model, const MatX& window) {
    if (window.rows() != model.K || window.cols() != model.p)
        throw InputError("window must be K x p (" + std::to_string(model.K) + " x " +
                         std::to_string(model.p) + ")");
    VecX flat(model.p * model.K);
    for (Index j = 0; j < model.p; ++j)
        for (int k = 1; k <= model.K; ++k) flat[model.col(j, k)] = window(k - 1, j);
    const VecX h = ((model.w1 * flat) + model.b1).cwiseMax(0.0);
    return model.w2.dot(h) + model.b2;
}

double smooth_loss(const CmlpWeights& model, const LaggedDesign& design) {
    const MatX pre = (design.inputs * model.w1.transpose()).rowwise() + model.b1.transpose();
    const VecX pred = (pre.cwiseMax(0.0) * model.w2).array() + model.b2;
    const VecX resid = pred - design.targets.col(model.target);
    return resid.squaredNorm() / static_cast<double>(design.samples());
}

CmlpGradient gradient(const CmlpWeights& model, const LaggedDesign& design) {
    const Index N = design.samples();
    const MatX pre = (design.inputs * model.w1.transpose()).rowwise() + model.b1.transpose();
    const MatX act = pre.cwiseMax(0.0);
    const VecX pred = (act * model.w2).array() + model.b2;
    const VecX dpred = 2.0 / static_cast<double>(N) * (pred - design.targets.col(model.target));

    CmlpGradient g;
    g.w2 = act.transpose() * dpred;
    g.b2 = dpred.sum();
    const MatX dact =
        (dpred * model.w2.transpose()).array() * (pre.array() > 0.0).cast<double>();
    g.b1 = dact.colwise().sum();
    g.w1 = dact.transpose() * design.inputs;
    return g;
}

MatX prox_gsgl(const MatX& w1, double threshold, int K) {
    if (threshold < 0.0) throw ConfigError("prox threshold must be >= 0");
    MatX out = w1;
    if (threshold == 0.0) return out;
    const Index p = w1.cols() / K;
    for (Index j = 0; j < p; ++j) {
        auto block = out.middleCols(j * K, K);
        for (int k = 0; k < K; ++k) {
            const double norm = block.col(k).norm();
            block.col(k) *= (norm <= threshold) ? 0.0 : 1.0 - threshold / norm;
        }
        const double bnorm = block.norm();
        block *= (bnorm <= threshold) ? 0.0 : 1.0 - threshold / bnorm;
    }
    return out;
}

double group_penalty(const MatX& w1, int K) {
    const Index p = w1.cols() / K;
    double total = 0.0;
    for (Index j = 0; j < p; ++j) {
        const auto block = w1.middleCols(j * K, K);
        total += block.norm();
        for (int k = 0; k < K; ++k) total += block.col(k).norm();
    }
    return total;
}

TrainedModel ista_train(const LaggedDesign& design, const TrainConfig& config, Index target) {
    config.validate();
    if (design.K != config.max_lag)
        throw ConfigError("design built with max_lag " + std::to_string(design.K) +
                          ", config asks for " + std::to_string(config.max_lag));
    if (design.samples() == 0) throw ConfigError("no training samples (T <= max_lag)");
    if (target < 0 || target >= design.p)
        throw InputError("target channel " + std::to_string(target) + " out of range");

    const Index p = design.p;
    const int K = design.K;
    const int H = config.hidden_units;
    const double gamma = config.learning_rate;
    const double lambda = config.effective_lambda();
    const Index N = design.samples();
    const VecX& y = design.targets.col(target);

    CmlpWeights model = CmlpWeights::zeros(target, p, K, H);
    SplitMix64 rng(split_seed(config.seed, static_cast<std::uint64_t>(target)));
    const double a1 = 1.0 / std::sqrt(static_cast<double>(p * K));
    for (Index c = 0; c < model.w1.cols(); ++c)
        for (int h = 0; h < H; ++h) model.w1(h, c) = rng.symmetric(a1);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(H));
    for (int h = 0; h < H; ++h) model.w2[h] = rng.symmetric(a2);

    TrainedModel result;
    result.objective_trace.reserve(config.iterations);

    MatX pre(N, H), dact(N, H);
    VecX pred(N), dpred(N);
    for (int it = 0; it < config.iterations; ++it) {
        pre = (design.inputs * model.w1.transpose()).rowwise() + model.b1.transpose();
        const MatX act = pre.cwiseMax(0.0);
        pred = (act * model.w2).array() + model.b2;
        dpred = 2.0 / static_cast<double>(N) * (pred - y);

        const double loss = (pred - y).squaredNorm() / static_cast<double>(N);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "training diverged at iteration " << it << " (learning rate " << gamma
                << ", target " << target << "): non-finite loss";
            throw TrainingError(msg.str());
        }
        result.objective_trace.push_back(loss + lambda * group_penalty(model.w1, K));

        const VecX gw2 = act.transpose() * dpred;
        const double gb2 = dpred.sum();
        dact = (dpred * model.w2.transpose()).array() * (pre.array() > 0.0).cast<double>();
        const VecX gb1 = dact.colwise().sum();

        model.w1.noalias() -= gamma * (dact.transpose() * design.inputs);
        model.b1 -= gamma * gb1;
        model.w2 -= gamma * gw2;
        model.b2 -= gamma * gb2;
        model.w1 = prox_gsgl(model.w1, gamma * lambda, K);
    }

    result.final_loss = smooth_loss(model, design);
    const double sst = (y.array() - y.mean()).square().sum();
    result.r2 = sst > 0.0 ? 1.0 - result.final_loss * static_cast<double>(N) / sst
                          : std::numeric_limits<double>::quiet_NaN();
    result.weights = std::move(model);
    return result;
}

CmlpBank train_bank(const TrialDataset& dataset, const TrainConfig& config, int threads) {
    const Index p = dataset.dim();
    if (p == 0) throw ConfigError("dataset has no channels");
    config.validate();
    if (dataset.frames() <= config.max_lag)
        throw ConfigError("trial length " + std::to_string(dataset.frames()) +
                          " must exceed max_lag " + std::to_string(config.max_lag));

    const LaggedDesign design = build_design(dataset, config.max_lag);

    CmlpBank bank;
    bank.config = config;
    bank.models.resize(p);
    bank.r2.resize(p);
    bank.final_loss.resize(p);

    std::vector<std::string> failures(p);
    std::atomic<Index> next{0};
    auto worker = [&]() {
        for (Index i = next.fetch_add(1); i < p; i = next.fetch_add(1)) {
            try {
                TrainedModel m = ista_train(design, config, i);
                bank.r2[i] = m.r2;
                bank.final_loss[i] = m.final_loss;
                bank.models[i] = std::move(m.weights);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(p)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::ostringstream errors;
    for (Index i = 0; i < p; ++i)
        if (!failures[i].empty()) errors << "target " << i << ": " << failures[i] << "; ";
    if (!errors.str().empty()) throw TrainingError(errors.str());
    return bank;
}

VecX r2_score(const CmlpBank& bank, const TrialDataset& dataset) {
    const LaggedDesign design = build_design(dataset, bank.config.max_lag);
    VecX out(bank.p());
    for (Index i = 0; i < bank.p(); ++i) {
        const VecX& y = design.targets.col(i);
        const double sst = (y.array() - y.mean()).square().sum();
        if (sst <= 0.0) {
            out[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double sse =
            smooth_loss(bank.models[i], design) * static_cast<double>(design.samples());
        out[i] = 1.0 - sse / sst;
    }
    return out;
}

double mean_finite(const VecX& v) {
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < v.size(); ++i)
        if (std::isfinite(v[i])) {
            sum += v[i];
            ++n;
        }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace ngc
