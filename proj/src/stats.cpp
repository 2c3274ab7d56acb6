#include "ngc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ngc {

namespace {

/// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double sample_sd(const VecX& x) {
    const double m = x.mean();
    return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ConfigError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double half = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - half : half;
}

double f_sf(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

Index PairTable::column_index(const std::string& name) const {
    for (Index c = 0; c < static_cast<Index>(columns.size()); ++c)
        if (columns[c] == name) return c;
    throw InputError("no column named '" + name + "'");
}

VecX PairTable::column(const std::string& name) const { return values.col(column_index(name)); }

void PairTable::add_column(const std::string& name, const VecX& v) {
    if (columns.empty()) {
        values.resize(v.size(), 0);
    } else if (v.size() != values.rows()) {
        throw InputError("column '" + name + "' has " + std::to_string(v.size()) +
                         " rows, table has " + std::to_string(values.rows()));
    }
    values.conservativeResize(Eigen::NoChange, values.cols() + 1);
    values.col(values.cols() - 1) = v;
    columns.push_back(name);
}

TestResult rm_anova(const MatX& conditions) {
    const Index n = conditions.rows();
    const Index c = conditions.cols();
    if (n < 2 || c < 2) throw InputError("rm_anova needs >= 2 subjects and >= 2 conditions");
    if (!conditions.allFinite()) throw InputError("rm_anova table has missing cells");

    const double grand = conditions.mean();
    const double ss_cond =
        static_cast<double>(n) * (conditions.colwise().mean().array() - grand).square().sum();
    const double ss_subj =
        static_cast<double>(c) * (conditions.rowwise().mean().array() - grand).square().sum();
    const double ss_total = (conditions.array() - grand).square().sum();
    const double ss_error = ss_total - ss_cond - ss_subj;

    TestResult r;
    r.test = "rm_anova";
    r.df1 = static_cast<double>(c - 1);
    r.df2 = static_cast<double>((c - 1) * (n - 1));
    r.effect_name = "partial_eta_squared";
    const double denom = ss_cond + ss_error;
    if (ss_error <= 1e-14 * std::max(1.0, ss_total)) {
        r.degenerate = true;
        r.note = "zero within-subject error variance";
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_raw = ss_cond > 0.0 ? 0.0 : 1.0;
        r.effect_size = denom > 0.0 ? ss_cond / denom : 0.0;
        return r;
    }
    r.statistic = (ss_cond / r.df1) / (ss_error / r.df2);
    r.p_raw = f_sf(r.statistic, r.df1, r.df2);
    r.effect_size = ss_cond / denom;
    return r;
}

TestResult paired_t(const VecX& a, const VecX& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw InputError("paired_t needs two equal-length series of >= 2 values");
    const VecX diff = a - b;
    const Index n = diff.size();
    const double sd = sample_sd(diff);

    TestResult r;
    r.test = "paired_t";
    r.df1 = static_cast<double>(n - 1);
    r.effect_name = "cohen_d";
    if (sd <= 0.0) {
        r.degenerate = true;
        r.note = "zero variance of differences";
        r.statistic = diff.mean() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_raw = diff.mean() == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.statistic = diff.mean() / (sd / std::sqrt(static_cast<double>(n)));
    r.p_raw = 2.0 * (1.0 - student_t_cdf(std::fabs(r.statistic), r.df1));
    r.effect_size = diff.mean() / sd;
    return r;
}

TestResult one_sample_t(const VecX& x, double mu, Tail tail) {
    if (x.size() < 2) throw InputError("one_sample_t needs >= 2 values");
    const Index n = x.size();
    const double sd = sample_sd(x);

    TestResult r;
    r.test = "one_sample_t";
    r.df1 = static_cast<double>(n - 1);
    r.effect_name = "cohen_d";
    if (sd <= 0.0) {
        r.degenerate = true;
        r.note = "zero variance";
        r.statistic = x.mean() == mu ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_raw = x.mean() == mu ? 1.0 : 0.0;
        return r;
    }
    r.statistic = (x.mean() - mu) / (sd / std::sqrt(static_cast<double>(n)));
    if (tail == Tail::TwoSided)
        r.p_raw = 2.0 * (1.0 - student_t_cdf(std::fabs(r.statistic), r.df1));
    else
        r.p_raw = 1.0 - student_t_cdf(r.statistic, r.df1);
    r.effect_size = (x.mean() - mu) / sd;
    return r;
}

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
    const size_t m = p_values.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 0.0;
    for (size_t rank = 0; rank < m; ++rank) {
        const double scaled = p_values[order[rank]] * static_cast<double>(m - rank);
        running = std::max(running, std::min(1.0, scaled));
        adjusted[order[rank]] = running;
    }
    return adjusted;
}

std::vector<double> benjamini_hochberg(const std::vector<double>& p_values) {
    const size_t m = p_values.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (size_t rank = m; rank-- > 0;) {
        const double scaled =
            p_values[order[rank]] * static_cast<double>(m) / static_cast<double>(rank + 1);
        running = std::min(running, std::min(1.0, scaled));
        adjusted[order[rank]] = running;
    }
    return adjusted;
}

OlsFit ols_fit(const VecX& outcome, const VecX& predictor) {
    if (outcome.size() != predictor.size() || outcome.size() < 3)
        throw InputError("ols_fit needs >= 3 paired values");
    const Index n = outcome.size();
    const double mx = predictor.mean();
    const double my = outcome.mean();
    const double sxx = (predictor.array() - mx).square().sum();
    if (sxx <= 0.0) throw InputError("predictor is constant");
    const double sxy = ((predictor.array() - mx) * (outcome.array() - my)).sum();

    OlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double sst = (outcome.array() - my).square().sum();
    const double sse =
        (outcome.array() - (fit.intercept + fit.slope * predictor.array())).square().sum();
    fit.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    fit.df2 = static_cast<double>(n - 2);
    if (sse <= 1e-14 * std::max(1.0, sst)) {
        fit.f_stat = std::numeric_limits<double>::infinity();
        fit.p = 0.0;
    } else {
        fit.f_stat = (sst - sse) / (sse / fit.df2);
        fit.p = f_sf(fit.f_stat, 1.0, fit.df2);
    }
    return fit;
}

}  // namespace ngc
