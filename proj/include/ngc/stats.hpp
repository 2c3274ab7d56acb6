#pragma once

#include <optional>
#include <string>

#include "ngc/types.hpp"

namespace ngc {

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation, absolute error well under 1e-10 for the df ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

/// Upper tail P(F >= f) for the F distribution.
double f_sf(double f, double d1, double d2);

enum class Tail { TwoSided, Greater };

struct TestResult {
    std::string test;
    double statistic = 0.0;  // t or F
    double df1 = 0.0;
    double df2 = 0.0;  // 0 for one-df tests
    double p_raw = 1.0;
    std::optional<double> p_adjusted;
    std::string adjust_method;
    std::optional<double> effect_size;
    std::string effect_name;  // "cohen_d" or "partial_eta_squared"
    bool degenerate = false;
    std::string note;
};

/// Per-pair values table: rows are subjects (pairs), columns are named
/// conditions or outcome measures.
struct PairTable {
    std::vector<std::string> columns;
    MatX values;  // subjects x columns

    Index n() const { return values.rows(); }
    Index column_index(const std::string& name) const;
    VecX column(const std::string& name) const;
    void add_column(const std::string& name, const VecX& v);
};

/// One-way repeated-measures ANOVA over the given condition matrix
/// (subjects x conditions). No sphericity correction.
TestResult rm_anova(const MatX& conditions);

/// Two-tailed paired t-test; Cohen's d = mean(diff) / sd(diff).
TestResult paired_t(const VecX& a, const VecX& b);

TestResult one_sample_t(const VecX& x, double mu, Tail tail = Tail::TwoSided);

/// Step-down adjustment; output order matches input order.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

/// Step-up adjustment; output order matches input order.
std::vector<double> benjamini_hochberg(const std::vector<double>& p_values);

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double f_stat = 0.0;
    double df1 = 1.0;
    double df2 = 0.0;
    double p = 1.0;
};

/// Single-predictor least squares; R^2 doubles as the eta^2 of the
/// one-way effect decomposition.
OlsFit ols_fit(const VecX& outcome, const VecX& predictor);

}  // namespace ngc
