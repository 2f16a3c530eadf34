#pragma once

#include "doseopt/outcome_model.hpp"

#include <optional>

namespace doseopt {

// E[Z_H 1{Z_H - Z_L > k} + Z_L 1{Z_H - Z_L <= k}] for iid standard normals.
double truncated_selection_expectation(double k);

// Bias of the selected arm's Stage-1 mean of an endpoint W whose covariance
// with the utility is `cov`. Defaults to W = X (cov_xu).
double selection_bias(const UtilityMoments& moments, int n1, double lambda_u);
double selection_bias(const UtilityMoments& moments, int n1, double lambda_u, double cov);

// Cauchy-Schwarz ceiling: Cov(X,U) replaced by sigma_X * sigma_U.
double max_bias(double p0, int n1, double lambda_u, std::optional<double> sigma_u = std::nullopt);

double combined_bias(double stage1_bias, int n1, int n2);

struct TwoStagePlan {
    int n1 = 0;
    int n2 = 0;
    double lambda_u = 0.0;
    double p0 = 0.0;
    double alpha = 0.025;

    void validate() const;
    int n_total() const { return n1 + n2; }
    double dilution() const { return static_cast<double>(n1) / static_cast<double>(n1 + n2); }
};

double z_test_type1(const TwoStagePlan& plan, double delta_p_combined);

// Smallest k with Pr(X > k) <= alpha under Binomial(n_total, p0).
int binomial_critical(int n_total, double p0, double alpha);

double binomial_type1(const TwoStagePlan& plan, double delta_p_combined);

struct BiasReport {
    double stage1_bias = 0.0;
    double combined_bias = 0.0;
    double max_bias = 0.0;
    double max_combined_bias = 0.0;
    double z_type1 = 0.0;
    double z_type1_max = 0.0;
    double binom_type1 = 0.0;
    double binom_type1_max = 0.0;
    int binom_critical = 0;
};

// Analytic chain at the given moments; `cov` overrides moments.cov_xu.
BiasReport bias_report(const TwoStagePlan& plan, const UtilityMoments& moments, std::optional<double> cov = std::nullopt);

} // namespace doseopt
