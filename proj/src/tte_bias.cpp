#include "doseopt/tte_bias.hpp"

#include "doseopt/errors.hpp"
#include "doseopt/outcome_model.hpp"
#include "doseopt/selection_bias.hpp"
#include "doseopt/stats.hpp"

#include <cmath>

namespace doseopt {

namespace {

UtilityMoments sigma_only(double sigma_u) {
    UtilityMoments m;
    m.sigma2 = sigma_u * sigma_u;
    return m;
}

} // namespace

void TtePlan::validate() const {
    if (!(lambda0 > 0.0)) throw DomainError("tte plan: lambda0 must be positive");
    if (!(tau > 0.0)) throw DomainError("tte plan: tau must be positive");
    if (n1 < 1 || n2 < 0) throw DomainError("tte plan: need n1 >= 1 and n2 >= 0");
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("tte plan: alpha must lie in (0, 0.5)");
    if (!(d_events >= 1.0) || !(d_total >= 1.0)) throw DomainError("tte plan: event counts must be >= 1");
}

double landmark_bias(double cov_su, double sigma_u, int n1, double lambda_u, double w1) {
    return w1 * selection_bias(sigma_only(sigma_u), n1, lambda_u, cov_su);
}

double landmark_bias_max(double s0_tau, int n1, double lambda_u, std::optional<double> sigma_u) {
    if (!(s0_tau > 0.0 && s0_tau < 1.0)) throw DomainError("landmark_bias_max: S0(tau) must lie in (0,1)");
    return max_bias(s0_tau, n1, lambda_u, sigma_u);
}

double landmark_type1(const TtePlan& plan, double bias, double s0) {
    if (!(s0 > 0.0 && s0 < 1.0)) throw DomainError("landmark_type1: S0(tau) must lie in (0,1)");
    if (plan.n1 < 1 || plan.n2 < 0) throw DomainError("landmark_type1: need n1 >= 1 and n2 >= 0");
    const double se0 = std::sqrt(s0 * (1.0 - s0) / (plan.n1 + plan.n2));
    return stats::normal_sf(stats::normal_upper_quantile(plan.alpha) - bias / se0);
}

double mean_time_bias(double cov_tu, double sigma_u, int n1, double lambda_u) {
    return selection_bias(sigma_only(sigma_u), n1, lambda_u, cov_tu);
}

ExpPrediction exp_test_type1(const TtePlan& plan, double b) {
    plan.validate();
    if (!std::isfinite(b)) throw DomainError("exp_test_type1: B must be finite");
    ExpPrediction r;
    r.hazard_bias = -plan.lambda0 * plan.lambda0 * b;
    r.log_hazard_bias_combined = -plan.lambda0 * plan.dilution() * b;
    r.bias_z = r.log_hazard_bias_combined * std::sqrt(plan.d_events);
    r.type1 = stats::normal_cdf(-stats::normal_upper_quantile(plan.alpha) - r.bias_z);
    return r;
}

CoxPrediction cox_type1(const TtePlan& plan, double b) {
    plan.validate();
    CoxPrediction r;
    r.beta_bias = -plan.lambda0 * plan.dilution() * b;
    r.bias_z = r.beta_bias * std::sqrt(plan.d_total / 4.0);
    r.type1 = stats::normal_cdf(-stats::normal_upper_quantile(plan.alpha) - r.bias_z);
    return r;
}

BridgeBound landmark_hazard_bridge(double s0_tau, double tau, double lambda0, double lbm, double w1) {
    if (!(s0_tau > 0.0 && s0_tau < 1.0)) throw DomainError("landmark_hazard_bridge: S0(tau) must lie in (0,1)");
    if (!(tau > 0.0) || !(lambda0 > 0.0)) throw DomainError("landmark_hazard_bridge: tau and lambda0 must be positive");
    BridgeBound b;
    // dS/dlambda = -tau S, so a survival shift of +x maps to a hazard shift of -x/(tau S).
    b.hazard_bias_upper = -lbm / (tau * s0_tau);
    b.beta_bias_upper = w1 * b.hazard_bias_upper / lambda0;
    return b;
}

double bridge_cox_type1(const TtePlan& plan, const BridgeBound& bound) {
    plan.validate();
    const double bias_z = bound.beta_bias_upper * std::sqrt(plan.d_total / 4.0);
    return stats::normal_cdf(-stats::normal_upper_quantile(plan.alpha) - bias_z);
}

double expected_events(double n, double lambda, double t_entry, double t_admin) {
    if (!(lambda > 0.0) || !(t_entry > 0.0) || !(t_admin >= t_entry))
        throw DomainError("expected_events: need lambda > 0 and t_admin >= t_entry > 0");
    const double censored =
        (std::exp(-lambda * (t_admin - t_entry)) - std::exp(-lambda * t_admin)) / (lambda * t_entry);
    return n * (1.0 - censored);
}

TteBiasReport tte_bias_report(const TtePlan& plan, double cov_su, double cov_tu, double sigma_u) {
    plan.validate();
    const double w1 = plan.dilution();
    const double s0 = std::exp(-plan.lambda0 * plan.tau);
    TteBiasReport r;
    r.landmark_bias = landmark_bias(cov_su, sigma_u, plan.n1, plan.lambda_u, w1);
    r.landmark_bias_max = landmark_bias_max(s0, plan.n1, plan.lambda_u, sigma_u);
    r.landmark_type1 = landmark_type1(plan, r.landmark_bias, s0);
    r.landmark_type1_max = landmark_type1(plan, w1 * r.landmark_bias_max, s0);
    r.mean_time_bias = mean_time_bias(cov_tu, sigma_u, plan.n1, plan.lambda_u);
    const auto e = exp_test_type1(plan, r.mean_time_bias);
    r.hazard_bias = e.hazard_bias;
    r.log_hazard_bias_combined = e.log_hazard_bias_combined;
    r.exp_type1 = e.type1;
    const auto c = cox_type1(plan, r.mean_time_bias);
    r.beta_bias_combined = c.beta_bias;
    r.cox_type1 = c.type1;
    const auto br = landmark_hazard_bridge(s0, plan.tau, plan.lambda0, r.landmark_bias_max, w1);
    r.bridge_hazard_bias_upper = br.hazard_bias_upper;
    r.bridge_beta_bias_upper = br.beta_bias_upper;
    r.bridge_cox_type1 = bridge_cox_type1(plan, br);
    return r;
}

} // namespace doseopt
