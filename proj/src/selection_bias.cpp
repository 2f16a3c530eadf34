#include "doseopt/selection_bias.hpp"

#include "doseopt/errors.hpp"
#include "doseopt/stats.hpp"

#include <cmath>
#include <numbers>

namespace doseopt {

namespace {
const double kInvSqrtPi = 1.0 / std::sqrt(std::numbers::pi);
}

double truncated_selection_expectation(double k) { return kInvSqrtPi * std::exp(-0.25 * k * k); }

double selection_bias(const UtilityMoments& moments, int n1, double lambda_u) {
    return selection_bias(moments, n1, lambda_u, moments.cov_xu);
}

double selection_bias(const UtilityMoments& moments, int n1, double lambda_u, double cov) {
    if (n1 < 1) throw DomainError("selection_bias: n1 must be >= 1");
    if (!(moments.sigma2 > 0.0)) throw DomainError("selection_bias: utility variance is zero, selection is not random");
    const double sigma = std::sqrt(moments.sigma2);
    const double rn = std::sqrt(static_cast<double>(n1));
    return cov / (sigma * rn) * truncated_selection_expectation(lambda_u * rn / sigma);
}

double max_bias(double p0, int n1, double lambda_u, std::optional<double> sigma_u) {
    if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("max_bias: p0 must lie in (0,1)");
    if (n1 < 1) throw DomainError("max_bias: n1 must be >= 1");
    double b = std::sqrt(p0 * (1.0 - p0)) * kInvSqrtPi / std::sqrt(static_cast<double>(n1));
    if (lambda_u != 0.0) {
        if (!sigma_u) throw ContractError("max_bias: nonzero lambda_u requires sigma_u");
        if (!(*sigma_u > 0.0)) throw DomainError("max_bias: sigma_u must be positive");
        b *= std::exp(-lambda_u * lambda_u * n1 / (4.0 * *sigma_u * *sigma_u));
    }
    return b;
}

double combined_bias(double stage1_bias, int n1, int n2) {
    if (n1 < 1 || n2 < 0) throw DomainError("combined_bias: need n1 >= 1 and n2 >= 0");
    return stage1_bias * (static_cast<double>(n1) / static_cast<double>(n1 + n2));
}

void TwoStagePlan::validate() const {
    if (n1 < 1) throw DomainError("plan: n1 must be >= 1");
    if (n2 < 0) throw DomainError("plan: n2 must be >= 0");
    if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("plan: p0 must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("plan: alpha must lie in (0, 0.5)");
}

double z_test_type1(const TwoStagePlan& plan, double delta_p_combined) {
    plan.validate();
    const double se0 = std::sqrt(plan.p0 * (1.0 - plan.p0) / plan.n_total());
    return stats::normal_sf(stats::normal_upper_quantile(plan.alpha) - delta_p_combined / se0);
}

int binomial_critical(int n_total, double p0, double alpha) {
    if (n_total < 1) throw DomainError("binomial_critical: n_total must be >= 1");
    if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("binomial_critical: p0 must lie in (0,1)");
    // Pr(X > k) is nonincreasing in k; bisect on [0, n_total].
    int lo = 0, hi = n_total;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (stats::binomial_sf(n_total, p0, mid) <= alpha)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

double binomial_type1(const TwoStagePlan& plan, double delta_p_combined) {
    plan.validate();
    const double p = plan.p0 + delta_p_combined;
    if (!(p > 0.0 && p < 1.0)) throw DomainError("binomial_type1: p0 + delta_p must lie in (0,1)");
    const int kc = binomial_critical(plan.n_total(), plan.p0, plan.alpha);
    return stats::binomial_sf(plan.n_total(), p, kc);
}

BiasReport bias_report(const TwoStagePlan& plan, const UtilityMoments& moments, std::optional<double> cov) {
    plan.validate();
    BiasReport r;
    r.stage1_bias = selection_bias(moments, plan.n1, plan.lambda_u, cov.value_or(moments.cov_xu));
    r.combined_bias = combined_bias(r.stage1_bias, plan.n1, plan.n2);
    r.max_bias = max_bias(plan.p0, plan.n1, plan.lambda_u, std::sqrt(moments.sigma2));
    r.max_combined_bias = combined_bias(r.max_bias, plan.n1, plan.n2);
    r.z_type1 = z_test_type1(plan, r.combined_bias);
    r.z_type1_max = z_test_type1(plan, r.max_combined_bias);
    r.binom_critical = binomial_critical(plan.n_total(), plan.p0, plan.alpha);
    r.binom_type1 = binomial_type1(plan, r.combined_bias);
    r.binom_type1_max = binomial_type1(plan, r.max_combined_bias);
    return r;
}

} // namespace doseopt
