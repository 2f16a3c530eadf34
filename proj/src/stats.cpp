#include "doseopt/stats.hpp"

#include "doseopt/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace doseopt::stats {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_upper_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("normal_upper_quantile: alpha must lie in (0,1)");
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * alpha);
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

namespace {

double log_binom_pmf(std::int64_t n, double p, std::int64_t j) {
    const double nn = static_cast<double>(n);
    const double jj = static_cast<double>(j);
    return std::lgamma(nn + 1.0) - std::lgamma(jj + 1.0) - std::lgamma(nn - jj + 1.0) +
           jj * std::log(p) + (nn - jj) * std::log1p(-p);
}

// Sum of pmf over [lo, hi], walking away from the mode so terms shrink.
double pmf_range_sum(std::int64_t n, double p, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) return 0.0;
    CompensatedSum acc;
    const double ratio_odds = p / (1.0 - p);
    // Start from the end closest to the mode and use the pmf recurrence outward.
    const auto mode = static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p));
    if (mode <= lo) {
        double term = std::exp(log_binom_pmf(n, p, lo));
        for (std::int64_t j = lo; j <= hi; ++j) {
            acc.add(term);
            if (term < 1e-300 && j > mode) break;
            term *= ratio_odds * static_cast<double>(n - j) / static_cast<double>(j + 1);
        }
    } else if (mode >= hi) {
        double term = std::exp(log_binom_pmf(n, p, hi));
        for (std::int64_t j = hi; j >= lo; --j) {
            acc.add(term);
            if (term < 1e-300) break;
            term *= static_cast<double>(j) / (ratio_odds * static_cast<double>(n - j + 1));
        }
    } else {
        return pmf_range_sum(n, p, lo, mode) + pmf_range_sum(n, p, mode + 1, hi);
    }
    return acc.value();
}

} // namespace

double binomial_sf(std::int64_t n, double p, std::int64_t k) {
    if (n < 0) throw DomainError("binomial_sf: n must be nonnegative");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_sf: p must lie in [0,1]");
    if (k < 0) return 1.0;
    if (k >= n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    const double mean = static_cast<double>(n) * p;
    // Sum whichever tail is shorter in probability.
    if (static_cast<double>(k + 1) > mean) return pmf_range_sum(n, p, k + 1, n);
    return 1.0 - pmf_range_sum(n, p, 0, k);
}

double binomial_cdf(std::int64_t n, double p, std::int64_t k) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    const double mean = static_cast<double>(n) * p;
    if (p > 0.0 && p < 1.0 && static_cast<double>(k) < mean) return pmf_range_sum(n, p, 0, k);
    return 1.0 - binomial_sf(n, p, k);
}

} // namespace doseopt::stats
