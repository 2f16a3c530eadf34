#pragma once

#include <cstdint>

namespace doseopt::stats {

double normal_cdf(double x);
// Upper tail 1 - Phi(x), computed without cancellation.
double normal_sf(double x);
double normal_quantile(double p);
// z such that Pr(Z > z) = alpha.
double normal_upper_quantile(double alpha);

// Pr(X > k) for X ~ Binomial(n, p); k < 0 gives 1, k >= n gives 0.
double binomial_sf(std::int64_t n, double p, std::int64_t k);
double binomial_cdf(std::int64_t n, double p, std::int64_t k);

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace doseopt::stats
