#pragma once

#include "doseopt/outcome_model.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace doseopt {

struct LatticeScores {
    std::int64_t scale = 1;
    std::array<std::int64_t, 4> scores{};
    bool approximate_lattice = false;  // fell back to 1e6 with rounding
};

LatticeScores rationalize_utilities(const UtilitySpec& u, std::int64_t max_denominator = 1000);

// Distribution of an integer-valued sum; value = offset / scale in utility units.
struct LatticePmf {
    std::int64_t scale = 1;
    std::vector<std::int64_t> offsets;  // strictly increasing
    std::vector<double> masses;

    double total_mass() const;
    double mean() const;      // utility units
    double variance() const;  // utility units squared
};

struct PmfOptions {
    std::size_t max_support = std::size_t{1} << 26;
};

LatticePmf utility_sum_pmf(int n, const JointOutcomeModel& m, const LatticeScores& lattice,
                           const PmfOptions& opts = {});
LatticePmf utility_sum_pmf(int n, const JointOutcomeModel& m, const UtilitySpec& u, const PmfOptions& opts = {});

struct SelectionProbs {
    double select_high = 0.0;
    double tie = 0.0;         // mass exactly at the threshold; goes to L
    double select_low = 0.0;  // includes tie
};

// Pr(S_H - S_L > n * lambda_u * scale), ties to L.
SelectionProbs selection_probabilities(const LatticePmf& pmf_h, const LatticePmf& pmf_l, int n, double lambda_u);
double select_high_prob(const LatticePmf& pmf_h, const LatticePmf& pmf_l, int n, double lambda_u);

// Dense PMF of S_H - S_L on integer offsets min_offset, min_offset+1, ...
struct DifferencePmf {
    std::int64_t min_offset = 0;
    std::vector<double> masses;

    // Pr(D <= k)
    double cdf(std::int64_t k) const;
};

DifferencePmf difference_pmf(const LatticePmf& pmf_h, const LatticePmf& pmf_l);

// Threshold n*lambda*scale snapped to an integer when within 1e-9 of one.
double lattice_threshold(int n, double lambda_u, std::int64_t scale);

} // namespace doseopt
