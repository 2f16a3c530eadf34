#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace doseopt {

// Scores for the four joint outcomes, best to worst:
// (response, no AE), (response, AE), (no response, no AE), (no response, AE).
struct UtilitySpec {
    std::array<double, 4> u{};
    std::optional<double> ratio;  // delta/d when built from margins
    bool swapped = false;         // u2/u3 were exchanged to keep the ordering

    double u1() const { return u[0]; }
    double u2() const { return u[1]; }
    double u3() const { return u[2]; }
    double u4() const { return u[3]; }
    double interaction() const { return u[0] - u[1] - u[2] + u[3]; }

    // Raw scores; must be ordered and within [0,1].
    static UtilitySpec from_scores(double u1, double u2, double u3, double u4);
    // U = X. The efficacy-only special case.
    static UtilitySpec response_only();
};

UtilitySpec utility_from_margins(double delta, double d);

struct PhiBounds {
    double lo;
    double hi;
};

PhiBounds phi_bounds(double p, double q);

enum class PhiPolicy { Reject, Truncate };

struct JointOutcomeModel {
    double p = 0.0;
    double q = 0.0;
    double phi = 0.0;
    std::array<double, 4> pi{};
    bool truncated = false;   // phi was pulled into the Frechet range
    bool degenerate = false;  // a margin is 0 or 1, phi carries no information
};

// Degenerate margins (p or q in {0,1}) are accepted; phi is then ignored and set to 0.
JointOutcomeModel joint_probs(double p, double q, double phi, PhiPolicy policy = PhiPolicy::Reject);

struct CountTable {
    std::int64_t n11 = 0;
    std::int64_t n10 = 0;
    std::int64_t n01 = 0;
    std::int64_t n00 = 0;
    std::int64_t total() const { return n11 + n10 + n01 + n00; }
};

JointOutcomeModel estimate_model(const CountTable& counts);

struct UtilityMoments {
    double mu = 0.0;
    double sigma2 = 0.0;
    double cov_xu = 0.0;
};

UtilityMoments utility_moments(const UtilitySpec& u, const JointOutcomeModel& m);

struct MeanDecomposition {
    double mu;
    double eta;
};

MeanDecomposition mean_utility_decomposed(const UtilitySpec& u, double p, double q, double phi);

double marginal_rate_of_substitution(const UtilitySpec& u, double p, double q, double phi);

} // namespace doseopt
