#pragma once

#include "doseopt/errors.hpp"
#include "doseopt/outcome_model.hpp"
#include "doseopt/utility_dist.hpp"

#include <string>

namespace doseopt {

// Reference dose pair (p, q) plus the two decision scenarios:
//   S_L: L = (p, q),       H = (p, q - d)    -> L is correct
//   S_H: L = (p - delta, q), H = (p, q)      -> H is correct
struct DesignScenario {
    double p = 0.0;
    double q = 0.0;
    double delta = 0.0;
    double d = 0.0;
    double phi = 0.0;
    UtilitySpec utilities;
    double alpha_L = 0.8;
    double alpha_H = 0.8;

    static DesignScenario margin_based(double p, double q, double delta, double d, double phi, double alpha);
    // Efficacy-only design: u = (1,1,0,0); q and d are placeholders.
    static DesignScenario rose(double p, double delta, double alpha);
};

struct ScenarioArms {
    JointOutcomeModel sl_low, sl_high;
    JointOutcomeModel sh_low, sh_high;
};

// Throws DomainError naming the offending arm when phi is infeasible.
ScenarioArms scenario_arms(const DesignScenario& s);

struct ScenarioMoments {
    double dmu_L = 0.0;  // mu_H - mu_L under S_L
    double v_L = 0.0;
    double dmu_H = 0.0;  // mu_H - mu_L under S_H
    double v_H = 0.0;
};

ScenarioMoments scenario_moments(const DesignScenario& s);

struct ThresholdSizes {
    long long n_L = 0;
    long long n_H = 0;
    long long n = 0;
};

ThresholdSizes n_for_threshold(const DesignScenario& s, double lambda_u, long long n_cap = 10'000'000);

enum class Method { Approximate, Exact };
enum class Binding { Low, High, Both };

std::string to_string(Method m);
std::string to_string(Binding b);

struct DesignResult {
    int n = 0;
    double lambda_u = 0.0;
    Method method = Method::Approximate;
    double pcs_L = 0.0;  // analytic (normal model) for Approximate, exact otherwise
    double pcs_H = 0.0;
    Binding binding = Binding::Both;
    double n_real = 0.0;  // unrounded closed-form size (Approximate only)
    LatticeScores lattice;  // Exact only
};

// Closed-form size; lambda* re-evaluated at the integer n.
DesignResult optimal_design_approx(const DesignScenario& s);

// Analytic normal-model PCS at (n, lambda).
struct PcsPair {
    double pcs_L;
    double pcs_H;
};
PcsPair analytic_pcs(const DesignScenario& s, int n, double lambda_u);
PcsPair exact_pcs(const DesignScenario& s, int n, double lambda_u);

struct GridSpec {
    enum class Kind { Lattice, Uniform };
    Kind kind = Kind::Lattice;
    double step = 0.001;          // Uniform only
    bool allow_negative = false;  // admit lambda_u < 0 inside the open interval
};

struct ExactSearchOptions {
    GridSpec grid;
    int n_cap = 5000;
    int window = 15;
    int workers = 1;
    PmfOptions pmf;
};

class InfeasibleDesign : public ResourceError {
public:
    InfeasibleDesign(const std::string& what, double best_pcs_L, double best_pcs_H)
        : ResourceError(what), best_pcs_L(best_pcs_L), best_pcs_H(best_pcs_H) {}
    double best_pcs_L;
    double best_pcs_H;
};

DesignResult optimal_design_exact(const DesignScenario& s, const ExactSearchOptions& opts = {});

DesignResult rose_design(double p, double delta, double alpha, Method method, const ExactSearchOptions& opts = {});

} // namespace doseopt
