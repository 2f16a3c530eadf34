#include "doseopt/errors.hpp"
#include "doseopt/utility_dist.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

using namespace doseopt;
using Catch::Matchers::WithinAbs;

namespace {

// Every ordered sequence of n outcomes: 4^n terms.
std::map<std::int64_t, double> enumerate_sequences(int n, const JointOutcomeModel& m, const LatticeScores& lat) {
    std::map<std::int64_t, double> out;
    std::int64_t total = 1;
    for (int i = 0; i < n; ++i) total *= 4;
    for (std::int64_t code = 0; code < total; ++code) {
        std::int64_t c = code, score = 0;
        double prob = 1.0;
        for (int i = 0; i < n; ++i) {
            const int k = static_cast<int>(c % 4);
            c /= 4;
            score += lat.scores[k];
            prob *= m.pi[k];
        }
        out[score] += prob;
    }
    return out;
}

double mass_at(const LatticePmf& pmf, std::int64_t offset) {
    for (std::size_t i = 0; i < pmf.offsets.size(); ++i)
        if (pmf.offsets[i] == offset) return pmf.masses[i];
    return 0.0;
}

JointOutcomeModel random_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.05, 0.95), V(0.0, 1.0);
    const double p = U(rng), q = U(rng);
    const auto b = phi_bounds(p, q);
    return joint_probs(p, q, b.lo + (b.hi - b.lo) * V(rng));
}

} // namespace

TEST_CASE("rational lattice for common utilities", "[utility_dist]") {
    auto a = rationalize_utilities(UtilitySpec::from_scores(1, 0.5, 0.5, 0));
    CHECK(a.scale == 2);
    CHECK(a.scores == std::array<std::int64_t, 4>{2, 1, 1, 0});
    auto b = rationalize_utilities(UtilitySpec::from_scores(1, 0.6, 0.4, 0));
    CHECK(b.scale == 5);
    CHECK(b.scores == std::array<std::int64_t, 4>{5, 3, 2, 0});
    auto c = rationalize_utilities(UtilitySpec::response_only());
    CHECK(c.scale == 1);
    CHECK(c.scores == std::array<std::int64_t, 4>{1, 1, 0, 0});
    auto d = rationalize_utilities(UtilitySpec::from_scores(1, 0.8, 0.2, 0));
    CHECK(d.scale == 5);
    CHECK_FALSE(d.approximate_lattice);
    auto e = rationalize_utilities(UtilitySpec::from_scores(1, 1 / std::sqrt(2.0), 0.1, 0));
    CHECK(e.approximate_lattice);
    CHECK(e.scale == 1'000'000);
}

TEST_CASE("single patient pmf", "[utility_dist]") {
    const auto m = joint_probs(0.3, 0.5, 0.0);
    const auto lat = rationalize_utilities(UtilitySpec::from_scores(1, 0.6, 0.4, 0));
    const auto pmf = utility_sum_pmf(1, m, lat);
    CHECK(pmf.offsets == std::vector<std::int64_t>{0, 2, 3, 5});
    CHECK_THAT(mass_at(pmf, 0), WithinAbs(0.35, 1e-15));
    CHECK_THAT(mass_at(pmf, 2), WithinAbs(0.35, 1e-15));
    CHECK_THAT(mass_at(pmf, 3), WithinAbs(0.15, 1e-15));
    CHECK_THAT(mass_at(pmf, 5), WithinAbs(0.15, 1e-15));
}

TEST_CASE("two patients against the ten count vectors", "[utility_dist][oracle]") {
    const auto m = joint_probs(0.3, 0.5, 0.0);
    const auto lat = rationalize_utilities(UtilitySpec::from_scores(1, 0.6, 0.4, 0));
    std::map<std::int64_t, double> oracle;
    int vectors = 0;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 2; ++b)
            for (int c = 0; a + b + c <= 2; ++c) {
                const int d = 2 - a - b - c;
                const int counts[4] = {a, b, c, d};
                double coef = 2.0;
                for (int k : counts)
                    if (k == 2) coef /= 2.0;
                double prob = coef;
                std::int64_t score = 0;
                for (int k = 0; k < 4; ++k) {
                    prob *= std::pow(m.pi[k], counts[k]);
                    score += counts[k] * lat.scores[k];
                }
                oracle[score] += prob;
                ++vectors;
            }
    CHECK(vectors == 10);
    const auto pmf = utility_sum_pmf(2, m, lat);
    for (const auto& [s, p] : oracle) CHECK_THAT(mass_at(pmf, s), WithinAbs(p, 1e-15));
}

TEST_CASE("property: exact pmf equals brute-force enumeration for n <= 6", "[utility_dist][property]") {
    std::mt19937_64 rng(8);
    const std::array<UtilitySpec, 4> specs = {UtilitySpec::from_scores(1, 0.6, 0.4, 0),
                                               UtilitySpec::from_scores(1, 0.8, 0.2, 0), UtilitySpec::response_only(),
                                               UtilitySpec::from_scores(0.9, 0.7, 0.25, 0.1)};
    double worst = 0.0;
    for (int model = 0; model < 50; ++model) {
        const auto m = random_model(rng);
        const auto lat = rationalize_utilities(specs[static_cast<std::size_t>(model) % specs.size()]);
        for (int n = 1; n <= 6; ++n) {
            const auto pmf = utility_sum_pmf(n, m, lat);
            const auto oracle = enumerate_sequences(n, m, lat);
            for (const auto& [s, p] : oracle) worst = std::max(worst, std::fabs(mass_at(pmf, s) - p));
            for (std::size_t i = 0; i < pmf.offsets.size(); ++i) CHECK(oracle.count(pmf.offsets[i]) == 1);
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("property: pmf mass, mean and variance", "[utility_dist][property]") {
    std::mt19937_64 rng(9);
    const auto u = UtilitySpec::from_scores(1, 0.8, 0.2, 0);
    const auto lat = rationalize_utilities(u);
    for (int i = 0; i < 20; ++i) {
        const auto m = random_model(rng);
        const auto mom = utility_moments(u, m);
        for (int n : {1, 7, 60, 150}) {
            const auto pmf = utility_sum_pmf(n, m, lat);
            CHECK_THAT(pmf.total_mass(), WithinAbs(1.0, 1e-12));
            CHECK_THAT(pmf.mean(), WithinAbs(n * mom.mu, 1e-9 * n));
            CHECK_THAT(pmf.variance(), WithinAbs(n * mom.sigma2, 1e-8 * n));
        }
    }
}

TEST_CASE("support cap raises a resource error", "[utility_dist]") {
    const auto m = joint_probs(0.3, 0.5, 0.0);
    PmfOptions tiny;
    tiny.max_support = 50;
    CHECK_THROWS_AS(utility_sum_pmf(100, m, UtilitySpec::from_scores(1, 0.6, 0.4, 0), tiny), ResourceError);
}

TEST_CASE("selection probability edge cases", "[utility_dist]") {
    const auto u = UtilitySpec::from_scores(1, 0.6, 0.4, 0);
    const auto m = joint_probs(0.3, 0.5, 0.1);
    const int n = 12;
    const auto a = utility_sum_pmf(n, m, u);
    CHECK(select_high_prob(a, a, n, 1.0 + 1e-9) == 0.0);
    CHECK(select_high_prob(a, a, n, 1.5) == 0.0);
    CHECK_THAT(select_high_prob(a, a, n, -1.0 - 1e-6), WithinAbs(1.0, 1e-12));

    const auto sp = selection_probabilities(a, a, n, 0.0);
    CHECK_THAT(sp.select_high + sp.select_low, WithinAbs(1.0, 1e-12));
    CHECK(sp.tie > 0.0);
    // Symmetric arms: ties go to L, so Pr(select H) = (1 - tie) / 2.
    CHECK_THAT(sp.select_high, WithinAbs((1.0 - sp.tie) / 2.0, 1e-12));
}

TEST_CASE("one patient per arm: sixteen outcome pairs", "[utility_dist][oracle]") {
    const auto u = UtilitySpec::from_scores(1, 0.6, 0.4, 0);
    const auto m = joint_probs(0.3, 0.5, 0.0);
    double oracle = 0.0;
    for (int h = 0; h < 4; ++h)
        for (int l = 0; l < 4; ++l)
            if (u.u[h] > u.u[l]) oracle += m.pi[h] * m.pi[l];
    const auto pmf = utility_sum_pmf(1, m, u);
    CHECK_THAT(select_high_prob(pmf, pmf, 1, 0.0), WithinAbs(oracle, 1e-15));
}

TEST_CASE("difference pmf and threshold snapping", "[utility_dist]") {
    const auto u = UtilitySpec::from_scores(1, 0.6, 0.4, 0);
    const auto h = utility_sum_pmf(9, joint_probs(0.5, 0.5, 0.0), u);
    const auto l = utility_sum_pmf(9, joint_probs(0.3, 0.5, 0.0), u);
    const auto d = difference_pmf(h, l);
    double total = 0;
    for (double x : d.masses) total += x;
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    for (double lam : {-0.2, 0.0, 0.05, 0.1333}) {
        const double thr = lattice_threshold(9, lam, 5);
        CHECK_THAT(select_high_prob(h, l, 9, lam), WithinAbs(1.0 - d.cdf(static_cast<std::int64_t>(std::floor(thr))), 1e-12));
    }
    CHECK(lattice_threshold(10, 0.3, 10) == 30.0);
    CHECK(lattice_threshold(3, 0.1, 10) == 3.0);

    const auto other = utility_sum_pmf(9, joint_probs(0.3, 0.5, 0.0), UtilitySpec::response_only());
    CHECK_THROWS_AS(difference_pmf(h, other), ContractError);
    CHECK_THROWS_AS(selection_probabilities(h, other, 9, 0.0), ContractError);
}
