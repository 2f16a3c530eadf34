#include "doseopt/errors.hpp"
#include "doseopt/selection_bias.hpp"
#include "doseopt/stats.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/distributions/binomial.hpp>

#include <cmath>
#include <random>

using namespace doseopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kPi = 3.14159265358979323846;

UtilityMoments response_moments(double p) {
    return utility_moments(UtilitySpec::response_only(), joint_probs(p, 0.5, 0.0));
}

// E[max of two independent Binomial(n, p)/n] - p, by exhaustive enumeration.
double enumerated_bias(int n, double p) {
    boost::math::binomial_distribution<> b(n, p);
    double e = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            e += boost::math::pdf(b, i) * boost::math::pdf(b, j) * std::max(i, j) / static_cast<double>(n);
    return e - p;
}

TwoStagePlan plan(int n1, int n2, double p0 = 0.4) {
    TwoStagePlan t;
    t.n1 = n1;
    t.n2 = n2;
    t.p0 = p0;
    t.alpha = 0.025;
    return t;
}

} // namespace

TEST_CASE("truncated selection expectation", "[bias]") {
    CHECK_THAT(truncated_selection_expectation(0.0), WithinAbs(0.5641896, 1e-7));
    CHECK_THAT(truncated_selection_expectation(2.0), WithinAbs(0.2075537, 1e-7));
    CHECK(truncated_selection_expectation(60.0) < 1e-300);
    CHECK_THAT(truncated_selection_expectation(-1.3), WithinAbs(truncated_selection_expectation(1.3), 1e-15));
}

TEST_CASE("selection bias examples", "[bias]") {
    const auto m = response_moments(0.4);
    CHECK_THAT(selection_bias(m, 60, 0.0), WithinAbs(0.035682, 1e-6));
    CHECK_THAT(selection_bias(m, 60, 0.0), WithinAbs(std::sqrt(0.24) / std::sqrt(60 * kPi), 1e-15));
    CHECK(selection_bias(m, 60, 0.0, 0.0) == 0.0);
    const double sigma = std::sqrt(m.sigma2);
    const double lam = 2.0 * sigma / std::sqrt(60.0);
    CHECK_THAT(selection_bias(m, 60, lam) / selection_bias(m, 60, 0.0), WithinRel(std::exp(-1.0), 1e-12));

    UtilityMoments flat;
    CHECK_THROWS_AS(selection_bias(flat, 60, 0.0), DomainError);
}

TEST_CASE("maximum bias", "[bias]") {
    CHECK_THAT(max_bias(0.4, 60, 0.0), WithinAbs(0.035682, 1e-6));
    CHECK_THAT(max_bias(0.5, 100, 0.0), WithinAbs(0.0282095, 1e-7));
    CHECK_THAT(max_bias(0.3, 40, 0.0) / max_bias(0.3, 160, 0.0), WithinRel(2.0, 1e-12));
    CHECK_THROWS_AS(max_bias(0.4, 60, 0.05), ContractError);
    CHECK_THAT(max_bias(0.4, 60, 0.05, 0.4), WithinRel(max_bias(0.4, 60, 0.0) * std::exp(-0.05 * 0.05 * 60 / (4 * 0.16)), 1e-12));
    CHECK_THROWS_AS(max_bias(0.0, 60, 0.0), DomainError);
}

TEST_CASE("dilution", "[bias]") {
    CHECK_THAT(combined_bias(0.035682, 60, 140), WithinAbs(0.0107046, 1e-7));
    CHECK_THAT(combined_bias(max_bias(0.4, 60, 0.0), 60, 140), WithinAbs(0.0107046, 1e-6));
    CHECK(combined_bias(0.03, 60, 0) == 0.03);
    CHECK(combined_bias(0.03, 60, 100'000'000) < 1e-7);
}

TEST_CASE("bias against exhaustive enumeration of small stage-1 samples", "[bias][oracle]") {
    const double p = 0.4;
    double gap3 = 0.0;
    for (int n1 : {2, 3}) {
        const double exact = enumerated_bias(n1, p);
        const double formula = selection_bias(response_moments(p), n1, 0.0);
        const double gap = std::fabs(formula - exact);
        CHECK(gap <= 0.25 / std::sqrt(n1) * 0.2);
        if (n1 == 3) gap3 = gap;
    }
    const double gap12 = std::fabs(selection_bias(response_moments(p), 12, 0.0) - enumerated_bias(12, p));
    CHECK(gap12 < gap3);
    // Large n1: the asymptotic formula is tight.
    CHECK_THAT(selection_bias(response_moments(p), 200, 0.0), WithinRel(enumerated_bias(200, p), 0.02));
}

TEST_CASE("Z test Type I", "[bias]") {
    auto t = plan(60, 140);
    CHECK_THAT(z_test_type1(t, 0.0), WithinAbs(0.025, 1e-15));
    CHECK_THAT(z_test_type1(t, 0.0107046), WithinAbs(0.0494, 5e-5));
    CHECK_THAT(z_test_type1(t, 0.0107046),
               WithinAbs(stats::normal_sf(1.959963984540054 - 0.0107046 / std::sqrt(0.24 / 200)), 1e-14));
    CHECK(z_test_type1(t, -0.01) < 0.025);
}

TEST_CASE("binomial critical value", "[bias][oracle]") {
    CHECK(binomial_critical(5, 0.5, 0.025) == 5);
    CHECK(binomial_critical(1, 0.5, 0.6) == 0);
    // Partial-sum oracle: walk the upper tail downward with compensated summation.
    for (double p0 : {0.3, 0.4, 0.5}) {
        boost::math::binomial_distribution<> b(200, p0);
        stats::CompensatedSum tail;
        int oracle = 200;
        for (int k = 200; k >= 1; --k) {
            tail.add(boost::math::pdf(b, k));  // tail = Pr(X >= k) = Pr(X > k - 1)
            if (tail.value() <= 0.025) oracle = k - 1;
            else break;
        }
        CHECK(binomial_critical(200, p0, 0.025) == oracle);
    }
}

TEST_CASE("binomial Type I", "[bias]") {
    auto t = plan(60, 140);
    const int kc = binomial_critical(200, 0.4, 0.025);
    const double size = binomial_type1(t, 0.0);
    CHECK(size <= 0.025);
    CHECK_THAT(size, WithinAbs(stats::binomial_sf(200, 0.4, kc), 1e-15));
    double prev = size;
    for (double dp : {0.002, 0.005, 0.0107046, 0.02}) {
        const double v = binomial_type1(t, dp);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(binomial_type1(t, 0.7), DomainError);
}

TEST_CASE("bias report assembles the chain", "[bias]") {
    const auto r = bias_report(plan(60, 140), response_moments(0.4));
    CHECK_THAT(r.stage1_bias, WithinAbs(0.035682, 1e-6));
    CHECK_THAT(r.combined_bias, WithinAbs(0.0107046, 1e-6));
    CHECK_THAT(r.max_combined_bias, WithinAbs(r.combined_bias, 1e-15));
    CHECK_THAT(r.z_type1_max, WithinAbs(0.0494, 5e-5));
    CHECK(r.binom_critical == binomial_critical(200, 0.4, 0.025));
}

TEST_CASE("property: bias barely moves with phi on the simulation grid", "[bias][property]") {
    // phi only enters through the recomputed moments; the simulation grid stays inside the band.
    for (double p : {0.3, 0.4, 0.5}) {
        const auto uu = UtilitySpec::from_scores(1, 0.8, 0.2, 0);
        const double ref = selection_bias(utility_moments(uu, joint_probs(p, 0.8, 0.0)), 60, 0.0);
        const double alt = selection_bias(utility_moments(uu, joint_probs(p, 0.8, -0.3)), 60, 0.0);
        CHECK(std::fabs(alt - ref) / ref < 1e-3);
    }
}

TEST_CASE("property: maximum bias dominates any admissible covariance", "[bias][property]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.05, 0.95), V(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        std::array<double, 4> s{V(rng), V(rng), V(rng), V(rng)};
        std::sort(s.begin(), s.end(), std::greater<>());
        if (s[0] - s[3] < 1e-3) continue;
        const auto u = UtilitySpec::from_scores(s[0], s[1], s[2], s[3]);
        const double p = U(rng), q = U(rng);
        const auto b = phi_bounds(p, q);
        const auto m = utility_moments(u, joint_probs(p, q, b.lo + (b.hi - b.lo) * V(rng)));
        if (m.sigma2 < 1e-10) continue;
        const int n1 = 20 + static_cast<int>(V(rng) * 100);
        const double lam = V(rng) * 0.05;
        CHECK(std::fabs(m.cov_xu) <= std::sqrt(p * (1 - p) * m.sigma2) + 1e-12);
        CHECK(selection_bias(m, n1, lam) <= max_bias(p, n1, lam, std::sqrt(m.sigma2)) + 1e-15);
    }
}

TEST_CASE("property: bias and Type I grow with n1 at fixed total", "[bias][property]") {
    for (double p : {0.3, 0.4, 0.5}) {
        const auto m = utility_moments(UtilitySpec::from_scores(1, 0.8, 0.2, 0), joint_probs(p, 0.8, 0.0));
        double pb = 0, pz = 0, pbin = 0;
        for (int n1 : {40, 60, 80, 100}) {
            auto t = plan(n1, 200 - n1, p);
            const double cb = combined_bias(selection_bias(m, n1, 0.0), n1, 200 - n1);
            CHECK(cb > pb);
            CHECK(z_test_type1(t, cb) > pz);
            CHECK(binomial_type1(t, cb) > pbin);
            pb = cb;
            pz = z_test_type1(t, cb);
            pbin = binomial_type1(t, cb);
        }
    }
}

TEST_CASE("Lemma: closed form against Monte Carlo pairs", "[bias][oracle]") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    const int pairs = 2'000'000;
    for (double k : {0.0, 1.0, 2.0}) {
        double s = 0, s2 = 0;
        for (int i = 0; i < pairs; ++i) {
            const double h = z(rng), l = z(rng);
            const double v = (h - l > k) ? h : l;
            s += v;
            s2 += v * v;
        }
        const double mean = s / pairs;
        const double se = std::sqrt((s2 / pairs - mean * mean) / pairs);
        CHECK(std::fabs(mean - truncated_selection_expectation(k)) < 4 * se);
    }
}
