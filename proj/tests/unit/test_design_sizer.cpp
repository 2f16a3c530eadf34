#include "doseopt/design_sizer.hpp"
#include "doseopt/stats.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace doseopt;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<DesignScenario> table1_grid() {
    std::vector<DesignScenario> out;
    for (double alpha : {0.7, 0.8})
        for (double p : {0.3, 0.5})
            for (double delta : {0.10, 0.15})
                for (double q : {0.5, 0.7})
                    for (double phi : {-0.2, 0.0, 0.2}) out.push_back(DesignScenario::margin_based(p, q, delta, 0.15, phi, alpha));
    return out;
}

} // namespace

TEST_CASE("scenario moments", "[design]") {
    const auto s = DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.8);
    const auto m = scenario_moments(s);
    const double r = 0.10 / 0.15;
    CHECK_THAT(m.dmu_H, WithinAbs(0.10 / (1 + r), 1e-14));
    CHECK_THAT(m.dmu_L, WithinAbs(-0.10 / (1 + r), 1e-14));

    const auto rose = DesignScenario::rose(0.4, 0.15, 0.8);
    const auto rm = scenario_moments(rose);
    CHECK_THAT(rm.dmu_L, WithinAbs(0.0, 1e-15));
    CHECK_THAT(rm.dmu_H, WithinAbs(0.15, 1e-14));
    CHECK_THAT(rm.v_L, WithinAbs(0.48, 1e-14));
    CHECK_THAT(rm.v_H, WithinAbs(0.4275, 1e-14));

    const auto eq = DesignScenario::margin_based(0.4, 0.6, 0.15, 0.15, 0.1, 0.8);
    const auto em = scenario_moments(eq);
    CHECK_THAT(std::fabs(em.dmu_L), WithinAbs(std::fabs(em.dmu_H), 1e-14));
}

TEST_CASE("infeasible phi names the arm", "[design]") {
    auto s = DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.9, 0.8);
    try {
        scenario_arms(s);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("S_L") != std::string::npos);
        CHECK(msg.find("0.6547") != std::string::npos);
    }
    CHECK_THROWS_AS(scenario_arms(DesignScenario::margin_based(0.3, 0.1, 0.10, 0.15, 0.0, 0.8)), DomainError);
    CHECK_THROWS_AS(scenario_arms(DesignScenario::margin_based(0.05, 0.5, 0.10, 0.15, 0.0, 0.8)), DomainError);
}

TEST_CASE("sizes for a fixed threshold", "[design]") {
    const auto rose = DesignScenario::rose(0.4, 0.15, 0.8);
    const auto t = n_for_threshold(rose, 0.0777);
    CHECK(t.n_H == 58);
    CHECK(t.n == 58);
    CHECK(std::llabs(t.n_L - 58) <= 1);
    const auto a = optimal_design_approx(rose);
    const auto at = n_for_threshold(rose, a.lambda_u);
    CHECK(at.n_L <= 58);
    CHECK(at.n_H <= 58);

    CHECK_THROWS_AS(n_for_threshold(rose, 0.15 - 1e-9), ResourceError);
    CHECK_THROWS_AS(n_for_threshold(rose, 0.2), DomainError);
    CHECK_THROWS_AS(n_for_threshold(rose, 0.0), DomainError);

    // Equal margins and equal arm variances: both constraints coincide at zero.
    auto sym = DesignScenario::margin_based(0.5, 0.5, 0.15, 0.15, 0.0, 0.8);
    const auto st = n_for_threshold(sym, 0.0);
    CHECK(st.n_L == st.n_H);

    // One-sided Z structure.
    const auto m = scenario_moments(sym);
    const double z = stats::normal_quantile(0.8);
    CHECK(st.n_H == static_cast<long long>(std::ceil(z * z * m.v_H / (m.dmu_H * m.dmu_H))));
}

TEST_CASE("approximate design examples", "[design]") {
    const auto r = optimal_design_approx(DesignScenario::rose(0.4, 0.15, 0.8));
    CHECK(r.n == 58);
    CHECK(r.lambda_u >= 0.076);
    CHECK(r.lambda_u <= 0.079);
    CHECK(r.method == Method::Approximate);
    CHECK(r.pcs_L >= 0.8);
    CHECK(r.pcs_H >= 0.8 - 1e-12);
    CHECK(optimal_design_approx(DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.8)).n == 44);
    CHECK(optimal_design_approx(DesignScenario::margin_based(0.3, 0.5, 0.15, 0.15, -0.2, 0.7)).n == 9);
    CHECK(rose_design(0.3, 0.10, 0.8, Method::Approximate).n == 112);
}

TEST_CASE("exact design examples", "[design]") {
    const auto a = optimal_design_exact(DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.8));
    CHECK(a.n == 46);
    CHECK(a.pcs_L >= 0.8);
    CHECK(a.pcs_H >= 0.8);
    CHECK(optimal_design_exact(DesignScenario::margin_based(0.5, 0.7, 0.15, 0.15, 0.2, 0.7)).n == 20);
    CHECK(rose_design(0.3, 0.10, 0.8, Method::Exact).n == 122);
    CHECK(rose_design(0.3, 0.15, 0.7, Method::Exact).n == 19);
}

TEST_CASE("exact search reports PCS recomputable from the exact distribution", "[design][property]") {
    for (const auto& s : table1_grid()) {
        const auto r = optimal_design_exact(s);
        CHECK(r.pcs_L >= s.alpha_L);
        CHECK(r.pcs_H >= s.alpha_H);
        const auto again = exact_pcs(s, r.n, r.lambda_u);
        CHECK(again.pcs_L == r.pcs_L);
        CHECK(again.pcs_H == r.pcs_H);
        // Nothing smaller in the scanned window is feasible on the same grid.
        if (r.n > 1) {
            ExactSearchOptions o;
            o.n_cap = r.n - 1;
            CHECK_THROWS_AS(optimal_design_exact(s, o), InfeasibleDesign);
        }
    }
}

TEST_CASE("negative thresholds only when asked", "[design]") {
    const auto s = DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.7);
    const auto def = optimal_design_exact(s);
    CHECK(def.lambda_u >= 0.0);
    ExactSearchOptions o;
    o.grid.allow_negative = true;
    const auto neg = optimal_design_exact(s, o);
    CHECK(neg.n <= def.n);
    CHECK(neg.pcs_L >= 0.7);
    CHECK(neg.pcs_H >= 0.7);
}

TEST_CASE("uniform grid is never better than the lattice grid", "[design]") {
    ExactSearchOptions uni;
    uni.grid.kind = GridSpec::Kind::Uniform;
    uni.grid.step = 0.001;
    for (double phi : {-0.2, 0.0, 0.2}) {
        const auto s = DesignScenario::margin_based(0.5, 0.5, 0.15, 0.15, phi, 0.7);
        CHECK(optimal_design_exact(s, uni).n >= optimal_design_exact(s).n);
    }
}

TEST_CASE("infeasible exact search carries the best PCS", "[design]") {
    ExactSearchOptions o;
    o.n_cap = 3;
    try {
        optimal_design_exact(DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.8), o);
        FAIL("expected InfeasibleDesign");
    } catch (const InfeasibleDesign& e) {
        CHECK(e.best_pcs_L > 0.0);
        CHECK(e.best_pcs_H > 0.0);
        CHECK((e.best_pcs_L < 0.8 || e.best_pcs_H < 0.8));
    }
}

TEST_CASE("property: approximate n responds to margins, targets and correlation", "[design][property]") {
    for (double alpha : {0.7, 0.8})
        for (double p : {0.3, 0.5})
            for (double q : {0.5, 0.7}) {
                int prev = 0;
                for (double phi : {-0.2, 0.0, 0.2}) {
                    const int n10 = optimal_design_approx(DesignScenario::margin_based(p, q, 0.10, 0.15, phi, alpha)).n;
                    const int n15 = optimal_design_approx(DesignScenario::margin_based(p, q, 0.15, 0.15, phi, alpha)).n;
                    CHECK(n15 <= n10);
                    CHECK(n10 >= prev);
                    prev = n10;
                    if (alpha > 0.75)
                        CHECK(optimal_design_approx(DesignScenario::margin_based(p, q, 0.10, 0.15, phi, 0.7)).n <= n10);
                }
            }
}

TEST_CASE("property: optimal threshold balances both constraints", "[design][property]") {
    for (const auto& s : table1_grid()) {
        const auto r = optimal_design_approx(s);
        const auto t = n_for_threshold(s, r.lambda_u);
        CHECK(std::llabs(t.n_L - r.n) <= 1);
        CHECK(std::llabs(t.n_H - r.n) <= 1);
    }
}

TEST_CASE("property: exact and normal PCS agree once n is moderate", "[design][property]") {
    for (const auto& s : table1_grid()) {
        const auto r = optimal_design_approx(s);
        if (r.n < 20) continue;
        const auto e = exact_pcs(s, r.n, r.lambda_u);
        CHECK(std::fabs(e.pcs_L - r.pcs_L) < 0.05);
        CHECK(std::fabs(e.pcs_H - r.pcs_H) < 0.05);
    }
}

TEST_CASE("PCS tends to one with n", "[design]") {
    const auto s = DesignScenario::margin_based(0.3, 0.5, 0.10, 0.15, 0.0, 0.8);
    const auto r = optimal_design_approx(s);
    const auto big = exact_pcs(s, 2000, r.lambda_u);
    CHECK(big.pcs_L > 0.9999);
    CHECK(big.pcs_H > 0.9999);
}

TEST_CASE("exact search is worker-count independent", "[design]") {
    ExactSearchOptions one, four;
    four.workers = 4;
    for (double phi : {-0.2, 0.2}) {
        const auto s = DesignScenario::margin_based(0.3, 0.7, 0.10, 0.15, phi, 0.8);
        const auto a = optimal_design_exact(s, one);
        const auto b = optimal_design_exact(s, four);
        CHECK(a.n == b.n);
        CHECK(a.lambda_u == b.lambda_u);
        CHECK(a.pcs_L == b.pcs_L);
    }
}
