#include "doseopt/design_sizer.hpp"

#include "doseopt/parallel.hpp"
#include "doseopt/stats.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace doseopt {

DesignScenario DesignScenario::margin_based(double p, double q, double delta, double d, double phi, double alpha) {
    DesignScenario s;
    s.p = p;
    s.q = q;
    s.delta = delta;
    s.d = d;
    s.phi = phi;
    s.utilities = utility_from_margins(delta, d);
    s.alpha_L = alpha;
    s.alpha_H = alpha;
    return s;
}

DesignScenario DesignScenario::rose(double p, double delta, double alpha) {
    DesignScenario s;
    s.p = p;
    s.q = 0.5;
    s.delta = delta;
    s.d = 0.25;
    s.phi = 0.0;
    s.utilities = UtilitySpec::response_only();
    s.alpha_L = alpha;
    s.alpha_H = alpha;
    return s;
}

namespace {

JointOutcomeModel arm(const char* label, double p, double q, double phi) {
    if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0)) {
        std::ostringstream os;
        os << "arm " << label << ": (p=" << p << ", q=" << q << ") must lie strictly inside (0,1)";
        throw DomainError(os.str());
    }
    try {
        return joint_probs(p, q, phi);
    } catch (const DomainError& e) {
        throw DomainError(std::string("arm ") + label + ": " + e.what());
    }
}

void check_alpha(double a, const char* name) {
    if (!(a > 0.5 && a < 1.0)) throw DomainError(std::string(name) + " must lie in (0.5, 1)");
}

} // namespace

ScenarioArms scenario_arms(const DesignScenario& s) {
    if (!(s.delta > 0.0) || !(s.d > 0.0)) throw DomainError("margins delta and d must be positive");
    ScenarioArms a;
    a.sl_low = arm("S_L/L (p, q)", s.p, s.q, s.phi);
    a.sl_high = arm("S_L/H (p, q-d)", s.p, s.q - s.d, s.phi);
    a.sh_low = arm("S_H/L (p-delta, q)", s.p - s.delta, s.q, s.phi);
    a.sh_high = a.sl_low;
    return a;
}

ScenarioMoments scenario_moments(const DesignScenario& s) {
    const auto arms = scenario_arms(s);
    const auto m_ref = utility_moments(s.utilities, arms.sl_low);
    const auto m_sl_h = utility_moments(s.utilities, arms.sl_high);
    const auto m_sh_l = utility_moments(s.utilities, arms.sh_low);
    ScenarioMoments r;
    r.dmu_L = m_sl_h.mu - m_ref.mu;
    r.v_L = m_sl_h.sigma2 + m_ref.sigma2;
    r.dmu_H = m_ref.mu - m_sh_l.mu;
    r.v_H = m_ref.sigma2 + m_sh_l.sigma2;
    if (!(r.dmu_L <= 0.0 && r.dmu_H > 0.0 && r.dmu_L < r.dmu_H))
        throw DomainError("utilities do not separate the scenarios: need mean difference <= 0 under S_L and > 0 under S_H");
    return r;
}

namespace {

long long ceil_size(double x, long long cap, const char* label) {
    if (!std::isfinite(x) || x > static_cast<double>(cap))
        throw ResourceError(std::string(label) + " exceeds the sample-size cap of " + std::to_string(cap));
    // Guard against x = 58.0000000001 from rounding.
    const double r = std::round(x);
    if (std::fabs(x - r) <= 1e-9 * std::max(1.0, r)) return std::max(1LL, static_cast<long long>(r));
    return std::max(1LL, static_cast<long long>(std::ceil(x)));
}

Binding binding_of(double slack_L, double slack_H) {
    if (std::fabs(slack_L - slack_H) <= 1e-12) return Binding::Both;
    return slack_L < slack_H ? Binding::Low : Binding::High;
}

} // namespace

std::string to_string(Method m) { return m == Method::Approximate ? "approximate" : "exact"; }

std::string to_string(Binding b) {
    switch (b) {
    case Binding::Low: return "S_L";
    case Binding::High: return "S_H";
    default: return "both";
    }
}

ThresholdSizes n_for_threshold(const DesignScenario& s, double lambda_u, long long n_cap) {
    check_alpha(s.alpha_L, "alpha_L");
    check_alpha(s.alpha_H, "alpha_H");
    const auto m = scenario_moments(s);
    if (!(lambda_u > m.dmu_L && lambda_u < m.dmu_H))
        throw DomainError("lambda_u must lie strictly between the scenario mean differences");
    const double zl = stats::normal_quantile(s.alpha_L);
    const double zh = stats::normal_quantile(s.alpha_H);
    ThresholdSizes t;
    t.n_L = ceil_size(zl * zl * m.v_L / ((lambda_u - m.dmu_L) * (lambda_u - m.dmu_L)), n_cap, "n_L");
    t.n_H = ceil_size(zh * zh * m.v_H / ((m.dmu_H - lambda_u) * (m.dmu_H - lambda_u)), n_cap, "n_H");
    t.n = std::max(t.n_L, t.n_H);
    return t;
}

PcsPair analytic_pcs(const DesignScenario& s, int n, double lambda_u) {
    const auto m = scenario_moments(s);
    const double nn = static_cast<double>(n);
    return {stats::normal_cdf((lambda_u - m.dmu_L) / std::sqrt(m.v_L / nn)),
            stats::normal_sf((lambda_u - m.dmu_H) / std::sqrt(m.v_H / nn))};
}

DesignResult optimal_design_approx(const DesignScenario& s) {
    check_alpha(s.alpha_L, "alpha_L");
    check_alpha(s.alpha_H, "alpha_H");
    const auto m = scenario_moments(s);
    const double zl = stats::normal_quantile(s.alpha_L);
    const double zh_low = stats::normal_quantile(1.0 - s.alpha_H);  // negative
    const double root = (zl * std::sqrt(m.v_L) - zh_low * std::sqrt(m.v_H)) / (m.dmu_H - m.dmu_L);
    DesignResult r;
    r.method = Method::Approximate;
    r.n_real = root * root;
    r.n = static_cast<int>(ceil_size(r.n_real, 10'000'000, "approximate n"));
    r.lambda_u = m.dmu_H + zh_low * std::sqrt(m.v_H / r.n);
    const auto pcs = analytic_pcs(s, r.n, r.lambda_u);
    r.pcs_L = pcs.pcs_L;
    r.pcs_H = pcs.pcs_H;
    r.binding = binding_of(r.pcs_L - s.alpha_L, r.pcs_H - s.alpha_H);
    return r;
}

namespace {

struct Cumulative {
    std::int64_t min_offset = 0;
    std::vector<double> cdf;  // Pr(D <= min_offset + i)
    std::vector<double> sf;   // Pr(D >  min_offset + i)

    explicit Cumulative(const DifferencePmf& d) : min_offset(d.min_offset), cdf(d.masses.size()), sf(d.masses.size()) {
        stats::CompensatedSum lo;
        for (std::size_t i = 0; i < d.masses.size(); ++i) {
            lo.add(d.masses[i]);
            cdf[i] = lo.value();
        }
        stats::CompensatedSum hi;
        for (std::size_t i = d.masses.size(); i-- > 0;) {
            sf[i] = hi.value();
            hi.add(d.masses[i]);
        }
    }
    double le(std::int64_t k) const {
        if (k < min_offset) return 0.0;
        const auto i = static_cast<std::size_t>(k - min_offset);
        return i < cdf.size() ? cdf[i] : 1.0;
    }
    double gt(std::int64_t k) const {
        if (k < min_offset) return 1.0;
        const auto i = static_cast<std::size_t>(k - min_offset);
        return i < sf.size() ? sf[i] : 0.0;
    }
};

struct ScenarioDiffs {
    Cumulative sl;  // D under S_L
    Cumulative sh;  // D under S_H
};

ScenarioDiffs diffs_at(const ScenarioArms& arms, const LatticeScores& lat, int n, const PmfOptions& po) {
    const auto ref = utility_sum_pmf(n, arms.sl_low, lat, po);
    const auto sl_h = utility_sum_pmf(n, arms.sl_high, lat, po);
    const auto sh_l = utility_sum_pmf(n, arms.sh_low, lat, po);
    return {Cumulative(difference_pmf(sl_h, ref)), Cumulative(difference_pmf(ref, sh_l))};
}

struct NEval {
    bool feasible = false;
    double lambda = 0.0;
    double pcs_L = 0.0;
    double pcs_H = 0.0;
    double best_gap = -std::numeric_limits<double>::infinity();  // max over lambda of min slack
    double best_L = 0.0, best_H = 0.0;
};

// Lattice index k: select H iff D > k. Uniform lambda maps to k = floor(threshold).
NEval evaluate_n(const DesignScenario& s, const ScenarioMoments& mom, const ScenarioArms& arms,
                 const LatticeScores& lat, int n, const ExactSearchOptions& opts) {
    const auto dd = diffs_at(arms, lat, n, opts.pmf);
    const double unit = static_cast<double>(n) * static_cast<double>(lat.scale);
    double lo = mom.dmu_L;
    if (!opts.grid.allow_negative) lo = std::max(lo, 0.0);
    NEval out;
    auto consider = [&](double lambda, std::int64_t k) {
        const double pl = dd.sl.le(k);
        const double ph = dd.sh.gt(k);
        const double gap = std::min(pl - s.alpha_L, ph - s.alpha_H);
        if (gap > out.best_gap) {
            out.best_gap = gap;
            out.best_L = pl;
            out.best_H = ph;
        }
        if (pl >= s.alpha_L && ph >= s.alpha_H) {
            out.feasible = true;
            out.lambda = lambda;
            out.pcs_L = pl;
            out.pcs_H = ph;
            return true;
        }
        return false;
    };
    if (opts.grid.kind == GridSpec::Kind::Lattice) {
        auto k = static_cast<std::int64_t>(std::floor(lo * unit)) - 1;
        for (;; ++k) {
            const double lambda = static_cast<double>(k) / unit;
            if (lambda >= mom.dmu_H) break;
            const bool inside = lambda > mom.dmu_L && (opts.grid.allow_negative || k >= 0);
            if (inside && consider(lambda, k)) break;
        }
    } else {
        if (!(opts.grid.step > 0.0)) throw DomainError("grid step must be positive");
        auto j = static_cast<std::int64_t>(std::floor(lo / opts.grid.step)) - 1;
        for (;; ++j) {
            const double lambda = static_cast<double>(j) * opts.grid.step;
            if (lambda >= mom.dmu_H) break;
            if (!(lambda > mom.dmu_L) || (!opts.grid.allow_negative && lambda < 0.0)) continue;
            const double t = lattice_threshold(n, lambda, lat.scale);
            if (consider(lambda, static_cast<std::int64_t>(std::floor(t)))) break;
        }
    }
    return out;
}

} // namespace

PcsPair exact_pcs(const DesignScenario& s, int n, double lambda_u) {
    const auto arms = scenario_arms(s);
    const auto lat = rationalize_utilities(s.utilities);
    const auto dd = diffs_at(arms, lat, n, {});
    const auto k = static_cast<std::int64_t>(std::floor(lattice_threshold(n, lambda_u, lat.scale)));
    return {dd.sl.le(k), dd.sh.gt(k)};
}

DesignResult optimal_design_exact(const DesignScenario& s, const ExactSearchOptions& opts) {
    if (opts.n_cap < 1) throw DomainError("n_cap must be >= 1");
    if (opts.window < 1) throw DomainError("search window must be >= 1");
    const auto approx = optimal_design_approx(s);
    const auto mom = scenario_moments(s);
    const auto arms = scenario_arms(s);
    const auto lat = rationalize_utilities(s.utilities);

    auto eval_window = [&](int first, int count) {
        std::vector<NEval> res(static_cast<std::size_t>(count));
        parallel_for(res.size(), opts.workers, [&](std::size_t i) {
            res[i] = evaluate_n(s, mom, arms, lat, first + static_cast<int>(i), opts);
        });
        return res;
    };
    auto finish = [&](int n, const NEval& e) {
        DesignResult r;
        r.method = Method::Exact;
        r.n = n;
        r.lambda_u = e.lambda;
        r.pcs_L = e.pcs_L;
        r.pcs_H = e.pcs_H;
        r.binding = binding_of(e.pcs_L - s.alpha_L, e.pcs_H - s.alpha_H);
        r.lattice = lat;
        return r;
    };

    const int start = std::max(1, std::min(approx.n - 10, opts.n_cap));
    NEval best;
    for (int first = start; first <= opts.n_cap; first += opts.window) {
        const int count = std::min(opts.window, opts.n_cap - first + 1);
        const auto res = eval_window(first, count);
        for (int i = 0; i < count; ++i) {
            if (!res[static_cast<std::size_t>(i)].feasible) {
                if (res[static_cast<std::size_t>(i)].best_gap > best.best_gap) best = res[static_cast<std::size_t>(i)];
                continue;
            }
            int n = first + i;
            NEval e = res[static_cast<std::size_t>(i)];
            // Feasible right at the start: walk down so the answer is still the smallest n.
            if (n == start) {
                while (n > 1) {
                    const auto lower = evaluate_n(s, mom, arms, lat, n - 1, opts);
                    if (!lower.feasible) break;
                    --n;
                    e = lower;
                }
            }
            return finish(n, e);
        }
    }
    std::ostringstream os;
    os << "no feasible exact design with n <= " << opts.n_cap << "; best PCS pair (" << best.best_L << ", "
       << best.best_H << ")";
    throw InfeasibleDesign(os.str(), best.best_L, best.best_H);
}

DesignResult rose_design(double p, double delta, double alpha, Method method, const ExactSearchOptions& opts) {
    const auto s = DesignScenario::rose(p, delta, alpha);
    return method == Method::Approximate ? optimal_design_approx(s) : optimal_design_exact(s, opts);
}

} // namespace doseopt
