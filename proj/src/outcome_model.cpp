#include "doseopt/outcome_model.hpp"

#include "doseopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace doseopt {

namespace {

constexpr double kPhiSlack = 1e-12;

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::string fmt4(double x) {
    std::ostringstream os;
    os << std::fixed;
    os.precision(4);
    os << x;
    return os.str();
}

} // namespace

UtilitySpec UtilitySpec::from_scores(double u1, double u2, double u3, double u4) {
    for (double v : {u1, u2, u3, u4})
        if (!is_probability(v)) throw DomainError("utility scores must lie in [0,1]");
    if (!(u1 >= u2 && u2 >= u3 && u3 >= u4))
        throw DomainError("utility scores must satisfy u1 >= u2 >= u3 >= u4");
    UtilitySpec s;
    s.u = {u1, u2, u3, u4};
    return s;
}

UtilitySpec UtilitySpec::response_only() { return from_scores(1.0, 1.0, 0.0, 0.0); }

UtilitySpec utility_from_margins(double delta, double d) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("efficacy margin delta must lie in (0,1]");
    if (!(d > 0.0 && d <= 1.0)) throw DomainError("safety margin d must lie in (0,1]");
    const double r = delta / d;
    UtilitySpec s;
    s.ratio = r;
    double u2 = 1.0 / (1.0 + r);
    double u3 = r / (1.0 + r);
    if (r > 1.0) {
        std::swap(u2, u3);
        s.swapped = true;
    }
    s.u = {1.0, u2, u3, 0.0};
    return s;
}

PhiBounds phi_bounds(double p, double q) {
    if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
        throw DomainError("phi_bounds: p and q must lie strictly inside (0,1)");
    const double scale = std::sqrt(p * (1.0 - p) * q * (1.0 - q));
    const double pq = p * q;
    return {(std::max(0.0, p + q - 1.0) - pq) / scale, (std::min(p, q) - pq) / scale};
}

JointOutcomeModel joint_probs(double p, double q, double phi, PhiPolicy policy) {
    if (!is_probability(p) || !is_probability(q)) throw DomainError("joint_probs: p and q must lie in [0,1]");
    if (!std::isfinite(phi)) throw DomainError("joint_probs: phi must be finite");
    JointOutcomeModel m;
    m.p = p;
    m.q = q;
    const double var = p * (1.0 - p) * q * (1.0 - q);
    if (var == 0.0) {
        m.degenerate = true;
        m.phi = 0.0;
    } else {
        const auto b = phi_bounds(p, q);
        if (phi < b.lo - kPhiSlack || phi > b.hi + kPhiSlack) {
            if (policy == PhiPolicy::Reject)
                throw DomainError("phi=" + fmt(phi) + " outside Frechet bounds [" + fmt4(b.lo) + ", " + fmt4(b.hi) +
                                  "] for p=" + fmt(p) + ", q=" + fmt(q));
            m.truncated = true;
        }
        m.phi = std::clamp(phi, b.lo, b.hi);
    }
    const double pi1 = p * q + m.phi * std::sqrt(var);
    m.pi = {pi1, p - pi1, q - pi1, 1.0 - p - q + pi1};
    // Clear rounding dust at the Frechet boundary.
    for (double& v : m.pi)
        if (v < 0.0 && v > -1e-14) v = 0.0;
    return m;
}

JointOutcomeModel estimate_model(const CountTable& c) {
    if (c.n11 < 0 || c.n10 < 0 || c.n01 < 0 || c.n00 < 0) throw DomainError("counts must be nonnegative");
    const std::int64_t n = c.total();
    if (n <= 0) throw DomainError("count table is empty");
    const double nd = static_cast<double>(n);
    const double row1 = static_cast<double>(c.n11 + c.n10);
    const double col1 = static_cast<double>(c.n11 + c.n01);
    const double row0 = nd - row1;
    const double col0 = nd - col1;
    const double p = row1 / nd;
    const double q = col1 / nd;
    const double denom = std::sqrt(row1 * row0 * col1 * col0);
    if (denom == 0.0) {
        auto m = joint_probs(p, q, 0.0);
        m.degenerate = true;
        return m;
    }
    const double phi = (nd * static_cast<double>(c.n11) - row1 * col1) / denom;
    return joint_probs(p, q, phi, PhiPolicy::Truncate);
}

UtilityMoments utility_moments(const UtilitySpec& u, const JointOutcomeModel& m) {
    UtilityMoments r;
    for (int k = 0; k < 4; ++k) r.mu += u.u[k] * m.pi[k];
    for (int k = 0; k < 4; ++k) r.sigma2 += m.pi[k] * (u.u[k] - r.mu) * (u.u[k] - r.mu);
    r.cov_xu = u.u[0] * m.pi[0] + u.u[1] * m.pi[1] - m.p * r.mu;
    return r;
}

MeanDecomposition mean_utility_decomposed(const UtilitySpec& u, double p, double q, double phi) {
    const auto m = joint_probs(p, q, phi);
    const double eta = u.interaction();
    const double mu = eta * m.pi[0] + (u.u2() - u.u4()) * p + (u.u3() - u.u4()) * q + u.u4();
    return {mu, eta};
}

double marginal_rate_of_substitution(const UtilitySpec& u, double p, double q, double phi) {
    const double eta = u.interaction();
    double dp = u.u2() - u.u4();
    double dq = u.u3() - u.u4();
    if (eta != 0.0) {
        if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
            throw DomainError("marginal_rate_of_substitution: p and q must lie strictly inside (0,1)");
        const double vp = p * (1.0 - p);
        const double vq = q * (1.0 - q);
        dp += eta * (q + phi * 0.5 * std::sqrt(vq / vp) * (1.0 - 2.0 * p));
        dq += eta * (p + phi * 0.5 * std::sqrt(vp / vq) * (1.0 - 2.0 * q));
    }
    if (std::fabs(dp) < 1e-14) throw DomainError("marginal_rate_of_substitution: d(mu)/dp vanishes");
    return dq / dp;
}

} // namespace doseopt
