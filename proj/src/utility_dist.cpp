#include "doseopt/utility_dist.hpp"

#include "doseopt/errors.hpp"
#include "doseopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace doseopt {

LatticeScores rationalize_utilities(const UtilitySpec& u, std::int64_t max_denominator) {
    if (max_denominator < 1) throw ContractError("rationalize_utilities: max_denominator must be >= 1");
    LatticeScores out;
    for (std::int64_t s = 1; s <= max_denominator; ++s) {
        bool ok = true;
        for (int k = 0; k < 4 && ok; ++k) {
            const double v = u.u[k] * static_cast<double>(s);
            ok = std::fabs(v - std::round(v)) <= 1e-9;
        }
        if (!ok) continue;
        out.scale = s;
        for (int k = 0; k < 4; ++k) out.scores[k] = std::llround(u.u[k] * static_cast<double>(s));
        return out;
    }
    out.scale = 1'000'000;
    out.approximate_lattice = true;
    for (int k = 0; k < 4; ++k) out.scores[k] = std::llround(u.u[k] * 1e6);
    return out;
}

double LatticePmf::total_mass() const {
    stats::CompensatedSum s;
    for (double m : masses) s.add(m);
    return s.value();
}

double LatticePmf::mean() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) acc += masses[i] * static_cast<double>(offsets[i]);
    return acc / static_cast<double>(scale);
}

double LatticePmf::variance() const {
    const double mu = mean() * static_cast<double>(scale);
    double acc = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        const double dv = static_cast<double>(offsets[i]) - mu;
        acc += masses[i] * dv * dv;
    }
    return acc / static_cast<double>(scale * scale);
}

LatticePmf utility_sum_pmf(int n, const JointOutcomeModel& m, const LatticeScores& lat, const PmfOptions& opts) {
    if (n < 1) throw DomainError("utility_sum_pmf: n must be >= 1");
    const auto [lo_it, hi_it] = std::minmax_element(lat.scores.begin(), lat.scores.end());
    const std::int64_t lo = *lo_it;
    const std::int64_t width = *hi_it - lo;  // per-patient span
    const auto support = static_cast<std::size_t>(width) * static_cast<std::size_t>(n) + 1;
    if (support > opts.max_support)
        throw ResourceError("utility_sum_pmf: support of " + std::to_string(support) +
                            " points exceeds the memory cap of " + std::to_string(opts.max_support));

    // Per-patient kernel on shifted scores; equal scores merge.
    std::vector<double> kernel(static_cast<std::size_t>(width) + 1, 0.0);
    for (int k = 0; k < 4; ++k) kernel[static_cast<std::size_t>(lat.scores[k] - lo)] += m.pi[k];
    std::vector<std::pair<std::size_t, double>> taps;
    for (std::size_t j = 0; j < kernel.size(); ++j)
        if (kernel[j] > 0.0) taps.emplace_back(j, kernel[j]);

    std::vector<double> cur(support, 0.0);
    std::vector<double> next(support, 0.0);
    cur[0] = 1.0;
    std::size_t filled = 1;  // cur is zero beyond this length
    for (int step = 0; step < n; ++step) {
        const std::size_t new_filled = filled + static_cast<std::size_t>(width);
        std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(new_filled), 0.0);
        for (std::size_t i = 0; i < filled; ++i) {
            const double a = cur[i];
            if (a == 0.0) continue;
            for (const auto& [j, w] : taps) next[i + j] += a * w;
        }
        std::swap(cur, next);
        filled = new_filled;
    }

    LatticePmf pmf;
    pmf.scale = lat.scale;
    for (std::size_t i = 0; i < filled; ++i) {
        if (cur[i] <= 0.0) continue;
        pmf.offsets.push_back(static_cast<std::int64_t>(i) + lo * n);
        pmf.masses.push_back(cur[i]);
    }
    return pmf;
}

LatticePmf utility_sum_pmf(int n, const JointOutcomeModel& m, const UtilitySpec& u, const PmfOptions& opts) {
    return utility_sum_pmf(n, m, rationalize_utilities(u), opts);
}

double lattice_threshold(int n, double lambda_u, std::int64_t scale) {
    const double t = static_cast<double>(n) * lambda_u * static_cast<double>(scale);
    const double r = std::round(t);
    if (std::fabs(t - r) <= 1e-9 * std::max(1.0, std::fabs(t))) return r;
    return t;
}

SelectionProbs selection_probabilities(const LatticePmf& h, const LatticePmf& l, int n, double lambda_u) {
    if (h.scale != l.scale) throw ContractError("select_high_prob: PMFs are on different lattices");
    const double t = lattice_threshold(n, lambda_u, h.scale);
    const bool on_lattice = t == std::floor(t);

    // Sweep H ascending; cumulative mass of L strictly below h - t.
    stats::CompensatedSum high, tie;
    stats::CompensatedSum below;
    std::size_t j = 0;
    for (std::size_t i = 0; i < h.offsets.size(); ++i) {
        const double cut = static_cast<double>(h.offsets[i]) - t;  // need l < cut
        while (j < l.offsets.size() && static_cast<double>(l.offsets[j]) < cut) below.add(l.masses[j++]);
        high.add(h.masses[i] * below.value());
        if (on_lattice && j < l.offsets.size() && static_cast<double>(l.offsets[j]) == cut)
            tie.add(h.masses[i] * l.masses[j]);
    }
    SelectionProbs out;
    out.select_high = std::clamp(high.value(), 0.0, 1.0);
    out.tie = tie.value();
    out.select_low = 1.0 - out.select_high;
    return out;
}

double select_high_prob(const LatticePmf& h, const LatticePmf& l, int n, double lambda_u) {
    return selection_probabilities(h, l, n, lambda_u).select_high;
}

double DifferencePmf::cdf(std::int64_t k) const {
    if (k < min_offset) return 0.0;
    const auto idx = static_cast<std::size_t>(k - min_offset);
    if (idx >= masses.size()) return 1.0;
    stats::CompensatedSum s;
    for (std::size_t i = 0; i <= idx; ++i) s.add(masses[i]);
    return s.value();
}

DifferencePmf difference_pmf(const LatticePmf& h, const LatticePmf& l) {
    if (h.scale != l.scale) throw ContractError("difference_pmf: PMFs are on different lattices");
    DifferencePmf d;
    if (h.offsets.empty() || l.offsets.empty()) return d;
    d.min_offset = h.offsets.front() - l.offsets.back();
    const std::int64_t max_offset = h.offsets.back() - l.offsets.front();
    d.masses.assign(static_cast<std::size_t>(max_offset - d.min_offset + 1), 0.0);
    for (std::size_t i = 0; i < h.offsets.size(); ++i)
        for (std::size_t j = 0; j < l.offsets.size(); ++j)
            d.masses[static_cast<std::size_t>(h.offsets[i] - l.offsets[j] - d.min_offset)] += h.masses[i] * l.masses[j];
    return d;
}

} // namespace doseopt
