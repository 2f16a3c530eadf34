#include "doseopt/trial_sim.hpp"

#include "doseopt/errors.hpp"
#include "doseopt/parallel.hpp"
#include "doseopt/selection_bias.hpp"
#include "doseopt/stats.hpp"
#include "doseopt/tte_bias.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace doseopt {

namespace {

constexpr long long kChunk = 4096;

double survival_time(double z, double lambda0) {
    // T = -ln(Phi(z)) / lambda0, using the upper tail for large z to keep precision.
    if (z > 0.0) return -std::log1p(-stats::normal_sf(z)) / lambda0;
    return -std::log(stats::normal_cdf(z)) / lambda0;
}

void check_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(name) + " must lie in [0,1]");
}

} // namespace

double Proportion::se() const {
    if (total <= 0) return 0.0;
    const double v = value();
    return std::sqrt(v * (1.0 - v) / static_cast<double>(total));
}

void SimConfig::validate() const {
    check_prob(p_L, "p_L");
    check_prob(p_H, "p_H");
    check_prob(q_L, "q_L");
    check_prob(q_H, "q_H");
    if (n1 < 1) throw DomainError("n1 must be >= 1");
    if (n2 < 0) throw DomainError("n2 must be >= 0");
    if (replications < 1) throw DomainError("replications must be >= 1");
    joint_probs(p_L, q_L, phi);
    joint_probs(p_H, q_H, phi);
    const double p0v = p0();
    if (!(p0v > 0.0 && p0v < 1.0)) throw DomainError("binary p0 must lie in (0,1)");
    if (!(binary.alpha > 0.0 && binary.alpha < 0.5)) throw DomainError("binary alpha must lie in (0, 0.5)");
    if (tte.enabled) {
        if (!(tte.lambda0 > 0.0)) throw DomainError("tte lambda0 must be positive");
        if (!(tte.rho_c > -1.0 && tte.rho_c < 1.0)) throw DomainError("tte rho_c must lie in (-1,1)");
        if (!(tte.t_entry > 0.0)) throw DomainError("tte t_entry must be positive");
        if (!(tte.tau > 0.0)) throw DomainError("tte tau must be positive");
        if (!(tte.t_admin - tte.t_entry >= tte.tau))
            throw DomainError("tte: t_admin - t_entry must be >= tau so every landmark is evaluable");
        if (!(tte.alpha > 0.0 && tte.alpha < 0.5)) throw DomainError("tte alpha must lie in (0, 0.5)");
        if (tte.control_size < 0) throw DomainError("tte control_size must be >= 0");
    }
    double per_rep = 2.0 * n1 + n2 + (tte.enabled ? control_size() : 0);
    if (static_cast<double>(replications) * per_rep > patient_cap)
        throw ResourceError("simulation volume (replications x patients) exceeds the cap of " +
                            std::to_string(patient_cap));
}

void gen_arm(int n, const ArmModel& arm, const TteBlock& tte, ReplicationStream& rng, std::vector<PatientRecord>& out) {
    const auto& m = arm.outcome;
    const auto& u = *arm.utilities;
    const auto& lat = *arm.lattice;
    const double p = m.p;
    const double y_given_x1 = p > 0.0 ? m.pi[0] / p : 0.0;
    const double y_given_x0 = p < 1.0 ? m.pi[2] / (1.0 - p) : 0.0;
    const double zp = (p > 0.0 && p < 1.0) ? stats::normal_quantile(p) : 0.0;
    const double rho = tte.rho_c;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    for (int i = 0; i < n; ++i) {
        const auto w = rng.uniform4();
        PatientRecord r;
        if (tte.enabled) {
            const double rad = std::sqrt(-2.0 * std::log(w[0]));
            const double ang = 2.0 * std::numbers::pi * w[1];
            const double z1 = rad * std::cos(ang);
            const double z2 = rho * z1 + rho_c * rad * std::sin(ang);
            // Phi(z1) <= p  <=>  z1 <= Phi^-1(p)
            r.x = p >= 1.0 ? 1 : (p <= 0.0 ? 0 : (z1 <= zp ? 1 : 0));
            r.t = survival_time(z2, tte.lambda0);
            r.enroll = w[3] * tte.t_entry;
            const double follow = tte.t_admin - r.enroll;
            r.event = r.t <= follow ? 1 : 0;
            r.v = r.event ? r.t : follow;
        } else {
            r.x = w[0] < p ? 1 : 0;
        }
        r.y = w[2] < (r.x ? y_given_x1 : y_given_x0) ? 1 : 0;
        const int cell = r.x ? (r.y ? 0 : 1) : (r.y ? 2 : 3);
        r.u = u.u[static_cast<std::size_t>(cell)];
        r.score = lat.scores[static_cast<std::size_t>(cell)];
        out.push_back(r);
    }
}

std::vector<PatientRecord> gen_arm(int n, const ArmModel& arm, const TteBlock& tte, ReplicationStream& rng) {
    std::vector<PatientRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    gen_arm(n, arm, tte, rng, out);
    return out;
}

namespace {

void gen_control(int n, const TteBlock& tte, ReplicationStream& rng, std::vector<PatientRecord>& out) {
    for (int i = 0; i < n; ++i) {
        const auto w = rng.uniform4();
        PatientRecord r;
        r.t = -std::log(w[0]) / tte.lambda0;
        r.enroll = w[1] * tte.t_entry;
        const double follow = tte.t_admin - r.enroll;
        r.event = r.t <= follow ? 1 : 0;
        r.v = r.event ? r.t : follow;
        out.push_back(r);
    }
}

struct Moments {
    double n = 0, u = 0, uu = 0, x = 0, xu = 0, s = 0, su = 0;
    double ve_n = 0, v = 0, vu = 0, ve_u = 0;  // time terms (events-only variant uses ve_*)
    int events = 0;

    void add(const PatientRecord& r, double tau, bool events_only) {
        n += 1;
        u += r.u;
        uu += r.u * r.u;
        x += r.x;
        xu += r.x * r.u;
        const double sv = r.t > tau ? 1.0 : 0.0;
        s += sv;
        su += sv * r.u;
        events += r.event;
        if (!events_only || r.event) {
            ve_n += 1;
            ve_u += r.u;
            v += r.v;
            vu += r.v * r.u;
        }
    }
};

} // namespace

SelectionOutcome run_selection(const std::vector<PatientRecord>& arm_L, const std::vector<PatientRecord>& arm_H,
                               double lambda_u, const LatticeScores& lattice, PluginProtocol protocol, double tau,
                               bool events_only) {
    if (arm_L.size() != arm_H.size() || arm_L.empty())
        throw ContractError("run_selection: arms must be nonempty and of equal size");
    std::int64_t sum_l = 0, sum_h = 0;
    for (const auto& r : arm_L) sum_l += r.score;
    for (const auto& r : arm_H) sum_h += r.score;
    const int n = static_cast<int>(arm_L.size());
    const double thr = lattice_threshold(n, lambda_u, lattice.scale);
    SelectionOutcome out;
    out.selected = static_cast<double>(sum_h - sum_l) > thr ? Dose::H : Dose::L;

    const auto& sel = out.selected == Dose::H ? arm_H : arm_L;
    Moments m;
    for (const auto& r : sel) m.add(r, tau, events_only);
    out.est.p_hat_selected = m.x / m.n;
    out.est.events_selected = m.events;
    if (protocol == PluginProtocol::Pooled) {
        const auto& other = out.selected == Dose::H ? arm_L : arm_H;
        for (const auto& r : other) m.add(r, tau, events_only);
    }
    const double mu = m.u / m.n;
    out.est.n_used = static_cast<int>(m.n);
    out.est.sigma_u = std::sqrt(std::max(0.0, m.uu / m.n - mu * mu));
    out.est.cov_xu = m.xu / m.n - (m.x / m.n) * mu;
    out.est.cov_su = m.su / m.n - (m.s / m.n) * mu;
    if (m.ve_n > 0) out.est.cov_vu = m.vu / m.ve_n - (m.v / m.ve_n) * (m.ve_u / m.ve_n);
    return out;
}

TwoSampleStats two_sample_stats(const std::vector<PatientRecord>& treated, const std::vector<PatientRecord>& control) {
    struct Obs {
        double v;
        int event;
        int group;
    };
    thread_local std::vector<Obs> all;
    all.clear();
    all.reserve(treated.size() + control.size());
    for (const auto& r : treated) all.push_back({r.v, r.event, 1});
    for (const auto& r : control) all.push_back({r.v, r.event, 0});
    std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.v < b.v; });

    double at_risk = static_cast<double>(all.size());
    double at_risk1 = static_cast<double>(treated.size());
    double score = 0.0, var_lr = 0.0, info_cox = 0.0;
    TwoSampleStats out;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        double d = 0, d1 = 0, leave1 = 0;
        while (j < all.size() && all[j].v == all[i].v) {
            d += all[j].event;
            d1 += all[j].event * all[j].group;
            leave1 += all[j].group;
            ++j;
        }
        if (d > 0) {
            const double frac = at_risk1 / at_risk;
            score += d1 - d * frac;
            info_cox += d * frac * (1.0 - frac);
            if (at_risk > 1.0) var_lr += d * frac * (1.0 - frac) * (at_risk - d) / (at_risk - 1.0);
            out.events += static_cast<int>(d);
        }
        at_risk -= static_cast<double>(j - i);
        at_risk1 -= leave1;
        i = j;
    }
    out.logrank_z = var_lr > 0.0 ? score / std::sqrt(var_lr) : 0.0;
    out.cox_score_z = info_cox > 0.0 ? score / std::sqrt(info_cox) : 0.0;
    return out;
}

TestOutcomes run_tests(const std::vector<PatientRecord>& treated, const std::vector<PatientRecord>& control,
                       const TestConfig& cfg) {
    TestOutcomes o;
    const double n = static_cast<double>(treated.size());
    for (const auto& r : treated) o.successes += r.x;
    const double se0 = std::sqrt(cfg.p0 * (1.0 - cfg.p0) / n);
    o.z_stat = (o.successes / n - cfg.p0) / se0;
    o.z_reject = o.z_stat > stats::normal_upper_quantile(cfg.alpha);
    o.binom_reject = o.successes > cfg.binom_critical;
    if (!cfg.tte) return o;

    const double z = stats::normal_upper_quantile(cfg.tte_alpha);
    const double s0 = std::exp(-cfg.lambda0 * cfg.tau);
    double surv = 0.0, total_v = 0.0;
    for (const auto& r : treated) {
        surv += r.t > cfg.tau ? 1.0 : 0.0;
        total_v += r.v;
        o.d_events += r.event;
    }
    o.landmark_stat = (surv / n - s0) / std::sqrt(s0 * (1.0 - s0) / n);
    o.landmark_reject = o.landmark_stat > z;
    if (o.d_events == 0) {
        o.exp_indeterminate = true;
    } else {
        const double d = static_cast<double>(o.d_events);
        o.exp_stat = (std::log(d / total_v) - std::log(cfg.lambda0)) * std::sqrt(d);
        o.exp_reject = o.exp_stat <= -z;
    }
    const auto two = two_sample_stats(treated, control);
    o.d_total = two.events;
    o.logrank_stat = two.logrank_z;
    o.cox_stat = two.cox_score_z;
    o.logrank_reject = two.events > 0 && two.logrank_z <= -z;
    o.cox_reject = two.events > 0 && two.cox_score_z <= -z;
    return o;
}

namespace {

// Per-chunk sums; chunks are merged in index order so totals do not depend on the
// number of workers.
struct Accumulator {
    long long reps = 0, select_h = 0;
    double bias_obs = 0, bias_obs_sq = 0;
    long long plugin_ok = 0;
    double bias_est = 0, bias_est_max = 0, z_est = 0, z_est_max = 0, b_est = 0, b_est_max = 0;
    long long z_rej = 0, b_rej = 0;
    double phi_hat = 0;
    long long phi_n = 0;

    long long lm_rej = 0, exp_rej = 0, exp_n = 0, exp_indet = 0, lr_rej = 0, cox_rej = 0;
    double lm_est = 0, cox_est = 0, bridge = 0;
    long long tte_ok = 0;
    double exp_est = 0;
    long long exp_est_n = 0;
    double st = 0, sx = 0, stt = 0, sxx = 0, stx = 0, sn = 0;
    double events = 0, events_total = 0;

    void merge(const Accumulator& o) {
        reps += o.reps;
        select_h += o.select_h;
        bias_obs += o.bias_obs;
        bias_obs_sq += o.bias_obs_sq;
        plugin_ok += o.plugin_ok;
        bias_est += o.bias_est;
        bias_est_max += o.bias_est_max;
        z_est += o.z_est;
        z_est_max += o.z_est_max;
        b_est += o.b_est;
        b_est_max += o.b_est_max;
        z_rej += o.z_rej;
        b_rej += o.b_rej;
        phi_hat += o.phi_hat;
        phi_n += o.phi_n;
        lm_rej += o.lm_rej;
        exp_rej += o.exp_rej;
        exp_n += o.exp_n;
        exp_indet += o.exp_indet;
        lr_rej += o.lr_rej;
        cox_rej += o.cox_rej;
        lm_est += o.lm_est;
        cox_est += o.cox_est;
        bridge += o.bridge;
        tte_ok += o.tte_ok;
        exp_est += o.exp_est;
        exp_est_n += o.exp_est_n;
        st += o.st;
        sx += o.sx;
        stt += o.stt;
        sxx += o.sxx;
        stx += o.stx;
        sn += o.sn;
        events += o.events;
        events_total += o.events_total;
    }
};

double pearson_phi(const std::vector<PatientRecord>& a, const std::vector<PatientRecord>& b, bool& ok) {
    CountTable c;
    for (const auto* arm : {&a, &b})
        for (const auto& r : *arm) {
            if (r.x && r.y) ++c.n11;
            else if (r.x) ++c.n10;
            else if (r.y) ++c.n01;
            else ++c.n00;
        }
    const double n = static_cast<double>(c.total());
    const double r1 = static_cast<double>(c.n11 + c.n10), c1 = static_cast<double>(c.n11 + c.n01);
    const double den = std::sqrt(r1 * (n - r1) * c1 * (n - c1));
    ok = den > 0.0;
    return ok ? (n * static_cast<double>(c.n11) - r1 * c1) / den : 0.0;
}

struct StudyContext {
    const SimConfig& cfg;
    std::uint64_t key;
    LatticeScores lattice;
    JointOutcomeModel model_L, model_H;
    TwoStagePlan plan;
    int kc = 0;
    TestConfig tests;
    double w1 = 0.0;
    double s0 = 0.0;
};

void run_chunk(const StudyContext& ctx, long long first, long long last, Accumulator& acc) {
    const auto& cfg = ctx.cfg;
    const ArmModel arm_l{ctx.model_L, &cfg.utilities, &ctx.lattice};
    const ArmModel arm_h{ctx.model_H, &cfg.utilities, &ctx.lattice};
    std::vector<PatientRecord> s1_l, s1_h, treated, control;
    const double rn1 = std::sqrt(static_cast<double>(cfg.n1));
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    for (long long rep = first; rep < last; ++rep) {
        ReplicationStream rng(cfg.seed, ctx.key, static_cast<std::uint64_t>(rep));
        s1_l.clear();
        s1_h.clear();
        gen_arm(cfg.n1, arm_l, cfg.tte, rng, s1_l);
        gen_arm(cfg.n1, arm_h, cfg.tte, rng, s1_h);
        const auto sel = run_selection(s1_l, s1_h, cfg.lambda_u, ctx.lattice, cfg.protocol, cfg.tte.tau,
                                       cfg.events_only_time_cov);
        const bool pick_h = sel.selected == Dose::H;
        treated = pick_h ? s1_h : s1_l;
        gen_arm(cfg.n2, pick_h ? arm_h : arm_l, cfg.tte, rng, treated);
        control.clear();
        if (cfg.tte.enabled) gen_control(cfg.control_size(), cfg.tte, rng, control);

        const auto t = run_tests(treated, control, ctx.tests);
        ++acc.reps;
        acc.select_h += pick_h;
        const double p_true = pick_h ? cfg.p_H : cfg.p_L;
        const double bias = static_cast<double>(t.successes) / static_cast<double>(treated.size()) - p_true;
        acc.bias_obs += bias;
        acc.bias_obs_sq += bias * bias;
        acc.z_rej += t.z_reject;
        acc.b_rej += t.binom_reject;

        bool phi_ok = false;
        const double ph = pearson_phi(s1_l, s1_h, phi_ok);
        if (phi_ok) {
            acc.phi_hat += ph;
            ++acc.phi_n;
        }

        const auto& e = sel.est;
        const bool plugin_ok = e.sigma_u > 1e-12;
        double expo = 1.0;
        if (plugin_ok) {
            const double k = cfg.lambda_u * rn1 / e.sigma_u;
            expo = std::exp(-0.25 * k * k);
            const double est = ctx.w1 * e.cov_xu / (e.sigma_u * rn1) * inv_sqrt_pi * expo;
            const double est_max =
                ctx.w1 * std::sqrt(e.p_hat_selected * (1.0 - e.p_hat_selected)) / rn1 * inv_sqrt_pi * expo;
            ++acc.plugin_ok;
            acc.bias_est += est;
            acc.bias_est_max += est_max;
            acc.z_est += z_test_type1(ctx.plan, est);
            acc.z_est_max += z_test_type1(ctx.plan, est_max);
            acc.b_est += stats::binomial_sf(ctx.plan.n_total(), ctx.plan.p0 + est, ctx.kc);
            acc.b_est_max += stats::binomial_sf(ctx.plan.n_total(), ctx.plan.p0 + est_max, ctx.kc);
        }

        if (!cfg.tte.enabled) continue;
        acc.lm_rej += t.landmark_reject;
        acc.lr_rej += t.logrank_reject;
        acc.cox_rej += t.cox_reject;
        if (t.exp_indeterminate) {
            ++acc.exp_indet;
        } else {
            ++acc.exp_n;
            acc.exp_rej += t.exp_reject;
        }
        acc.events += t.d_events;
        acc.events_total += t.d_total;
        for (const auto* arm : {&s1_l, &s1_h})
            for (const auto& r : *arm) {
                acc.st += r.t;
                acc.stt += r.t * r.t;
                acc.sx += r.x;
                acc.sxx += r.x;
                acc.stx += r.t * r.x;
                acc.sn += 1.0;
            }
        if (!plugin_ok) continue;
        TtePlan plan;
        plan.lambda0 = cfg.tte.lambda0;
        plan.tau = cfg.tte.tau;
        plan.n1 = cfg.n1;
        plan.n2 = cfg.n2;
        plan.lambda_u = cfg.lambda_u;
        plan.alpha = cfg.tte.alpha;
        plan.d_events = std::max(1, t.d_events);
        plan.d_total = std::max(1, t.d_total);
        const double scale = inv_sqrt_pi * expo / (e.sigma_u * rn1);
        ++acc.tte_ok;
        acc.lm_est += landmark_type1(plan, ctx.w1 * e.cov_su * scale, ctx.s0);
        const double b = e.cov_vu * scale;
        if (t.d_events >= 1) {
            acc.exp_est += exp_test_type1(plan, b).type1;
            ++acc.exp_est_n;
        }
        acc.cox_est += cox_type1(plan, b).type1;
        const double lbm = std::sqrt(ctx.s0 * (1.0 - ctx.s0)) / rn1 * inv_sqrt_pi * expo;
        acc.bridge += bridge_cox_type1(plan, landmark_hazard_bridge(ctx.s0, plan.tau, plan.lambda0, lbm, ctx.w1));
    }
}

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

} // namespace

ScenarioSummary run_study(const SimConfig& cfg) {
    cfg.validate();
    StudyContext ctx{cfg, fnv1a64(cfg.id), rationalize_utilities(cfg.utilities), joint_probs(cfg.p_L, cfg.q_L, cfg.phi),
                     joint_probs(cfg.p_H, cfg.q_H, cfg.phi), {}, 0, {}, 0.0, 0.0};
    ctx.plan = TwoStagePlan{cfg.n1, cfg.n2, cfg.lambda_u, cfg.p0(), cfg.binary.alpha};
    ctx.kc = binomial_critical(ctx.plan.n_total(), ctx.plan.p0, ctx.plan.alpha);
    ctx.tests = TestConfig{ctx.plan.p0, cfg.binary.alpha, ctx.kc, cfg.tte.enabled, cfg.tte.lambda0, cfg.tte.tau,
                           cfg.tte.alpha};
    ctx.w1 = ctx.plan.dilution();
    ctx.s0 = std::exp(-cfg.tte.lambda0 * cfg.tte.tau);

    const long long chunks = (cfg.replications + kChunk - 1) / kChunk;
    std::vector<Accumulator> parts(static_cast<std::size_t>(chunks));
    parallel_for(parts.size(), resolve_workers(cfg.workers), [&](std::size_t c) {
        const long long first = static_cast<long long>(c) * kChunk;
        run_chunk(ctx, first, std::min(cfg.replications, first + kChunk), parts[c]);
    });
    Accumulator a;
    for (const auto& p : parts) a.merge(p);

    ScenarioSummary s;
    s.id = cfg.id;
    s.replications = a.reps;
    s.select_H = {a.select_h, a.reps};
    const double r = static_cast<double>(a.reps);
    s.bias_observed = a.bias_obs / r;
    s.bias_observed_se = std::sqrt(std::max(0.0, a.bias_obs_sq / r - s.bias_observed * s.bias_observed) / r);
    const double ok = static_cast<double>(a.plugin_ok);
    s.plugin_invalid = a.reps - a.plugin_ok;
    s.bias_est = safe_div(a.bias_est, ok);
    s.bias_est_max = safe_div(a.bias_est_max, ok);
    s.z_est = safe_div(a.z_est, ok);
    s.z_est_max = safe_div(a.z_est_max, ok);
    s.binom_est = safe_div(a.b_est, ok);
    s.binom_est_max = safe_div(a.b_est_max, ok);
    s.phi_hat = safe_div(a.phi_hat, static_cast<double>(a.phi_n));
    s.z_observed = {a.z_rej, a.reps};
    s.binom_observed = {a.b_rej, a.reps};
    s.binom_critical = ctx.kc;
    s.tte = cfg.tte.enabled;
    if (s.tte) {
        s.landmark_observed = {a.lm_rej, a.reps};
        s.exp_observed = {a.exp_rej, a.exp_n};
        s.exp_indeterminate = a.exp_indet;
        s.logrank_observed = {a.lr_rej, a.reps};
        s.cox_observed = {a.cox_rej, a.reps};
        const double tok = static_cast<double>(a.tte_ok);
        s.landmark_est = safe_div(a.lm_est, tok);
        s.exp_est = safe_div(a.exp_est, static_cast<double>(a.exp_est_n));
        s.cox_est = safe_div(a.cox_est, tok);
        s.bridge_cox_type1 = safe_div(a.bridge, tok);
        const double mt = a.st / a.sn, mx = a.sx / a.sn;
        const double vt = a.stt / a.sn - mt * mt, vx = a.sxx / a.sn - mx * mx;
        s.rho_tx = (vt > 0.0 && vx > 0.0) ? (a.stx / a.sn - mt * mx) / std::sqrt(vt * vx) : 0.0;
        s.mean_events = a.events / r;
        s.mean_events_total = a.events_total / r;
    }
    return s;
}

EmpiricalPcs empirical_pcs(const DesignScenario& s, int n, double lambda_u, long long replications,
                           std::uint64_t seed, int workers, std::uint64_t scenario_key) {
    if (n < 1) throw DomainError("empirical_pcs: n must be >= 1");
    if (replications < 1) throw DomainError("empirical_pcs: replications must be >= 1");
    const auto arms = scenario_arms(s);
    const auto lat = rationalize_utilities(s.utilities);
    const double thr = lattice_threshold(n, lambda_u, lat.scale);
    auto cumulative = [](const JointOutcomeModel& m) {
        return std::array<double, 3>{m.pi[0], m.pi[0] + m.pi[1], m.pi[0] + m.pi[1] + m.pi[2]};
    };
    const std::array<std::array<double, 3>, 4> cum{cumulative(arms.sl_low), cumulative(arms.sl_high),
                                                   cumulative(arms.sh_low), cumulative(arms.sh_high)};
    auto draw_sum = [&](const std::array<double, 3>& c, ReplicationStream& rng) {
        std::int64_t sum = 0;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            const int cell = u < c[0] ? 0 : (u < c[1] ? 1 : (u < c[2] ? 2 : 3));
            sum += lat.scores[static_cast<std::size_t>(cell)];
        }
        return sum;
    };
    const long long chunks = (replications + kChunk - 1) / kChunk;
    std::vector<std::array<long long, 2>> parts(static_cast<std::size_t>(chunks), {0, 0});
    parallel_for(parts.size(), resolve_workers(workers), [&](std::size_t c) {
        const long long first = static_cast<long long>(c) * kChunk;
        const long long last = std::min(replications, first + kChunk);
        for (long long rep = first; rep < last; ++rep) {
            ReplicationStream rng(seed, scenario_key, static_cast<std::uint64_t>(rep));
            const auto l1 = draw_sum(cum[0], rng);
            const auto h1 = draw_sum(cum[1], rng);
            const auto l2 = draw_sum(cum[2], rng);
            const auto h2 = draw_sum(cum[3], rng);
            parts[c][0] += static_cast<double>(h1 - l1) > thr ? 0 : 1;
            parts[c][1] += static_cast<double>(h2 - l2) > thr ? 1 : 0;
        }
    });
    EmpiricalPcs out;
    for (const auto& p : parts) {
        out.pcs_L.count += p[0];
        out.pcs_H.count += p[1];
    }
    out.pcs_L.total = out.pcs_H.total = replications;
    return out;
}

} // namespace doseopt
