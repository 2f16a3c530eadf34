#include "cli_app.hpp"

#include "reproduce.hpp"

#include "doseopt/design_sizer.hpp"
#include "doseopt/errors.hpp"
#include "doseopt/outcome_model.hpp"
#include "doseopt/rng.hpp"
#include "doseopt/selection_bias.hpp"
#include "doseopt/trial_sim.hpp"
#include "doseopt/tte_bias.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace doseopt::cli {

namespace {

using json = nlohmann::json;

constexpr int kOk = 0;
constexpr int kUserError = 2;
constexpr int kResource = 3;
constexpr int kDiffFailed = 4;

// A batch of user errors reported together.
struct ConfigErrors : DomainError {
    explicit ConfigErrors(std::vector<std::string> list)
        : DomainError(list.empty() ? "invalid config" : list.front()), items(std::move(list)) {}
    std::vector<std::string> items;
};

int default_workers() {
    if (const char* env = std::getenv("DOSEOPT_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) return static_cast<int>(v);
    }
    return 0;
}

std::string f6(double v) { return fmt_fixed(v, 6); }
std::string f4(double v) { return fmt_fixed(v, 4); }

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// Hash of the canonical (key-sorted) config; worker counts are excluded by construction.
std::string config_hash(const json& canonical) { return hex64(fnv1a64(canonical.dump())); }

void write_manifest(const std::string& path, const json& canonical, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& status) {
    json m;
    m["tool"] = "doseopt";
    m["version"] = DOSEOPT_VERSION;
    m["config_hash"] = config_hash(canonical);
    m["seed"] = seed;
    m["timestamp"] = timestamp_utc();
    m["scenarios"] = json::array();
    for (const auto& [id, st] : status) m["scenarios"].push_back({{"id", id}, {"status", st}});
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write manifest " + path);
    f << m.dump(2) << '\n';
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot write " + path);
    f << text;
}

std::string utilities_str(const UtilitySpec& u) {
    std::ostringstream os;
    os << "(" << fmt_fixed(u.u1(), 4) << ", " << fmt_fixed(u.u2(), 4) << ", " << fmt_fixed(u.u3(), 4) << ", "
       << fmt_fixed(u.u4(), 4) << ")";
    if (u.ratio) os << " from r = delta/d = " << fmt_fixed(*u.ratio, 4);
    if (u.swapped) os << ", u2/u3 swapped";
    return os.str();
}

UtilitySpec scores_from(const std::vector<double>& u) {
    if (u.size() != 4) throw DomainError("--u needs exactly four scores u1,u2,u3,u4");
    return UtilitySpec::from_scores(u[0], u[1], u[2], u[3]);
}

// ---- design ----

struct DesignArgs {
    double p = 0.0, q = 0.5, delta = 0.0, d = 0.15, phi = 0.0, alpha = 0.8, alpha_l = 0.0, alpha_h = 0.0;
    bool rose = false;
    std::string method = "approx";
    std::vector<double> u;
    double lambda_u = 0.0;
    int n_cap = 5000;
    std::string grid = "lattice";
    double grid_step = 0.001;
    bool allow_negative = false;
    int workers = 0;
    CLI::Option *o_alpha_l = nullptr, *o_alpha_h = nullptr, *o_u = nullptr, *o_lambda = nullptr, *o_q = nullptr,
                *o_d = nullptr;
};

// Smallest n whose exact PCS meets both targets at a fixed threshold.
DesignResult exact_at_threshold(const DesignScenario& s, double lambda_u, int n_cap) {
    const auto sizes = n_for_threshold(s, lambda_u);
    int n = std::max<long long>(1, sizes.n / 2);
    for (; n <= n_cap; ++n) {
        const auto pcs = exact_pcs(s, n, lambda_u);
        if (pcs.pcs_L >= s.alpha_L && pcs.pcs_H >= s.alpha_H) {
            DesignResult r;
            r.n = n;
            r.lambda_u = lambda_u;
            r.method = Method::Exact;
            r.pcs_L = pcs.pcs_L;
            r.pcs_H = pcs.pcs_H;
            r.binding = Binding::Both;
            return r;
        }
    }
    throw ResourceError("no n <= " + std::to_string(n_cap) + " meets the PCS targets at lambda_u = " + f6(lambda_u));
}

int cmd_design(const DesignArgs& a, std::ostream& out) {
    DesignScenario s;
    if (a.rose) {
        s = DesignScenario::rose(a.p, a.delta, a.alpha);
    } else {
        s = DesignScenario::margin_based(a.p, a.q, a.delta, a.d, a.phi, a.alpha);
    }
    if (a.o_u->count()) s.utilities = scores_from(a.u);
    if (a.o_alpha_l->count()) s.alpha_L = a.alpha_l;
    if (a.o_alpha_h->count()) s.alpha_H = a.alpha_h;
    scenario_arms(s);

    ExactSearchOptions eo;
    eo.n_cap = a.n_cap;
    eo.workers = a.workers;
    eo.grid.allow_negative = a.allow_negative;
    if (a.grid == "uniform") {
        eo.grid.kind = GridSpec::Kind::Uniform;
        eo.grid.step = a.grid_step;
    }

    std::vector<DesignResult> results;
    const bool fixed = a.o_lambda->count() > 0;
    if (a.method == "approx" || a.method == "both") {
        if (fixed) {
            const auto sizes = n_for_threshold(s, a.lambda_u);
            DesignResult r;
            r.n = static_cast<int>(sizes.n);
            r.lambda_u = a.lambda_u;
            const auto pcs = analytic_pcs(s, r.n, a.lambda_u);
            r.pcs_L = pcs.pcs_L;
            r.pcs_H = pcs.pcs_H;
            r.binding = sizes.n_L > sizes.n_H ? Binding::Low : sizes.n_H > sizes.n_L ? Binding::High : Binding::Both;
            results.push_back(r);
        } else {
            results.push_back(optimal_design_approx(s));
        }
    }
    if (a.method == "exact" || a.method == "both")
        results.push_back(fixed ? exact_at_threshold(s, a.lambda_u, a.n_cap) : optimal_design_exact(s, eo));

    out << "scenario: p=" << f4(s.p) << " q=" << f4(s.q) << " delta=" << f4(s.delta) << " d=" << f4(s.d)
        << " phi=" << f4(s.phi) << " alpha_L=" << f4(s.alpha_L) << " alpha_H=" << f4(s.alpha_H)
        << (a.rose ? " (efficacy-only utilities)" : "") << '\n';
    out << "utilities: " << utilities_str(s.utilities) << '\n';
    for (const auto& r : results) {
        out << to_string(r.method) << ": n = " << r.n << ", lambda_u = " << f6(r.lambda_u)
            << ", PCS_L = " << f4(r.pcs_L) << ", PCS_H = " << f4(r.pcs_H)
            << (r.method == Method::Exact ? " (exact)" : " (normal approximation)") << ", binding = " << to_string(r.binding)
            << '\n';
    }
    out << '\n' << "method,n,lambda_u,PCS_L,PCS_H,binding,u1,u2,u3,u4\n";
    for (const auto& r : results) {
        out << to_string(r.method) << ',' << r.n << ',' << f6(r.lambda_u) << ',' << f6(r.pcs_L) << ',' << f6(r.pcs_H)
            << ',' << to_string(r.binding);
        for (double v : s.utilities.u) out << ',' << fmt_fixed(v, 6);
        out << '\n';
    }
    return kOk;
}

// ---- bias ----

struct BiasArgs {
    double p = 0.0, q = 0.8, phi = 0.0, delta = 0.0, d = 0.0, cov = 0.0, sigma_u = 0.0, lambda_u = 0.0;
    std::vector<double> u;
    bool response_only = false, max = false;
    int n1 = 0, n2 = 0, n_total = 200;
    CLI::Option *o_u = nullptr, *o_delta = nullptr, *o_d = nullptr, *o_cov = nullptr, *o_sigma = nullptr,
                *o_n2 = nullptr;
};

UtilitySpec pick_utilities(const std::vector<double>& u, bool have_u, bool response_only, bool have_margins,
                           double delta, double d) {
    const int picked = int(have_u) + int(response_only) + int(have_margins);
    if (picked > 1) throw DomainError("choose one of --u, --response-only, or --delta/--d");
    if (have_u) return scores_from(u);
    if (response_only) return UtilitySpec::response_only();
    if (have_margins) return utility_from_margins(delta, d);
    return UtilitySpec::from_scores(1.0, 0.8, 0.2, 0.0);
}

int resolve_n2(int n1, int n2, bool have_n2, int n_total) {
    if (have_n2) return n2;
    if (n_total < n1) throw DomainError("--n-total must be >= --n1");
    return n_total - n1;
}

int cmd_bias(const BiasArgs& a, std::ostream& out) {
    if (a.o_delta->count() != a.o_d->count()) throw DomainError("--delta and --d go together");
    const auto u = pick_utilities(a.u, a.o_u->count() > 0, a.response_only, a.o_delta->count() > 0, a.delta, a.d);
    auto moments = utility_moments(u, joint_probs(a.p, a.q, a.phi));
    if (a.o_sigma->count()) {
        if (!(a.sigma_u > 0.0)) throw DomainError("--sigma-u must be positive");
        moments.sigma2 = a.sigma_u * a.sigma_u;
    }
    if (a.o_cov->count()) moments.cov_xu = a.cov;
    TwoStagePlan plan;
    plan.n1 = a.n1;
    plan.n2 = resolve_n2(a.n1, a.n2, a.o_n2->count() > 0, a.n_total);
    plan.lambda_u = a.lambda_u;
    plan.p0 = a.p;
    plan.validate();
    const double b1 = selection_bias(moments, plan.n1, plan.lambda_u);
    const double bc = combined_bias(b1, plan.n1, plan.n2);
    out << "utilities: " << utilities_str(u) << '\n';
    out << "moments: mu_U = " << f6(moments.mu) << ", sigma_U = " << f6(std::sqrt(moments.sigma2))
        << ", cov(X,U) = " << f6(moments.cov_xu) << '\n';
    out << "stage1_bias = " << f6(b1) << '\n';
    out << "combined_bias = " << f6(bc) << " (n1 = " << plan.n1 << ", n2 = " << plan.n2
        << ", w1 = " << f4(plan.dilution()) << ")\n";
    if (a.max) {
        const double m1 = max_bias(plan.p0, plan.n1, plan.lambda_u, std::sqrt(moments.sigma2));
        out << "stage1_bias_max = " << f6(m1) << '\n';
        out << "combined_bias_max = " << f6(combined_bias(m1, plan.n1, plan.n2)) << '\n';
    }
    return kOk;
}

// ---- type1 ----

struct Type1Args {
    double p0 = 0.0, alpha = 0.025, lambda_u = 0.0;
    int n1 = 0, n2 = 0, n_total = 200;
    std::string test = "all";
    bool max = false, bridge = false, tte = false;
    double cov = 0.0, sigma_u = 0.0;
    double q = 0.8, phi = 0.0;
    std::vector<double> u;
    double lambda0 = 0.1, tau = 24.0, cov_su = 0.0, cov_tu = 0.0, events = 0.0, events_total = 0.0;
    double t_entry = 52.0, t_admin = 76.0;
    int control_size = 0;
    CLI::Option *o_n2 = nullptr, *o_cov = nullptr, *o_sigma = nullptr, *o_q = nullptr, *o_u = nullptr,
                *o_cov_su = nullptr, *o_cov_tu = nullptr, *o_events = nullptr, *o_events_total = nullptr;
};

int cmd_type1(const Type1Args& a, std::ostream& out) {
    TwoStagePlan plan;
    plan.n1 = a.n1;
    plan.n2 = resolve_n2(a.n1, a.n2, a.o_n2->count() > 0, a.n_total);
    plan.lambda_u = a.lambda_u;
    plan.p0 = a.p0;
    plan.alpha = a.alpha;
    plan.validate();

    const bool all = a.test == "all";
    const bool want_binary = all || a.test == "z" || a.test == "binomial";
    const bool want_tte = (all && a.tte) || a.test == "landmark" || a.test == "exp" || a.test == "cox" ||
                          a.test == "logrank";

    // Utility moments: explicit --cov/--sigma-u, or a joint model at p0 when --q or --u is given.
    std::optional<double> sigma_u;
    std::optional<double> cov_xu;
    if (a.o_q->count() || a.o_u->count()) {
        const auto u = a.o_u->count() ? scores_from(a.u) : UtilitySpec::from_scores(1.0, 0.8, 0.2, 0.0);
        const auto m = utility_moments(u, joint_probs(a.p0, a.q, a.phi));
        sigma_u = std::sqrt(m.sigma2);
        cov_xu = m.cov_xu;
    }
    if (a.o_sigma->count()) {
        if (!(a.sigma_u > 0.0)) throw DomainError("--sigma-u must be positive");
        sigma_u = a.sigma_u;
    }
    if (a.o_cov->count()) cov_xu = a.cov;

    out << "plan: p0 = " << f4(plan.p0) << ", n1 = " << plan.n1 << ", n2 = " << plan.n2 << ", lambda_u = "
        << f6(plan.lambda_u) << ", alpha = " << fmt_fixed(plan.alpha, 4) << (a.max ? " (conservative bounds)" : "")
        << '\n';

    if (want_binary) {
        double delta_p;
        if (a.max) {
            delta_p = combined_bias(max_bias(plan.p0, plan.n1, plan.lambda_u, sigma_u), plan.n1, plan.n2);
        } else {
            if (!cov_xu || !sigma_u)
                throw DomainError("binary tests need --cov and --sigma-u (or --q/--u to derive them), or --max");
            UtilityMoments m;
            m.sigma2 = *sigma_u * *sigma_u;
            m.cov_xu = *cov_xu;
            delta_p = combined_bias(selection_bias(m, plan.n1, plan.lambda_u), plan.n1, plan.n2);
        }
        out << "combined_bias = " << f6(delta_p) << '\n';
        if (all || a.test == "z") out << "z: type1 = " << f6(z_test_type1(plan, delta_p)) << '\n';
        if (all || a.test == "binomial") {
            const int kc = binomial_critical(plan.n_total(), plan.p0, plan.alpha);
            out << "binomial: type1 = " << f6(binomial_type1(plan, delta_p)) << ", k_c = " << kc
                << " (reject when successes > k_c out of " << plan.n_total() << ")\n";
        }
    }

    if (want_tte) {
        TtePlan tp;
        tp.lambda0 = a.lambda0;
        tp.tau = a.tau;
        tp.n1 = plan.n1;
        tp.n2 = plan.n2;
        tp.lambda_u = plan.lambda_u;
        tp.alpha = plan.alpha;
        const int control = a.control_size > 0 ? a.control_size : plan.n_total();
        const double d_sel = expected_events(plan.n_total(), a.lambda0, a.t_entry, a.t_admin);
        tp.d_events = a.o_events->count() ? a.events : d_sel;
        tp.d_total = a.o_events_total->count()
                         ? a.events_total
                         : tp.d_events + expected_events(control, a.lambda0, a.t_entry, a.t_admin);
        tp.validate();
        const double s0 = std::exp(-tp.lambda0 * tp.tau);
        const double w1 = tp.dilution();
        out << "events: D = " << fmt_fixed(tp.d_events, 2) << ", D_total = " << fmt_fixed(tp.d_total, 2) << '\n';
        auto need = [&](bool ok, const std::string& what) {
            if (!ok) throw DomainError(what);
        };
        const double lbm = landmark_bias_max(s0, tp.n1, tp.lambda_u, sigma_u);
        if (all || a.test == "landmark") {
            double b;
            if (a.max) {
                b = w1 * lbm;
            } else {
                need(a.o_cov_su->count() && sigma_u.has_value(),
                     "landmark test needs --cov-su and --sigma-u, or --max");
                b = landmark_bias(a.cov_su, *sigma_u, tp.n1, tp.lambda_u, w1);
            }
            out << "landmark: bias = " << f6(b) << ", type1 = " << f6(landmark_type1(tp, b, s0)) << '\n';
        }
        const bool use_bridge = a.bridge || a.max;
        const bool have_tu = a.o_cov_tu->count() && sigma_u.has_value();
        if (all || a.test == "exp") {
            if (use_bridge && !have_tu) {
                if (!all) throw DomainError("the exponential test has no conservative bound; supply --cov-tu and --sigma-u");
                out << "exp: n/a (no conservative bound; supply --cov-tu)\n";
            } else {
                need(have_tu, "exponential test needs --cov-tu and --sigma-u");
                const auto e = exp_test_type1(tp, mean_time_bias(a.cov_tu, *sigma_u, tp.n1, tp.lambda_u));
                out << "exp: hazard_bias = " << f6(e.hazard_bias) << ", type1 = " << f6(e.type1) << '\n';
            }
        }
        for (const char* name : {"cox", "logrank"}) {
            if (!(all || a.test == name)) continue;
            if (use_bridge) {
                const auto br = landmark_hazard_bridge(s0, tp.tau, tp.lambda0, lbm, w1);
                out << name << ": beta_bias_upper = " << f6(br.beta_bias_upper)
                    << ", type1 = " << f6(bridge_cox_type1(tp, br)) << " (landmark-hazard bridge)\n";
            } else {
                need(have_tu, std::string(name) + " test needs --cov-tu and --sigma-u, or --bridge");
                const auto c = cox_type1(tp, mean_time_bias(a.cov_tu, *sigma_u, tp.n1, tp.lambda_u));
                out << name << ": beta_bias = " << f6(c.beta_bias) << ", type1 = " << f6(c.type1) << '\n';
            }
        }
    }
    return kOk;
}

// ---- simulate ----

struct Checker {
    std::vector<std::string> errors;

    bool number(const json& j, const std::string& path) {
        if (j.is_number()) return true;
        errors.push_back(path + ": expected a number");
        return false;
    }
    bool integer(const json& j, const std::string& path) {
        if (j.is_number_integer() || j.is_number_unsigned()) return true;
        errors.push_back(path + ": expected an integer");
        return false;
    }
};

const std::set<std::string> kScenarioKeys = {"id",       "p",         "p_L",   "p_H",          "q",
                                             "q_L",      "q_H",       "phi",   "utilities",    "lambda_u",
                                             "n1",       "n2",        "n_total", "replications", "seed",
                                             "p0",       "alpha",     "protocol", "events_only_time_cov", "tte"};
const std::set<std::string> kTteKeys = {"rho_c", "lambda0", "t_entry", "t_admin", "tau", "control_size", "alpha"};
const std::set<std::string> kTopKeys = {"replications", "seed", "scenarios"};

std::vector<SimConfig> parse_sim_config(const json& root, int workers) {
    Checker c;
    std::vector<SimConfig> out;
    if (!root.is_object()) throw ConfigErrors({"config: top level must be an object"});
    for (const auto& [k, v] : root.items())
        if (!kTopKeys.count(k)) c.errors.push_back(k + ": unknown key");
    long long reps = 100'000;
    std::uint64_t seed = 20240601;
    if (root.contains("replications") && c.integer(root["replications"], "replications"))
        reps = root["replications"].get<long long>();
    if (root.contains("seed") && c.integer(root["seed"], "seed")) seed = root["seed"].get<std::uint64_t>();
    if (!root.contains("scenarios")) {
        c.errors.push_back("scenarios: missing");
    } else if (!root["scenarios"].is_array()) {
        c.errors.push_back("scenarios: expected an array");
    } else {
        std::set<std::string> ids;
        int idx = 0;
        for (const auto& s : root["scenarios"]) {
            const std::string at = "scenarios[" + std::to_string(idx++) + "]";
            if (!s.is_object()) {
                c.errors.push_back(at + ": expected an object");
                continue;
            }
            const std::size_t before = c.errors.size();
            for (const auto& [k, v] : s.items())
                if (!kScenarioKeys.count(k)) c.errors.push_back(at + "." + k + ": unknown key");
            SimConfig cfg;
            cfg.replications = reps;
            cfg.seed = seed;
            cfg.workers = workers;
            if (!s.contains("id") || !s["id"].is_string()) {
                c.errors.push_back(at + ".id: required string");
            } else {
                cfg.id = s["id"].get<std::string>();
                if (!ids.insert(cfg.id).second) c.errors.push_back(at + ".id: duplicate scenario id '" + cfg.id + "'");
            }
            auto num = [&](const char* key, double& dst) {
                if (s.contains(key) && c.number(s[key], at + "." + key)) dst = s[key].get<double>();
            };
            double p = -1.0, q = -1.0;
            num("p", p);
            num("q", q);
            if (p >= -0.5) cfg.p_L = cfg.p_H = p;
            if (q >= -0.5) cfg.q_L = cfg.q_H = q;
            num("p_L", cfg.p_L);
            num("p_H", cfg.p_H);
            num("q_L", cfg.q_L);
            num("q_H", cfg.q_H);
            if (!s.contains("p") && !(s.contains("p_L") && s.contains("p_H")))
                c.errors.push_back(at + ".p: required (or both p_L and p_H)");
            num("phi", cfg.phi);
            num("lambda_u", cfg.lambda_u);
            num("p0", cfg.binary.p0);
            num("alpha", cfg.binary.alpha);
            if (!s.contains("n1")) c.errors.push_back(at + ".n1: required");
            else if (c.integer(s["n1"], at + ".n1")) cfg.n1 = s["n1"].get<int>();
            if (s.contains("n2") && s.contains("n_total")) c.errors.push_back(at + ".n2: give n2 or n_total, not both");
            if (s.contains("n2") && c.integer(s["n2"], at + ".n2")) cfg.n2 = s["n2"].get<int>();
            else if (s.contains("n_total") && c.integer(s["n_total"], at + ".n_total"))
                cfg.n2 = s["n_total"].get<int>() - cfg.n1;
            else if (!s.contains("n2") && !s.contains("n_total")) cfg.n2 = 200 - cfg.n1;
            if (s.contains("replications") && c.integer(s["replications"], at + ".replications"))
                cfg.replications = s["replications"].get<long long>();
            if (s.contains("seed") && c.integer(s["seed"], at + ".seed")) cfg.seed = s["seed"].get<std::uint64_t>();
            if (s.contains("utilities")) {
                const auto& u = s["utilities"];
                if (!u.is_array() || u.size() != 4 ||
                    !std::all_of(u.begin(), u.end(), [](const json& x) { return x.is_number(); })) {
                    c.errors.push_back(at + ".utilities: expected an array of four numbers");
                } else {
                    try {
                        cfg.utilities = UtilitySpec::from_scores(u[0].get<double>(), u[1].get<double>(),
                                                                 u[2].get<double>(), u[3].get<double>());
                    } catch (const DomainError& e) {
                        c.errors.push_back(at + ".utilities: " + e.what());
                    }
                }
            }
            if (s.contains("protocol")) {
                const auto& pr = s["protocol"];
                if (pr == "selected") cfg.protocol = PluginProtocol::SelectedArm;
                else if (pr == "pooled") cfg.protocol = PluginProtocol::Pooled;
                else c.errors.push_back(at + ".protocol: expected \"selected\" or \"pooled\"");
            }
            if (s.contains("events_only_time_cov")) {
                if (s["events_only_time_cov"].is_boolean()) cfg.events_only_time_cov = s["events_only_time_cov"].get<bool>();
                else c.errors.push_back(at + ".events_only_time_cov: expected a boolean");
            }
            if (s.contains("tte")) {
                const auto& t = s["tte"];
                const std::string tat = at + ".tte";
                if (!t.is_object()) {
                    c.errors.push_back(tat + ": expected an object");
                } else {
                    cfg.tte.enabled = true;
                    for (const auto& [k, v] : t.items())
                        if (!kTteKeys.count(k)) c.errors.push_back(tat + "." + k + ": unknown key");
                    auto tnum = [&](const char* key, double& dst) {
                        if (t.contains(key) && c.number(t[key], tat + "." + key)) dst = t[key].get<double>();
                    };
                    tnum("rho_c", cfg.tte.rho_c);
                    tnum("lambda0", cfg.tte.lambda0);
                    tnum("t_entry", cfg.tte.t_entry);
                    tnum("t_admin", cfg.tte.t_admin);
                    tnum("tau", cfg.tte.tau);
                    tnum("alpha", cfg.tte.alpha);
                    if (t.contains("control_size") && c.integer(t["control_size"], tat + ".control_size"))
                        cfg.tte.control_size = t["control_size"].get<int>();
                }
            }
            if (c.errors.size() == before) {
                try {
                    cfg.validate();
                } catch (const ResourceError&) {
                    throw;
                } catch (const std::exception& e) {
                    c.errors.push_back(at + " (" + cfg.id + "): " + e.what());
                }
            }
            out.push_back(std::move(cfg));
        }
    }
    if (!c.errors.empty()) throw ConfigErrors(c.errors);
    return out;
}

CsvTable simulation_csv(const std::vector<SimConfig>& cfgs, const std::vector<ScenarioSummary>& res) {
    const bool any_tte = std::any_of(cfgs.begin(), cfgs.end(), [](const SimConfig& c) { return c.tte.enabled; });
    CsvTable t;
    t.header = {"id",        "p",          "phi",       "n1",               "n1+n2",        "Observed",
                "Observed_SE", "Est",      "Est_max",   "phi_hat",          "Z_Observed",   "Z_Est",
                "Z_Est_max", "Binomial_Observed", "Binomial_Est", "Binomial_Est_max", "Binomial_k_c", "select_H"};
    if (any_tte)
        for (const char* h : {"rho_c", "Landmark_Obs", "Landmark_Est", "Exp_Obs", "Exp_Est", "LR_Obs", "LR_Est",
                              "Cox_Obs", "Cox_Est", "rho_TX", "Bridge_Cox_Est", "mean_D", "mean_D_total"})
            t.header.push_back(h);
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const auto& c = cfgs[i];
        const auto& s = res[i];
        std::vector<std::string> r = {c.id,
                                      fmt_fixed(c.p_L, 4),
                                      fmt_fixed(c.phi, 4),
                                      std::to_string(c.n1),
                                      std::to_string(c.n1 + c.n2),
                                      fmt_fixed(s.bias_observed, 6),
                                      fmt_fixed(s.bias_observed_se, 6),
                                      fmt_fixed(s.bias_est, 6),
                                      fmt_fixed(s.bias_est_max, 6),
                                      fmt_fixed(s.phi_hat, 4),
                                      fmt_fixed(s.z_observed.value(), 5),
                                      fmt_fixed(s.z_est, 5),
                                      fmt_fixed(s.z_est_max, 5),
                                      fmt_fixed(s.binom_observed.value(), 5),
                                      fmt_fixed(s.binom_est, 5),
                                      fmt_fixed(s.binom_est_max, 5),
                                      std::to_string(s.binom_critical),
                                      fmt_fixed(s.select_H.value(), 5)};
        if (any_tte) {
            if (c.tte.enabled) {
                for (const auto& v :
                     {fmt_fixed(c.tte.rho_c, 2), fmt_fixed(s.landmark_observed.value(), 5), fmt_fixed(s.landmark_est, 5),
                      fmt_fixed(s.exp_observed.value(), 5), fmt_fixed(s.exp_est, 5),
                      fmt_fixed(s.logrank_observed.value(), 5), fmt_fixed(s.cox_est, 5),
                      fmt_fixed(s.cox_observed.value(), 5), fmt_fixed(s.cox_est, 5), fmt_fixed(s.rho_tx, 4),
                      fmt_fixed(s.bridge_cox_type1, 5), fmt_fixed(s.mean_events, 2), fmt_fixed(s.mean_events_total, 2)})
                    r.push_back(v);
            } else {
                r.resize(t.header.size());
            }
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

struct SimulateArgs {
    std::string config;
    std::string output;
    std::string manifest;
    int workers = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    std::ifstream f(a.config);
    if (!f) throw DomainError("cannot open config " + a.config);
    json root;
    try {
        root = json::parse(f);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("config is not valid JSON: ") + e.what());
    }
    const auto cfgs = parse_sim_config(root, a.workers);
    std::vector<ScenarioSummary> res;
    std::vector<std::pair<std::string, std::string>> status;
    for (const auto& c : cfgs) {
        res.push_back(run_study(c));
        status.emplace_back(c.id, res.back().plugin_invalid
                                      ? "ok (" + std::to_string(res.back().plugin_invalid) + " replications without plugin)"
                                      : "ok");
        err << "simulated " << c.id << " (" << c.replications << " replications)\n";
    }
    write_text(a.output, simulation_csv(cfgs, res).to_csv(), out);
    std::string manifest = a.manifest;
    if (manifest.empty() && !a.output.empty() && a.output != "-") manifest = a.output + ".manifest.json";
    if (!manifest.empty())
        write_manifest(manifest, root, root.value("seed", std::uint64_t{20240601}), status);
    return kOk;
}

// ---- reproduce ----

struct ReproduceArgs {
    int table = 0;
    long long replications = 100'000;
    std::uint64_t seed = 20240601;
    int workers = 0;
    std::string method = "both";
    std::string output;
    std::string diff;
    std::string manifest;
    bool strict = false;
};

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out, std::ostream& err) {
    ReproduceOptions o;
    o.replications = a.replications;
    o.seed = a.seed;
    o.workers = a.workers;
    o.approx = a.method != "exact";
    o.exact = a.method != "approx";
    if (a.table != 1 && a.replications < 1) throw DomainError("--replications must be >= 1 for table " + std::to_string(a.table));
    const auto r = reproduce(a.table, o);
    write_text(a.output, r.csv.to_csv(), out);
    if (!a.diff.empty()) write_text(a.diff, r.diff.to_csv(), out);
    err << "table " << a.table << ": " << r.diff.passed() << "/" << r.diff.cells.size()
        << " cells within tolerance of the published values\n";
    for (const auto& c : r.diff.cells)
        if (!c.pass)
            err << "  row " << c.row << " " << c.column << ": published " << fmt_fixed(c.published, 4) << ", got "
                << fmt_fixed(c.ours, 4) << '\n';
    std::string manifest = a.manifest;
    if (manifest.empty() && !a.output.empty() && a.output != "-") manifest = a.output + ".manifest.json";
    if (!manifest.empty()) {
        json canonical = {{"command", "reproduce"},   {"table", a.table}, {"replications", a.replications},
                          {"seed", a.seed},           {"method", a.method}};
        write_manifest(manifest, canonical, a.seed, r.scenario_status);
    }
    return a.strict && r.diff.failed() > 0 ? kDiffFailed : kOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Utility-based dose selection: design sizing, selection-bias and Type I error prediction, simulation.\n"
                 "Probabilities are on [0,1]; times are in weeks; hazards are per week."};
    app.name("doseopt");
    app.set_version_flag("--version", std::string(DOSEOPT_VERSION));
    app.require_subcommand(1);
    const int env_workers = default_workers();

    DesignArgs da;
    auto* design = app.add_subcommand("design", "Sample size per arm and selection threshold for a two-dose trial");
    design->add_option("--p", da.p, "Response rate of the reference dose")->required()->check(CLI::Range(0.0, 1.0));
    da.o_q = design->add_option("--q", da.q, "Toxicity-free rate of the reference dose")->capture_default_str();
    design->add_option("--delta", da.delta, "Efficacy gap defining scenario S_H")->required();
    da.o_d = design->add_option("--d", da.d, "Safety gap defining scenario S_L")->capture_default_str();
    design->add_option("--phi", da.phi, "Efficacy-safety correlation")->capture_default_str();
    design->add_option("--alpha", da.alpha, "PCS target under both scenarios")->capture_default_str();
    da.o_alpha_l = design->add_option("--alpha-l", da.alpha_l, "PCS target under S_L (overrides --alpha)");
    da.o_alpha_h = design->add_option("--alpha-h", da.alpha_h, "PCS target under S_H (overrides --alpha)");
    design->add_flag("--rose", da.rose, "Efficacy-only utilities (1,1,0,0); --q/--d are ignored");
    design->add_option("--method", da.method, "approx, exact or both")
        ->check(CLI::IsMember({"approx", "exact", "both"}))
        ->capture_default_str();
    da.o_u = design->add_option("--u", da.u, "Utility scores u1,u2,u3,u4 (default from delta/d)")->delimiter(',')->expected(4);
    da.o_lambda = design->add_option("--lambda-u", da.lambda_u, "Fix the threshold and size for it");
    design->add_option("--n-cap", da.n_cap, "Largest n examined by the exact search")->capture_default_str();
    design->add_option("--grid", da.grid, "Exact-search threshold grid: lattice or uniform")
        ->check(CLI::IsMember({"lattice", "uniform"}))
        ->capture_default_str();
    design->add_option("--grid-step", da.grid_step, "Step of the uniform grid")->capture_default_str();
    design->add_flag("--allow-negative-lambda", da.allow_negative, "Admit negative thresholds in the exact search");
    design->add_option("--workers", da.workers, "Worker threads (0 = all cores; env DOSEOPT_WORKERS)")
        ->default_val(env_workers);

    BiasArgs ba;
    auto* bias = app.add_subcommand("bias", "Selection bias of the selected arm's response rate");
    bias->add_option("--p", ba.p, "Response rate of both doses (null)")->required();
    bias->add_option("--q", ba.q, "Toxicity-free rate")->capture_default_str();
    bias->add_option("--phi", ba.phi, "Efficacy-safety correlation")->capture_default_str();
    ba.o_u = bias->add_option("--u", ba.u, "Utility scores u1,u2,u3,u4 (default 1,0.8,0.2,0)")->delimiter(',')->expected(4);
    ba.o_delta = bias->add_option("--delta", ba.delta, "Efficacy gap for margin-based utilities");
    ba.o_d = bias->add_option("--d", ba.d, "Safety gap for margin-based utilities");
    bias->add_flag("--response-only", ba.response_only, "Utility equals the response indicator");
    ba.o_cov = bias->add_option("--cov", ba.cov, "Override Cov(X,U)");
    ba.o_sigma = bias->add_option("--sigma-u", ba.sigma_u, "Override the utility standard deviation");
    bias->add_option("--n1", ba.n1, "Stage-1 patients per arm")->required();
    ba.o_n2 = bias->add_option("--n2", ba.n2, "Stage-2 patients on the selected arm");
    bias->add_option("--n-total", ba.n_total, "n1 + n2 when --n2 is absent")->capture_default_str();
    bias->add_option("--lambda-u", ba.lambda_u, "Selection threshold on the mean-utility scale")->capture_default_str();
    bias->add_flag("--max", ba.max, "Also print the Cauchy-Schwarz upper bound");

    Type1Args ta;
    auto* type1 = app.add_subcommand("type1", "Predicted Type I error of the final test after selection");
    type1->add_option("--p0", ta.p0, "Null response rate")->required();
    type1->add_option("--n1", ta.n1, "Stage-1 patients per arm")->required();
    ta.o_n2 = type1->add_option("--n2", ta.n2, "Stage-2 patients on the selected arm");
    type1->add_option("--n-total", ta.n_total, "n1 + n2 when --n2 is absent")->capture_default_str();
    type1->add_option("--alpha", ta.alpha, "One-sided nominal level")->capture_default_str();
    type1->add_option("--lambda-u", ta.lambda_u, "Selection threshold")->capture_default_str();
    type1->add_option("--test", ta.test, "z, binomial, landmark, exp, cox, logrank or all")
        ->check(CLI::IsMember({"z", "binomial", "landmark", "exp", "cox", "logrank", "all"}))
        ->capture_default_str();
    type1->add_flag("--max", ta.max, "Use the conservative bias bounds");
    type1->add_flag("--bridge", ta.bridge, "Cox/log-rank shift from the landmark-hazard bridge");
    type1->add_flag("--tte", ta.tte, "Include the time-to-event tests in --test all");
    ta.o_cov = type1->add_option("--cov", ta.cov, "Cov(X,U)");
    ta.o_sigma = type1->add_option("--sigma-u", ta.sigma_u, "Utility standard deviation");
    ta.o_q = type1->add_option("--q", ta.q, "Toxicity-free rate, to derive the moments at p0");
    type1->add_option("--phi", ta.phi, "Correlation used with --q")->capture_default_str();
    ta.o_u = type1->add_option("--u", ta.u, "Utility scores used with --q")->delimiter(',')->expected(4);
    type1->add_option("--lambda0", ta.lambda0, "Null hazard, per week")->capture_default_str();
    type1->add_option("--tau", ta.tau, "Landmark time, weeks")->capture_default_str();
    ta.o_cov_su = type1->add_option("--cov-su", ta.cov_su, "Cov(1{T > tau}, U)");
    ta.o_cov_tu = type1->add_option("--cov-tu", ta.cov_tu, "Cov(observed time, U), weeks");
    ta.o_events = type1->add_option("--events", ta.events, "Events D in the selected arm (default: expected)");
    ta.o_events_total = type1->add_option("--events-total", ta.events_total, "Events in both arms (default: expected)");
    type1->add_option("--t-entry", ta.t_entry, "Accrual period, weeks")->capture_default_str();
    type1->add_option("--t-admin", ta.t_admin, "Administrative censoring time, weeks")->capture_default_str();
    type1->add_option("--control-size", ta.control_size, "Control arm size (0 = n1 + n2)")->capture_default_str();

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run the two-stage trial simulation for a JSON scenario file");
    simulate->add_option("config", sa.config, "JSON config: {replications, seed, scenarios: [...]}")->required();
    simulate->add_option("--output,-o", sa.output, "CSV path (default stdout)");
    simulate->add_option("--manifest", sa.manifest, "Manifest path (default <output>.manifest.json)");
    simulate->add_option("--workers", sa.workers, "Worker threads (0 = all cores; env DOSEOPT_WORKERS)")
        ->default_val(env_workers);

    ReproduceArgs ra;
    auto* repro = app.add_subcommand("reproduce", "Regenerate a published table and diff it against the shipped values");
    repro->add_option("table", ra.table, "Table id 1-6")->required()->check(CLI::Range(1, 6));
    repro->add_option("--replications", ra.replications, "Monte Carlo replications per scenario (0 skips Table 1 PCS)")
        ->capture_default_str();
    repro->add_option("--seed", ra.seed, "Master seed")->capture_default_str();
    repro->add_option("--workers", ra.workers, "Worker threads (0 = all cores; env DOSEOPT_WORKERS)")
        ->default_val(env_workers);
    repro->add_option("--method", ra.method, "Table 1 designs: approx, exact or both")
        ->check(CLI::IsMember({"approx", "exact", "both"}))
        ->capture_default_str();
    repro->add_option("--output,-o", ra.output, "CSV path (default stdout)");
    repro->add_option("--diff", ra.diff, "Write the per-cell diff report here");
    repro->add_option("--manifest", ra.manifest, "Manifest path (default <output>.manifest.json)");
    repro->add_flag("--strict", ra.strict, "Exit 4 when any cell is out of tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUserError;
    }

    try {
        if (*design) return cmd_design(da, out);
        if (*bias) return cmd_bias(ba, out);
        if (*type1) return cmd_type1(ta, out);
        if (*simulate) return cmd_simulate(sa, out, err);
        if (*repro) return cmd_reproduce(ra, out, err);
    } catch (const ConfigErrors& e) {
        for (const auto& m : e.items) err << "error: " << m << '\n';
        return kUserError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kUserError;
    } catch (const InfeasibleDesign& e) {
        err << "error: " << e.what() << " (best PCS_L = " << f4(e.best_pcs_L) << ", PCS_H = " << f4(e.best_pcs_H)
            << ")\n";
        return kResource;
    } catch (const ResourceError& e) {
        err << "error: " << e.what() << '\n';
        return kResource;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
    return kUserError;
}

} // namespace doseopt::cli
