#pragma once

#include "doseopt/design_sizer.hpp"
#include "doseopt/outcome_model.hpp"
#include "doseopt/rng.hpp"
#include "doseopt/utility_dist.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace doseopt {

struct PatientRecord {
    int x = 0;
    int y = 0;
    double u = 0.0;
    std::int64_t score = 0;  // u on the integer lattice
    double t = 0.0;          // latent survival time, weeks
    double enroll = 0.0;     // calendar entry time
    double v = 0.0;          // observed time
    int event = 0;
};

struct TteBlock {
    bool enabled = false;
    double lambda0 = 0.1;
    double rho_c = 0.0;
    double t_entry = 52.0;
    double t_admin = 76.0;
    double tau = 24.0;
    int control_size = 0;  // 0 means n1 + n2
    double alpha = 0.025;
};

struct BinaryBlock {
    double p0 = -1.0;  // negative means p_L
    double alpha = 0.025;
};

// Which Stage-1 patients feed the plugin moment estimates.
enum class PluginProtocol { SelectedArm, Pooled };

struct SimConfig {
    std::string id = "scenario";
    double p_L = 0.4, p_H = 0.4;
    double q_L = 0.8, q_H = 0.8;
    double phi = 0.0;
    UtilitySpec utilities = UtilitySpec::from_scores(1.0, 0.8, 0.2, 0.0);
    double lambda_u = 0.0;
    int n1 = 60;
    int n2 = 140;
    long long replications = 100'000;
    std::uint64_t seed = 20240601;
    TteBlock tte;
    BinaryBlock binary;
    PluginProtocol protocol = PluginProtocol::SelectedArm;
    bool events_only_time_cov = false;
    int workers = 1;
    double patient_cap = 1e12;  // replications x patients per replication

    void validate() const;
    double p0() const { return binary.p0 < 0.0 ? p_L : binary.p0; }
    int control_size() const { return tte.control_size > 0 ? tte.control_size : n1 + n2; }
};

// Arm-level generation parameters.
struct ArmModel {
    JointOutcomeModel outcome;
    const UtilitySpec* utilities = nullptr;
    const LatticeScores* lattice = nullptr;
};

void gen_arm(int n, const ArmModel& arm, const TteBlock& tte, ReplicationStream& rng, std::vector<PatientRecord>& out);
std::vector<PatientRecord> gen_arm(int n, const ArmModel& arm, const TteBlock& tte, ReplicationStream& rng);

enum class Dose { L, H };

struct Stage1Estimates {
    double p_hat_selected = 0.0;
    double sigma_u = 0.0;
    double cov_xu = 0.0;
    double cov_su = 0.0;  // S = 1{T > tau}
    double cov_vu = 0.0;  // observed time, or events-only when requested
    int events_selected = 0;
    int n_used = 0;
};

struct SelectionOutcome {
    Dose selected = Dose::L;
    Stage1Estimates est;
};

SelectionOutcome run_selection(const std::vector<PatientRecord>& arm_L, const std::vector<PatientRecord>& arm_H,
                               double lambda_u, const LatticeScores& lattice, PluginProtocol protocol = PluginProtocol::SelectedArm,
                               double tau = 24.0, bool events_only_time_cov = false);

struct TestConfig {
    double p0 = 0.4;
    double alpha = 0.025;
    int binom_critical = 0;
    bool tte = false;
    double lambda0 = 0.1;
    double tau = 24.0;
    double tte_alpha = 0.025;
};

struct TestOutcomes {
    bool z_reject = false;
    bool binom_reject = false;
    double z_stat = 0.0;
    int successes = 0;

    bool landmark_reject = false;
    double landmark_stat = 0.0;
    bool exp_indeterminate = false;
    bool exp_reject = false;
    double exp_stat = 0.0;
    int d_events = 0;
    bool logrank_reject = false;
    double logrank_stat = 0.0;
    bool cox_reject = false;
    double cox_stat = 0.0;
    int d_total = 0;
};

TestOutcomes run_tests(const std::vector<PatientRecord>& treated, const std::vector<PatientRecord>& control,
                       const TestConfig& cfg);

// Two-sample statistics on (time, event) data; group 1 = treated.
struct TwoSampleStats {
    double logrank_z = 0.0;
    double cox_score_z = 0.0;
    int events = 0;
};
TwoSampleStats two_sample_stats(const std::vector<PatientRecord>& treated, const std::vector<PatientRecord>& control);

struct Proportion {
    long long count = 0;
    long long total = 0;
    double value() const { return total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 0.0; }
    double se() const;
};

struct ScenarioSummary {
    std::string id;
    long long replications = 0;
    Proportion select_H;

    double bias_observed = 0.0;
    double bias_observed_se = 0.0;
    double bias_est = 0.0;
    double bias_est_max = 0.0;
    double phi_hat = 0.0;

    Proportion z_observed;
    Proportion binom_observed;
    double z_est = 0.0, z_est_max = 0.0;
    double binom_est = 0.0, binom_est_max = 0.0;
    int binom_critical = 0;
    long long plugin_invalid = 0;

    bool tte = false;
    Proportion landmark_observed, exp_observed, logrank_observed, cox_observed;
    long long exp_indeterminate = 0;
    double landmark_est = 0.0, exp_est = 0.0, cox_est = 0.0;
    double bridge_cox_type1 = 0.0;
    double rho_tx = 0.0;
    double mean_events = 0.0, mean_events_total = 0.0;
};

ScenarioSummary run_study(const SimConfig& cfg);

struct EmpiricalPcs {
    Proportion pcs_L;
    Proportion pcs_H;
};

EmpiricalPcs empirical_pcs(const DesignScenario& s, int n, double lambda_u, long long replications,
                           std::uint64_t seed, int workers = 1, std::uint64_t scenario_key = 0);

} // namespace doseopt
