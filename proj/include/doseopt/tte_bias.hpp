#pragma once

#include <optional>

namespace doseopt {

struct TtePlan {
    double lambda0 = 0.1;  // null hazard per week
    double tau = 24.0;     // landmark, weeks
    int n1 = 0;
    int n2 = 0;
    double lambda_u = 0.0;
    double alpha = 0.025;
    double d_events = 1.0;  // events in the pooled selected arm
    double d_total = 1.0;   // events in both arms of the two-sample comparison

    void validate() const;
    double dilution() const { return static_cast<double>(n1) / static_cast<double>(n1 + n2); }
};

// Landmark survival bias; w1 is the dilution factor (1 for Stage 1 alone).
double landmark_bias(double cov_su, double sigma_u, int n1, double lambda_u, double w1);

double landmark_bias_max(double s0_tau, int n1, double lambda_u, std::optional<double> sigma_u = std::nullopt);

double landmark_type1(const TtePlan& plan, double landmark_bias_combined, double s0);

// B: selection bias of the Stage-1 mean survival time (weeks), undiluted.
double mean_time_bias(double cov_tu, double sigma_u, int n1, double lambda_u);

struct ExpPrediction {
    double hazard_bias = 0.0;               // stage 1, per week
    double log_hazard_bias_combined = 0.0;
    double bias_z = 0.0;
    double type1 = 0.0;
};

ExpPrediction exp_test_type1(const TtePlan& plan, double mean_time_bias_b);

// Also serves the log-rank test, which shares the score statistic.
struct CoxPrediction {
    double beta_bias = 0.0;
    double bias_z = 0.0;
    double type1 = 0.0;
};

CoxPrediction cox_type1(const TtePlan& plan, double mean_time_bias_b);

struct BridgeBound {
    double hazard_bias_upper = 0.0;  // stage 1, per week, <= 0
    double beta_bias_upper = 0.0;    // diluted log-hazard-ratio shift, <= 0
};

BridgeBound landmark_hazard_bridge(double s0_tau, double tau, double lambda0, double landmark_bias_max_value, double w1);

// Cox Type I with beta shift taken from the bridge.
double bridge_cox_type1(const TtePlan& plan, const BridgeBound& bound);

// Expected events under exponential survival, uniform accrual on [0, t_entry]
// and administrative censoring at calendar time t_admin.
double expected_events(double n, double lambda, double t_entry, double t_admin);

struct TteBiasReport {
    double landmark_bias = 0.0;
    double landmark_bias_max = 0.0;
    double landmark_type1 = 0.0;
    double landmark_type1_max = 0.0;
    double mean_time_bias = 0.0;
    double hazard_bias = 0.0;
    double log_hazard_bias_combined = 0.0;
    double exp_type1 = 0.0;
    double beta_bias_combined = 0.0;
    double cox_type1 = 0.0;
    double bridge_hazard_bias_upper = 0.0;
    double bridge_beta_bias_upper = 0.0;
    double bridge_cox_type1 = 0.0;
};

TteBiasReport tte_bias_report(const TtePlan& plan, double cov_su, double cov_tu, double sigma_u);

} // namespace doseopt
