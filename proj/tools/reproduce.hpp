#pragma once

#include "doseopt/design_sizer.hpp"
#include "doseopt/trial_sim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace doseopt::cli {

struct ReproduceOptions {
    long long replications = 100'000;  // 0 skips Monte Carlo where the table allows it
    std::uint64_t seed = 20240601;
    int workers = 1;
    bool approx = true;  // Table 1 method selection
    bool exact = true;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string to_csv() const;
};

struct DiffCell {
    enum class Kind { Abs, AtLeast };
    int row = 0;  // 1-based, matches the provenance comments
    std::string column;
    double published = 0.0;
    double ours = 0.0;
    double tolerance = 0.0;  // Abs: |ours - published| <= tol; AtLeast: ours >= tol
    Kind kind = Kind::Abs;
    bool pass = false;
};

struct DiffReport {
    int table = 0;
    std::vector<DiffCell> cells;
    int passed() const;
    int failed() const { return static_cast<int>(cells.size()) - passed(); }
    std::string to_csv() const;
};

struct Reproduction {
    CsvTable csv;
    DiffReport diff;
    std::vector<std::pair<std::string, std::string>> scenario_status;  // id, status
};

// ---- Table 1 ----
struct Table1Row {
    double alpha, p, q, delta, d, phi;
    std::optional<DesignResult> util_approx, util_exact, rose_approx, rose_exact;
    std::optional<EmpiricalPcs> emp_util_approx, emp_util_exact, emp_rose_approx, emp_rose_exact;
};
std::vector<Table1Row> compute_table1(const ReproduceOptions& o);

// ---- Tables 2, 3, 5 (binary endpoint) and 4, 6 (time to event) ----
struct SimRow {
    double p = 0.0;
    double phi = 0.0;
    double rho_c = 0.0;
    int n1 = 0;
    int n_total = 200;
    ScenarioSummary summary;
};
SimConfig binary_config(double p, double phi, int n1, const ReproduceOptions& o);
SimConfig tte_config(double p, double rho_c, int n1, const ReproduceOptions& o);
std::vector<SimRow> compute_binary_grid(const ReproduceOptions& o);
std::vector<SimRow> compute_tte_grid(const ReproduceOptions& o);

struct Table5Summary {
    double z_obs = 0, z_est = 0, b_obs = 0, b_est = 0;
    int z_conservative = 0, b_conservative = 0, scenarios = 0;
};
Table5Summary summarize_binary(const std::vector<SimRow>& rows);

struct Table6Level {
    double rho_c = 0;
    double z = 0, binom = 0, landmark = 0, exp = 0, logrank = 0, cox = 0;
    double rho_tx = 0;
};
std::vector<Table6Level> summarize_tte(const std::vector<SimRow>& rows);

Reproduction table1(const std::vector<Table1Row>& rows, const ReproduceOptions& o);
Reproduction table2(const std::vector<SimRow>& rows, const ReproduceOptions& o);
Reproduction table3(const std::vector<SimRow>& rows, const ReproduceOptions& o);
Reproduction table4(const std::vector<SimRow>& rows, const ReproduceOptions& o);
Reproduction table5(const std::vector<SimRow>& rows, const ReproduceOptions& o);
Reproduction table6(const std::vector<SimRow>& rows, const ReproduceOptions& o);

Reproduction reproduce(int table, const ReproduceOptions& o);

std::string fmt_fixed(double v, int digits);

} // namespace doseopt::cli
