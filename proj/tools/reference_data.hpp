#pragma once

#include <string>
#include <vector>

namespace doseopt::cli {

// A published table as shipped in data/reference/tableN.csv. Comment lines (#)
// carry provenance and are skipped.
struct ReferenceTable {
    int id = 0;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // throws if absent
    double num(std::size_t row, const std::string& col) const;
    const std::string& text(std::size_t row, const std::string& col) const;
};

// Directory holding published/tableN.csv: $DOSEOPT_DATA_DIR, else the build-time default.
std::string data_dir();

ReferenceTable load_reference_table(int table, const std::string& dir = data_dir());

} // namespace doseopt::cli
