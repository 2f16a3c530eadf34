#include "reference_data.hpp"

#include "doseopt/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef DOSEOPT_DATA_DIR
#define DOSEOPT_DATA_DIR "data"
#endif

namespace doseopt::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

int ReferenceTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw DomainError("published table " + std::to_string(id) + " has no column '" + name + "'");
}

const std::string& ReferenceTable::text(std::size_t row, const std::string& col) const {
    return rows.at(row).at(static_cast<std::size_t>(column(col)));
}

double ReferenceTable::num(std::size_t row, const std::string& col) const { return std::stod(text(row, col)); }

std::string data_dir() {
    if (const char* env = std::getenv("DOSEOPT_DATA_DIR"); env && *env) return env;
    return DOSEOPT_DATA_DIR;
}

ReferenceTable load_reference_table(int table, const std::string& dir) {
    const std::string path = dir + "/reference/table" + std::to_string(table) + ".csv";
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open reference table " + path);
    ReferenceTable t;
    t.id = table;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (t.header.empty())
            t.header = split_csv(line);
        else
            t.rows.push_back(split_csv(line));
    }
    return t;
}

} // namespace doseopt::cli
