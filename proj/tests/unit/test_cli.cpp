#include "cli_app.hpp"
#include "reference_data.hpp"
#include "reproduce.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace doseopt::cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "doseopt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / ("doseopt_test_" + name);
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("design command", "[cli]") {
    auto r = cli({"design", "--p", "0.4", "--delta", "0.15", "--alpha", "0.8", "--rose", "--method", "approx"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "n = 58"));
    CHECK(has(r.out, "lambda_u = 0.0777"));
    CHECK(has(r.out, "method,n,lambda_u,PCS_L,PCS_H,binding"));

    r = cli({"design", "--p", "0.3", "--q", "0.5", "--delta", "0.10", "--d", "0.15", "--phi", "0", "--alpha", "0.8",
             "--method", "exact"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "exact: n = 46"));

    r = cli({"design", "--p", "0.3", "--q", "0.5", "--delta", "0.10", "--d", "0.15", "--phi", "0.9", "--alpha", "0.8"});
    CHECK(r.code == 2);
    CHECK(has(r.err, "0.6547"));

    r = cli({"design", "--p", "0.3", "--q", "0.5", "--delta", "0.10", "--d", "0.15", "--alpha", "0.8", "--n-cap", "5",
             "--method", "exact"});
    CHECK(r.code == 3);
}

TEST_CASE("bias and type1 commands", "[cli]") {
    auto r = cli({"bias", "--p", "0.4", "--n1", "60", "--lambda-u", "0", "--response-only"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "stage1_bias = 0.035682"));
    CHECK(has(r.out, "combined_bias = 0.010705"));

    r = cli({"type1", "--p0", "0.4", "--n1", "60", "--n2", "140", "--alpha", "0.025", "--test", "z", "--max"});
    CHECK(r.code == 0);
    const auto pos = r.out.find("z: type1 = ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::fabs(std::stod(r.out.substr(pos + 11)) - 0.0494) < 5e-5);

    r = cli({"type1", "--p0", "0.4", "--n1", "60", "--n2", "140", "--test", "binomial", "--max"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "binomial: type1 = "));
    CHECK(has(r.out, "k_c = 94"));

    r = cli({"type1", "--p0", "0.4", "--n1", "60", "--n2", "140", "--test", "z"});
    CHECK(r.code == 2);
    CHECK(has(r.err, "--cov"));

    r = cli({"type1", "--p0", "0.4", "--n1", "60", "--test", "cox", "--bridge"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "bridge"));

    r = cli({"type1", "--p0", "0.4", "--n1", "60", "--test", "landmark", "--cov-su", "0", "--sigma-u", "0.3"});
    CHECK(r.code == 0);
    CHECK(has(r.out, "type1 = 0.025000"));
}

TEST_CASE("help documents units and defaults", "[cli]") {
    for (const char* sub : {"design", "bias", "type1", "simulate", "reproduce"}) {
        auto r = cli({sub, "--help"});
        CHECK(r.code == 0);
        CHECK(!r.out.empty());
    }
    CHECK(has(cli({"type1", "--help"}).out, "weeks"));
    CHECK(has(cli({"type1", "--help"}).out, "0.025"));
    CHECK(cli({"nonsense"}).code == 2);
    CHECK(cli({}).code == 2);
}

TEST_CASE("simulate command", "[cli]") {
    const auto empty = temp_file("empty.json", R"({"replications": 10, "seed": 1, "scenarios": []})");
    auto r = cli({"simulate", empty.string()});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    CHECK(has(r.out, "Observed"));

    const auto dup = temp_file("dup.json", R"({"scenarios": [{"id": "a", "p": 0.4, "n1": 20}, {"id": "a", "p": 0.4, "n1": 20}]})");
    r = cli({"simulate", dup.string()});
    CHECK(r.code == 2);
    CHECK(has(r.err, "duplicate"));

    const auto bad = temp_file("bad.json", R"({"scenarios": [{"id": "x", "p": "high", "n1": 2.5, "colour": 1}], "extra": 0})");
    r = cli({"simulate", bad.string()});
    CHECK(r.code == 2);
    CHECK(has(r.err, "scenarios[0].p"));
    CHECK(has(r.err, "scenarios[0].n1"));
    CHECK(has(r.err, "scenarios[0].colour"));
    CHECK(has(r.err, "extra"));

    const auto cfg = std::filesystem::path(DOSEOPT_TEST_DATA) / "binary_small.json";
    const auto out_a = std::filesystem::temp_directory_path() / "doseopt_test_sim_a.csv";
    const auto out_b = std::filesystem::temp_directory_path() / "doseopt_test_sim_b.csv";
    CHECK(cli({"simulate", cfg.string(), "--output", out_a.string(), "--workers", "1"}).code == 0);
    CHECK(cli({"simulate", cfg.string(), "--output", out_b.string(), "--workers", "3"}).code == 0);
    CHECK(slurp(out_a) == slurp(out_b));
    const auto manifest = slurp(out_a.string() + ".manifest.json");
    CHECK(has(manifest, "config_hash"));
    CHECK(has(manifest, "binary/p=0.40/phi=0.00/n1=60"));
    const auto manifest_b = slurp(out_b.string() + ".manifest.json");
    const auto hash = [](const std::string& m) { return m.substr(m.find("config_hash"), 40); };
    CHECK(hash(manifest) == hash(manifest_b));
}

TEST_CASE("reproduce command", "[cli]") {
    auto r = cli({"reproduce", "1", "--method", "approx", "--replications", "0"});
    CHECK(r.code == 0);
    CHECK(has(r.err, "table 1: 96/96"));

    r = cli({"reproduce", "7"});
    CHECK(r.code == 2);

    const auto diff = std::filesystem::temp_directory_path() / "doseopt_test_diff.csv";
    r = cli({"reproduce", "1", "--replications", "0", "--diff", diff.string(), "--strict"});
    CHECK(r.code == 0);
    CHECK(has(slurp(diff), "table,row,column,published,ours"));
}

TEST_CASE("reproduce is byte-identical across worker counts", "[cli][property]") {
    const auto a = cli({"reproduce", "3", "--replications", "2000", "--seed", "7", "--workers", "1"});
    const auto b = cli({"reproduce", "3", "--replications", "2000", "--seed", "7", "--workers", "8"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != cli({"reproduce", "3", "--replications", "2000", "--seed", "8", "--workers", "1"}).out);
}

TEST_CASE("shipped published tables parse", "[cli]") {
    const std::pair<int, std::size_t> expect[] = {{1, 48}, {2, 24}, {3, 24}, {4, 36}, {5, 5}, {6, 7}};
    for (const auto& [id, rows] : expect) {
        const auto t = load_reference_table(id);
        CHECK(t.rows.size() == rows);
        for (const auto& row : t.rows) CHECK(row.size() == t.header.size());
    }
    CHECK(load_reference_table(1).num(0, "UtilApprox_n") == 14);
    CHECK_THROWS(load_reference_table(1).column("nope"));
}

TEST_CASE("the tool binary runs", "[cli]") {
    const std::string cmd = std::string(DOSEOPT_TOOL_PATH) + " --version";
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    char buf[64] = {0};
    const auto n = fread(buf, 1, sizeof buf - 1, f);
    CHECK(pclose(f) == 0);
    CHECK(std::string(buf, n).find("0.1.0") != std::string::npos);
}
