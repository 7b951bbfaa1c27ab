#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rwrp/expcli.hpp"

using namespace rwrp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() /
                 (std::string("rwrp_test_") + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args) {
    std::vector<char*> argv;
    argv.reserve(args.size() + 1);
    std::string prog = "rwrp";
    argv.push_back(prog.data());
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("experiment registry") {
    const auto& names = experiment_names();
    CHECK(names.size() == 11);
    for (const char* n : {"hitting-identity", "green-identity", "oracle-fixtures",
                          "renewal", "mass-gap", "ballistic-consistency",
                          "second-moment", "free-energy-gap", "concentration",
                          "restricted-partition", "strip-chain"})
        CHECK(std::find(names.begin(), names.end(), std::string(n)) != names.end());
    CHECK_THROWS_AS(default_config("no-such-experiment"), std::invalid_argument);
}

TEST_CASE("default configs hash deterministically and distinctly") {
    std::vector<uint64_t> hashes;
    for (const auto& name : experiment_names()) {
        auto cfg = default_config(name);
        CHECK(cfg.experiment == name);
        uint64_t h1 = config_hash(cfg);
        uint64_t h2 = config_hash(cfg);
        CHECK(h1 == h2);
        hashes.push_back(h1);
    }
    std::sort(hashes.begin(), hashes.end());
    CHECK(std::adjacent_find(hashes.begin(), hashes.end()) == hashes.end());
}

TEST_CASE("canonical serialization pins semantics, not io") {
    auto cfg = default_config("renewal");
    cfg.beta = 0.1;
    std::string canon = canonical_config(cfg);
    CHECK(canon.find("experiment=renewal;") != std::string::npos);
    CHECK(canon.find("disorder.beta=0.10000000000000001;") != std::string::npos);
    CHECK(canon.find("out_dir") == std::string::npos);
    CHECK(canon.find("budget") == std::string::npos);

    uint64_t base = config_hash(cfg);
    auto io = cfg;
    io.out_dir = "elsewhere";
    io.budget_nodes = 1e5;
    CHECK(config_hash(io) == base);

    auto semantic = cfg;
    semantic.tol = 1e-7;
    CHECK(config_hash(semantic) != base);
    auto seeded = cfg;
    seeded.master_seed = 2;
    CHECK(config_hash(seeded) != base);
}

TEST_CASE("strict json parsing") {
    auto cfg = parse_config_json(R"({"experiment": "oracle-fixtures"})");
    CHECK(cfg.experiment == "oracle-fixtures");
    CHECK(cfg.dimension_d == default_config("oracle-fixtures").dimension_d);

    auto full = parse_config_json(R"({
        "experiment": "renewal",
        "walk": {"dimension_d": 2, "drift_h": 1.0},
        "potential": {"kind": "point_mass", "atom_v": 0.5},
        "disorder": {"beta": 0.25},
        "series": {"level_l": 2},
        "sampling": {"master_seed": 7},
        "io": {"out_dir": "tmpout"},
        "budget_nodes": 1e6
    })");
    CHECK(full.beta == 0.25);
    CHECK(full.level_l == 2);
    CHECK(full.master_seed == 7);
    CHECK(full.out_dir == "tmpout");
    CHECK(full.budget_nodes == 1e6);
    CHECK(full.potential.kind == PotentialKind::PointMass);

    CHECK_THROWS_AS(parse_config_json("{"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json(R"({"walk": {}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json(R"({"experiment": "unknown-name"})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal", "walk": {"dimension": 2}})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal", "frobnicate": 1})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal", "walk": {"dimension_d": "two"}})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal", "disorder": {"beta": -0.5}})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal", "budget_nodes": -1})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(
            R"({"experiment": "renewal", "sampling": {"master_seed": -3}})"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_json(R"({"experiment": "renewal",
            "potential": {"kind": "tabulated", "knots_t": [0, 1], "knots_phi": [0]}})"),
        std::invalid_argument);
}

TEST_CASE("record serialization is deterministic and timing-free") {
    RunRecord rec;
    rec.tool_version = "rwrp 1.0.0";
    rec.experiment = "oracle-fixtures";
    rec.config_hash = 0xABCDEF0123456789ull;
    rec.master_seed = 4;
    rec.pass = true;
    rec.scalars.emplace_back("alpha", 0.5);
    rec.verdicts.push_back("sample: PASS");
    rec.table_headers["t"] = {"a", "b"};
    rec.tables["t"] = {{1.5, 2.25}, {3.0, 4.0}};
    rec.wall_ms = 123.456;

    std::string line = record_json_line(rec);
    CHECK(line == record_json_line(rec));
    CHECK(line.find("schema_version") != std::string::npos);
    CHECK(line.find("abcdef0123456789") != std::string::npos);
    CHECK(line.find("wall_ms") == std::string::npos);
    CHECK(line.find("123.456") == std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("csv emission") {
    RunRecord rec;
    rec.table_headers["t"] = {"a", "b"};
    rec.tables["t"] = {{1.5, 2.25}, {3.0, 4.0}};
    rec.table_headers["empty"] = {"x"};
    rec.tables["empty"] = {};

    auto dir = fresh_dir("csv");
    fs::create_directories(dir);
    emit_csv(rec, "t", (dir / "t.csv").string());
    CHECK(slurp(dir / "t.csv") == "a,b\n1.5,2.25\n3,4\n");
    emit_csv(rec, "empty", (dir / "e.csv").string());
    CHECK(slurp(dir / "e.csv") == "x\n");
    CHECK_THROWS_AS(emit_csv(rec, "nope", (dir / "n.csv").string()),
                    std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("oracle-fixtures experiment runs and persists") {
    auto cfg = default_config("oracle-fixtures");
    cfg.out_dir = fresh_dir("runrec").string();
    auto rec = run_experiment(cfg);
    CHECK(rec.pass);
    CHECK(rec.experiment == "oracle-fixtures");
    CHECK(rec.config_hash == config_hash(cfg));
    CHECK(!rec.verdicts.empty());
    for (const auto& v : rec.verdicts) CHECK(v.find("FAIL") == std::string::npos);

    write_records(cfg, rec);
    write_records(cfg, rec);
    std::istringstream lines(slurp(fs::path(cfg.out_dir) / "records.jsonl"));
    std::string l1, l2, extra;
    REQUIRE(std::getline(lines, l1));
    REQUIRE(std::getline(lines, l2));
    CHECK(l1 == l2);
    CHECK(!std::getline(lines, extra));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "timings.jsonl"));
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("renewal experiment replays identically") {
    auto cfg = default_config("renewal");
    cfg.level_l = 2;
    auto r1 = run_experiment(cfg);
    auto r2 = run_experiment(cfg);
    CHECK(record_json_line(r1) == record_json_line(r2));
    CHECK(r1.pass);

    ExperimentConfig bad = cfg;
    bad.experiment = "no-such";
    CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
}

TEST_CASE("cli exit codes") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"--list"}) == 0);
    CHECK(run_cli({"--experiment", "no-such"}) == 2);
    CHECK(run_cli({"--config", "/nonexistent/really.json"}) == 2);

    auto dir = fresh_dir("cli");
    fs::create_directories(dir);
    auto bad_cfg = dir / "bad.json";
    std::ofstream(bad_cfg) << R"({"experiment": "renewal", "mystery": 1})";
    CHECK(run_cli({"--config", bad_cfg.string()}) == 2);

    auto out = dir / "out";
    CHECK(run_cli({"--experiment", "oracle-fixtures", "--out", out.string()}) == 0);
    CHECK(fs::exists(out / "records.jsonl"));
    CHECK(fs::exists(out / "timings.jsonl"));

    CHECK(run_cli({"--experiment", "oracle-fixtures", "--out", out.string(),
                   "--verify"}) == 0);
    CHECK(run_cli({"--experiment", "oracle-fixtures", "--out", out.string(),
                   "--budget", "-5"}) == 2);
    fs::remove_all(dir);
}
