// Tests for the scenario configuration layer: strict schema validation,
// bundled-catalog health, runner verdicts, and artifact reproducibility.
#include "doctest.h"

#include "fragnorm/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fragnorm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Data rows of a CSV artifact: everything after the '#' headers and the
// column-name row, split into cells.
std::vector<std::vector<std::string>> data_rows(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    std::string line;
    bool seen_columns = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!seen_columns) {
            seen_columns = true; // column-name row
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string fresh_out_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("fragnorm_scenario_" + tag);
    fs::remove_all(dir);
    return dir.string();
}

// Minimal valid scenario text the failure tests mutate.
std::string patched(const std::string& needle, const std::string& replacement) {
    std::string base = R"({
  "schema_version": 1,
  "name": "probe",
  "kind": "push-value",
  "plane": { "punctures": [[0.0, 0.0], [2.5, 0.0]], "basepoint": [0.31, -7.03] },
  "psi": { "pattern": "a", "defect_bound": 1.0 },
  "maps": { "f": { "factors": [ { "type": "push_map", "punctures": [0],
    "area_budget_over_pi": 3.0, "core_fraction": 0.99, "turns": 1 } ] } },
  "experiment": { "map": "f" },
  "output": "probe.csv"
})";
    const size_t at = base.find(needle);
    REQUIRE(at != std::string::npos);
    return base.replace(at, needle.size(), replacement);
}

} // namespace

TEST_CASE("bundled scenarios: unique names, all parse and validate") {
    const auto& catalog = bundled_scenarios();
    CHECK(catalog.size() >= 6);
    std::set<std::string> names;
    for (const BundledScenario& b : catalog) {
        CAPTURE(b.name);
        names.insert(b.name);
        Scenario sc = parse_scenario(b.json_text); // throws on any violation
        CHECK(sc.name == b.name);
        CHECK(!sc.output.empty());
    }
    CHECK(names.size() == catalog.size());
    CHECK(find_bundled("push-value") != nullptr);
    CHECK(find_bundled("no-such-scenario") == nullptr);
}

TEST_CASE("parse_scenario: strict schema rejection") {
    // baseline parses cleanly
    CHECK(parse_scenario(patched("probe.csv", "probe.csv")).name == "probe");

    // not JSON at all
    CHECK_THROWS_WITH_AS(parse_scenario("not json"),
                         doctest::Contains("not valid JSON"), std::runtime_error);

    // unknown keys are errors at every level
    CHECK_THROWS_WITH_AS(
        parse_scenario(patched("\"output\":", "\"surprise\": 1, \"output\":")),
        doctest::Contains("unknown key 'surprise'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        parse_scenario(patched("\"pattern\": \"a\"", "\"pattern\": \"a\", \"extra\": 2")),
        doctest::Contains("unknown key 'extra'"), std::runtime_error);

    // wrong schema version
    CHECK_THROWS_WITH_AS(parse_scenario(patched("\"schema_version\": 1",
                                                "\"schema_version\": 2")),
                         doctest::Contains("unsupported schema_version"),
                         std::runtime_error);

    // unknown kind
    CHECK_THROWS_WITH_AS(parse_scenario(patched("\"kind\": \"push-value\"",
                                                "\"kind\": \"mystery\"")),
                         doctest::Contains("unknown scenario kind"),
                         std::runtime_error);

    // psi pattern referencing a third generator on a two-puncture plane
    CHECK_THROWS(parse_scenario(patched("\"pattern\": \"a\"", "\"pattern\": \"abc\"")));

    // unresolved map reference
    CHECK_THROWS_WITH_AS(parse_scenario(patched("\"map\": \"f\"", "\"map\": \"h\"")),
                         doctest::Contains("unknown map 'h'"), std::runtime_error);

    // factor exponents limited to +-1
    CHECK_THROWS_WITH_AS(
        parse_scenario(patched("\"turns\": 1", "\"turns\": 1, \"exponent\": 2")),
        doctest::Contains("exponent must be 1 or -1"), std::runtime_error);

    // explicit region must cover the referenced supports (twist reaches r=2)
    CHECK_THROWS_WITH_AS(
        parse_scenario(patched(
            "\"experiment\":",
            "\"quadrature\": { \"region\": [[-1.0, -1.0], [1.0, 1.0]] },\n  \"experiment\":")),
        doctest::Contains("does not cover"), std::runtime_error);

    // core band: explicit bounds and fraction are mutually exclusive
    const char* twist = R"({
      "schema_version": 1, "name": "t", "kind": "defect-audit",
      "plane": { "punctures": [[0.0, 0.0]], "basepoint": [0.31, -7.03] },
      "psi": { "pattern": "a", "defect_bound": 1.0 },
      "maps": { "f": { "factors": [ { "type": "tube_twist", "center": [0.0, 0.0],
        "r_inner": 1.0, "r_outer": 2.0, "core_fraction": 0.5, "core_lo": 1.2,
        "core_hi": 1.8, "turns": 1 } ] } },
      "experiment": { "left": "f", "right": "f" }, "output": "t.csv"
    })";
    CHECK_THROWS_WITH_AS(parse_scenario(twist),
                         doctest::Contains("either core_lo/core_hi or core_fraction"),
                         std::runtime_error);
}

TEST_CASE("run_scenario: hamiltonian profile writes the sample table") {
    const std::string dir = fresh_out_dir("profile");
    Scenario sc = parse_scenario(find_bundled("hamiltonian-profile")->json_text);
    RunOverrides ov;
    ov.out_dir = dir;
    ScenarioResult res = run_scenario(sc, ov);
    CHECK(res.pass);
    CHECK(res.summary.find("verdict PASS") != std::string::npos);
    REQUIRE(res.files_written.size() == 1);

    const std::string csv = slurp(res.files_written.front());
    CHECK(csv.find("# zero_crossing: 0.517638090") != std::string::npos);
    CHECK(csv.find("# closed_form: 0.517638090205") != std::string::npos);
    CHECK(csv.find("y,profile,shear_response") != std::string::npos);
    CHECK(data_rows(csv).size() == 33);
}

TEST_CASE("run_scenario: push value verdict and byte-stable artifacts") {
    const std::string dir = fresh_out_dir("push");
    Scenario sc = parse_scenario(find_bundled("push-value")->json_text);
    RunOverrides ov;
    ov.out_dir = dir;
    ov.resolution = 128; // keep the unit test fast; acceptance runs full size
    ov.threads = 4;
    ScenarioResult res = run_scenario(sc, ov);
    CHECK(res.pass);
    REQUIRE(res.files_written.size() == 2); // value table + trajectories

    const std::string csv = slurp(res.files_written.front());
    auto rows = data_rows(csv);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].size() == 9);
    const double value = std::stod(rows[0][0]);
    CHECK(value > 9.0);
    CHECK(value < 9.5);
    CHECK(rows[0][8] == "1"); // pass column
    CHECK(csv.find("# core_class: a") != std::string::npos);

    const std::string traj = slurp(res.files_written.back());
    CHECK(data_rows(traj).size() >= 3); // at least one vertex per start point

    // same configuration, same bytes
    ScenarioResult rerun = run_scenario(sc, ov);
    CHECK(slurp(rerun.files_written.front()) == csv);
    CHECK(slurp(rerun.files_written.back()) == traj);

    // grid mode: thread count changes nothing, including the artifact bytes
    ov.threads = 1;
    ScenarioResult serial = run_scenario(sc, ov);
    CHECK(slurp(serial.files_written.front()) == csv);
}

TEST_CASE("run_scenario: seed override reaches the artifacts") {
    const std::string dir = fresh_out_dir("seed");
    Scenario sc = parse_scenario(find_bundled("fragment-verify")->json_text);
    RunOverrides ov;
    ov.out_dir = dir;
    ScenarioResult res = run_scenario(sc, ov);
    CHECK(res.pass);
    const std::string csv = slurp(res.files_written.front());
    CHECK(csv.find("# sample_seed: 1") != std::string::npos);
    CHECK(csv.find("# piece_count: 198") != std::string::npos);
    CHECK(data_rows(csv).size() == 198);

    ov.seed = 99;
    ScenarioResult res99 = run_scenario(sc, ov);
    CHECK(res99.pass);
    CHECK(slurp(res99.files_written.front()).find("# sample_seed: 99") !=
          std::string::npos);
}

TEST_CASE("run_scenario: small stable-norm run passes end to end") {
    const char* text = R"({
      "schema_version": 1,
      "name": "mini-stable-norm",
      "kind": "stable-norm",
      "plane": { "punctures": [[0.0, 0.0], [2.5, 0.0]], "basepoint": [0.31, -7.03] },
      "psi": { "pattern": "a", "defect_bound": 1.0 },
      "maps": { "f": { "factors": [ { "type": "push_map", "punctures": [0],
        "area_budget_over_pi": 3.0, "core_fraction": 0.99, "turns": 1 } ] } },
      "quadrature": { "resolution": 96, "threads": 4 },
      "experiment": { "map": "f", "k_max": 3 },
      "output": "mini_stable_norm.csv"
    })";
    const std::string dir = fresh_out_dir("stable");
    Scenario sc = parse_scenario(text);
    RunOverrides ov;
    ov.out_dir = dir;
    ScenarioResult res = run_scenario(sc, ov);
    CHECK(res.pass);
    auto rows = data_rows(slurp(res.files_written.front()));
    REQUIRE(rows.size() == 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i][0] == std::to_string(i + 1));               // k column
        CHECK(std::stol(rows[i][4]) == long(i + 1) * 198);        // upper column
        CHECK(std::stod(rows[i][3]) <= std::stod(rows[i][4]));    // lower <= upper
    }
}

TEST_CASE("run_scenario: nested out-dir is created on demand") {
    const std::string dir = fresh_out_dir("nested") + "/a/b";
    Scenario sc = parse_scenario(find_bundled("hamiltonian-profile")->json_text);
    RunOverrides ov;
    ov.out_dir = dir;
    ScenarioResult res = run_scenario(sc, ov);
    CHECK(res.pass);
    CHECK(fs::exists(res.files_written.front()));
}
