#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"

// End-to-end tests of the command-line front end: each case drives the real
// binary (path injected by the build) through std::system and inspects the
// exit code, the report file and the captured streams.

namespace {

using Json = nlohmann::ordered_json;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const std::string& work_dir() {
  static const std::string dir = [] {
    char tmpl[] = "/tmp/heattrace_cli_XXXXXX";
    char* made = mkdtemp(tmpl);
    REQUIRE(made != nullptr);
    return std::string(made);
  }();
  return dir;
}

std::string path_in_work_dir(const std::string& name) {
  return work_dir() + "/" + name;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

RunResult run_cli(const std::string& args) {
  const std::string out_file = path_in_work_dir("stdout.txt");
  const std::string err_file = path_in_work_dir("stderr.txt");
  const std::string command = std::string(HEATTRACE_CLI_PATH) + " " + args +
                              " > " + out_file + " 2> " + err_file;
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_file);
  result.err = read_file(err_file);
  return result;
}

// Writes the config, runs the binary with --out, returns exit code + report.
RunResult run_config(const std::string& name, const std::string& config,
                     const std::string& extra_args = "") {
  const std::string config_path = path_in_work_dir(name + ".json");
  write_file(config_path, config);
  return run_cli("--config " + config_path + " --out " +
                 path_in_work_dir(name + "_report.json") + extra_args);
}

Json report_of(const std::string& name) {
  return Json::parse(read_file(path_in_work_dir(name + "_report.json")));
}

const char* kLeadingConfig = R"({
  "version": 1,
  "mode": "a0",
  "payload": {
    "jet": {"d": 4},
    "u": [[[1,0],[0,0]],[[0,0],[4,0]]],
    "check_oracle": true
  }
})";

}  // namespace

TEST_CASE("leading-coefficient mode matches the closed form and echoes its "
          "input") {
  const RunResult run = run_config("a0", kLeadingConfig);
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("[PASS] a0 vs fibre quadrature") != std::string::npos);
  CHECK(run.out.find("overall: PASS") != std::string::npos);

  const Json report = report_of("a0");
  CHECK(report.at("schema") == "heattrace-report/1");
  CHECK(report.at("mode") == "a0");
  CHECK(report.at("passed") == true);

  // diag(1, 4) in d = 4: tr u^{-2} = 1 + 1/16 over (4 pi)^{d/2} pi^{d/2}.
  const double expected =
      (1.0 + 1.0 / 16.0) / (16.0 * std::numbers::pi * std::numbers::pi);
  const double value = report.at("results").at("a0").get<double>();
  CHECK(std::abs(value - expected) <= 1e-12 * expected);
  CHECK(report.at("results").at("rel_error").get<double>() < 1e-8);

  // Round trip: the echoed config is exactly the parsed input.
  CHECK(report.at("config") == Json::parse(kLeadingConfig));
}

TEST_CASE("identical configurations produce byte-identical reports") {
  const RunResult first = run_config("det1", kLeadingConfig);
  const RunResult second = run_config("det2", kLeadingConfig);
  REQUIRE(first.exit_code == 0);
  REQUIRE(second.exit_code == 0);
  const std::string r1 = read_file(path_in_work_dir("det1_report.json"));
  const std::string r2 = read_file(path_in_work_dir("det2_report.json"));
  CHECK(!r1.empty());
  CHECK(r1 == r2);
}

TEST_CASE("weight-integral mode samples closed forms against quadrature") {
  const char* config = R"({
    "version": 1,
    "mode": "integrals",
    "seed": 7,
    "payload": {"d": 4, "p": 0, "k": 1, "samples": 50}
  })";
  const RunResult run = run_config("ints", config);
  CHECK(run.exit_code == 0);

  const Json report = report_of("ints");
  CHECK(report.at("passed") == true);
  CHECK(report.at("seed") == 7);
  CHECK(report.at("results").at("max_rel_error").get<double>() < 1e-8);
  CHECK(report.at("checks").size() == 1);
  CHECK(report.at("checks").at(0).at("name") == "closed form vs quadrature");

  // A different seed draws different weights, so the report must change.
  const RunResult reseeded = run_config("ints2", config, " --seed 99");
  REQUIRE(reseeded.exit_code == 0);
  CHECK(read_file(path_in_work_dir("ints_report.json")) !=
        read_file(path_in_work_dir("ints2_report.json")));
}

TEST_CASE("symbol mode lists the rewritten first-order expansion") {
  const char* config = R"({
    "version": 1,
    "mode": "symbols",
    "payload": {"order": 1}
  })";
  const RunResult run = run_config("sym", config);
  CHECK(run.exit_code == 0);

  const Json report = report_of("sym");
  CHECK(report.at("results").at("term_count") == 14);
  CHECK(report.at("results").at("terms").size() == 14);
  const Json expected_shapes =
      Json::array({Json::array({1, 0}), Json::array({2, 1}),
                   Json::array({3, 2}), Json::array({4, 3})});
  CHECK(report.at("results").at("required_insertions") == expected_shapes);

  // The metric-specialised listing is longer and carries no count check.
  const char* specialized = R"({
    "version": 1,
    "mode": "symbols",
    "payload": {"order": 1, "specialize": true}
  })";
  const RunResult run2 = run_config("sym2", specialized);
  CHECK(run2.exit_code == 0);
  CHECK(report_of("sym2").at("results").at("term_count").get<int>() > 14);
}

TEST_CASE("subleading mode cross-checks both evaluation routes in dimension "
          "four") {
  const char* config = R"({
    "version": 1,
    "mode": "a1",
    "payload": {
      "jet": {"d": 4},
      "operator": {
        "u": [[[1.5,0],[0.2,0.1]],[[0.2,-0.1],[2.0,0]]],
        "w": [[[0.3,0],[0.1,0.2]],[[0.1,-0.2],[-0.1,0]]],
        "du": [
          [[[0.1,0],[0,0]],[[0,0],[0.05,0]]],
          [[[0,0],[0.02,0]],[[0.02,0],[0,0]]],
          [[[0,0],[0,0]],[[0,0],[0,0]]],
          [[[0.03,0],[0,0]],[[0,0],[0,0]]]
        ]
      }
    }
  })";
  const RunResult run = run_config("a1", config);
  CHECK(run.exit_code == 0);

  const Json report = report_of("a1");
  CHECK(report.at("results").at("rel_error").get<double>() < 1e-8);
  CHECK(report.at("checks").at(0).at("name") == "closed form vs term pipeline");
  CHECK(report.at("passed") == true);
}

TEST_CASE("torus validation mode fits spectral sums against engine densities") {
  const char* config = R"({
    "version": 1,
    "mode": "validate-torus",
    "payload": {
      "model": {
        "d": 2,
        "length": 6.283185307179586,
        "cutoff": 8,
        "constant": {
          "u": [[[2.0,0]]],
          "w": [[[0.5,0]]]
        }
      }
    }
  })";
  const RunResult run = run_config("vt", config);
  CHECK(run.exit_code == 0);

  const Json report = report_of("vt");
  CHECK(report.at("passed") == true);
  const Json& results = report.at("results");
  // Scalar constants on the square torus: a0 = vol / (4 pi u) = pi / 2 and
  // a1 = vol w / (4 pi u) = pi / 4.
  CHECK(results.at("a0").at("target").get<double>() ==
        doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));
  CHECK(results.at("a1").at("target").get<double>() ==
        doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-12));
  CHECK(results.at("samples").size() == 12);
  bool saw_order_condition = false;
  for (const auto& check : report.at("checks")) {
    CHECK(check.at("pass") == true);
    saw_order_condition =
        saw_order_condition || check.at("name") == "window order condition";
  }
  CHECK(saw_order_condition);
}

TEST_CASE("malformed configurations exit with code 2 and the offending path") {
  SUBCASE("invalid JSON") {
    const RunResult run = run_config("e_json", "{broken");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("config error at /") != std::string::npos);
  }
  SUBCASE("unrecognized mode") {
    const RunResult run =
        run_config("e_mode", R"({"version":1,"mode":"a7","payload":{}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/mode") != std::string::npos);
  }
  SUBCASE("unrecognized version") {
    const RunResult run =
        run_config("e_ver", R"({"version":3,"mode":"a0","payload":{}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/version") != std::string::npos);
  }
  SUBCASE("missing required matrix") {
    const RunResult run = run_config(
        "e_nou", R"({"version":1,"mode":"a0","payload":{"jet":{"d":2}}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/payload/u") != std::string::npos);
  }
  SUBCASE("non-square matrix") {
    const RunResult run = run_config(
        "e_sq",
        R"({"version":1,"mode":"a0","payload":{"jet":{"d":2},"u":[[[1,0],[0,0]]]}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/payload/u") != std::string::npos);
  }
  SUBCASE("asymmetric metric block") {
    const RunResult run = run_config(
        "e_gsym",
        R"({"version":1,"mode":"a0","payload":{"jet":{"d":2,"g_inv":[[1.0,0.3],[0.1,1.0]]},"u":[[[1,0]]]}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/payload/jet/g_inv") != std::string::npos);
  }
  SUBCASE("unknown field") {
    const RunResult run = run_config(
        "e_key",
        R"({"version":1,"mode":"symbols","payload":{"order":1,"depth":3}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/payload/depth") != std::string::npos);
  }
  SUBCASE("mode absent from both config and flags") {
    const RunResult run =
        run_config("e_nomode", R"({"version":1,"payload":{"order":1}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/mode") != std::string::npos);
  }
  SUBCASE("torus model must pick one coefficient family") {
    const RunResult run = run_config(
        "e_both",
        R"({"version":1,"mode":"validate-torus","payload":{"model":{
          "d":2,"length":1.0,"cutoff":4,
          "constant":{"u":[[[1,0]]],"w":[[[0,0]]]},
          "varying":{"u":{"c0":[[[1,0]]]},"w":{"c0":[[[0,0]]]}}}}})");
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("/payload/model") != std::string::npos);
  }
}

TEST_CASE("the mode flag substitutes for a missing config mode") {
  const std::string config_path = path_in_work_dir("flagmode.json");
  write_file(config_path, R"({"version":1,"payload":{"order":1}})");
  const RunResult run =
      run_cli("--config " + config_path + " --mode symbols --out " +
              path_in_work_dir("flagmode_report.json"));
  CHECK(run.exit_code == 0);
  CHECK(report_of("flagmode").at("mode") == "symbols");
}

TEST_CASE("domain violations and failed cross-checks use distinct exit codes") {
  SUBCASE("non-positive principal coefficient is a domain error") {
    const RunResult run = run_config(
        "e_dom",
        R"({"version":1,"mode":"a0","payload":{"jet":{"d":2},"u":[[[-1,0]]]}})");
    CHECK(run.exit_code == 3);
    CHECK(!run.err.empty());
  }
  SUBCASE("an oracle mismatch beyond tolerance fails with code 4") {
    const RunResult run =
        run_config("e_tol", kLeadingConfig, " --tolerance 1e-18");
    CHECK(run.exit_code == 4);
    CHECK(run.out.find("[FAIL]") != std::string::npos);
    CHECK(run.out.find("overall: FAIL") != std::string::npos);
    const Json report = report_of("e_tol");
    CHECK(report.at("passed") == false);
    CHECK(report.at("tolerance").get<double>() == 1e-18);
  }
}

TEST_CASE("usage errors and help follow command-line conventions") {
  const RunResult missing = run_cli("");
  CHECK(missing.exit_code == 2);
  const RunResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("--config") != std::string::npos);
}
