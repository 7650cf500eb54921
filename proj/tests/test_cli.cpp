#include "qbd/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace qbd;
using namespace qbd::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qbdissim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

// Runs the installed binary; returns its exit status.
int qbdissim(const std::string& args) {
  const char* bin = std::getenv("QBDISSIM_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

nlohmann::json charge_config() {
  return {{"experiment", "charge-single"},
          {"parameters", {{"omega", 1.5}, {"epsilon", 0.5}, {"beta", 1.0}, {"t_max", 4.0}, {"samples", 5}}}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("catalog") {
    CHECK(catalog().size() == 8);
    for (const auto& e : catalog()) {
      CHECK(find_experiment(e.name) == &e);
      CHECK_FALSE(e.csv_header.empty());
    }
    CHECK(find_experiment("nope") == nullptr);
    CHECK(suggest_experiment("charge-singel") == "charge-single");
  }

  TEST_CASE("config validation messages") {
    auto missing = parse_config(R"({"experiment":"collective-advantage","parameters":{"N":[2,3]}})");
    const auto problems = validate(missing);
    REQUIRE_FALSE(problems.empty());
    bool names_beta = false;
    for (const auto& p : problems) names_beta |= p.find("beta") != std::string::npos;
    CHECK(names_beta);

    auto unknown = parse_config(R"({"experiment":"charge-single","parameters":{"omega":1.5,"epsilon":0.5,"beta":1,"t_max":4,"gamma":2}})");
    CHECK_FALSE(validate(unknown).empty());

    auto both = parse_config(R"({"experiment":"charge-single","parameters":{"omega":1.5,"epsilon":0.5,"epsilon2":0.25,"beta":1,"t_max":4}})");
    CHECK_FALSE(validate(both).empty());
    auto eps2 = parse_config(R"({"experiment":"charge-single","parameters":{"omega":1.5,"epsilon2":0.25,"beta":1,"t_max":4}})");
    CHECK(validate(eps2).empty());

    auto empty = parse_config(R"({"experiment":"collective-advantage","parameters":{"N":[],"beta":1,"omega":1.5,"epsilon":1,"delta":0.01}})");
    CHECK_FALSE(validate(empty).empty());

    auto typo = parse_config(R"({"experiment":"charge-singel","parameters":{}})");
    const auto t = validate(typo);
    REQUIRE(t.size() == 1);
    CHECK(t[0].find("charge-single") != std::string::npos);

    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"parameters":{}})"), ConfigError);
  }

  TEST_CASE("in-process runs") {
    const auto cfg = parse_config(R"({"experiment":"collective-advantage",
      "parameters":{"N":[3,2],"beta":[1.0],"omega":1.5,"epsilon":1.0,"delta":0.01}})");
    const auto out = run_experiment(cfg, Exec::serial);
    CHECK(first_line(out.csv) == find_experiment("collective-advantage")->csv_header);
    CHECK(out.all_converged);
    // Rows sorted by the sweep keys.
    std::istringstream lines(out.csv);
    std::string header, row1, row2;
    std::getline(lines, header);
    std::getline(lines, row1);
    std::getline(lines, row2);
    CHECK(row1.rfind("2,", 0) == 0);
    CHECK(row2.rfind("3,", 0) == 0);
    CHECK(out.sidecar["experiment"] == "collective-advantage");
    CHECK(out.sidecar["convergence"]["all_converged"] == true);
    CHECK(run_experiment(cfg, Exec::openmp).csv == out.csv);
  }

  TEST_CASE("binary: list, validate and run") {
    const auto dir = scratch("run");
    CHECK(qbdissim("list") == 0);
    const auto cfg = write_config(dir, charge_config());
    CHECK(qbdissim("validate --config " + cfg.string()) == 0);
    CHECK(qbdissim("run --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
    CHECK(qbdissim("run --config " + cfg.string() + " --out " + (dir / "b").string() + " --threads 1") == 0);
    const auto a = slurp(dir / "a" / "charge-single.csv");
    CHECK(first_line(a) == "t,E_frac,coherence,W,Q,eta_heat,eta_ergo");
    CHECK(a == slurp(dir / "b" / "charge-single.csv"));
    const auto side = nlohmann::json::parse(slurp(dir / "a" / "charge-single.json"));
    CHECK(side["figure"].is_string());
    CHECK(side["parameters"]["samples"] == 5);
    CHECK(side["convergence"]["all_converged"] == true);
  }

  TEST_CASE("binary: exit codes") {
    const auto dir = scratch("codes");
    auto bad = charge_config();
    bad["parameters"].erase("beta");
    CHECK(qbdissim("validate --config " + write_config(dir, bad).string()) == 2);
    CHECK(qbdissim("run --config " + write_config(dir, bad).string() + " --out " + dir.string()) == 2);
    CHECK(qbdissim("run --config " + (dir / "missing.json").string()) == 2);
    CHECK(qbdissim("frobnicate") == 2);

    const nlohmann::json capped{{"experiment", "optimize-protocol"},
                                {"parameters",
                                 {{"omega", 1.5}, {"epsilon", 0.5}, {"beta", 1.0}, {"t_N", 4.0},
                                  {"n_segments", 10}, {"restarts", 1}, {"max_iterations", 2}}}};
    const auto cfg = write_config(dir, capped);
    CHECK(qbdissim("run --config " + cfg.string() + " --out " + dir.string()) == 3);
    const auto side = nlohmann::json::parse(slurp(dir / "optimize-protocol.json"));
    CHECK(side["convergence"]["all_converged"] == false);
    CHECK(fs::exists(dir / "optimize-protocol.csv"));
  }
}
