#include "qbd/cli.hpp"
#include "qbd/qcore.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace qbd::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << contents;
}

int threads_from_env() {
  const char* env = std::getenv("QBDISSIM_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("QBDISSIM_THREADS must be a positive integer");
  return static_cast<int>(n);
}

int cmd_list() {
  for (const auto& e : catalog()) {
    std::cout << e.name << "  [" << e.figure << "]  " << e.summary << "\n";
    std::cout << "    required:";
    for (const auto& k : e.required) std::cout << ' ' << k;
    std::cout << "\n    optional:";
    for (const auto& k : e.optional) std::cout << ' ' << k;
    std::cout << "\n    csv: " << e.csv_header << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  try {
    const auto problems = validate(load_config(config_path));
    for (const auto& msg : problems) std::cout << "error: " << msg << "\n";
    if (problems.empty()) std::cout << "ok\n";
    return problems.empty() ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    const auto problems = validate(config);
    if (!problems.empty()) {
      for (const auto& msg : problems) std::cerr << "error: " << msg << "\n";
      return kExitConfig;
    }
    if (threads <= 0) threads = threads_from_env();
    if (threads > 0) set_thread_count(threads);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path dir(out_dir);
  const fs::path csv_path = dir / config.output_path;
  fs::path sidecar_path = csv_path;
  sidecar_path.replace_extension(".json");
  std::error_code ec;
  fs::create_directories(csv_path.parent_path().empty() ? dir : csv_path.parent_path(), ec);

  try {
    const RunOutput out = run_experiment(config, Exec::openmp);
    write_file(csv_path, out.csv);
    nlohmann::json sidecar = out.sidecar;
    sidecar["threads"] = thread_count();
    for (const auto& [name, contents] : out.extra_files) {
      fs::path extra = csv_path;
      extra.replace_extension("." + name);
      write_file(extra, contents);
      sidecar["extra_files"].push_back(extra.filename().string());
    }
    write_file(sidecar_path, sidecar.dump(2) + "\n");
    std::cout << csv_path.string() << "\n";
    if (!out.all_converged) {
      std::cerr << "warning: convergence diagnostics failed; see " << sidecar_path.string() << "\n";
      return kExitNumerical;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    // NumericalError and anything unexpected: record what happened next to the CSV path.
    nlohmann::json sidecar{{"experiment", config.experiment},
                           {"seed", config.seed},
                           {"parameters", config.parameters},
                           {"error", e.what()},
                           {"convergence", {{"all_converged", false}}}};
    try {
      write_file(sidecar_path, sidecar.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"qbdissim: dissipative quantum battery simulations"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (default: QBDISSIM_THREADS)")
      ->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("--config", config_path, "JSON config file")->required();

  app.add_subcommand("list", "list experiments and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (app.got_subcommand("list")) return cmd_list();
  if (app.got_subcommand("validate")) return cmd_validate(config_path);
  return cmd_run(config_path, out_dir, threads);
}

}  // namespace qbd::cli
