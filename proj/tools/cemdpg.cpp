// Command-line driver for the multiscale Petrov-Galerkin solver.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cemdpg/experiment.hpp"

namespace {

using namespace cemdpg;

constexpr const char* kFooter = R"(
CSV columns (run, study):
  basis       aux functions per coarse cell
  H           coarse mesh size 1/n_coarse
  layers      oversampling layers
  v_error     relative V-norm error of the multiscale solution
  proj_error  relative V-norm error of the V-projection onto the trial space
  ratio       v_error / proj_error
  w_norm      norm of the residual representative in the test space
  runtime     seconds (0 unless timings=true)
study adds a trailing `status` column (ok or the error message).
Floats are written with 17 significant digits.

Environment:
  CEMDPG_THREADS  worker threads (default: hardware concurrency)
  CEMDPG_SEED     overrides the config seed before --override is applied
)";

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", path, "JSON config file (keys = ExperimentConfig fields)")
        ->check(CLI::ExistingFile);
    app->add_option("-o,--override", overrides, "key=value, applied after the config file")
        ->take_all();
  }

  [[nodiscard]] ExperimentConfig resolve(ExperimentConfig base = {}) const {
    ExperimentConfig c = path.empty() ? base : load_config(path, base);
    if (const char* seed = std::getenv("CEMDPG_SEED")) apply_override(c, std::string("seed=") + seed);
    for (const auto& o : overrides) apply_override(c, o);
    for (const auto& w : validate(c)) std::cerr << "warning: " << w << '\n';
    return c;
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::vector<std::pair<int, int>> parse_pairs(const std::vector<std::string>& items) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& item : items) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--pairs", "expected n_coarse:layers, got " + item);
    try {
      pairs.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--pairs", "expected n_coarse:layers, got " + item);
    }
  }
  return pairs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale Petrov-Galerkin solver for convection-diffusion on the unit square"};
  app.footer(kFooter);
  app.require_subcommand(1);

  ConfigArgs run_cfg, study_cfg, verify_cfg, decay_cfg, dump_cfg;

  auto* run_cmd = app.add_subcommand("run", "Solve one configuration and report errors");
  run_cfg.attach(run_cmd);
  std::string run_json;
  std::string run_csv;
  run_cmd->add_option("--json", run_json, "write the JSON report here (default: config output, else stdout)");
  run_cmd->add_option("--csv", run_csv, "append a CSV row here (default: config csv)");

  auto* study_cmd = app.add_subcommand("study", "Sweep (n_coarse, layers) pairs on one fine grid");
  study_cfg.attach(study_cmd);
  std::vector<std::string> pair_items;
  bool parallel = false;
  std::string study_out;
  study_cmd->add_option("-p,--pairs", pair_items, "n_coarse:layers items, e.g. 10:3 20:4 40:5")
      ->take_all()
      ->expected(0, -1)
      ->delimiter(',');
  study_cmd->add_flag("--parallel", parallel, "run rows concurrently");
  study_cmd->add_option("--csv", study_out, "write the table here (default: stdout)");

  auto* verify_cmd = app.add_subcommand("verify-global", "Check exactness of the global test space");
  verify_cfg.attach(verify_cmd);
  int verify_max = kDefaultGlobalDofLimit;
  std::string verify_out;
  double verify_tol = 1e-9;
  verify_cmd->add_option("--max-dofs", verify_max, "refuse larger fine grids")->capture_default_str();
  verify_cmd->add_option("--tol", verify_tol, "exit with status 1 above this residual")->capture_default_str();
  verify_cmd->add_option("--json", verify_out, "write the report here (default: stdout)");

  auto* decay_cmd = app.add_subcommand("decay-study", "Localization error of test columns versus layers");
  decay_cfg.attach(decay_cmd);
  int l_min = 1;
  int l_max = 5;
  int decay_max = kDefaultGlobalDofLimit;
  std::string decay_out;
  decay_cmd->add_option("--l-min", l_min)->capture_default_str();
  decay_cmd->add_option("--l-max", l_max)->capture_default_str();
  decay_cmd->add_option("--max-dofs", decay_max, "refuse larger fine grids")->capture_default_str();
  decay_cmd->add_option("--csv", decay_out, "write the table here (default: stdout)");

  auto* dump_cmd = app.add_subcommand("dump-field", "Write a field as a plain-text raster");
  dump_cfg.attach(dump_cmd);
  std::string field;
  std::string dump_path;
  dump_cmd->add_option("-f,--field", field, std::string("one of: ") + kDumpFields)->required();
  dump_cmd->add_option("--out", dump_path, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const ExperimentConfig c = run_cfg.resolve();
      const SolveReport report = run(c);
      const std::string json_path = run_json.empty() ? c.output : run_json;
      emit(json_path, serialize(report));
      const std::string csv_path = run_csv.empty() ? c.csv : run_csv;
      if (!csv_path.empty()) append_csv(csv_path, report);
    } else if (study_cmd->parsed()) {
      const ExperimentConfig c = study_cfg.resolve();
      emit(study_out, study_csv(study(c, parse_pairs(pair_items), parallel)));
    } else if (verify_cmd->parsed()) {
      ExperimentConfig base;
      base.n_coarse = 4;
      base.m_refine = 4;
      const ExperimentConfig c = verify_cfg.resolve(base);
      const GlobalVerification v = verify_global(c, verify_max);
      emit(verify_out, to_json(v).dump(2) + "\n");
      const bool ok = v.max_exactness <= verify_tol && v.max_membership <= verify_tol;
      std::cerr << fmt::format("max exactness residual {:.3e}, max membership residual {:.3e}: {}\n",
                               v.max_exactness, v.max_membership, ok ? "ok" : "above tolerance");
      return ok ? 0 : 1;
    } else if (decay_cmd->parsed()) {
      ExperimentConfig base;
      base.m_refine = 5;
      const ExperimentConfig c = decay_cfg.resolve(base);
      emit(decay_out, decay_csv(decay_study(c, l_min, l_max, {}, decay_max)));
    } else if (dump_cmd->parsed()) {
      dump_field(dump_cfg.resolve(), field, dump_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
