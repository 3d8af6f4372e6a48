#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cemdpg/assembly.hpp"
#include "cemdpg/coeff.hpp"
#include "cemdpg/mesh.hpp"
#include "cemdpg/solver.hpp"
#include "cemdpg/testspace.hpp"

namespace cemdpg {

enum class Example : std::uint8_t { ex1, ex2, ex3, custom };

/**
 * Everything a run depends on. JSON keys are the field names; the defaults
 * are the first row of the Example 1 table (H = 1/10, h = 1/200, 3 layers,
 * 3 aux functions per cell).
 */
struct ExperimentConfig {
  Example example = Example::ex1;
  int n_coarse = 10;
  int m_refine = 20;
  int layers = 3;
  int j_per_cell = 3;
  PiMode pi_mode = PiMode::plain;
  double pi_floor = 0.0;
  Trace eta_space = Trace::zero;
  KappaTilde kappa_tilde = KappaTilde::paper;
  Convection convection = Convection::direct;
  Metric metric = Metric::lumped_c;
  /// Permeability raster for ex3 (optional, generated when empty) and custom (required).
  std::string raster;
  std::uint64_t seed = 42;
  double contrast = 1e4;
  /// Diffusion for ex3/custom.
  double kappa = 1.0 / 20.0;
  /// Multiplies the right-hand side.
  double source_scale = 1.0;
  std::string output;
  std::string csv;
  /// Wall-clock timings make reports non-reproducible, so they are opt-in.
  bool timings = false;

  [[nodiscard]] int n_fine() const { return n_coarse * m_refine; }
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep the values of `base`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// "key=value" with the same keys and value syntax as the JSON file.
void apply_override(ExperimentConfig& config, const std::string& assignment);
/// Throws std::invalid_argument on non-positive counts and similar; returns warnings.
std::vector<std::string> validate(const ExperimentConfig& config);

struct Problem {
  MeshHierarchy mesh;
  CoefficientField field;
  QuadratureValues source;
  std::optional<RasterField> permeability;
};

Problem build_problem(const ExperimentConfig& config);

struct Timings {
  double assembly = 0.0;
  double fine = 0.0;
  double spectral = 0.0;
  double test_space = 0.0;
  double saddle = 0.0;
  double total = 0.0;
};

struct SolveReport {
  ExperimentConfig config;
  int n_dofs = 0;
  int n_trial = 0;
  int n_test = 0;
  int n_aux = 0;
  double lambda_excluded_min = 0.0;
  /// Relative V-norm error of the multiscale solution.
  double v_error = 0.0;
  /// Relative V-norm error of the V-projection onto the trial space.
  double proj_error = 0.0;
  double ratio = 1.0;
  double v_error_abs = 0.0;
  double proj_error_abs = 0.0;
  double fine_norm = 0.0;
  double w_norm = 0.0;
  int rank_G = 0;
  double constraint_residual = 0.0;
  bool block_fallback = false;
  Timings timings;
};

nlohmann::json to_json(const SolveReport& report);
std::string serialize(const SolveReport& report);

inline constexpr const char* kCsvHeader = "basis,H,layers,v_error,proj_error,ratio,w_norm,runtime";
std::string csv_row(const SolveReport& report);
/// Appends one row, writing the header first if the file is new or empty.
void append_csv(const std::string& path, const SolveReport& report);

SolveReport run(const ExperimentConfig& config);
/// Same as run() but reuses an already sampled fine-grid problem.
SolveReport run(const ExperimentConfig& config, const Problem& fine_problem);

struct StudyRow {
  int n_coarse = 0;
  int layers = 0;
  std::optional<SolveReport> report;
  std::string error;
};

/**
 * One run per (n_coarse, layers) pair on the fine grid of `base`. Failing
 * rows are recorded and the sweep continues.
 */
std::vector<StudyRow> study(const ExperimentConfig& base,
                            const std::vector<std::pair<int, int>>& pairs, bool parallel = false);
std::string study_csv(const std::vector<StudyRow>& rows);

struct GlobalVerification {
  /// ||A^T w - V q_i|| / ||V q_i|| for the best w in the global test space, per trial function.
  std::vector<double> exactness_residuals;
  /// Least-squares residual of A^T psi against c(W_aux, .), per global spectral column.
  std::vector<double> membership_residuals;
  double max_exactness = 0.0;
  double max_membership = 0.0;
};

GlobalVerification verify_global(const ExperimentConfig& config,
                                 int max_dofs = kDefaultGlobalDofLimit);
nlohmann::json to_json(const GlobalVerification& v);

struct DecayColumn {
  ColumnKind kind = ColumnKind::spectral;
  int entity = 0;
  int aux_index = 0;
};

struct DecayRow {
  DecayColumn column;
  int layers = 0;
  /// ||w_glo - w_ms(l)||_V / ||w_glo||_V
  double error = 0.0;
  /// error(l) / error(l-1); empty for the first layer count.
  std::optional<double> ratio;
};

/// Five columns (three spectral, two trial-derived) a little off the centre of the grid.
std::vector<DecayColumn> default_decay_columns(const MeshHierarchy& mesh);

std::vector<DecayRow> decay_study(const ExperimentConfig& config, int l_min, int l_max,
                                  std::vector<DecayColumn> columns = {},
                                  int max_dofs = kDefaultGlobalDofLimit);
std::string decay_csv(const std::vector<DecayRow>& rows);

/// Field names accepted by dump_field().
inline constexpr const char* kDumpFields = "k, kappa, bnorm, u_fine, u_ms, column:<index>";
void dump_field(const ExperimentConfig& config, const std::string& what, const std::string& path);

std::string to_string(Example e);

}  // namespace cemdpg
