#include "cemdpg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>
#include <fmt/format.h>

#include "cemdpg/spectral.hpp"

namespace cemdpg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names

std::string to_string(Example e) {
  switch (e) {
    case Example::ex1: return "ex1";
    case Example::ex2: return "ex2";
    case Example::ex3: return "ex3";
    case Example::custom: return "custom";
  }
  return "?";
}

namespace {

template <class E>
struct EnumNames;

template <>
struct EnumNames<Example> {
  static constexpr std::pair<Example, const char*> items[] = {
      {Example::ex1, "ex1"}, {Example::ex2, "ex2"}, {Example::ex3, "ex3"}, {Example::custom, "custom"}};
};
template <>
struct EnumNames<PiMode> {
  static constexpr std::pair<PiMode, const char*> items[] = {{PiMode::plain, "plain"},
                                                             {PiMode::inverse_lambda, "inverse_lambda"}};
};
template <>
struct EnumNames<Trace> {
  static constexpr std::pair<Trace, const char*> items[] = {{Trace::zero, "zero_trace"},
                                                            {Trace::free, "free"}};
};
template <>
struct EnumNames<KappaTilde> {
  static constexpr std::pair<KappaTilde, const char*> items[] = {{KappaTilde::paper, "paper"},
                                                                 {KappaTilde::squared, "squared"}};
};
template <>
struct EnumNames<Convection> {
  static constexpr std::pair<Convection, const char*> items[] = {{Convection::direct, "direct"},
                                                                 {Convection::skew, "skew"}};
};
template <>
struct EnumNames<Metric> {
  static constexpr std::pair<Metric, const char*> items[] = {{Metric::lumped_c, "lumped_c"},
                                                             {Metric::full_v, "full_v"}};
};

template <class E>
std::string name_of(E value) {
  for (const auto& [v, n] : EnumNames<E>::items) {
    if (v == value) return n;
  }
  return "?";
}

template <class E>
E parse_enum(const json& j, const char* key) {
  if (!j.is_string()) throw std::invalid_argument(fmt::format("config: '{}' must be a string", key));
  const auto s = j.get<std::string>();
  std::string allowed;
  for (const auto& [v, n] : EnumNames<E>::items) {
    if (s == n) return v;
    allowed += allowed.empty() ? n : std::string(", ") + n;
  }
  throw std::invalid_argument(fmt::format("config: '{}' must be one of {} (got '{}')", key, allowed, s));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

json to_json(const ExperimentConfig& c) {
  return json{{"example", name_of(c.example)},
              {"n_coarse", c.n_coarse},
              {"m_refine", c.m_refine},
              {"layers", c.layers},
              {"j_per_cell", c.j_per_cell},
              {"pi_mode", name_of(c.pi_mode)},
              {"pi_floor", c.pi_floor},
              {"eta_space", name_of(c.eta_space)},
              {"kappa_tilde", name_of(c.kappa_tilde)},
              {"convection", name_of(c.convection)},
              {"metric", name_of(c.metric)},
              {"raster", c.raster},
              {"seed", c.seed},
              {"contrast", c.contrast},
              {"kappa", c.kappa},
              {"source_scale", c.source_scale},
              {"output", c.output},
              {"csv", c.csv},
              {"timings", c.timings}};
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "example") c.example = parse_enum<Example>(value, "example");
      else if (key == "n_coarse") c.n_coarse = value.get<int>();
      else if (key == "m_refine") c.m_refine = value.get<int>();
      else if (key == "layers") c.layers = value.get<int>();
      else if (key == "j_per_cell") c.j_per_cell = value.get<int>();
      else if (key == "pi_mode") c.pi_mode = parse_enum<PiMode>(value, "pi_mode");
      else if (key == "pi_floor") c.pi_floor = value.get<double>();
      else if (key == "eta_space") c.eta_space = parse_enum<Trace>(value, "eta_space");
      else if (key == "kappa_tilde") c.kappa_tilde = parse_enum<KappaTilde>(value, "kappa_tilde");
      else if (key == "convection") c.convection = parse_enum<Convection>(value, "convection");
      else if (key == "metric") c.metric = parse_enum<Metric>(value, "metric");
      else if (key == "raster") c.raster = value.get<std::string>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "contrast") c.contrast = value.get<double>();
      else if (key == "kappa") c.kappa = value.get<double>();
      else if (key == "source_scale") c.source_scale = value.get<double>();
      else if (key == "output") c.output = value.get<std::string>();
      else if (key == "csv") c.csv = value.get<std::string>();
      else if (key == "timings") c.timings = value.get<bool>();
      else throw std::invalid_argument(fmt::format("config: unknown key '{}'", key));
    } catch (const json::exception& e) {
      throw std::invalid_argument(fmt::format("config: bad value for '{}': {}", key, e.what()));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("config '{}': {}", path, e.what()));
  }
  return config_from_json(j, std::move(base));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  config = config_from_json(json{{key, value}}, config);
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  if (c.n_coarse < 2) throw std::invalid_argument("config: n_coarse must be >= 2");
  if (c.m_refine < 2) throw std::invalid_argument("config: m_refine must be >= 2");
  if (c.layers < 1) throw std::invalid_argument("config: layers must be >= 1");
  if (c.j_per_cell < 1) throw std::invalid_argument("config: j_per_cell must be >= 1");
  if (!(c.kappa > 0.0)) throw std::invalid_argument("config: kappa must be positive");
  if (!(c.contrast >= 1.0)) throw std::invalid_argument("config: contrast must be >= 1");
  if (c.example == Example::custom && c.raster.empty()) {
    throw std::invalid_argument("config: example 'custom' needs a raster path");
  }
  std::vector<std::string> warnings;
  if (c.layers < 2) {
    warnings.push_back("layers < 2: below the oversampling needed by the localization estimate");
  }
  return warnings;
}

// ---------------------------------------------------------------------------
// Problem setup

Problem build_problem(const ExperimentConfig& c) {
  validate(c);
  MeshHierarchy mesh(c.n_coarse, c.m_refine);
  Problem p{mesh, {}, {}, std::nullopt};
  switch (c.example) {
    case Example::ex1:
      p.field = sample_field(mesh, field_example1());
      p.source = sample_at_quadrature(mesh, [](double, double) { return 1.0; });
      break;
    case Example::ex2:
      p.field = sample_field(mesh, field_example2());
      p.source = sample_at_quadrature(mesh, [](double, double) { return 1.0; });
      break;
    case Example::ex3:
    case Example::custom:
      p.permeability = c.raster.empty() ? generate_channelized_k(c.seed, c.contrast)
                                        : load_raster(c.raster);
      p.field = darcy_field(mesh, *p.permeability, darcy_source, c.kappa);
      p.source = sample_at_quadrature(mesh, corner_source);
      break;
  }
  if (c.source_scale != 1.0) {
    for (double& v : p.source) v *= c.source_scale;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const SolveReport& r) {
  json j{{"config", to_json(r.config)},
         {"dimensions",
          {{"fine_dofs", r.n_dofs}, {"trial", r.n_trial}, {"test", r.n_test}, {"aux", r.n_aux}}},
         {"lambda_excluded_min", r.lambda_excluded_min},
         {"v_error", r.v_error},
         {"proj_error", r.proj_error},
         {"ratio", number_or_null(r.ratio)},
         {"v_error_abs", r.v_error_abs},
         {"proj_error_abs", r.proj_error_abs},
         {"fine_norm", r.fine_norm},
         {"w_norm", r.w_norm},
         {"rank_G", r.rank_G},
         {"constraint_residual", r.constraint_residual},
         {"block_fallback", r.block_fallback}};
  if (r.config.timings) {
    j["timings"] = {{"assembly", r.timings.assembly},   {"fine", r.timings.fine},
                    {"spectral", r.timings.spectral},   {"test_space", r.timings.test_space},
                    {"saddle", r.timings.saddle},       {"total", r.timings.total}};
  }
  return j;
}

std::string serialize(const SolveReport& report) { return to_json(report).dump(2) + "\n"; }

std::string csv_row(const SolveReport& r) {
  return fmt::format("{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.config.j_per_cell,
                     1.0 / r.config.n_coarse, r.config.layers, r.v_error, r.proj_error, r.ratio,
                     r.w_norm, r.config.timings ? r.timings.total : 0.0);
}

void append_csv(const std::string& path, const SolveReport& report) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to '" + path + "'");
  if (fresh) out << kCsvHeader << '\n';
  out << csv_row(report) << '\n';
}

// ---------------------------------------------------------------------------
// Pipeline

SolveReport run(const ExperimentConfig& config) { return run(config, build_problem(config)); }

SolveReport run(const ExperimentConfig& config, const Problem& fine) {
  validate(config);
  if (fine.field.n_fine != config.n_fine()) {
    throw std::invalid_argument(fmt::format("run: problem sampled on {} fine cells, config needs {}",
                                            fine.field.n_fine, config.n_fine()));
  }
  const auto start = std::chrono::steady_clock::now();
  SolveReport r;
  r.config = config;
  const MeshHierarchy mesh(config.n_coarse, config.m_refine);

  auto phase = [&](const char* name, double& slot, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{} phase failed: {}", name, e.what()));
    }
    slot = seconds_since(t0);
  };

  OperatorSet op{mesh, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  phase("assembly", r.timings.assembly, [&] {
    op = assemble_all(mesh, fine.field, fine.source, {config.kappa_tilde, config.convection});
  });
  Vec u_fine;
  Projection proj;
  phase("fine solve", r.timings.fine, [&] {
    u_fine = fine_solve(op);
    proj = v_projection(op, u_fine);
  });
  AuxiliaryBasis aux;
  phase("spectral", r.timings.spectral, [&] { aux = build_aux_space(op, config.j_per_cell); });
  TestSpace space;
  phase("test space", r.timings.test_space, [&] {
    const PiOperator pi(op, aux, config.pi_mode, config.pi_floor);
    space = build_test_space(op, pi, {config.layers, config.eta_space});
  });
  SaddleSolution sol;
  phase("saddle", r.timings.saddle, [&] { sol = solve_saddle(op, space, config.metric); });

  r.n_dofs = op.num_dofs();
  r.n_trial = static_cast<int>(op.Q.cols());
  r.n_test = space.size();
  r.n_aux = aux.dimension();
  r.lambda_excluded_min = aux.lambda_excluded_min;
  r.fine_norm = proj.norm;
  r.proj_error_abs = proj.abs_error;
  r.proj_error = proj.rel_error;
  r.v_error_abs = v_norm(op, u_fine - op.Q * sol.u);
  r.v_error = proj.norm > 0.0 ? r.v_error_abs / proj.norm : 0.0;
  if (r.proj_error > 0.0) {
    r.ratio = r.v_error / r.proj_error;
  } else {
    r.ratio = r.v_error == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  r.w_norm = sol.w_norm;
  r.rank_G = sol.rank_G;
  r.constraint_residual = sol.constraint_residual;
  r.block_fallback = sol.block_fallback;
  r.timings.total = seconds_since(start);
  return r;
}

std::vector<StudyRow> study(const ExperimentConfig& base,
                            const std::vector<std::pair<int, int>>& pairs, bool parallel) {
  std::vector<StudyRow> rows(pairs.size());
  if (pairs.empty()) return rows;
  const Problem fine = build_problem(base);
  const int n_fine = base.n_fine();
  auto one = [&](int k) {
    StudyRow& row = rows[k];
    row.n_coarse = pairs[k].first;
    row.layers = pairs[k].second;
    try {
      if (row.n_coarse < 2 || n_fine % row.n_coarse != 0 || n_fine / row.n_coarse < 2) {
        throw std::invalid_argument(
            fmt::format("n_coarse {} does not divide the {}-cell fine grid", row.n_coarse, n_fine));
      }
      ExperimentConfig c = base;
      c.n_coarse = row.n_coarse;
      c.m_refine = n_fine / row.n_coarse;
      c.layers = row.layers;
      row.report = run(c, fine);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };
  if (parallel) {
    parallel_for(static_cast<int>(pairs.size()), one);
  } else {
    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) one(k);
  }
  return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
  std::string out = std::string(kCsvHeader) + ",status\n";
  for (const auto& row : rows) {
    if (row.report) {
      out += csv_row(*row.report) + ",ok\n";
    } else {
      std::string msg = row.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += fmt::format("0,{:.17g},{},nan,nan,nan,nan,0,error: {}\n", 1.0 / row.n_coarse,
                         row.layers, msg);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification studies

namespace {

struct DeskSetup {
  OperatorSet op;
  AuxiliaryBasis aux;
};

DeskSetup desk_setup(const ExperimentConfig& config, int max_dofs) {
  const Problem p = build_problem(config);
  if (p.mesh.num_dofs() > max_dofs) {
    throw std::invalid_argument(fmt::format("{} fine dofs exceed the desk-scale limit of {}",
                                            p.mesh.num_dofs(), max_dofs));
  }
  DeskSetup s{assemble_all(p.mesh, p.field, p.source, {config.kappa_tilde, config.convection}), {}};
  s.aux = build_aux_space(s.op, config.j_per_cell);
  return s;
}

}  // namespace

GlobalVerification verify_global(const ExperimentConfig& config, int max_dofs) {
  const DeskSetup s = desk_setup(config, max_dofs);
  const OperatorSet& op = s.op;
  const PiOperator pi(op, s.aux, config.pi_mode, config.pi_floor);
  const TestSpace glo = build_global_test_space(op, pi, max_dofs);

  GlobalVerification v;
  // Exactness: some w in W_glo has a(v, w) = (q_i, v)_V for every fine v.
  const Mat image = Mat(op.At * glo.W);
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(image);
  for (int i = 0; i < op.Q.cols(); ++i) {
    const Vec target = op.V * Vec(op.Q.col(i));
    const Vec coef = cod.solve(target);
    v.exactness_residuals.push_back((image * coef - target).norm() / target.norm());
  }
  // Membership: a*(psi, .) is c(phi, .) for some phi in the aux space.
  Mat functionals(op.num_dofs(), s.aux.dimension());
  for (int i = 0; i < op.mesh.num_coarse_cells(); ++i) {
    for (int j = 0; j < pi.j_per_cell(); ++j) functionals.col(i * pi.j_per_cell() + j) = pi.functional(i, j);
  }
  const Eigen::CompleteOrthogonalDecomposition<Mat> fcod(functionals);
  for (int k = 0; k < glo.size(); ++k) {
    if (glo.columns[k].kind != ColumnKind::spectral) continue;
    const Vec target = image.col(k);
    const double tn = target.norm();
    const Vec coef = fcod.solve(target);
    v.membership_residuals.push_back(tn > 0.0 ? (functionals * coef - target).norm() / tn : 0.0);
  }
  for (double r : v.exactness_residuals) v.max_exactness = std::max(v.max_exactness, r);
  for (double r : v.membership_residuals) v.max_membership = std::max(v.max_membership, r);
  return v;
}

json to_json(const GlobalVerification& v) {
  json per_vertex = json::array();
  for (std::size_t i = 0; i < v.exactness_residuals.size(); ++i) {
    per_vertex.push_back({{"vertex", i}, {"residual", v.exactness_residuals[i]}});
  }
  return json{{"max_exactness_residual", v.max_exactness},
              {"max_membership_residual", v.max_membership},
              {"exactness", per_vertex},
              {"membership", v.membership_residuals}};
}

std::vector<DecayColumn> default_decay_columns(const MeshHierarchy& mesh) {
  // Off-centre, so the patches stay short of the whole square for
  // layers up to about n_coarse / 2 and every error keeps measuring decay.
  const int nc = mesh.n_coarse();
  const int a = std::max(1, nc / 2 - 2);
  const int b = std::min(a + 1, nc - 1);
  return {
      {ColumnKind::spectral, mesh.coarse_cell(a, a), 0},
      {ColumnKind::spectral, mesh.coarse_cell(std::min(a + 1, nc - 1), a), 1},
      {ColumnKind::spectral, mesh.coarse_cell(a, std::min(a + 1, nc - 1)), 2},
      {ColumnKind::trial, mesh.interior_coarse_vertex(a, a), 0},
      {ColumnKind::trial, mesh.interior_coarse_vertex(b, a), 0},
  };
}

std::vector<DecayRow> decay_study(const ExperimentConfig& config, int l_min, int l_max,
                                  std::vector<DecayColumn> columns, int max_dofs) {
  if (l_min < 0 || l_max < l_min) throw std::invalid_argument("decay: bad layer range");
  const DeskSetup s = desk_setup(config, max_dofs);
  const OperatorSet& op = s.op;
  const PiOperator pi(op, s.aux, config.pi_mode, config.pi_floor);
  if (columns.empty()) columns = default_decay_columns(op.mesh);
  for (auto& c : columns) {
    if (c.kind == ColumnKind::spectral && c.aux_index >= s.aux.j_per_cell) {
      c.aux_index = s.aux.j_per_cell - 1;
    }
  }
  const int everywhere = op.mesh.n_coarse();

  std::vector<std::vector<DecayRow>> per_column(columns.size());
  parallel_for(static_cast<int>(columns.size()), [&](int k) {
    const DecayColumn& col = columns[k];
    auto local = [&](int layers) -> Vec {
      if (col.kind == ColumnKind::spectral) {
        return compute_psi(op, pi, col.entity, col.aux_index, layers);
      }
      const Vec xi = compute_xi(op, col.entity);
      return compute_eta(op, pi, col.entity, layers, xi, config.eta_space) + xi;
    };
    const Vec reference = local(everywhere);
    const double ref_norm = v_norm(op, reference);
    std::optional<double> previous;
    for (int l = l_min; l <= l_max; ++l) {
      DecayRow row{col, l, v_norm(op, reference - local(l)) / ref_norm, std::nullopt};
      if (previous && *previous > 0.0) row.ratio = row.error / *previous;
      previous = row.error;
      per_column[k].push_back(row);
    }
  });
  std::vector<DecayRow> rows;
  for (auto& block : per_column) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

std::string decay_csv(const std::vector<DecayRow>& rows) {
  std::string out = "kind,entity,aux_index,layers,error,ratio\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.17g},{}\n",
                       r.column.kind == ColumnKind::spectral ? "spectral" : "trial", r.column.entity,
                       r.column.aux_index, r.layers, r.error,
                       r.ratio ? fmt::format("{:.17g}", *r.ratio) : std::string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field dumps

namespace {

void write_cell_raster(const std::string& path, int n, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write field file '" + path + "'");
  out << n << ' ' << n << '\n';
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      out << fmt::format("{:.17g}", values[static_cast<std::size_t>(r) * n + c])
          << (c + 1 < n ? ' ' : '\n');
    }
  }
}

std::vector<double> cell_average(const QuadratureValues& qv, int n_cells,
                                 const std::function<double(std::size_t)>& at) {
  (void)qv;
  std::vector<double> out(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    double sum = 0.0;
    for (int q = 0; q < Gauss2x2::points; ++q) sum += at(4 * static_cast<std::size_t>(c) + q);
    out[c] = sum / Gauss2x2::points;
  }
  return out;
}

}  // namespace

void dump_field(const ExperimentConfig& config, const std::string& what, const std::string& path) {
  const Problem p = build_problem(config);
  const int n = p.mesh.n_fine();
  if (what == "k") {
    if (!p.permeability) throw std::invalid_argument("dump-field: 'k' exists only for ex3/custom");
    save_raster(path, *p.permeability);
  } else if (what == "kappa") {
    write_cell_raster(path, n, cell_average(p.field.kappa, p.mesh.num_fine_cells(),
                                            [&](std::size_t k) { return p.field.kappa[k]; }));
  } else if (what == "bnorm") {
    write_cell_raster(path, n, cell_average(p.field.bx, p.mesh.num_fine_cells(), [&](std::size_t k) {
                        return std::hypot(p.field.bx[k], p.field.by[k]);
                      }));
  } else if (what == "u_fine" || what == "u_ms" || what.starts_with("column:")) {
    const OperatorSet op =
        assemble_all(p.mesh, p.field, p.source, {config.kappa_tilde, config.convection});
    if (what == "u_fine") {
      write_vertex_raster(path, p.mesh, fine_solve(op));
      return;
    }
    const AuxiliaryBasis aux = build_aux_space(op, config.j_per_cell);
    const PiOperator pi(op, aux, config.pi_mode, config.pi_floor);
    const TestSpace space = build_test_space(op, pi, {config.layers, config.eta_space});
    if (what == "u_ms") {
      const SaddleSolution sol = solve_saddle(op, space, config.metric);
      write_vertex_raster(path, p.mesh, op.Q * sol.u);
      return;
    }
    const int k = std::stoi(what.substr(7));
    if (k < 0 || k >= space.size()) {
      throw std::out_of_range(fmt::format("dump-field: column {} outside [0, {})", k, space.size()));
    }
    write_vertex_raster(path, p.mesh, space.column(k));
  } else {
    throw std::invalid_argument(fmt::format("dump-field: unknown field '{}' (expected {})", what,
                                            kDumpFields));
  }
}

}  // namespace cemdpg
