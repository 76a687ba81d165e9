#pragma once

// paneitz-lab orchestration: builds the operator and problem from a config,
// runs one action (or a sweep of them), writes report.json, CSV logs and
// binary fields, then a manifest with SHA-256 checksums of every artifact.
//
// Exit codes: 0 success, 1 certified infeasible (the non-existence
// certificate fired where a solve was asked for), 2 error.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <typeinfo>
#include <vector>

#include <json.hpp>

#include "paneitz/cli/config.hpp"
#include "paneitz/conditions.hpp"
#include "paneitz/field_io.hpp"
#include "paneitz/flow.hpp"
#include "paneitz/lambda_star.hpp"
#include "paneitz/monotone.hpp"
#include "paneitz/mountain_pass.hpp"
#include "paneitz/spectral_analysis.hpp"

#ifndef PANEITZ_LAB_VERSION
#define PANEITZ_LAB_VERSION "0.1.0"
#endif

namespace paneitz::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kReportSchema = "paneitz-lab-report-v1";
inline constexpr const char* kCsvVersion = "1";

inline std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

struct Artifact {
  std::string path;  ///< relative to the output root
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Output directory that remembers what it wrote (paths relative to `root`).
class OutputDir {
 public:
  OutputDir(fs::path root, fs::path sub = {}) : root_(std::move(root)), sub_(std::move(sub)) {
    fs::create_directories(root_ / sub_);
  }

  OutputDir child(const std::string& name) const { return OutputDir(root_, sub_ / name); }

  void text(const std::string& name, const std::string& content) {
    std::ofstream os(full(name), std::ios::binary);
    if (!os) throw Error("cannot write " + full(name).string());
    os << content;
    os.close();
    record(name);
  }

  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  /// Binary field + sidecar, and a CSV copy on 1-D grids.
  json field(const std::string& stem, const ScalarField& u) {
    io::write_binary(u, full(stem + ".bin"));
    record(stem + ".bin");
    record(io::sidecar_path(fs::path(stem + ".bin")).string());
    json j = {{"binary", rel(stem + ".bin")}, {"min", min_value(u)}, {"max", max_value(u)}};
    if (u.grid().dim() == 1) {
      io::write_csv(u, full(stem + ".csv"));
      record(stem + ".csv");
      j["csv"] = rel(stem + ".csv");
    }
    return j;
  }

  const std::vector<std::string>& written() const { return written_; }
  const fs::path& root() const { return root_; }
  fs::path full(const std::string& name) const { return root_ / sub_ / name; }
  std::string rel(const std::string& name) const { return (sub_ / name).generic_string(); }

 private:
  void record(const std::string& name) { written_.push_back(rel(name)); }

  fs::path root_;
  fs::path sub_;
  std::vector<std::string> written_;
};

/// Fixed-format CSV writer (17 significant digits, first line is a version comment).
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& columns) {
    os_ << "# paneitz-lab csv v" << kCsvVersion << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  template <class... Ts>
  void row(const Ts&... vs) {
    bool first = true;
    ((os_ << (first ? "" : ",") << vs, first = false), ...);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

struct Outcome {
  json result;
  int exit_code = 0;
  std::string status = "ok";
  std::vector<std::string> warnings;
};

struct RunManifest {
  json config;
  std::string version = PANEITZ_LAB_VERSION;
  double seconds = 0.0;
  int exit_code = 0;
  std::string status;
  std::vector<Artifact> artifacts;

  json to_json() const {
    json arts = json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"sha256", a.sha256}});
    return {{"config", config},   {"version", version}, {"seconds", seconds},
            {"exit_code", exit_code}, {"status", status}, {"artifacts", arts}};
  }
};

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = num(v);
  return j;
}

inline json to_json(const ConditionReport& r) {
  return {{"name", r.name},         {"applicable", r.applicable}, {"satisfied", r.satisfied},
          {"lhs", num(r.lhs)},      {"rhs", num(r.rhs)},          {"margin", num(r.margin)},
          {"ingredients", to_json(r.ingredients)}, {"notes", r.notes}};
}

inline std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
  if (dynamic_cast<const GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const CoercivityError*>(&e)) return "CoercivityError";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
  if (dynamic_cast<const OrderViolation*>(&e)) return "OrderViolation";
  if (dynamic_cast<const NoBracket*>(&e)) return "NoBracket";
  if (dynamic_cast<const ConditionNotMet*>(&e)) return "ConditionNotMet";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

}  // namespace detail

/// Machine-readable error object.
inline json error_json(const std::exception& e) {
  json d = json::object();
  if (auto* c = dynamic_cast<const ConfigError*>(&e)) d["line"] = c->line();
  if (auto* c = dynamic_cast<const ConvergenceError*>(&e)) {
    d["last_residual"] = detail::num(c->last_residual());
    d["iterations"] = c->iterations();
  }
  if (auto* c = dynamic_cast<const OrderViolation*>(&e)) {
    d["iteration"] = c->iteration();
    d["magnitude"] = detail::num(c->magnitude());
  }
  if (auto* c = dynamic_cast<const CoercivityError*>(&e)) d["margin"] = detail::num(c->margin());
  if (auto* c = dynamic_cast<const ConditionNotMet*>(&e)) d["margin"] = detail::num(c->margin());
  return {{"error", {{"type", detail::error_type(e)}, {"message", e.what()}, {"details", d}}}, {"exit_code", 2}};
}

/// Everything an action needs, built once per run (or per sweep cell).
struct Setup {
  GeometryParams params;
  GridPtr grid;
  ScalarField psi;
  std::optional<PaneitzOperator> op;
  ProblemSpec prob;
};

inline ScalarField load_field(const ExperimentConfig& c, const std::string& file, const GridPtr& grid) {
  const fs::path p = fs::path(file).is_absolute() ? fs::path(file) : c.base_dir / file;
  if (!fs::exists(p)) throw InvalidArgument("field file not found: " + p.string());
  if (p.extension() == ".csv") return io::read_csv(p, grid);
  ScalarField u = io::read_binary(p);
  if (!(u.grid() == *grid)) throw GridMismatch("field " + p.string() + " was written on a different grid");
  return ScalarField(grid, std::vector<double>(u.values().begin(), u.values().end()));
}

inline Setup build_setup(const ExperimentConfig& c) {
  Setup s;
  s.params = derive_coefficients(c.n, c.R);
  s.grid = make_grid(c.grid_sizes, c.grid_lengths);
  if (c.psi == "zero") {
    s.psi = ScalarField(s.grid, 0.0);
  } else if (c.psi == "mode") {
    s.psi = ScalarField::from_function(s.grid, [&](auto x) {
      double arg = 0.0;
      for (int a = 0; a < s.grid->dim(); ++a) arg += 2.0 * std::numbers::pi * c.psi_wavevector[a] * x[a] / c.grid_lengths[a];
      return c.psi_amplitude * std::sin(arg);
    });
  } else {
    s.psi = load_field(c, c.psi_file, s.grid);
  }
  s.op.emplace(PaneitzOperator::from_psi(s.params, s.psi));
  auto coeff = [&](const FieldSource& f) { return f.is_constant() ? ScalarField(s.grid, f.constant) : load_field(c, f.file, s.grid); };
  s.prob = ProblemSpec{coeff(c.A), coeff(c.B), c.p, c.q, c.mode};
  return s;
}

inline json describe_setup(const Setup& s) {
  const auto roots = symbol_factor_roots(s.params);
  json sizes = json::array(), lengths = json::array();
  for (auto n : s.grid->sizes()) sizes.push_back(n);
  for (auto L : s.grid->lengths()) lengths.push_back(L);
  return {{"geometry",
           {{"n", s.params.n},
            {"R", s.params.R},
            {"alpha", s.params.alpha},
            {"beta", s.params.beta},
            {"Q", s.params.Qconst},
            {"b_n", s.params.b_n},
            {"two_sharp", s.params.two_sharp},
            {"symbol_roots", {roots[0], roots[1]}}}},
          {"grid", {{"sizes", sizes}, {"lengths", lengths}, {"volume", s.grid->volume()}}},
          {"operator",
           {{"min_W", s.op->min_multiplier()},
            {"max_W", s.op->max_multiplier()},
            {"mean_W", s.op->mean_multiplier()},
            {"coercivity_margin", s.op->coercivity_margin(0.0)}}},
          {"problem",
           {{"p", s.prob.p},
            {"q", s.prob.q},
            {"mode", to_string(s.prob.mode)},
            {"A_min", min_value(s.prob.A)},
            {"A_max", max_value(s.prob.A)},
            {"B_min", min_value(s.prob.B)},
            {"B_max", max_value(s.prob.B)}}}};
}

inline json solver_json(const SolverReport& r) {
  json j = {{"method", r.method},
            {"residual", detail::num(r.residual)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"monotone_ok", r.monotone_ok},
            {"confined_ok", r.confined_ok},
            {"max_order_violation", detail::num(r.max_order_violation)},
            {"shift", detail::num(r.shift)},
            {"lower_bound", detail::num(r.lower_bound)},
            {"warnings", r.warnings}};
  if (!r.solution.empty()) {
    j["min_u"] = min_value(r.solution);
    j["max_u"] = max_value(r.solution);
  }
  if (r.bracket) j["bracket"] = {{"s1", r.bracket->s1}, {"s2", r.bracket->s2}};
  if (r.mountain_pass) {
    const auto& m = *r.mountain_pass;
    j["mountain_pass"] = {{"sobolev_constant", detail::num(m.sobolev_constant)},
                          {"b_norm", detail::num(m.b_norm)},
                          {"r0", detail::num(m.r0)},
                          {"rim", detail::num(m.rim)},
                          {"t0", detail::num(m.t0)},
                          {"t2", detail::num(m.t2)},
                          {"eps0", detail::num(m.eps0)},
                          {"energy_t0", detail::num(m.energy_t0)},
                          {"energy_t2", detail::num(m.energy_t2)},
                          {"energy_r0", detail::num(m.energy_r0)},
                          {"ray_max_energy", detail::num(m.ray_max_energy)},
                          {"pass_level", detail::num(m.pass_level)},
                          {"path_max_energy", detail::num(m.path_max_energy)},
                          {"path_sweeps", m.path_sweeps},
                          {"cond_checked", m.cond_checked},
                          {"rim_geometry", m.rim_geometry},
                          {"level_in_bounds", m.level_in_bounds},
                          {"critical_exponent", m.critical_exponent},
                          {"identity_lhs", detail::num(m.identity_lhs)},
                          {"identity_rhs", detail::num(m.identity_rhs)},
                          {"green_lower_bound", detail::num(m.green_lower_bound)},
                          {"uniform_bound_ok", m.uniform_bound_ok}};
  }
  return j;
}

inline std::string stages_csv(const std::vector<EpsilonStage>& stages) {
  Csv csv({"eps", "min_u", "max_u", "residual", "iterations", "energy", "singular_integral", "source_integral",
           "source_sobolev_bound"});
  for (const auto& s : stages)
    csv.row(s.eps, s.min_u, s.max_u, s.residual, s.iterations, s.energy, s.singular_integral, s.source_integral,
            s.source_sobolev_bound);
  return csv.str();
}

inline std::string history_csv(const SolverReport& r) {
  Csv csv({"iteration", "step", "shift"});
  for (std::size_t k = 0; k < r.step_history.size(); ++k)
    csv.row(k + 1, r.step_history[k], k < r.shift_history.size() ? r.shift_history[k] : r.shift);
  return csv.str();
}

inline MonotoneOptions monotone_options(const ExperimentConfig& c) {
  MonotoneOptions o;
  o.residual_tolerance = c.residual_tolerance;
  o.step_tolerance = c.step_tolerance;
  o.max_iterations = c.max_iterations;
  return o;
}

inline SobolevOptions sobolev_options(const ExperimentConfig& c) {
  SobolevOptions o;
  o.seed = c.seed;
  o.random_starts = c.sobolev_starts;
  return o;
}

inline MountainPassOptions mountain_pass_options(const ExperimentConfig& c) {
  MountainPassOptions o;
  o.eps_schedule = c.mp_eps_schedule;
  o.path_nodes = c.path_nodes;
  o.max_sweeps = c.max_sweeps;
  o.residual_tolerance = c.mp_residual_tolerance;
  o.require_cond = c.require_cond;
  o.sobolev = sobolev_options(c);
  return o;
}

/// Non-existence pre-check for solves of the source problem.
inline std::optional<Outcome> certified_infeasible(const Setup& s) {
  if (s.prob.mode != Nonlinearity::source) return std::nullopt;
  const ConditionReport non = check_nonexistence(*s.op, s.prob);
  if (!non.satisfied) return std::nullopt;
  Outcome o;
  o.exit_code = 1;
  o.status = "infeasible";
  o.result = {{"nonexistence", detail::to_json(non)}};
  return o;
}

inline Outcome action_mountain_pass(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  if (auto inf = certified_infeasible(s)) return *inf;
  const auto opts = mountain_pass_options(c);
  SolverReport r = mountain_pass_solve(*s.op, s.prob, std::nullopt, opts);
  Outcome o;
  o.result["solver"] = solver_json(r);
  o.result["solution"] = out.field("solution", r.solution);
  if (!r.stages.empty()) {
    out.text("stages.csv", stages_csv(r.stages));
    o.result["stages_csv"] = out.rel("stages.csv");
  }
  if (r.mountain_pass) {
    Csv path({"node", "energy"});
    for (std::size_t k = 0; k < r.mountain_pass->path_energies.size(); ++k) path.row(k, r.mountain_pass->path_energies[k]);
    out.text("path.csv", path.str());
    o.result["path_csv"] = out.rel("path.csv");
  }
  if (c.second_solution_eps > 0.0) {
    SecondSolutionReport sec = second_solution_attempt(*s.op, s.prob, r.solution, c.second_solution_eps, opts);
    json js = {{"distinct", sec.distinct},
               {"ordered", sec.ordered},
               {"distance", sec.distance},
               {"bracket", sec.bracket},
               {"notes", sec.notes}};
    if (sec.solver) {
      js["solver"] = solver_json(*sec.solver);
      js["solution"] = out.field("second_solution", sec.solver->solution);
    }
    o.result["second_solution"] = js;
  }
  o.warnings = r.warnings;
  return o;
}

inline Outcome action_solve(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  if (s.prob.mode == Nonlinearity::source) return action_mountain_pass(c, s, out);
  Outcome o;
  SolverReport r;
  if (!c.continuation_schedule.empty()) {
    r = epsilon_continuation(*s.op, s.prob, c.continuation_schedule, monotone_options(c));
    out.text("stages.csv", stages_csv(r.stages));
    o.result["stages_csv"] = out.rel("stages.csv");
  } else {
    r = monotone_solve(*s.op, s.prob, find_sub_super(*s.op, s.prob), monotone_options(c));
    out.text("convergence.csv", history_csv(r));
    o.result["convergence_csv"] = out.rel("convergence.csv");
  }
  o.result["solver"] = solver_json(r);
  o.result["solution"] = out.field("solution", r.solution);
  o.warnings = r.warnings;
  return o;
}

inline Outcome action_flow(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  if (auto inf = certified_infeasible(s)) return *inf;
  const Bracket br = find_sub_super(*s.op, s.prob);
  FlowOptions fo;
  fo.tau = c.tau;
  fo.t_max = c.t_max;
  fo.residual_tolerance = c.residual_tolerance;
  fo.sample_every = c.flow_sample_every;
  FlowReport fr = parabolic_flow(*s.op, s.prob, c.flow_start == "upper" ? br.upper() : br.lower(), fo);
  Csv csv({"time", "residual", "min_u", "max_u", "energy"});
  for (const auto& t : fr.trajectory) csv.row(t.time, t.residual, t.min_u, t.max_u, t.energy);
  out.text("trajectory.csv", csv.str());
  Outcome o;
  o.result = {{"solver", solver_json(fr.solver)},
              {"steady", fr.steady},
              {"final_time", fr.final_time},
              {"final_tau", fr.final_tau},
              {"halvings", fr.halvings},
              {"bracket", {{"s1", br.s1}, {"s2", br.s2}}},
              {"trajectory_csv", out.rel("trajectory.csv")}};
  o.result["solution"] = out.field("solution", fr.solver.solution);
  o.warnings = fr.solver.warnings;
  return o;
}

inline Outcome action_eigen(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  const EigenPair e = principal_eigenpair(*s.op);
  Outcome o;
  o.result = {{"lambda1", e.lambda1},  {"residual", e.residual}, {"iterations", e.iterations},
              {"positive", e.positive}, {"invariant_sign", invariant_sign(*s.op)}};
  o.result["phi1"] = out.field("phi1", e.phi1);
  if (s.op->coercivity_margin(0.0) > 0.0) {
    const PositivityReport pr = positivity_check(*s.op, c.positivity_samples, c.seed);
    o.result["positivity"] = {{"pass", pr.pass},
                              {"min_green", pr.min_green},
                              {"max_green", pr.max_green},
                              {"min_random", pr.min_random},
                              {"max_random", pr.max_random},
                              {"diagnostic", pr.diagnostic}};
  } else {
    o.warnings.push_back("coercivity witness fails; positivity diagnostics skipped");
  }
  return o;
}

inline Outcome action_sobolev(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  const SobolevResult r = sobolev_minimize(*s.op, sobolev_options(c));
  Csv csv({"start", "value", "iterations", "converged"});
  for (const auto& st : r.starts) csv.row(st.label, st.value, st.iterations, st.converged ? 1 : 0);
  out.text("sobolev_starts.csv", csv.str());
  Outcome o;
  o.result = {{"sobolev_constant", r.value}, {"grid_signature", r.grid_signature}, {"starts_csv", out.rel("sobolev_starts.csv")}};
  o.result["minimizer"] = out.field("minimizer", r.minimizer);
  return o;
}

inline Outcome action_check_existence(const ExperimentConfig& c, const Setup& s, OutputDir&) {
  Outcome o;
  if (s.prob.mode == Nonlinearity::absorption) {
    o.result["existence"] = detail::to_json(check_existence_ineq(*s.op, s.prob, principal_eigenpair(*s.op)));
  } else {
    const double S = sobolev_constant(*s.op, sobolev_options(c));
    o.result["existence"] = detail::to_json(check_existence_cond(*s.op, s.prob, std::nullopt, S));
  }
  return o;
}

inline Outcome action_check_nonexistence(const ExperimentConfig&, const Setup& s, OutputDir&) {
  Outcome o;
  o.result["nonexistence"] = detail::to_json(check_nonexistence(*s.op, s.prob));
  return o;
}

inline Outcome action_lambda_star(const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  const double S = sobolev_constant(*s.op, sobolev_options(c));
  LambdaStarOptions lo;
  lo.tolerance = c.lambda_tolerance;
  lo.prescan = c.lambda_prescan;
  lo.mountain_pass = mountain_pass_options(c);
  const LambdaStarResult r = lambda_star_bisect(*s.op, s.prob.p, s.prob.q, S, lo);
  Csv csv({"lambda", "feasible", "residual", "note"});
  for (const auto& p : r.probes) csv.row(p.lambda, p.feasible ? 1 : 0, p.residual, "\"" + p.note + "\"");
  out.text("probes.csv", csv.str());
  Outcome o;
  o.result = {{"lower", detail::num(r.lower)},
              {"upper", detail::num(r.upper)},
              {"empirical", r.empirical ? detail::num(*r.empirical) : json(nullptr)},
              {"interval", {r.interval_lo, r.interval_hi}},
              {"tolerance", r.tolerance},
              {"lower_printed", detail::num(r.lower_printed)},
              {"upper_printed", detail::num(r.upper_printed)},
              {"ingredients", detail::to_json(r.ingredients)},
              {"anomalies", r.anomalies},
              {"probes_csv", out.rel("probes.csv")}};
  o.result["within_bracket"] = r.empirical && *r.empirical >= r.lower && *r.empirical <= r.upper;
  return o;
}

inline Outcome dispatch(const std::string& action, const ExperimentConfig& c, const Setup& s, OutputDir& out) {
  if (action == "solve") return action_solve(c, s, out);
  if (action == "flow") return action_flow(c, s, out);
  if (action == "eigen") return action_eigen(c, s, out);
  if (action == "sobolev") return action_sobolev(c, s, out);
  if (action == "check-existence") return action_check_existence(c, s, out);
  if (action == "check-nonexistence") return action_check_nonexistence(c, s, out);
  if (action == "lambda-star") return action_lambda_star(c, s, out);
  if (action == "mountain-pass") return action_mountain_pass(c, s, out);
  throw InvalidArgument("unknown action " + action);
}

inline ExperimentConfig with_sweep_value(ExperimentConfig c, double v) {
  const std::string& k = c.sweep_key;
  if (k == "A") c.A = {v, {}};
  else if (k == "B") c.B = {v, {}};
  else if (k == "p") c.p = v;
  else if (k == "q") c.q = v;
  else if (k == "R") c.R = v;
  else if (k == "psi_amplitude") c.psi_amplitude = v;
  c.action = c.sweep_action;
  return c;
}

inline json report_envelope(const std::string& action, const json& setup, const Outcome& o) {
  return {{"schema", kReportSchema}, {"action", action},     {"status", o.status}, {"exit_code", o.exit_code},
          {"setup", setup},          {"result", o.result}, {"warnings", o.warnings}};
}

/// One action in its own directory; errors become error.json with exit code 2.
inline Outcome run_cell(const ExperimentConfig& c, const std::string& action, OutputDir& out) {
  try {
    const Setup s = build_setup(c);
    Outcome o = dispatch(action, c, s, out);
    out.json_file("report.json", report_envelope(action, describe_setup(s), o));
    return o;
  } catch (const std::exception& e) {
    Outcome o;
    o.exit_code = 2;
    o.status = "error";
    o.result = error_json(e);
    out.json_file("error.json", o.result);
    return o;
  }
}

inline Outcome action_sweep(const ExperimentConfig& c, OutputDir& out) {
  const std::size_t m = c.sweep_values.size();
  std::vector<Outcome> results(m);
  std::vector<OutputDir> dirs;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) {
    std::ostringstream name;
    name << "cell_" << std::setw(3) << std::setfill('0') << i;
    names.push_back(name.str());
    dirs.push_back(out.child(name.str()));
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < m;) results[i] = run_cell(with_sweep_value(c, c.sweep_values[i]), c.sweep_action, dirs[i]);
  };
  const int nw = std::max(1, std::min<int>(c.workers, static_cast<int>(m)));
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  Csv csv({"index", "value", "status", "exit_code", "residual", "min_u", "max_u", "satisfied", "margin", "directory"});
  json cells = json::array();
  for (std::size_t i = 0; i < m; ++i) {
    const json& r = results[i].result;
    auto pick = [&](const json& j, const char* key) {
      return j.is_object() && j.contains(key) && j[key].is_number() ? j[key].get<double>() : std::nan("");
    };
    const json solver = r.value("solver", json::object());
    json cert = json::object();
    for (const char* k : {"existence", "nonexistence"})
      if (r.contains(k)) cert = r[k];
    const bool sat = cert.is_object() && cert.value("satisfied", false);
    const std::string& dir = names[i];
    csv.row(i, c.sweep_values[i], results[i].status, results[i].exit_code, pick(solver, "residual"),
            pick(solver, "min_u"), pick(solver, "max_u"), sat ? 1 : 0, pick(cert, "margin"), dir);
    cells.push_back({{"index", i}, {"value", c.sweep_values[i]}, {"status", results[i].status},
                     {"exit_code", results[i].exit_code}, {"directory", dir}});
  }
  out.text("sweep.csv", csv.str());
  Outcome o;
  // infeasible cells are results; a failing cell makes the sweep an error
  for (const auto& r : results)
    if (r.exit_code == 2) {
      o.exit_code = 2;
      o.status = "error";
    }
  o.result = {{"sweep_key", c.sweep_key}, {"sweep_action", c.sweep_action}, {"cells", cells}, {"sweep_csv", "sweep.csv"}};
  return o;
}

inline json config_echo(const ExperimentConfig& c) {
  json j = json::object();
  for (const auto& [k, v] : c.echo) j[k] = v;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

/// Runs the configured action under c.out and writes manifest.json last.
inline RunManifest run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  OutputDir out(c.out);
  RunManifest man;
  man.config = config_echo(c);
  Outcome o;
  if (c.action == "sweep") {
    try {
      o = action_sweep(c, out);
      out.json_file("report.json", report_envelope("sweep", json::object(), o));
    } catch (const std::exception& e) {
      o.exit_code = 2;
      o.status = "error";
      out.json_file("error.json", error_json(e));
    }
  } else {
    o = run_cell(c, c.action, out);
  }
  man.exit_code = o.exit_code;
  man.status = o.status;
  // sweep cells wrote through their own OutputDir copies, so list the tree
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out.root()))
    if (entry.is_regular_file()) {
      const std::string rel = fs::relative(entry.path(), out.root()).generic_string();
      if (rel != "manifest.json") files.push_back(rel);
    }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) man.artifacts.push_back({f, fs::file_size(out.root() / f), sha256_file(out.root() / f)});
  man.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.json_file("manifest.json", man.to_json());
  return man;
}

}  // namespace paneitz::cli
