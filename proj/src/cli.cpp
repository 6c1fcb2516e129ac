#include "nsfem/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsfem/coupling.hpp"
#include "nsfem/diagnostics.hpp"
#include "nsfem/errors.hpp"
#include "nsfem/fem.hpp"
#include "nsfem/hamiltonian.hpp"
#include "nsfem/hj_solver.hpp"
#include "nsfem/mesh.hpp"
#include "nsfem/mfg_solver.hpp"

namespace nsfem::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  int n = 8;
  std::string mesh_file;
  std::string hamiltonian;
  double lambda = 1.0;
  std::string manufactured;
  double tol = 1e-10;
  std::string solver = "newton";
  double theta = 0.5;
  int max_iter = 100;
  std::string out;
  std::vector<int> levels;
  std::vector<double> lambdas;
  double r = 4.0;
  std::string coupling = "local:linear";
  std::string m0 = "bump";
  std::string from;
  int samples = 10;
  std::uint64_t seed = 42;
  std::string dump;
  std::string csv;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v)
{
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void require(bool ok, const std::string& key, const std::string& value)
{
  if (!ok) throw UsageError("invalid value for " + key + ": '" + value + "'");
}

void check_positive(double v, const std::string& key)
{
  require(std::isfinite(v) && v > 0.0, key, fmt(v));
}

void check_nonnegative(double v, const std::string& key)
{
  require(std::isfinite(v) && v >= 0.0, key, fmt(v));
}

void check_levels(const std::vector<int>& levels)
{
  std::string text;
  for (int l : levels) text += (text.empty() ? "" : ",") + std::to_string(l);
  require(!levels.empty(), "--levels", text);
  for (std::size_t i = 0; i < levels.size(); ++i)
    require(levels[i] >= 1 && (i == 0 || levels[i] > levels[i - 1]), "--levels", text);
}

void check_solver(const Options& o)
{
  require(o.solver == "newton" || o.solver == "picard", "--solver", o.solver);
  check_positive(o.tol, "--tol");
  require(std::isfinite(o.theta) && o.theta > 0.0 && o.theta <= 1.0, "--theta", fmt(o.theta));
  require(o.max_iter >= 1, "--max-iter", std::to_string(o.max_iter));
}

HamiltonianModel hamiltonian_from(const std::string& spec)
{
  try {
    return parse_hamiltonian(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " (--hamiltonian '" + spec + "')");
  }
}

CouplingModel coupling_from(const std::string& spec)
{
  try {
    return parse_coupling(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " (--coupling '" + spec + "')");
  }
}

std::optional<ManufacturedSolution> manufactured_from(const std::string& name)
{
  if (name.empty() || name == "none") return std::nullopt;
  try {
    return manufactured_by_name(name);
  } catch (const std::invalid_argument&) {
    throw UsageError("unknown manufactured solution '" + name + "'");
  }
}

ScalarField density_from(const std::string& spec)
{
  if (spec == "bump") return bump_field();
  if (spec == "one") return constant_field(1.0);
  if (spec.starts_with("constant:")) {
    const std::string arg = spec.substr(9);
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == arg.size() && !arg.empty() && std::isfinite(c), "--m0", spec);
    return constant_field(c);
  }
  throw UsageError("unknown initial density '" + spec + "' (--m0)");
}

TriMesh mesh_from(int n, const std::string& mesh_file)
{
  if (!mesh_file.empty()) return load_mesh_file(mesh_file);
  require(n >= 1, "--n", std::to_string(n));
  return unit_square_mesh(n);
}

std::vector<double> to_std(const Vector& v)
{
  return {v.data(), v.data() + v.size()};
}

Vector from_json_vector(const json& j)
{
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void emit_json(const json& j, const std::string& path, std::ostream& out)
{
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << j.dump(2) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path)
{
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  file << std::setprecision(17);
  return file;
}

void dump_matrix(const std::filesystem::path& dir, const std::string& name, const SparseMatrix& a)
{
  auto file = open_output(dir / (name + ".mtx"));
  write_matrix_market(file, a);
}

void dump_vector(const std::filesystem::path& dir, const std::string& name, const Vector& v)
{
  auto file = open_output(dir / (name + ".csv"));
  write_vector_csv(file, v);
}

// ---------------------------------------------------------------- mesh-info

int cmd_mesh_info(const Options& o, std::ostream& out)
{
  const TriMesh mesh = mesh_from(o.n, o.mesh_file);
  int boundary = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) boundary += mesh.is_boundary(v) ? 1 : 0;
  out << "vertices=" << mesh.num_vertices() << " triangles=" << mesh.num_triangles() << " h=" << fmt(mesh.mesh_size())
      << " boundary_vertices=" << boundary << " area=" << fmt(mesh.total_area())
      << " min_angle_deg=" << fmt(mesh.min_angle() * 180.0 / std::acos(-1.0)) << '\n';
  return ok;
}

// ---------------------------------------------------------------- solve-hj

int cmd_solve_hj(const Options& o, std::ostream& out)
{
  check_solver(o);
  check_nonnegative(o.lambda, "--lambda");
  const auto start = Clock::now();
  const HamiltonianModel model = hamiltonian_from(o.hamiltonian);
  const auto exact = manufactured_from(o.manufactured);
  auto space = make_space(mesh_from(o.n, o.mesh_file));

  const ScalarField source = exact ? hj_manufactured_source(*exact, model, o.lambda) : constant_field(1.0);
  const HjProblem problem = HjProblem::from_source(space, model, o.lambda, source);
  const Vector u0 = Vector::Zero(space->n_free());
  const SolveReport solve = o.solver == "newton" ? solve_newton(problem, u0, {o.tol, o.max_iter, 10})
                                                 : solve_picard(problem, u0, {o.tol, o.max_iter, o.theta});

  json j;
  j["config"] = {{"command", "solve-hj"},     {"n", o.n},           {"mesh_file", o.mesh_file},
                 {"hamiltonian", o.hamiltonian}, {"lambda", o.lambda}, {"manufactured", exact ? exact->name : "none"},
                 {"solver", o.solver},         {"tol", o.tol},       {"theta", o.theta},
                 {"max_iter", o.max_iter},     {"seed", o.seed}};
  j["h"] = space->h();
  j["dofs"] = space->n_free();
  j["iterations"] = solve.iterations;
  j["residuals"] = solve.residual_history;
  j["converged"] = solve.converged;
  j["message"] = solve.message;
  if (exact) {
    j["err_h1"] = error_vs_exact(*space, solve.solution, exact->value, exact->gradient, {NormKind::H1});
    j["err_l2"] = error_vs_exact(*space, solve.solution, exact->value, exact->gradient, {NormKind::L2});
  } else {
    j["err_h1"] = nullptr;
    j["err_l2"] = nullptr;
  }

  if (!o.dump.empty()) {
    const std::filesystem::path dir(o.dump);
    std::filesystem::create_directories(dir);
    dump_matrix(dir, "stiffness", assemble_stiffness(*space));
    dump_matrix(dir, "mass", assemble_mass(*space));
    dump_matrix(dir, "jacobian", hj_jacobian(problem, solve.solution));
    dump_vector(dir, "load", problem.load());
    dump_vector(dir, "solution", solve.solution);
  }

  j["wall_time_s"] = seconds_since(start);
  emit_json(j, o.out, out);
  if (!o.out.empty()) {
    out << "h=" << fmt(space->h()) << " dofs=" << space->n_free() << " iterations=" << solve.iterations
        << " residual=" << fmt(solve.final_residual()) << " converged=" << (solve.converged ? "true" : "false");
    if (exact) out << " err_h1=" << fmt(j["err_h1"].get<double>()) << " err_l2=" << fmt(j["err_l2"].get<double>());
    out << '\n';
  }
  return solve.converged ? ok : not_converged;
}

// ---------------------------------------------------------------- solve-mfg

struct MfgSetup {
  std::shared_ptr<const FeSpace> space;
  std::unique_ptr<MfgProblem> problem;
  std::optional<ManufacturedSolution> exact;
};

MfgSetup build_mfg(const json& config, std::shared_ptr<const FeSpace> space)
{
  const HamiltonianModel model = hamiltonian_from(config.at("hamiltonian").get<std::string>());
  const CouplingModel coupling = coupling_from(config.at("coupling").get<std::string>());
  const double lambda = config.at("lambda").get<double>();
  check_positive(lambda, "--lambda");
  if (!model.has_hp())
    throw UsageError("--hamiltonian '" + config.at("hamiltonian").get<std::string>() + "' provides no H_p");

  MfgSetup setup;
  setup.space = std::move(space);
  setup.exact = manufactured_from(config.at("manufactured").get<std::string>());
  MfgData data;
  if (setup.exact) {
    if (coupling.kind != CouplingKind::local)
      throw UsageError("--coupling '" + coupling.name + "': manufactured runs need a local coupling");
    data = mfg_manufactured_data(*setup.exact, *setup.exact, model, coupling, lambda);
  } else {
    data.m0 = density_from(config.at("m0").get<std::string>());
  }
  setup.problem = std::make_unique<MfgProblem>(setup.space, model, coupling, lambda, std::move(data));
  return setup;
}

MfgSolveReport solve_mfg_with(const MfgProblem& problem, const json& config)
{
  const std::string solver = config.at("solver").get<std::string>();
  const double tol = config.at("tol").get<double>();
  const int max_iter = config.at("max_iter").get<int>();
  const MfgState start = default_initial_state(problem);
  if (solver == "newton") return mfg_newton(problem, start, {tol, max_iter, 10});
  return mfg_picard(problem, start, {tol, max_iter, config.at("theta").get<double>(), 0.0});
}

int cmd_solve_mfg(const Options& o, std::ostream& out)
{
  check_solver(o);
  const auto start = Clock::now();
  const json config = {{"command", "solve-mfg"},
                       {"n", o.n},
                       {"mesh_file", o.mesh_file},
                       {"hamiltonian", o.hamiltonian},
                       {"coupling", o.coupling},
                       {"lambda", o.lambda},
                       {"m0", o.m0},
                       {"manufactured", o.manufactured.empty() ? "none" : o.manufactured},
                       {"solver", o.solver},
                       {"tol", o.tol},
                       {"theta", o.theta},
                       {"max_iter", o.max_iter},
                       {"seed", o.seed}};
  const MfgSetup setup = build_mfg(config, make_space(mesh_from(o.n, o.mesh_file)));
  const MfgProblem& problem = *setup.problem;
  const MfgSolveReport solve = solve_mfg_with(problem, config);
  const FeSpace& space = *setup.space;

  json j;
  j["config"] = config;
  j["h"] = space.h();
  j["dofs"] = space.n_free();
  j["iterations"] = solve.iterations;
  j["residuals"] = solve.residual_history;
  j["converged"] = solve.converged;
  j["message"] = solve.message;
  if (setup.exact) {
    const auto& ex = *setup.exact;
    const double h1 = error_vs_exact(space, solve.solution.u, ex.value, ex.gradient, {NormKind::H1});
    const double l2 = error_vs_exact(space, solve.solution.m, ex.value, ex.gradient, {NormKind::L2});
    j["err_h1_u"] = h1;
    j["err_l2_m"] = l2;
    j["err_h1xl2"] = h1 + l2;
  }
  j["state"] = {{"u", to_std(solve.solution.u)}, {"m", to_std(solve.solution.m)}};

  if (!o.dump.empty()) {
    const std::filesystem::path dir(o.dump);
    std::filesystem::create_directories(dir);
    const MfgJacobian jac = mfg_jacobian(problem, solve.solution);
    dump_matrix(dir, "stiffness", problem.stiffness());
    dump_matrix(dir, "mass", problem.mass());
    dump_matrix(dir, "jacobian_uu", jac.block_uu());
    dump_matrix(dir, "jacobian_um", jac.block_um());
    dump_matrix(dir, "jacobian_mu", jac.block_mu());
    dump_matrix(dir, "jacobian_mm", jac.block_mm());
    dump_vector(dir, "u", solve.solution.u);
    dump_vector(dir, "m", solve.solution.m);
  }

  j["wall_time_s"] = seconds_since(start);
  emit_json(j, o.out, out);
  if (!o.out.empty()) {
    out << "h=" << fmt(space.h()) << " dofs=" << space.n_free() << " iterations=" << solve.iterations
        << " residual=" << fmt(solve.final_residual()) << " converged=" << (solve.converged ? "true" : "false");
    if (setup.exact) out << " err_h1xl2=" << fmt(j["err_h1xl2"].get<double>());
    out << '\n';
  }
  return solve.converged ? ok : not_converged;
}

// ---------------------------------------------------------------- convergence

void print_rates(const ConvergenceReport& report, std::ostream& out)
{
  for (const auto& row : report.rows) {
    out << "h=" << fmt(row.h) << " dofs=" << row.dofs << " iterations=" << row.iterations;
    for (const auto& [kind, value] : row.errors) out << ' ' << kind << '=' << fmt(value);
    out << '\n';
  }
  for (const auto& [kind, fit] : report.rates)
    out << "rate " << kind << " slope=" << fmt(fit.slope) << " r2=" << fmt(fit.r2) << '\n';
}

int finish_report(ConvergenceReport& report, const Options& o, std::ostream& out)
{
  report.config["seed"] = o.seed;
  report.config["hamiltonian"] = o.hamiltonian;
  if (!o.csv.empty()) {
    auto file = open_output(o.csv);
    report.write_csv(file);
  }
  if (!o.out.empty()) {
    emit_json(report.to_json(), o.out, out);
    print_rates(report, out);
  } else {
    emit_json(report.to_json(), "", out);
  }
  return report.all_converged() ? ok : not_converged;
}

int cmd_convergence_hj(const Options& o, std::ostream& out)
{
  check_solver(o);
  check_levels(o.levels);
  check_nonnegative(o.lambda, "--lambda");
  const HamiltonianModel model = hamiltonian_from(o.hamiltonian);
  const auto exact = manufactured_from(o.manufactured);
  if (!exact) throw UsageError("convergence-hj needs --manufactured");
  HjStudyConfig config;
  config.levels = o.levels;
  config.lambda = o.lambda;
  config.solver = o.solver;
  config.tol = o.tol;
  config.max_iter = o.max_iter;
  config.theta = o.theta;
  ConvergenceReport report = convergence_study_hj(model, *exact, config);
  return finish_report(report, o, out);
}

int cmd_convergence_mfg(const Options& o, std::ostream& out)
{
  check_solver(o);
  check_levels(o.levels);
  check_positive(o.lambda, "--lambda");
  require(std::isfinite(o.r) && o.r >= 2.0 && o.r <= 6.0, "--r", fmt(o.r));
  const HamiltonianModel model = hamiltonian_from(o.hamiltonian);
  const CouplingModel coupling = coupling_from(o.coupling);
  if (!model.has_hp()) throw UsageError("--hamiltonian '" + o.hamiltonian + "' provides no H_p");
  if (coupling.kind != CouplingKind::local)
    throw UsageError("--coupling '" + o.coupling + "': manufactured runs need a local coupling");
  const auto exact = manufactured_from(o.manufactured);
  if (!exact) throw UsageError("convergence-mfg needs --manufactured");
  MfgStudyConfig config;
  config.levels = o.levels;
  config.lambda = o.lambda;
  config.r = o.r;
  config.solver = o.solver;
  config.tol = o.tol;
  config.max_iter = o.max_iter;
  config.theta = o.theta;
  ConvergenceReport report = convergence_study_mfg(model, coupling, *exact, *exact, config);
  report.config["coupling"] = o.coupling;
  return finish_report(report, o, out);
}

// ---------------------------------------------------------------- diagnose-stability

int cmd_diagnose_stability(const Options& o, std::ostream& out)
{
  require(!o.from.empty(), "--from", o.from);
  require(o.samples >= 1, "--samples", std::to_string(o.samples));
  if (!o.levels.empty()) check_levels(o.levels);
  for (double l : o.lambdas) require(l > 0.0 && std::isfinite(l), "--lambdas", fmt(l));
  std::ifstream in(o.from);
  if (!in) throw UsageError("cannot read --from file '" + o.from + "'");
  json saved;
  try {
    in >> saved;
  } catch (const json::exception& e) {
    throw UsageError("--from file '" + o.from + "' is not valid JSON: " + e.what());
  }
  if (!saved.contains("config") || !saved.contains("state"))
    throw UsageError("--from file '" + o.from + "' is not a solve-mfg report");
  const json& config = saved["config"];

  StabilityScanOptions options;
  options.samples = o.samples;
  options.seed = o.seed;
  options.lambdas = o.lambdas;
  StabilityScanReport scan;
  bool converged = true;
  if (o.levels.empty()) {
    const MfgSetup setup = build_mfg(
        config, make_space(mesh_from(config.at("n").get<int>(), config.at("mesh_file").get<std::string>())));
    MfgState state{from_json_vector(saved["state"].at("u")), from_json_vector(saved["state"].at("m"))};
    if (state.u.size() != setup.space->n_free() || state.m.size() != setup.space->n_free())
      throw UsageError("state in '" + o.from + "' does not match its mesh");
    scan.append(stability_scan(*setup.problem, state, options));
  } else {
    for (int n : o.levels) {
      const MfgSetup setup = build_mfg(config, make_space(unit_square_mesh(n)));
      const MfgSolveReport solve = solve_mfg_with(*setup.problem, config);
      converged = converged && solve.converged;
      scan.append(stability_scan(*setup.problem, solve.solution, options));
    }
  }

  std::ostringstream csv;
  // the lambda column only appears for a lambda scan
  const bool with_lambda = !o.lambdas.empty();
  csv << std::setprecision(17) << "h,sample,smin" << (with_lambda ? ",lambda" : "") << '\n';
  for (const auto& row : scan.rows) {
    csv << row.h << ',' << row.sample << ',' << row.smin;
    if (with_lambda) csv << ',' << row.lambda;
    csv << '\n';
  }
  if (o.out.empty()) {
    out << csv.str();
  } else {
    auto file = open_output(o.out);
    file << csv.str();
  }
  for (std::size_t i = 0; i < scan.level_h.size(); ++i)
    out << "level h=" << fmt(scan.level_h[i]) << " min_smin=" << fmt(scan.level_min[i])
        << " kink_elements=" << scan.kink_elements[i] << '\n';
  out << "min_smin=" << fmt(scan.min_smin) << " ratio=" << fmt(scan.ratio) << '\n';
  return converged ? ok : not_converged;
}

// ---------------------------------------------------------------- wiring

void add_mesh_options(CLI::App* sub, Options& o)
{
  sub->add_option("--n", o.n, "cells per side of the unit square mesh")->capture_default_str();
  sub->add_option("--mesh-file", o.mesh_file, "plain-text mesh overriding the unit square");
}

void add_solver_options(CLI::App* sub, Options& o)
{
  sub->add_option("--solver", o.solver, "newton or picard")->capture_default_str();
  sub->add_option("--tol", o.tol, "residual tolerance")->capture_default_str();
  sub->add_option("--theta", o.theta, "Picard relaxation")->capture_default_str();
  sub->add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
}

void add_common(CLI::App* sub, Options& o)
{
  sub->add_option("--seed", o.seed, "seed for randomized components")->capture_default_str();
  sub->add_option("--out", o.out, "output file (stdout when absent)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Finite element solver for viscous Hamilton-Jacobi equations and stationary mean field games", "nsfem"};
  app.require_subcommand(1);

  Options mesh_o, hj_o, mfg_o, chj_o, cmfg_o, stab_o;
  hj_o.n = 32;
  hj_o.hamiltonian = chj_o.hamiltonian = "eikonal";
  hj_o.manufactured = chj_o.manufactured = "sinsin";
  mfg_o.n = 32;
  mfg_o.hamiltonian = cmfg_o.hamiltonian = "huber:1.0";
  mfg_o.tol = cmfg_o.tol = 1e-9;
  mfg_o.manufactured = "none";
  cmfg_o.manufactured = "sinsin";
  chj_o.levels = cmfg_o.levels = {8, 16, 32, 64};

  auto* mesh = app.add_subcommand("mesh-info", "print mesh statistics");
  add_mesh_options(mesh, mesh_o);

  auto* hj = app.add_subcommand("solve-hj", "solve one viscous Hamilton-Jacobi problem");
  add_mesh_options(hj, hj_o);
  add_solver_options(hj, hj_o);
  add_common(hj, hj_o);
  hj->add_option("--hamiltonian", hj_o.hamiltonian, "zero | eikonal | huber[:delta] | maxaffine:file")
      ->capture_default_str();
  hj->add_option("--lambda", hj_o.lambda, "reaction coefficient")->capture_default_str();
  hj->add_option("--manufactured", hj_o.manufactured, "sinsin, or none for f = 1")->capture_default_str();
  hj->add_option("--dump-system", hj_o.dump, "directory for MatrixMarket / CSV dumps");

  auto* mfg = app.add_subcommand("solve-mfg", "solve one stationary mean field game");
  add_mesh_options(mfg, mfg_o);
  add_solver_options(mfg, mfg_o);
  add_common(mfg, mfg_o);
  mfg->add_option("--hamiltonian", mfg_o.hamiltonian, "Hamiltonian with H_p")->capture_default_str();
  mfg->add_option("--coupling", mfg_o.coupling, "zero | local:linear[:c] | local:arctan | nonlocal:...")
      ->capture_default_str();
  mfg->add_option("--lambda", mfg_o.lambda, "reaction coefficient")->capture_default_str();
  mfg->add_option("--m0", mfg_o.m0, "bump | one | constant:c")->capture_default_str();
  mfg->add_option("--manufactured", mfg_o.manufactured, "sinsin or none")->capture_default_str();
  mfg->add_option("--dump-system", mfg_o.dump, "directory for MatrixMarket / CSV dumps");

  auto* chj = app.add_subcommand("convergence-hj", "manufactured convergence study, Hamilton-Jacobi");
  add_solver_options(chj, chj_o);
  add_common(chj, chj_o);
  chj->add_option("--levels", chj_o.levels, "mesh levels, e.g. 8,16,32")->delimiter(',')->capture_default_str();
  chj->add_option("--hamiltonian", chj_o.hamiltonian, "Hamiltonian spec")->capture_default_str();
  chj->add_option("--lambda", chj_o.lambda, "reaction coefficient")->capture_default_str();
  chj->add_option("--manufactured", chj_o.manufactured, "manufactured solution")->capture_default_str();
  chj->add_option("--csv", chj_o.csv, "also write the rows as CSV");

  auto* cmfg = app.add_subcommand("convergence-mfg", "manufactured convergence study, mean field game");
  add_solver_options(cmfg, cmfg_o);
  add_common(cmfg, cmfg_o);
  cmfg->add_option("--levels", cmfg_o.levels, "mesh levels")->delimiter(',')->capture_default_str();
  cmfg->add_option("--hamiltonian", cmfg_o.hamiltonian, "Hamiltonian with H_p")->capture_default_str();
  cmfg->add_option("--coupling", cmfg_o.coupling, "local coupling")->capture_default_str();
  cmfg->add_option("--lambda", cmfg_o.lambda, "reaction coefficient")->capture_default_str();
  cmfg->add_option("--manufactured", cmfg_o.manufactured, "manufactured solution")->capture_default_str();
  cmfg->add_option("--r", cmfg_o.r, "exponent of the W1r x Lr error")->capture_default_str();
  cmfg->add_option("--csv", cmfg_o.csv, "also write the rows as CSV");

  auto* stab = app.add_subcommand("diagnose-stability", "scan discrete stability constants of an MFG solution");
  add_common(stab, stab_o);
  stab->add_option("--from", stab_o.from, "solve-mfg JSON report")->required();
  stab->add_option("--samples", stab_o.samples, "selection samples per level")->capture_default_str();
  stab->add_option("--levels", stab_o.levels, "re-solve on these unit square levels")->delimiter(',');
  stab->add_option("--lambdas", stab_o.lambdas, "lambda grid for the linearisation")->delimiter(',');

  auto* self = app.add_subcommand("selftest", "run closed-form checks");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << '\n';
    return usage_error;
  }

  try {
    if (mesh->parsed()) return cmd_mesh_info(mesh_o, out);
    if (hj->parsed()) return cmd_solve_hj(hj_o, out);
    if (mfg->parsed()) return cmd_solve_mfg(mfg_o, out);
    if (chj->parsed()) return cmd_convergence_hj(chj_o, out);
    if (cmfg->parsed()) return cmd_convergence_mfg(cmfg_o, out);
    if (stab->parsed()) return cmd_diagnose_stability(stab_o, out);
    if (self->parsed()) return run_selftest(out) == 0 ? ok : usage_error;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return not_converged;
  } catch (const NonFiniteError& e) {
    err << "solver failure: " << e.what() << '\n';
    return not_converged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  }
  return usage_error;
}

}  // namespace nsfem::cli
