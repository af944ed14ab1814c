// hexpde: finite element toolkit for the 3D Poisson problem on hexahedral
// meshes. Subcommands: mesh, solve, estimate, amg-stats, convergence, export.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hexpde/hexpde.hpp"

namespace {

using namespace hexpde;

struct RunConfig {
  std::string problem = "cube";
  std::string domain = "cube";
  std::int32_t n = 8;
  std::int32_t level = 2;
  double eps = 0.01;
  std::string degree = "q1";
  std::string solver = "direct";
  double tol = 1e-10;
  int maxit = 0;
  std::string strategy = "q2rh";
  std::string boundary_correction = "off";
  int threads = 0;
  unsigned seed = 0;  // recorded for reproducibility bookkeeping
  bool large = false;
};

int degree_of(const std::string& s) {
  if (s == "q1") return 1;
  if (s == "q2") return 2;
  throw std::runtime_error("--degree must be q1 or q2");
}

EstimationStrategy strategy_of(const std::string& s) {
  if (s == "q2h") return EstimationStrategy::q2h;
  if (s == "q2rh") return EstimationStrategy::q2rh;
  if (s == "q1h2") return EstimationStrategy::q1h2;
  if (s == "q1rh2") return EstimationStrategy::q1rh2;
  throw std::runtime_error("unknown strategy: " + s);
}

bool correction_of(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw std::runtime_error("--boundary-correction must be on or off");
}

std::int32_t mesh_parameter(const ProblemSpec& p, const RunConfig& cfg) {
  return p.domain == DomainTag::borehole ? cfg.level : cfg.n;
}

HexMesh build_mesh_for(const ProblemSpec& p, const RunConfig& cfg) {
  return p.build_mesh(mesh_parameter(p, cfg), cfg.eps);
}

void guard_problem_size(const DofMap& dofs, bool large) {
  if (!large && dofs.n_dofs > 3'000'000)
    throw std::runtime_error(
        "problem exceeds 3e6 unknowns; pass --large to proceed");
}

struct Pipeline {
  ProblemSpec problem;
  HexMesh mesh;
  DiscreteSystem sys;
  SolverRun run;
};

Pipeline solve_pipeline(const RunConfig& cfg) {
  Pipeline p{builtin_problem(cfg.problem), {}, {}, {}};
  p.problem.default_eps = cfg.eps;
  p.mesh = build_mesh_for(p.problem, cfg);
  const int degree = degree_of(cfg.degree);
  p.sys = assemble_poisson(p.mesh, degree, p.problem.source, cfg.threads);
  guard_problem_size(p.sys.dofs, cfg.large);
  impose_dirichlet(p.sys, p.problem.boundary_value);
  p.run = run_solver(p.sys, parse_solver(cfg.solver), cfg.tol, cfg.maxit);
  return p;
}

void add_common(CLI::App* cmd, RunConfig& cfg, bool with_problem = true) {
  if (with_problem)
    cmd->add_option("--problem", cfg.problem,
                    "cube | staircase | borehole | manufactured");
  cmd->add_option("--n", cfg.n, "elements per axis");
  cmd->add_option("--level", cfg.level, "borehole refinement level (2..5)");
  cmd->add_option("--eps", cfg.eps, "borehole hole half-width");
  cmd->add_option("--threads", cfg.threads,
                  "worker threads (default: HEXPDE_THREADS or all cores)");
  cmd->add_option("--seed", cfg.seed, "rng seed recorded with outputs");
  cmd->add_flag("--large", cfg.large, "allow systems beyond 3e6 unknowns");
}

void print_solve_summary(const Pipeline& p, const RunConfig& cfg) {
  const double energy = energy_norm_sq(p.sys, p.run.report.solution);
  std::printf("problem=%s dofs=%d solver=%s iterations=%d converged=%s "
              "energy_sq=%.7f",
              cfg.problem.c_str(), p.sys.n(), cfg.solver.c_str(),
              p.run.report.iterations,
              p.run.report.converged ? "yes" : "no", energy);
  if (p.problem.reference_energy_sq)
    std::printf(" error=%.6f",
                galerkin_error(*p.problem.reference_energy_sq, energy));
  if (p.mesh.domain_tag == DomainTag::borehole)
    std::printf(" aspect=%.4g", max_aspect_ratio(p.mesh));
  std::printf("\n");
}

int run_mesh(RunConfig& cfg, const std::string& out) {
  HexMesh mesh;
  if (cfg.domain == "cube")
    mesh = build_cube_mesh(cfg.n);
  else if (cfg.domain == "staircase")
    mesh = build_staircase_mesh(cfg.n);
  else if (cfg.domain == "borehole")
    mesh = build_borehole_mesh(cfg.level, cfg.eps);
  else
    throw std::runtime_error("unknown domain: " + cfg.domain);
  save_mesh_binary(mesh, out);
  save_mesh_text(mesh, out + ".txt");
  std::printf("domain=%s nodes=%lld elements=%lld boundary_faces=%zu "
              "volume=%.12g wrote=%s\n",
              cfg.domain.c_str(), static_cast<long long>(mesh.n_nodes()),
              static_cast<long long>(mesh.n_elements()),
              mesh.boundary_faces.size(), total_volume(mesh), out.c_str());
  return 0;
}

int run_solve(RunConfig& cfg, const std::string& export_mm,
              const std::string& residuals, const std::string& vtk) {
  const Pipeline p = solve_pipeline(cfg);
  if (!export_mm.empty()) write_matrix_market(p.sys.matrix, export_mm);
  if (!residuals.empty())
    write_residual_csv(p.run.report.residual_history, residuals);
  if (!vtk.empty())
    export_vtk(p.mesh,
               dof_values_by_node(p.mesh, p.sys.dofs, p.run.report.solution),
               {}, vtk);
  print_solve_summary(p, cfg);
  return p.run.report.converged ? 0 : 2;
}

int run_estimate(RunConfig& cfg, double ref_energy, const std::string& vtk,
                 const std::string& csv) {
  if (degree_of(cfg.degree) != 1)
    throw std::runtime_error("estimation requires Q1 approximation");
  const Pipeline p = solve_pipeline(cfg);
  const EstimationStrategy strategy = strategy_of(cfg.strategy);
  const bool correction = correction_of(cfg.boundary_correction);
  const ErrorEstimate est =
      estimate(p.mesh, p.sys, p.run.report.solution, p.problem.source,
               strategy, correction, cfg.threads);
  const double energy = energy_norm_sq(p.sys, p.run.report.solution);
  std::printf("problem=%s strategy=%s correction=%s eta=%.6f",
              cfg.problem.c_str(), cfg.strategy.c_str(),
              correction ? "on" : "off", est.global);
  std::optional<double> reference;
  if (ref_energy > 0.0)
    reference = ref_energy;
  else if (p.problem.reference_energy_sq)
    reference = *p.problem.reference_energy_sq;
  if (reference)
    std::printf(" theta=%.4f", effectivity(est.global, *reference, energy));
  std::printf("\n");
  if (!vtk.empty())
    export_vtk(p.mesh,
               dof_values_by_node(p.mesh, p.sys.dofs, p.run.report.solution),
               est.per_element, vtk);
  if (!csv.empty()) write_indicator_csv(est.per_element, csv);
  return 0;
}

int run_amg_stats(RunConfig& cfg, double theta, const std::string& csv) {
  const ProblemSpec problem = builtin_problem(cfg.problem);
  const HexMesh mesh = build_mesh_for(problem, cfg);
  DiscreteSystem sys = assemble_poisson(mesh, degree_of(cfg.degree),
                                        problem.source, cfg.threads);
  guard_problem_size(sys.dofs, cfg.large);
  impose_dirichlet(sys, problem.boundary_value);
  AmgParams params;
  params.theta_s = theta;
  const AmgHierarchy h = setup(sys.matrix, params);
  const AmgMetrics m = metrics(h);
  std::printf("%6s %10s %14s %10s\n", "level", "n", "nnz", "stencil");
  for (int l = 0; l < h.levels(); ++l) {
    const SparseMatrix& op = h.operators[l];
    std::printf("%6d %10d %14lld %10.2f\n", l + 1, op.n(),
                static_cast<long long>(op.nnz()),
                static_cast<double>(op.nnz()) / op.n());
  }
  std::printf("L=%d c_G=%.4f c_A=%.4f c_S=%.2f c_1=%.2f\n", m.levels,
              m.grid_complexity, m.operator_complexity, m.avg_stencil,
              m.fine_stencil);
  if (!csv.empty()) {
    auto out = open_csv(csv);
    out << "level,n,nnz\n";
    for (int l = 0; l < h.levels(); ++l)
      out << l + 1 << "," << h.operators[l].n() << "," << h.operators[l].nnz()
          << "\n";
  }
  return 0;
}

int run_convergence(RunConfig& cfg, int levels, const std::string& estimates,
                    const std::string& csv) {
  const ProblemSpec problem = builtin_problem(cfg.problem);
  const int degree = degree_of(cfg.degree);
  std::vector<std::int32_t> ns;
  const std::int32_t n0 =
      problem.domain == DomainTag::borehole ? 2 : (degree == 1 ? 8 : 4);
  for (int l = 0; l < levels; ++l)
    ns.push_back(problem.domain == DomainTag::borehole ? n0 + l : n0 << l);

  std::vector<EstimationStrategy> strategies;
  std::vector<std::string> names;
  if (!estimates.empty()) {
    std::stringstream ss(estimates);
    std::string item;
    while (std::getline(ss, item, ',')) {
      strategies.push_back(strategy_of(item));
      names.push_back(item);
    }
  }
  const bool correction = correction_of(cfg.boundary_correction);
  const auto rows =
      convergence_study(problem, degree, ns, parse_solver(cfg.solver),
                        strategies, correction, cfg.tol, cfg.threads,
                        cfg.maxit);

  std::printf("%10s %8s %9s %12s %10s %7s", "n_e", "h", "dofs", "energy_sq",
              "error", "ratio");
  for (const auto& name : names)
    std::printf(" %10s %8s", ("eta_" + name).c_str(), "theta");
  std::printf("\n");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::printf("%10lld %8.4f %9d %12.7f",
                static_cast<long long>(row.n_elements), row.h, row.n_dofs,
                row.energy_sq);
    if (std::isnan(row.error))
      std::printf(" %10s %7s", "-", "-");
    else if (r == 0 || std::isnan(rows[r - 1].error))
      std::printf(" %10.6f %7s", row.error, "-");
    else
      std::printf(" %10.6f %7.3f", row.error, rows[r - 1].error / row.error);
    for (std::size_t s = 0; s < row.eta.size(); ++s) {
      std::printf(" %10.6f", row.eta[s]);
      if (s < row.theta.size())
        std::printf(" %8.4f", row.theta[s]);
      else
        std::printf(" %8s", "-");
    }
    if (!row.solver_converged) std::printf("  [solver did not converge]");
    std::printf("\n");
  }
  if (!csv.empty()) {
    auto out = open_csv(csv);
    out << "n_e,h,dofs,energy_sq,error";
    for (const auto& name : names) out << ",eta_" << name << ",theta_" << name;
    out << "\n";
    for (const auto& row : rows) {
      out << row.n_elements << "," << row.h << "," << row.n_dofs << ","
          << row.energy_sq << ",";
      if (!std::isnan(row.error)) out << row.error;
      for (std::size_t s = 0; s < row.eta.size(); ++s) {
        out << "," << row.eta[s] << ",";
        if (s < row.theta.size()) out << row.theta[s];
      }
      out << "\n";
    }
  }
  return 0;
}

int run_export(RunConfig& cfg, const std::string& vtk,
               const std::string& line_axis, const std::string& at,
               int samples, const std::string& line_csv,
               const std::string& estimate_name) {
  const Pipeline p = solve_pipeline(cfg);
  std::vector<double> cell_data;
  if (!estimate_name.empty()) {
    if (degree_of(cfg.degree) != 1)
      throw std::runtime_error("estimation requires Q1 approximation");
    const ErrorEstimate est = estimate(
        p.mesh, p.sys, p.run.report.solution, p.problem.source,
        strategy_of(estimate_name), correction_of(cfg.boundary_correction),
        cfg.threads);
    cell_data = est.per_element;
  }
  if (!vtk.empty())
    export_vtk(p.mesh,
               dof_values_by_node(p.mesh, p.sys.dofs, p.run.report.solution),
               cell_data, vtk);
  if (!line_axis.empty()) {
    if (line_axis != "x" && line_axis != "y" && line_axis != "z")
      throw std::runtime_error("--line must be x, y or z");
    const int axis = line_axis == "x" ? 0 : line_axis == "y" ? 1 : 2;
    std::array<double, 2> fixed{0.0, 0.0};
    if (std::sscanf(at.c_str(), "%lf,%lf", &fixed[0], &fixed[1]) != 2)
      throw std::runtime_error("--at expects two comma-separated coordinates");
    const auto rows = line_sample(p.mesh, p.sys.dofs, p.run.report.solution,
                                  axis, fixed, samples);
    if (!line_csv.empty()) write_line_csv(rows, line_csv);
  }
  print_solve_summary(p, cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite element toolkit for the 3D Poisson problem on "
               "hexahedral meshes"};
  app.require_subcommand(1);
  app.set_config("--config");

  RunConfig cfg;
  std::string out = "mesh.hexmesh", export_mm, residuals, vtk, csv;
  std::string estimates, line_axis, at = "0,0", line_csv, estimate_name;
  double ref_energy = 0.0, theta = 0.25;
  int levels = 3, samples = 101;

  CLI::App* mesh = app.add_subcommand("mesh", "generate and store a mesh");
  mesh->add_option("--domain", cfg.domain, "cube | staircase | borehole")
      ->required();
  add_common(mesh, cfg, /*with_problem=*/false);
  mesh->add_option("--out", out, "output path (binary; .txt companion)");

  CLI::App* solve = app.add_subcommand("solve", "assemble and solve");
  add_common(solve, cfg);
  solve->add_option("--degree", cfg.degree, "q1 | q2");
  solve->add_option("--solver", cfg.solver,
                    "direct | minres-ic0 | minres-amg");
  solve->add_option("--tol", cfg.tol, "iterative stopping tolerance");
  solve->add_option("--maxit", cfg.maxit, "iteration cap (0 = default)");
  solve->add_option("--export-mm", export_mm, "Matrix Market output path");
  solve->add_option("--residuals", residuals, "residual history CSV");
  solve->add_option("--vtk", vtk, "solution VTK output");

  CLI::App* est = app.add_subcommand("estimate", "a posteriori estimation");
  add_common(est, cfg);
  est->add_option("--degree", cfg.degree, "q1 (estimation input)");
  est->add_option("--solver", cfg.solver, "direct | minres-ic0 | minres-amg");
  est->add_option("--tol", cfg.tol, "iterative stopping tolerance");
  est->add_option("--strategy", cfg.strategy, "q2h | q2rh | q1h2 | q1rh2");
  est->add_option("--boundary-correction", cfg.boundary_correction,
                  "on | off");
  est->add_option("--ref-energy", ref_energy,
                  "reference energy ||u_ref||^2_E for effectivity");
  est->add_option("--vtk", vtk, "solution + indicator VTK output");
  est->add_option("--csv", csv, "per-element indicator CSV");

  CLI::App* amg = app.add_subcommand("amg-stats", "AMG hierarchy diagnostics");
  add_common(amg, cfg);
  amg->add_option("--degree", cfg.degree, "q1 | q2");
  amg->add_option("--theta", theta, "strength threshold");
  amg->add_option("--csv", csv, "per-level CSV");

  CLI::App* conv = app.add_subcommand("convergence", "refinement study");
  add_common(conv, cfg);
  conv->add_option("--degree", cfg.degree, "q1 | q2");
  conv->add_option("--solver", cfg.solver, "direct | minres-ic0 | minres-amg");
  conv->add_option("--tol", cfg.tol, "iterative stopping tolerance");
  conv->add_option("--maxit", cfg.maxit, "iteration cap (0 = default)");
  conv->add_option("--levels", levels, "number of refinement rows");
  conv->add_option("--estimate", estimates,
                   "comma-separated strategies, e.g. q2rh,q1h2");
  conv->add_option("--boundary-correction", cfg.boundary_correction,
                   "on | off");
  conv->add_option("--csv", csv, "study CSV");

  CLI::App* exp = app.add_subcommand("export", "VTK / line-sample export");
  add_common(exp, cfg);
  exp->add_option("--degree", cfg.degree, "q1 | q2");
  exp->add_option("--solver", cfg.solver, "direct | minres-ic0 | minres-amg");
  exp->add_option("--tol", cfg.tol, "iterative stopping tolerance");
  exp->add_option("--vtk", vtk, "solution VTK output");
  exp->add_option("--estimate", estimate_name, "cell data strategy");
  exp->add_option("--boundary-correction", cfg.boundary_correction,
                  "on | off");
  exp->add_option("--line", line_axis, "sample axis: x | y | z");
  exp->add_option("--at", at, "fixed coordinates of the line, e.g. 0.5,0");
  exp->add_option("--samples", samples, "sample count");
  exp->add_option("--line-csv", line_csv, "line sample CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh->parsed()) return run_mesh(cfg, out);
    if (solve->parsed()) return run_solve(cfg, export_mm, residuals, vtk);
    if (est->parsed()) return run_estimate(cfg, ref_energy, vtk, csv);
    if (amg->parsed()) return run_amg_stats(cfg, theta, csv);
    if (conv->parsed()) return run_convergence(cfg, levels, estimates, csv);
    if (exp->parsed())
      return run_export(cfg, vtk, line_axis, at, samples, line_csv,
                        estimate_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
