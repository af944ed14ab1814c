#pragma once

// Built-in reference problems (unit source on the cube, staircase and
// borehole domains, plus the manufactured triquadratic solution), reference
// energies, the Galerkin-orthogonality error identity and the convergence
// study driver behind the tables the CLI prints.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hexpde/amg.hpp"
#include "hexpde/assembly.hpp"
#include "hexpde/error_estimation.hpp"
#include "hexpde/mesh.hpp"
#include "hexpde/solvers.hpp"

namespace hexpde {

struct ProblemSpec {
  std::string name;
  DomainTag domain = DomainTag::cube;
  ScalarField source;
  ScalarField boundary_value;
  ScalarField exact_solution;  // empty unless manufactured
  std::optional<double> reference_energy_sq;
  double default_eps = 0.01;  // borehole hole half-width

  // n is the per-axis element count (refinement level for the borehole).
  HexMesh build_mesh(std::int32_t n, double eps = -1.0) const {
    switch (domain) {
      case DomainTag::cube:
        return build_cube_mesh(n);
      case DomainTag::staircase:
        return build_staircase_mesh(n);
      case DomainTag::borehole:
        return build_borehole_mesh(n, eps > 0.0 ? eps : default_eps);
      default:
        throw std::invalid_argument("ProblemSpec: no mesh for custom domain");
    }
  }

  double mesh_width(std::int32_t n) const {
    if (domain == DomainTag::borehole)
      return default_eps / (1 << (n - 2));  // h_min at refinement level n
    return 2.0 / n;
  }
};

// The four built-in problems. The cube, staircase and borehole cases solve
// -lap u = 1 with u = 0 on the boundary; the manufactured case forces the
// exact solution u = (1-x^2)(1-y^2)(1-z^2), whose energy 2048/225 follows
// analytically.
inline ProblemSpec builtin_problem(const std::string& id) {
  ProblemSpec p;
  p.name = id;
  p.source = [](double, double, double) { return 1.0; };
  p.boundary_value = [](double, double, double) { return 0.0; };
  if (id == "cube") {
    p.domain = DomainTag::cube;
    p.reference_energy_sq = 0.64539192;
  } else if (id == "staircase") {
    p.domain = DomainTag::staircase;
    p.reference_energy_sq = 0.2967206;
  } else if (id == "borehole") {
    p.domain = DomainTag::borehole;
  } else if (id == "manufactured") {
    p.domain = DomainTag::cube;
    p.source = [](double x, double y, double z) {
      const double qx = 1.0 - x * x, qy = 1.0 - y * y, qz = 1.0 - z * z;
      return 2.0 * (qy * qz + qx * qz + qx * qy);
    };
    p.exact_solution = [](double x, double y, double z) {
      return (1.0 - x * x) * (1.0 - y * y) * (1.0 - z * z);
    };
    p.reference_energy_sq = 2048.0 / 225.0;
  } else {
    throw std::invalid_argument("unknown problem id: " + id);
  }
  return p;
}

// ||u_ref - u_h||_E from Galerkin orthogonality:
// error^2 = ||u_ref||^2_E - ||u_h||^2_E.
inline double galerkin_error(double reference_energy_sq, double energy_sq) {
  const double diff = reference_energy_sq - energy_sq;
  const double slack =
      1e-12 * std::max(1.0, std::abs(reference_energy_sq));
  if (diff < -slack)
    throw std::invalid_argument(
        "galerkin_error: computed energy exceeds the reference energy");
  return std::sqrt(std::max(0.0, diff));
}

enum class SolverChoice { direct, minres_ic0, minres_amg };

inline SolverChoice parse_solver(const std::string& s) {
  if (s == "direct") return SolverChoice::direct;
  if (s == "minres-ic0") return SolverChoice::minres_ic0;
  if (s == "minres-amg") return SolverChoice::minres_amg;
  throw std::invalid_argument("unknown solver: " + s);
}

// Runs the configured solver on an imposed system; the AMG hierarchy (when
// used) is set up internally and its metrics returned alongside.
struct SolverRun {
  SolveReport report;
  std::optional<AmgMetrics> amg_metrics;
};

inline SolverRun run_solver(const DiscreteSystem& sys, SolverChoice choice,
                            double tol = 1e-10, int maxit = 0,
                            const AmgParams& amg_params = {}) {
  SolverRun run;
  switch (choice) {
    case SolverChoice::direct:
      run.report = direct_solve(sys);
      break;
    case SolverChoice::minres_ic0: {
      const auto factor = ic0_with_retry(sys.matrix);
      run.report = minres(
          sys.matrix, sys.rhs,
          [factor](std::span<const double> r, std::span<double> z) {
            factor->apply(r, z);
          },
          tol, maxit);
      break;
    }
    case SolverChoice::minres_amg: {
      const AmgHierarchy hierarchy = setup(sys.matrix, amg_params);
      run.report =
          minres(sys.matrix, sys.rhs, as_preconditioner(hierarchy), tol, maxit);
      run.amg_metrics = metrics(hierarchy);
      break;
    }
  }
  return run;
}

struct ConvergenceRow {
  std::int64_t n_elements = 0;
  std::int32_t n = 0;  // per-axis count (or borehole level)
  double h = 0.0;
  std::int32_t n_dofs = 0;
  double energy_sq = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  bool solver_converged = true;
  int iterations = 0;
  std::vector<double> eta;    // one per requested strategy
  std::vector<double> theta;  // effectivities, when a reference is available
};

// Mesh -> assemble -> solve -> (estimate) per refinement level. Levels are
// per-axis element counts; Q1 studies conventionally start at n = 8 and Q2
// at n = 4, doubling per row. Solver failures are flagged on the row rather
// than thrown.
inline std::vector<ConvergenceRow> convergence_study(
    const ProblemSpec& problem, int degree, std::span<const std::int32_t> levels,
    SolverChoice solver, std::span<const EstimationStrategy> strategies,
    bool boundary_correction = false, double tol = 1e-10, int threads = 0,
    int maxit = 0) {
  if (levels.size() < 1)
    throw std::invalid_argument("convergence_study: need at least one level");
  if (degree == 2 && !strategies.empty())
    throw std::invalid_argument("estimation requires Q1 approximation");
  std::vector<ConvergenceRow> rows;
  for (std::int32_t n : levels) {
    const HexMesh mesh = problem.build_mesh(n);
    DiscreteSystem sys = assemble_poisson(mesh, degree, problem.source, threads);
    impose_dirichlet(sys, problem.boundary_value);
    const SolverRun run = run_solver(sys, solver, tol, maxit);
    ConvergenceRow row;
    row.n = n;
    row.n_elements = mesh.n_elements();
    row.n_dofs = sys.n();
    row.h = problem.mesh_width(n);
    row.energy_sq = energy_norm_sq(sys, run.report.solution);
    row.solver_converged = run.report.converged;
    row.iterations = run.report.iterations;
    if (problem.reference_energy_sq)
      row.error = galerkin_error(*problem.reference_energy_sq, row.energy_sq);
    for (const EstimationStrategy s : strategies) {
      const ErrorEstimate est =
          estimate(mesh, sys, run.report.solution, problem.source, s,
                   boundary_correction, threads);
      row.eta.push_back(est.global);
      if (problem.reference_energy_sq)
        row.theta.push_back(effectivity(
            est.global, *problem.reference_energy_sq, row.energy_sq));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hexpde
