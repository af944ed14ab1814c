#pragma once

// Classical (Ruge-Stuben) algebraic multigrid: strength-of-connection graph,
// two-pass C/F splitting, direct interpolation, Galerkin coarse operators,
// a symmetric V-cycle preconditioner and the complexity diagnostics
// (L, c_G, c_A, c_S, c_1).

#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>
#include <stdexcept>
#include <vector>

#include "hexpde/solvers.hpp"
#include "hexpde/sparse.hpp"

namespace hexpde {

// Directed strong-connection graph: i strongly depends on j iff
// -a_ij >= theta_s * max_{k != i}(-a_ik). Rows without negative off-diagonal
// couplings (Dirichlet identity rows in particular) have no edges.
struct StrengthGraph {
  std::vector<std::int64_t> offsets;    // S: dependencies of i
  std::vector<std::int32_t> edges;
  std::vector<std::int64_t> t_offsets;  // S^T: points depending on i
  std::vector<std::int32_t> t_edges;

  std::int32_t size() const {
    return static_cast<std::int32_t>(offsets.size()) - 1;
  }
  std::span<const std::int32_t> deps(std::int32_t i) const {
    return {edges.data() + offsets[i], edges.data() + offsets[i + 1]};
  }
  std::span<const std::int32_t> dependents(std::int32_t i) const {
    return {t_edges.data() + t_offsets[i], t_edges.data() + t_offsets[i + 1]};
  }
};

inline StrengthGraph strength_graph(const SparseMatrix& a, double theta_s) {
  const std::int32_t n = a.n();
  StrengthGraph g;
  g.offsets.assign(n + 1, 0);
  for (std::int32_t i = 0; i < n; ++i) {
    double max_neg = 0.0;
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      if (a.col_indices[k] != i) max_neg = std::max(max_neg, -a.values[k]);
    if (max_neg > 0.0) {
      const double cut = theta_s * max_neg;
      for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
        const std::int32_t j = a.col_indices[k];
        if (j != i && -a.values[k] >= cut) {
          g.edges.push_back(j);
          ++g.offsets[i + 1];
        }
      }
    }
    g.offsets[i + 1] += g.offsets[i];
  }
  g.t_offsets.assign(n + 1, 0);
  for (std::int32_t j : g.edges) ++g.t_offsets[j + 1];
  for (std::int32_t i = 0; i < n; ++i) g.t_offsets[i + 1] += g.t_offsets[i];
  g.t_edges.resize(g.edges.size());
  std::vector<std::int64_t> cursor(g.t_offsets.begin(), g.t_offsets.end() - 1);
  for (std::int32_t i = 0; i < n; ++i)
    for (std::int64_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
      g.t_edges[cursor[g.edges[k]]++] = i;
  return g;
}

enum : std::int8_t { kFPoint = 0, kCPoint = 1, kUndecided = 2 };

// Classical splitting. First pass: greedy selection weighted by the number
// of undecided/fine dependents (lazy max-heap, lowest index on ties); points
// with no strong connections at all stay fine and are dropped from the
// coarse grid by interpolation. The optional second pass enforces a common
// C-point for every strongly connected F-F pair; direct interpolation does
// not need it, and on 27-point stencils it inflates the coarse grids well
// past the expected complexity bands, so it is off by default.
inline std::vector<std::int8_t> ruge_stueben_coarsen(
    const StrengthGraph& g, bool enforce_common_c = false) {
  const std::int32_t n = g.size();
  std::vector<std::int8_t> cf(n, kUndecided);
  std::vector<std::int32_t> lambda(n, 0);
  using Entry = std::pair<std::int32_t, std::int32_t>;  // (lambda, -index)
  std::priority_queue<Entry> heap;
  for (std::int32_t i = 0; i < n; ++i) {
    lambda[i] = static_cast<std::int32_t>(g.dependents(i).size());
    if (g.deps(i).empty() && g.dependents(i).empty()) {
      cf[i] = kFPoint;  // isolated: smoother-only point
    } else {
      heap.push({lambda[i], -i});
    }
  }

  while (!heap.empty()) {
    const auto [lam, neg_i] = heap.top();
    heap.pop();
    const std::int32_t i = -neg_i;
    if (cf[i] != kUndecided || lam != lambda[i]) continue;  // stale entry
    cf[i] = kCPoint;
    for (std::int32_t j : g.dependents(i)) {
      if (cf[j] != kUndecided) continue;
      cf[j] = kFPoint;
      for (std::int32_t k : g.deps(j))
        if (cf[k] == kUndecided) heap.push({++lambda[k], -k});
    }
    for (std::int32_t j : g.deps(i))
      if (cf[j] == kUndecided) heap.push({--lambda[j], -j});
  }

  // second pass: each strongly connected F-F pair needs a common C-point.
  // At most one point is promoted per examined F-point: the first offending
  // neighbour tentatively, or the point itself (reverting the tentative
  // choice) when a second offender shows up.
  if (!enforce_common_c) return cf;
  std::vector<std::int32_t> stamp(n, -1);
  for (std::int32_t i = 0; i < n; ++i) {
    if (cf[i] != kFPoint) continue;
    for (std::int32_t j : g.deps(i))
      if (cf[j] == kCPoint) stamp[j] = i;
    std::int32_t tentative = -1;
    for (std::int32_t j : g.deps(i)) {
      if (cf[j] != kFPoint) continue;
      bool common = false;
      for (std::int32_t k : g.deps(j))
        if (cf[k] == kCPoint && stamp[k] == i) {
          common = true;
          break;
        }
      if (!common) {
        if (tentative >= 0) {
          cf[tentative] = kFPoint;
          tentative = -1;
          cf[i] = kCPoint;
          break;
        }
        tentative = j;
        cf[j] = kCPoint;
        stamp[j] = i;
      }
    }
  }
  return cf;
}

// Direct interpolation: C-points transfer by identity; an F-point is
// interpolated from its strong C-neighbours with weights
// w_ij = -a_ij / (a_ii + sum of non-interpolatory couplings), which
// preserves constants (rows sum to 1) for zero-row-sum matrices. Isolated
// points get an empty row and vanish from the coarse grid.
inline SparseMatrix build_interpolation(const SparseMatrix& a,
                                        const std::vector<std::int8_t>& cf,
                                        const StrengthGraph& g) {
  const std::int32_t n = a.n();
  std::vector<std::int32_t> coarse_id(n, -1);
  std::int32_t nc = 0;
  for (std::int32_t i = 0; i < n; ++i)
    if (cf[i] == kCPoint) coarse_id[i] = nc++;

  SparseMatrix p;
  p.rows = n;
  p.cols = nc;
  p.row_offsets.assign(n + 1, 0);
  std::vector<std::int8_t> interpolatory(n, 0);
  for (std::int32_t i = 0; i < n; ++i) {
    p.row_offsets[i + 1] = p.row_offsets[i];
    if (cf[i] == kCPoint) {
      p.col_indices.push_back(coarse_id[i]);
      p.values.push_back(1.0);
      ++p.row_offsets[i + 1];
      continue;
    }
    const auto deps = g.deps(i);
    if (deps.empty()) continue;  // isolated F-point, empty row
    std::int32_t n_strong_c = 0;
    for (std::int32_t j : deps)
      if (cf[j] == kCPoint) {
        interpolatory[j] = 1;
        ++n_strong_c;
      }
    if (n_strong_c == 0)
      throw std::logic_error(
          "build_interpolation: F-point without a strong C-neighbour");
    double denom = 0.0;
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const std::int32_t j = a.col_indices[k];
      if (!interpolatory[j] || j == i) denom += a.values[k];
    }
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const std::int32_t j = a.col_indices[k];
      if (interpolatory[j] && j != i) {
        p.col_indices.push_back(coarse_id[j]);
        p.values.push_back(-a.values[k] / denom);
        ++p.row_offsets[i + 1];
      }
    }
    for (std::int32_t j : deps) interpolatory[j] = 0;
  }
  return p;
}

struct AmgParams {
  double theta_s = 0.25;    // strength threshold
  int nu_pre = 2;           // forward Gauss-Seidel sweeps
  int nu_post = 2;          // backward Gauss-Seidel sweeps
  std::int32_t max_coarse = 100;
  double stall_ratio = 0.9;
  int max_levels = 50;
};

struct AmgHierarchy {
  std::vector<SparseMatrix> operators;       // A_1 .. A_L
  std::vector<SparseMatrix> interpolations;  // P_1 .. P_{L-1}
  std::unique_ptr<CholeskyFactor> coarsest_factorization;
  AmgParams params;

  int levels() const { return static_cast<int>(operators.size()); }
};

struct AmgMetrics {
  int levels = 0;
  double grid_complexity = 0.0;      // c_G = (1/n_1) sum n_l
  double operator_complexity = 0.0;  // c_A = (1/nnz(A_1)) sum nnz(A_l)
  double avg_stencil = 0.0;          // c_S = (1/L) sum nnz(A_l)/n_l
  double fine_stencil = 0.0;         // c_1 = nnz(A_1)/n_1
};

// Recursive setup: coarsen until the operator is small, coarsening stalls
// (n_{l+1} > stall_ratio * n_l) or no progress is possible. The coarsest
// operator is factorized directly.
inline AmgHierarchy setup(SparseMatrix a, const AmgParams& params = {}) {
  AmgHierarchy h;
  h.params = params;
  h.operators.push_back(std::move(a));
  while (h.levels() < params.max_levels) {
    const SparseMatrix& fine = h.operators.back();
    const std::int32_t n_fine = fine.n();
    if (n_fine <= params.max_coarse) break;
    const StrengthGraph graph = strength_graph(fine, params.theta_s);
    const auto cf = ruge_stueben_coarsen(graph);
    std::int32_t nc = 0;
    for (std::int8_t c : cf) nc += c == kCPoint;
    if (nc == 0 || nc == n_fine) break;  // no usable coarsening
    SparseMatrix p = build_interpolation(fine, cf, graph);
    SparseMatrix coarse = multiply(transpose(p), multiply(fine, p));
    // push invalidates `fine`; only n_fine is used past this point
    h.interpolations.push_back(std::move(p));
    h.operators.push_back(std::move(coarse));
    if (nc > params.stall_ratio * n_fine) break;
  }
  h.coarsest_factorization =
      std::make_unique<CholeskyFactor>(h.operators.back());
  return h;
}

namespace detail {
inline void vcycle_level(const AmgHierarchy& h, int level,
                         std::span<const double> rhs, std::span<double> x) {
  const SparseMatrix& a = h.operators[level];
  if (level == h.levels() - 1) {
    const auto sol = h.coarsest_factorization->solve(rhs);
    std::copy(sol.begin(), sol.end(), x.begin());
    return;
  }
  std::fill(x.begin(), x.end(), 0.0);
  gauss_seidel(a, rhs, x, h.params.nu_pre, SweepDirection::forward);
  std::vector<double> residual(a.n());
  a.multiply(x, residual);
  for (std::int32_t i = 0; i < a.n(); ++i) residual[i] = rhs[i] - residual[i];
  const SparseMatrix& p = h.interpolations[level];
  std::vector<double> coarse_rhs = p.multiply_transpose(residual);
  std::vector<double> coarse_x(p.cols, 0.0);
  vcycle_level(h, level + 1, coarse_rhs, coarse_x);
  std::vector<double> correction = p.multiply(coarse_x);
  for (std::int32_t i = 0; i < a.n(); ++i) x[i] += correction[i];
  gauss_seidel(a, rhs, x, h.params.nu_post, SweepDirection::backward);
}
}  // namespace detail

// One V-cycle from a zero initial guess: nu_pre forward sweeps descending,
// exact solve on the coarsest level, nu_post backward sweeps ascending.
// Symmetric overall, hence a valid SPD preconditioner for MINRES.
inline std::vector<double> vcycle(const AmgHierarchy& h,
                                  std::span<const double> rhs) {
  std::vector<double> x(rhs.size(), 0.0);
  detail::vcycle_level(h, 0, rhs, x);
  return x;
}

inline Preconditioner as_preconditioner(const AmgHierarchy& h) {
  return [&h](std::span<const double> r, std::span<double> z) {
    detail::vcycle_level(h, 0, r, z);
  };
}

inline AmgMetrics metrics(const AmgHierarchy& h) {
  AmgMetrics m;
  m.levels = h.levels();
  const double n1 = static_cast<double>(h.operators.front().n());
  const double nnz1 = static_cast<double>(h.operators.front().nnz());
  double sum_n = 0.0, sum_nnz = 0.0, sum_stencil = 0.0;
  for (const auto& op : h.operators) {
    sum_n += op.n();
    sum_nnz += static_cast<double>(op.nnz());
    sum_stencil += static_cast<double>(op.nnz()) / op.n();
  }
  m.grid_complexity = sum_n / n1;
  m.operator_complexity = sum_nnz / nnz1;
  m.avg_stencil = sum_stencil / m.levels;
  m.fine_stencil = nnz1 / n1;
  return m;
}

}  // namespace hexpde
