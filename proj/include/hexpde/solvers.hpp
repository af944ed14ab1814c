#pragma once

// Linear solvers for the assembled SPD systems: sparse direct Cholesky with
// fill-reducing ordering, MINRES with an optional SPD preconditioner
// (stopping on the relative preconditioned residual), zero-fill incomplete
// Cholesky, and the point Gauss-Seidel sweeps used as the multigrid smoother.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hexpde/assembly.hpp"
#include "hexpde/sparse.hpp"

namespace hexpde {

struct SolveReport {
  std::vector<double> solution;
  int iterations = 0;                    // 0 for the direct solver
  std::vector<double> residual_history;  // preconditioned residual norms
  bool converged = false;
};

using Preconditioner =
    std::function<void(std::span<const double>, std::span<double>)>;

namespace detail {

inline Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nnz());
  for (std::int32_t i = 0; i < a.rows; ++i)
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      triplets.emplace_back(i, a.col_indices[k], a.values[k]);
  Eigen::SparseMatrix<double> m(a.rows, a.cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot_product(std::span<const double> a,
                          std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Sparse Cholesky (LDL^T with AMD ordering). Throws std::domain_error when
// a pivot is not positive (matrix not SPD).
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SparseMatrix& a) : n_(a.n()) {
    solver_.compute(detail::to_eigen(a));
    if (solver_.info() != Eigen::Success)
      throw std::domain_error("direct solve: factorization failed");
    if ((solver_.vectorD().array() <= 0.0).any())
      throw std::domain_error("direct solve: matrix is not positive definite");
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), rhs.size());
    Eigen::VectorXd x = solver_.solve(b);
    return {x.data(), x.data() + x.size()};
  }

  std::int32_t n() const { return n_; }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  std::int32_t n_ = 0;
};

inline SolveReport direct_solve(const SparseMatrix& a,
                                std::span<const double> rhs) {
  CholeskyFactor factor(a);
  SolveReport report;
  report.solution = factor.solve(rhs);
  std::vector<double> residual(rhs.size());
  a.multiply(report.solution, residual);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= rhs[i];
  const double bnorm = detail::norm2(rhs);
  const double relres =
      bnorm > 0.0 ? detail::norm2(residual) / bnorm : detail::norm2(residual);
  report.residual_history = {relres};
  report.converged = relres <= 1e-12;
  return report;
}

inline SolveReport direct_solve(const DiscreteSystem& sys) {
  if (!sys.imposed)
    throw std::logic_error("direct_solve: impose boundary conditions first");
  return direct_solve(sys.matrix, sys.rhs);
}

// ---- IC(0) ------------------------------------------------------------------

struct Ic0Breakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Zero-fill incomplete Cholesky: L has exactly the lower-triangular sparsity
// of A, processed in natural row order. Throws Ic0Breakdown on a
// non-positive pivot; callers may retry with a diagonal shift.
class Ic0Factor {
 public:
  explicit Ic0Factor(const SparseMatrix& a, double shift = 0.0) {
    const std::int32_t n = a.n();
    lower_.rows = lower_.cols = n;
    lower_.row_offsets.assign(n + 1, 0);
    for (std::int32_t i = 0; i < n; ++i) {
      for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
        if (a.col_indices[k] <= i) ++lower_.row_offsets[i + 1];
      lower_.row_offsets[i + 1] += lower_.row_offsets[i];
    }
    lower_.col_indices.resize(lower_.row_offsets[n]);
    lower_.values.resize(lower_.row_offsets[n]);
    diag_pos_.resize(n);
    for (std::int32_t i = 0; i < n; ++i) {
      std::int64_t at = lower_.row_offsets[i];
      bool has_diag = false;
      for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
        const std::int32_t j = a.col_indices[k];
        if (j > i) continue;
        lower_.col_indices[at] = j;
        lower_.values[at] = a.values[k];
        if (j == i) {
          lower_.values[at] += shift * a.values[k];
          diag_pos_[i] = at;
          has_diag = true;
        }
        ++at;
      }
      if (!has_diag) throw Ic0Breakdown("ic0: missing diagonal entry");
    }

    for (std::int32_t i = 0; i < n; ++i) {
      const std::int64_t row_begin = lower_.row_offsets[i];
      const std::int64_t row_diag = diag_pos_[i];
      for (std::int64_t p = row_begin; p < row_diag; ++p) {
        const std::int32_t k = lower_.col_indices[p];
        // dot of rows i and k over columns < k
        double sum = 0.0;
        std::int64_t pi = row_begin, pk = lower_.row_offsets[k];
        while (pi < p && pk < diag_pos_[k]) {
          const std::int32_t ci = lower_.col_indices[pi];
          const std::int32_t ck = lower_.col_indices[pk];
          if (ci == ck) {
            sum += lower_.values[pi] * lower_.values[pk];
            ++pi;
            ++pk;
          } else if (ci < ck) {
            ++pi;
          } else {
            ++pk;
          }
        }
        lower_.values[p] =
            (lower_.values[p] - sum) / lower_.values[diag_pos_[k]];
      }
      double d = lower_.values[row_diag];
      for (std::int64_t p = row_begin; p < row_diag; ++p)
        d -= lower_.values[p] * lower_.values[p];
      if (!(d > 0.0))
        throw Ic0Breakdown("ic0: non-positive pivot at row " +
                           std::to_string(i));
      lower_.values[row_diag] = std::sqrt(d);
    }
  }

  // z = (L L^T)^{-1} r via two triangular solves
  void apply(std::span<const double> r, std::span<double> z) const {
    const std::int32_t n = lower_.n();
    for (std::int32_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::int64_t p = lower_.row_offsets[i]; p < diag_pos_[i]; ++p)
        s -= lower_.values[p] * z[lower_.col_indices[p]];
      z[i] = s / lower_.values[diag_pos_[i]];
    }
    for (std::int32_t i = n - 1; i >= 0; --i) {
      const double zi = z[i] / lower_.values[diag_pos_[i]];
      z[i] = zi;
      for (std::int64_t p = lower_.row_offsets[i]; p < diag_pos_[i]; ++p)
        z[lower_.col_indices[p]] -= lower_.values[p] * zi;
    }
  }

  const SparseMatrix& lower() const { return lower_; }

  Preconditioner preconditioner() const {
    return [this](std::span<const double> r, std::span<double> z) {
      apply(r, z);
    };
  }

 private:
  SparseMatrix lower_;
  std::vector<std::int64_t> diag_pos_;
};

inline std::shared_ptr<Ic0Factor> ic0(const SparseMatrix& a,
                                      double shift = 0.0) {
  return std::make_shared<Ic0Factor>(a, shift);
}

// Retries with the default diagonal shift 1e-3 when the unshifted
// factorization breaks down.
inline std::shared_ptr<Ic0Factor> ic0_with_retry(const SparseMatrix& a,
                                                 double shift = 1e-3) {
  try {
    return ic0(a);
  } catch (const Ic0Breakdown&) {
    return ic0(a, shift);
  }
}

// ---- MINRES -------------------------------------------------------------------

inline int default_maxit(std::int32_t n) {
  return static_cast<int>(2.0 * std::sqrt(static_cast<double>(n))) + 200;
}

// Preconditioned MINRES (Paige-Saunders recurrences). Stops when the
// relative preconditioned residual drops below tol; the per-iteration
// preconditioned residual norms are recorded and are non-increasing.
// Throws std::domain_error when the preconditioner is found indefinite.
inline SolveReport minres(const SparseMatrix& a, std::span<const double> b,
                          const Preconditioner& precond = nullptr,
                          double tol = 1e-10, int maxit = 0) {
  const std::int32_t n = a.n();
  if (maxit <= 0) maxit = default_maxit(n);
  SolveReport report;
  report.solution.assign(n, 0.0);

  auto apply_m = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (precond)
      precond(in, out);
    else
      std::copy(in.begin(), in.end(), out.begin());
  };

  std::vector<double> r1(b.begin(), b.end());
  std::vector<double> y(n), r2(r1), v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0),
      av(n);
  apply_m(r1, y);
  double beta1_sq = detail::dot_product(r1, y);
  if (beta1_sq < 0.0)
    throw std::domain_error("minres: indefinite preconditioner");
  const double beta1 = std::sqrt(beta1_sq);
  report.residual_history.push_back(beta1);
  if (beta1 == 0.0) {
    report.converged = true;
    return report;
  }

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;

  for (int it = 1; it <= maxit; ++it) {
    const double s = 1.0 / beta;
    for (std::int32_t i = 0; i < n; ++i) v[i] = s * y[i];
    a.multiply(v, av);
    if (it >= 2)
      for (std::int32_t i = 0; i < n; ++i) av[i] -= (beta / oldb) * r1[i];
    const double alfa = detail::dot_product(v, av);
    for (std::int32_t i = 0; i < n; ++i) av[i] -= (alfa / beta) * r2[i];
    r1 = r2;
    r2 = av;
    apply_m(r2, y);
    oldb = beta;
    const double beta_sq = detail::dot_product(r2, y);
    if (beta_sq < 0.0)
      throw std::domain_error("minres: indefinite preconditioner");
    beta = std::sqrt(beta_sq);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    for (std::int32_t i = 0; i < n; ++i)
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
    for (std::int32_t i = 0; i < n; ++i) report.solution[i] += phi * w[i];

    report.iterations = it;
    report.residual_history.push_back(phibar);
    if (phibar <= tol * beta1) {
      report.converged = true;
      break;
    }
  }
  return report;
}

// ---- Gauss-Seidel -------------------------------------------------------------

enum class SweepDirection { forward, backward, symmetric };

// In-place point Gauss-Seidel sweeps in natural row order. Throws
// std::domain_error on a zero diagonal entry.
inline void gauss_seidel(const SparseMatrix& a, std::span<const double> b,
                         std::span<double> x, int sweeps,
                         SweepDirection direction) {
  const std::int32_t n = a.n();
  auto relax_row = [&](std::int32_t i) {
    double diag = 0.0, sum = b[i];
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const std::int32_t j = a.col_indices[k];
      if (j == i)
        diag = a.values[k];
      else
        sum -= a.values[k] * x[j];
    }
    if (diag == 0.0)
      throw std::domain_error("gauss_seidel: zero diagonal entry at row " +
                              std::to_string(i));
    x[i] = sum / diag;
  };
  for (int s = 0; s < sweeps; ++s) {
    if (direction != SweepDirection::backward)
      for (std::int32_t i = 0; i < n; ++i) relax_row(i);
    if (direction != SweepDirection::forward)
      for (std::int32_t i = n - 1; i >= 0; --i) relax_row(i);
  }
}

}  // namespace hexpde
