#pragma once

// Hierarchical a posteriori energy-error estimation for Q1 solutions. Four
// enrichment spaces over each element: the 19 non-vertex triquadratic basis
// functions (Q2(h)), their 7-dimensional reduction to face centres plus the
// element centre (Q2r(h)), and the analogous trilinear hat functions on the
// 2x2x2 subdivision of the element (Q1(h/2), Q1r(h/2)). Per element, the
// bubble-space stiffness is solved against interior residual plus half the
// inter-element flux jumps; the optional boundary correction removes bubbles
// sitting on Dirichlet faces.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <unordered_map>
#include <vector>

#include "hexpde/assembly.hpp"
#include "hexpde/mesh.hpp"
#include "hexpde/parallel.hpp"
#include "hexpde/reference_elements.hpp"

namespace hexpde {

enum class EstimationStrategy { q2h, q2rh, q1h2, q1rh2 };

inline const char* to_string(EstimationStrategy s) {
  switch (s) {
    case EstimationStrategy::q2h: return "q2h";
    case EstimationStrategy::q2rh: return "q2rh";
    case EstimationStrategy::q1h2: return "q1h2";
    default: return "q1rh2";
  }
}

inline bool is_reduced(EstimationStrategy s) {
  return s == EstimationStrategy::q2rh || s == EstimationStrategy::q1rh2;
}
inline bool is_q2_based(EstimationStrategy s) {
  return s == EstimationStrategy::q2h || s == EstimationStrategy::q2rh;
}
inline int bubble_dimension(EstimationStrategy s) {
  return is_reduced(s) ? 7 : 19;
}

// 0-based ids (into the 27-node table) of the bubble nodes: all non-vertex
// nodes for the full spaces, the 6 face centres + element centre for the
// reduced ones.
inline std::span<const int> bubble_nodes(EstimationStrategy s) {
  static constexpr std::array<int, 19> full = {8,  9,  10, 11, 12, 13, 14,
                                               15, 16, 17, 18, 19, 20, 21,
                                               22, 23, 24, 25, 26};
  static constexpr std::array<int, 7> reduced = {12, 13, 15, 17, 19, 21, 26};
  if (is_reduced(s)) return {reduced.data(), reduced.size()};
  return {full.data(), full.size()};
}

namespace detail {

// 1D piecewise-linear hats on the subdivided axis {-1,0,1}.
inline double hat1d(double t, int node) {
  if (node < 0) return t < 0.0 ? -t : 0.0;
  if (node == 0) return 1.0 - std::abs(t);
  return t > 0.0 ? t : 0.0;
}
inline double dhat1d(double t, int node) {
  if (node < 0) return t < 0.0 ? -1.0 : 0.0;
  if (node == 0) return t < 0.0 ? 1.0 : -1.0;
  return t < 0.0 ? 0.0 : 1.0;
}

inline void hat_eval(const Vec3& pt, int node_id, double& value, Vec3& grad) {
  const auto& nd = kQ2Nodes[node_id];
  const double a = hat1d(pt[0], nd[0]), b = hat1d(pt[1], nd[1]),
               c = hat1d(pt[2], nd[2]);
  value = a * b * c;
  grad = {dhat1d(pt[0], nd[0]) * b * c, a * dhat1d(pt[1], nd[1]) * c,
          a * b * dhat1d(pt[2], nd[2])};
}

}  // namespace detail

struct BubbleEval {
  std::vector<double> values;
  std::vector<Vec3> ref_gradients;
};

// Bubble values and reference gradients at a reference point, in the order
// of bubble_nodes(strategy).
inline BubbleEval bubble_basis(EstimationStrategy strategy, const Vec3& pt) {
  const auto nodes = bubble_nodes(strategy);
  BubbleEval out;
  out.values.resize(nodes.size());
  out.ref_gradients.resize(nodes.size());
  if (is_q2_based(strategy)) {
    const auto q2 = q2_eval(pt);
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      out.values[b] = q2.values[nodes[b]];
      out.ref_gradients[b] = q2.ref_gradients[nodes[b]];
    }
  } else {
    for (std::size_t b = 0; b < nodes.size(); ++b)
      detail::hat_eval(pt, nodes[b], out.values[b], out.ref_gradients[b]);
  }
  return out;
}

// Interior PDE residual R_T = f + lap(u_h) of the trilinear expansion at
// reference points of one element (the Laplacian transforms through the
// element Jacobian; it vanishes identically on axis-aligned boxes).
inline std::vector<double> interior_residual(
    const HexMesh& mesh, const DofMap& dofs, std::span<const double> u,
    const ScalarField& f, std::int64_t element, std::span<const Vec3> pts) {
  std::array<Vec3, 8> coords;
  mesh.element_coords(element, coords);
  std::array<double, 8> ue;
  std::array<std::int32_t, 27> edofs;
  dofs.element_dofs(mesh, element, edofs);
  for (int i = 0; i < 8; ++i) ue[i] = u[edofs[i]];
  std::vector<double> out(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const MapData md = isoparametric_map(coords, pts[q], 1);
    out[q] = f(md.point[0], md.point[1], md.point[2]) +
             q1_laplacian(ue, pts[q], md.inv_jacobian);
  }
  return out;
}

namespace detail {

inline constexpr std::array<int, 6> kOppositeFace = {2, 3, 0, 1, 5, 4};

// Normal-derivative difference (this element minus its neighbour) along the
// face's positive axis direction at face reference points of element e.
// Requires axis-aligned conforming tensor elements: the neighbour sees the
// same physical point at the mirrored reference coordinates.
inline void normal_derivative_difference(
    const HexMesh& mesh, const DofMap& dofs, std::span<const double> u,
    std::int64_t e, int face, std::span<const Vec3> own_pts,
    std::span<const Vec3> nb_pts, std::span<double> out) {
  const std::int32_t nb = mesh.neighbors[e][face];
  if (nb < 0) throw std::invalid_argument("flux jump: face is not interior");
  if (mesh.neighbors[nb][kOppositeFace[face]] != e)
    throw std::runtime_error(
        "flux jump: inconsistent face orientation between neighbours");
  const int axis = kFaceAxis[face];
  const Vec3 he = element_extents(mesh, e);
  const Vec3 hn = element_extents(mesh, nb);
  std::array<std::int32_t, 27> edofs;
  std::array<double, 8> ue, un;
  dofs.element_dofs(mesh, e, edofs);
  for (int i = 0; i < 8; ++i) ue[i] = u[edofs[i]];
  dofs.element_dofs(mesh, nb, edofs);
  for (int i = 0; i < 8; ++i) un[i] = u[edofs[i]];
  for (std::size_t q = 0; q < own_pts.size(); ++q) {
    const auto own = q1_eval(own_pts[q]);
    const auto other = q1_eval(nb_pts[q]);
    double de = 0.0, dn = 0.0;
    for (int i = 0; i < 8; ++i) {
      de += ue[i] * own.ref_gradients[i][axis];
      dn += un[i] * other.ref_gradients[i][axis];
    }
    out[q] = de * (2.0 / he[axis]) - dn * (2.0 / hn[axis]);
  }
}

}  // namespace detail

// Samples of the half flux jump 1/2 [[du_h/dn]] at tensor Gauss points of an
// interior face, oriented by the face's positive axis normal: the value seen
// from one side is the negative of the value seen from the other.
inline std::vector<double> flux_jumps(const HexMesh& mesh, const DofMap& dofs,
                                      std::span<const double> u,
                                      std::int64_t element, int face,
                                      int points_per_axis = 3) {
  QuadratureRule rule = face_gauss_rule(face, points_per_axis);
  std::vector<Vec3> nb_pts = rule.points;
  for (auto& p : nb_pts) p[kFaceAxis[face]] = -kFaceSide[face];
  std::vector<double> jumps(rule.points.size());
  detail::normal_derivative_difference(mesh, dofs, u, element, face,
                                       rule.points, nb_pts, jumps);
  for (double& j : jumps) j *= 0.5;
  return jumps;
}

struct ErrorEstimate {
  std::vector<double> per_element;  // eta_e >= 0
  double global = 0.0;              // sqrt(sum eta_e^2)
  EstimationStrategy strategy = EstimationStrategy::q2rh;
  bool boundary_correction = false;
};

namespace detail {

struct EstimatorTables {
  // interior rule (whole cell for Q2 spaces, per-octant for the h/2 hats)
  std::vector<Vec3> pts;
  std::vector<double> wts;
  std::vector<std::vector<double>> bubble_vals;   // [q][b]
  std::vector<std::vector<Vec3>> bubble_grads;    // [q][b]
  // face rules, own-side and mirrored neighbour-side trilinear gradients
  struct Face {
    std::vector<Vec3> pts, nb_pts;
    std::vector<double> wts;
    std::vector<std::vector<double>> bubble_vals;
  };
  std::array<Face, 6> faces;
  int nb = 0;
};

inline EstimatorTables build_tables(EstimationStrategy strategy) {
  EstimatorTables t;
  const auto nodes = bubble_nodes(strategy);
  t.nb = static_cast<int>(nodes.size());
  const bool octants = !is_q2_based(strategy);

  const QuadratureRule base = gauss_rule(3);
  if (!octants) {
    t.pts = base.points;
    t.wts = base.weights;
  } else {
    for (int ox = -1; ox <= 1; ox += 2)
      for (int oy = -1; oy <= 1; oy += 2)
        for (int oz = -1; oz <= 1; oz += 2)
          for (int q = 0; q < base.size(); ++q) {
            const Vec3& p = base.points[q];
            t.pts.push_back({0.5 * (ox + p[0]), 0.5 * (oy + p[1]),
                             0.5 * (oz + p[2])});
            t.wts.push_back(base.weights[q] * 0.125);
          }
  }
  t.bubble_vals.resize(t.pts.size());
  t.bubble_grads.resize(t.pts.size());
  for (std::size_t q = 0; q < t.pts.size(); ++q) {
    const BubbleEval be = bubble_basis(strategy, t.pts[q]);
    t.bubble_vals[q] = be.values;
    t.bubble_grads[q] = be.ref_gradients;
  }

  for (int f = 0; f < 6; ++f) {
    auto& face = t.faces[f];
    const QuadratureRule fr = face_gauss_rule(f, 3);
    if (!octants) {
      face.pts = fr.points;
      face.wts = fr.weights;
    } else {
      const int axis = kFaceAxis[f];
      const int u = axis == 0 ? 1 : 0;
      const int v = axis == 2 ? 1 : 2;
      for (int ou = -1; ou <= 1; ou += 2)
        for (int ov = -1; ov <= 1; ov += 2)
          for (int q = 0; q < fr.size(); ++q) {
            Vec3 p = fr.points[q];
            p[u] = 0.5 * (ou + p[u]);
            p[v] = 0.5 * (ov + p[v]);
            face.pts.push_back(p);
            face.wts.push_back(fr.weights[q] * 0.25);
          }
    }
    face.nb_pts = face.pts;
    for (auto& p : face.nb_pts) p[kFaceAxis[f]] = -kFaceSide[f];
    face.bubble_vals.resize(face.pts.size());
    for (std::size_t q = 0; q < face.pts.size(); ++q)
      face.bubble_vals[q] = bubble_basis(strategy, face.pts[q]).values;
  }
  return t;
}

// Bubble-space stiffness for an axis-aligned box with extents h.
inline Eigen::MatrixXd local_stiffness(const EstimatorTables& t,
                                       const Vec3& h) {
  const double det = h[0] * h[1] * h[2] / 8.0;
  const Vec3 scale_sq = {4.0 / (h[0] * h[0]), 4.0 / (h[1] * h[1]),
                         4.0 / (h[2] * h[2])};
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(t.nb, t.nb);
  for (std::size_t q = 0; q < t.pts.size(); ++q) {
    const double w = t.wts[q] * det;
    for (int a = 0; a < t.nb; ++a)
      for (int b = a; b < t.nb; ++b) {
        const Vec3& ga = t.bubble_grads[q][a];
        const Vec3& gb = t.bubble_grads[q][b];
        k(a, b) += w * (scale_sq[0] * ga[0] * gb[0] +
                        scale_sq[1] * ga[1] * gb[1] +
                        scale_sq[2] * ga[2] * gb[2]);
      }
  }
  k.triangularView<Eigen::StrictlyLower>() =
      k.triangularView<Eigen::StrictlyUpper>().transpose();
  return k;
}

struct LocalSolver {
  std::vector<int> keep;  // bubble ids retained after boundary correction
  Eigen::LLT<Eigen::MatrixXd> llt;
};

struct LocalKey {
  std::uint64_t hx, hy, hz;
  std::uint32_t mask;
  bool operator==(const LocalKey&) const = default;
};
struct LocalKeyHash {
  std::size_t operator()(const LocalKey& k) const {
    std::uint64_t h = k.hx * 0x9e3779b97f4a7c15ULL;
    h ^= k.hy + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= k.hz + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= k.mask + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

inline std::uint64_t key_bits(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(double));
  return bits;
}

inline void check_axis_aligned(const HexMesh& mesh, std::int64_t e,
                               const Vec3& h) {
  const auto& conn = mesh.elements_q2[e];
  const Vec3& origin = mesh.nodes[conn[0]];
  const double tol = 1e-10 * std::max({h[0], h[1], h[2]});
  for (int i = 0; i < 8; ++i) {
    const Vec3& p = mesh.nodes[conn[i]];
    for (int d = 0; d < 3; ++d) {
      const double expect = origin[d] + (kQ2Nodes[i][d] > 0 ? h[d] : 0.0);
      if (std::abs(p[d] - expect) > tol)
        throw std::invalid_argument(
            "estimate: requires axis-aligned tensor-product elements");
    }
  }
}

}  // namespace detail

// Hierarchical estimate for a Q1 Galerkin solution u of the Poisson problem
// with source f. Per element: K_T e_T = r_T with
//   r_T(v) = int_T (f + lap u_h) v - 1/2 sum_F int_F [[du_h/dn]] v,
// eta_e^2 = r_T . e_T, and eta = sqrt(sum eta_e^2). Boundary faces carry no
// jump term; with boundary_correction, bubbles on Dirichlet faces are
// removed from the local space (zero error enforced essentially).
inline ErrorEstimate estimate(const HexMesh& mesh, const DiscreteSystem& sys,
                              std::span<const double> u, const ScalarField& f,
                              EstimationStrategy strategy,
                              bool boundary_correction = false,
                              int threads = 0) {
  if (sys.dofs.degree != 1)
    throw std::invalid_argument("estimation requires Q1 approximation");
  if (static_cast<std::int32_t>(u.size()) != sys.n())
    throw std::invalid_argument("estimate: solution dimension mismatch");
  if (threads <= 0) threads = default_threads();

  const detail::EstimatorTables tables = detail::build_tables(strategy);
  const auto nodes = bubble_nodes(strategy);
  const int nb = tables.nb;
  const std::int64_t ne = mesh.n_elements();

  // boundary-correction masks: bit b set => bubble b removed
  std::vector<std::uint32_t> masks(ne, 0);
  if (boundary_correction) {
    for (const auto& bf : mesh.boundary_faces) {
      const int axis = kFaceAxis[bf.face];
      const int side = kFaceSide[bf.face];
      for (int b = 0; b < nb; ++b)
        if (kQ2Nodes[nodes[b]][axis] == side)
          masks[bf.element] |= 1u << b;
    }
  }

  // factor the distinct (extents, mask) local problems once
  std::unordered_map<detail::LocalKey, std::unique_ptr<detail::LocalSolver>,
                     detail::LocalKeyHash>
      solvers;
  std::unordered_map<std::uint64_t, Eigen::MatrixXd> stiffness_by_h;
  std::vector<const detail::LocalSolver*> solver_of(ne);
  for (std::int64_t e = 0; e < ne; ++e) {
    const Vec3 h = element_extents(mesh, e);
    detail::check_axis_aligned(mesh, e, h);
    const detail::LocalKey key{detail::key_bits(h[0]), detail::key_bits(h[1]),
                               detail::key_bits(h[2]), masks[e]};
    auto it = solvers.find(key);
    if (it == solvers.end()) {
      const std::uint64_t hkey = detail::LocalKeyHash{}(
          detail::LocalKey{key.hx, key.hy, key.hz, 0});
      auto kit = stiffness_by_h.find(hkey);
      if (kit == stiffness_by_h.end())
        kit = stiffness_by_h
                  .emplace(hkey, detail::local_stiffness(tables, h))
                  .first;
      auto solver = std::make_unique<detail::LocalSolver>();
      for (int b = 0; b < nb; ++b)
        if (!(masks[e] & (1u << b))) solver->keep.push_back(b);
      const int m = static_cast<int>(solver->keep.size());
      Eigen::MatrixXd sub(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          sub(a, b) = kit->second(solver->keep[a], solver->keep[b]);
      solver->llt.compute(sub);
      if (m > 0 && solver->llt.info() != Eigen::Success)
        throw std::domain_error(
            "estimate: singular local problem (degenerate element)");
      it = solvers.emplace(key, std::move(solver)).first;
    }
    solver_of[e] = it->second.get();
  }

  ErrorEstimate result;
  result.strategy = strategy;
  result.boundary_correction = boundary_correction;
  result.per_element.assign(ne, 0.0);

  parallel_batches(ne, kElementBatch, threads, [&](std::size_t, std::size_t
                                                       begin,
                                                   std::size_t end) {
    std::array<std::int32_t, 27> edofs;
    std::array<double, 8> ue, un;
    Eigen::VectorXd load(nb);
    std::vector<double> jump(tables.faces[0].pts.size());
    for (std::size_t e = begin; e < end; ++e) {
      const Vec3 h = element_extents(mesh, e);
      const double det = h[0] * h[1] * h[2] / 8.0;
      const Vec3& low = mesh.nodes[mesh.elements_q2[e][0]];
      sys.dofs.element_dofs(mesh, e, edofs);
      for (int i = 0; i < 8; ++i) ue[i] = u[edofs[i]];

      load.setZero();
      for (std::size_t q = 0; q < tables.pts.size(); ++q) {
        const Vec3& p = tables.pts[q];
        const double x = low[0] + 0.5 * h[0] * (p[0] + 1.0);
        const double y = low[1] + 0.5 * h[1] * (p[1] + 1.0);
        const double z = low[2] + 0.5 * h[2] * (p[2] + 1.0);
        // lap(u_h) = 0 on axis-aligned boxes; R_T reduces to f
        const double w = tables.wts[q] * det * f(x, y, z);
        for (int b = 0; b < nb; ++b) load[b] += w * tables.bubble_vals[q][b];
      }

      for (int face = 0; face < 6; ++face) {
        const std::int32_t nbr = mesh.neighbors[e][face];
        if (nbr < 0) continue;  // Dirichlet face: zero jump
        const auto& ft = tables.faces[face];
        const int axis = kFaceAxis[face];
        const int side = kFaceSide[face];
        const Vec3 hn = element_extents(mesh, nbr);
        sys.dofs.element_dofs(mesh, nbr, edofs);
        for (int i = 0; i < 8; ++i) un[i] = u[edofs[i]];
        const int au = axis == 0 ? 1 : 0;
        const int av = axis == 2 ? 1 : 2;
        const double area = 0.25 * h[au] * h[av];
        jump.resize(ft.pts.size());
        for (std::size_t q = 0; q < ft.pts.size(); ++q) {
          const auto own = q1_eval(ft.pts[q]);
          const auto other = q1_eval(ft.nb_pts[q]);
          double de = 0.0, dn = 0.0;
          for (int i = 0; i < 8; ++i) {
            de += ue[i] * own.ref_gradients[i][axis];
            dn += un[i] * other.ref_gradients[i][axis];
          }
          jump[q] = side * (de * (2.0 / h[axis]) - dn * (2.0 / hn[axis]));
        }
        for (std::size_t q = 0; q < ft.pts.size(); ++q) {
          const double w = 0.5 * ft.wts[q] * area * jump[q];
          for (int b = 0; b < nb; ++b)
            load[b] -= w * ft.bubble_vals[q][b];
        }
      }

      const detail::LocalSolver& solver = *solver_of[e];
      const int m = static_cast<int>(solver.keep.size());
      if (m == 0) continue;
      Eigen::VectorXd rc(m);
      for (int a = 0; a < m; ++a) rc[a] = load[solver.keep[a]];
      const Eigen::VectorXd ec = solver.llt.solve(rc);
      const double eta_sq = rc.dot(ec);
      result.per_element[e] = std::sqrt(std::max(0.0, eta_sq));
    }
  });

  double total = 0.0;
  for (double eta : result.per_element) total += eta * eta;
  result.global = std::sqrt(total);
  return result;
}

// Effectivity index theta = eta / ||u_ref - u_h||_E with the true error
// obtained from Galerkin orthogonality. Throws when the reference energy is
// inconsistent (smaller than the computed energy beyond roundoff slack).
inline double effectivity(double eta, double ref_energy_sq, double energy_sq) {
  const double diff = ref_energy_sq - energy_sq;
  const double slack = 1e-12 * std::max(1.0, std::abs(ref_energy_sq));
  if (diff < -slack)
    throw std::invalid_argument(
        "effectivity: reference energy below computed energy");
  const double err = std::sqrt(std::max(0.0, diff));
  if (err == 0.0)
    throw std::invalid_argument("effectivity: zero reference error");
  return eta / err;
}

}  // namespace hexpde
