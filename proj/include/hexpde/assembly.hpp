#pragma once

// Galerkin assembly of the Poisson stiffness matrix, mass matrix and load
// vector over a HexMesh, plus symmetric imposition of essential boundary
// conditions. Element work runs in fixed-size batches merged in batch order,
// so assembled systems are bitwise reproducible for any thread count.

#include <bitset>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hexpde/mesh.hpp"
#include "hexpde/parallel.hpp"
#include "hexpde/reference_elements.hpp"
#include "hexpde/sparse.hpp"

namespace hexpde {

using ScalarField = std::function<double(double, double, double)>;

// Maps mesh nodes to solution unknowns: all 27-node entries for Q2, the
// vertex subset for Q1. Dof numbering follows node numbering (lexicographic).
struct DofMap {
  int degree = 1;
  std::int32_t n_dofs = 0;
  std::vector<std::int32_t> node_of_dof;
  std::vector<std::int32_t> dof_of_node;  // -1 where the node carries no dof
  std::vector<Vec3> coords;               // per dof

  int dofs_per_element() const { return degree == 1 ? 8 : 27; }

  void element_dofs(const HexMesh& mesh, std::int64_t e,
                    std::array<std::int32_t, 27>& out) const {
    const auto& conn = mesh.elements_q2[e];
    const int n = dofs_per_element();
    for (int i = 0; i < n; ++i) out[i] = dof_of_node[conn[i]];
  }
};

inline DofMap build_dof_map(const HexMesh& mesh, int degree) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("build_dof_map: degree must be 1 or 2");
  DofMap map;
  map.degree = degree;
  const std::int64_t nn = mesh.n_nodes();
  map.dof_of_node.assign(nn, -1);
  if (degree == 2) {
    map.n_dofs = static_cast<std::int32_t>(nn);
    map.node_of_dof.resize(nn);
    for (std::int64_t i = 0; i < nn; ++i) {
      map.dof_of_node[i] = static_cast<std::int32_t>(i);
      map.node_of_dof[i] = static_cast<std::int32_t>(i);
    }
    map.coords = mesh.nodes;
    return map;
  }
  std::vector<std::uint8_t> is_vertex(nn, 0);
  for (const auto& conn : mesh.elements_q2)
    for (int i = 0; i < 8; ++i) is_vertex[conn[i]] = 1;
  for (std::int64_t i = 0; i < nn; ++i)
    if (is_vertex[i]) {
      map.dof_of_node[i] = map.n_dofs++;
      map.node_of_dof.push_back(static_cast<std::int32_t>(i));
      map.coords.push_back(mesh.nodes[i]);
    }
  return map;
}

// Matrix + right-hand side + Dirichlet bookkeeping. interior_matrix is the
// stiffness before boundary-condition imposition and backs the discrete
// energy inner product; matrix/rhs are filled in by impose_dirichlet.
struct DiscreteSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;
  SparseMatrix interior_matrix;
  std::vector<std::int32_t> dirichlet_nodes;  // dof indices on the boundary
  std::vector<double> dirichlet_values;
  DofMap dofs;
  bool imposed = false;

  std::int32_t n() const { return dofs.n_dofs; }
};

namespace detail {

struct BasisTable {
  QuadratureRule rule;
  std::vector<std::vector<double>> values;     // [q][i]
  std::vector<std::vector<Vec3>> ref_grads;    // [q][i]
  int n_basis = 0;
};

inline BasisTable tabulate(int degree, int points_per_axis) {
  BasisTable t;
  t.rule = gauss_rule(points_per_axis);
  t.n_basis = degree == 1 ? 8 : 27;
  t.values.resize(t.rule.size());
  t.ref_grads.resize(t.rule.size());
  for (int q = 0; q < t.rule.size(); ++q) {
    t.values[q].resize(t.n_basis);
    t.ref_grads[q].resize(t.n_basis);
    auto store = [&](const auto& eval) {
      for (int i = 0; i < t.n_basis; ++i) {
        t.values[q][i] = eval.values[i];
        t.ref_grads[q][i] = eval.ref_gradients[i];
      }
    };
    if (degree == 1)
      store(q1_eval(t.rule.points[q]));
    else
      store(q2_eval(t.rule.points[q]));
  }
  return t;
}

// Jacobian data at one tabulated point from element coordinates.
template <std::size_t N>
inline MapData map_from_table(const std::array<Vec3, N>& coords,
                              const std::vector<double>& vals,
                              const std::vector<Vec3>& grads) {
  MapData md;
  md.point = {0, 0, 0};
  md.jacobian = {};
  const Vec3 origin = coords[0];  // translation-invariant Jacobian
  for (std::size_t i = 0; i < N; ++i)
    for (int d = 0; d < 3; ++d) {
      md.point[d] += coords[i][d] * vals[i];
      for (int r = 0; r < 3; ++r)
        md.jacobian[d][r] += (coords[i][d] - origin[d]) * grads[i][r];
    }
  const Mat3& j = md.jacobian;
  md.det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
           j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
           j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
  if (!(md.det > 0.0)) throw std::domain_error("non-positive Jacobian");
  md.inv_jacobian = invert3(j, md.det);
  return md;
}

enum class Form { stiffness, mass };

inline SparseMatrix assemble_form(const HexMesh& mesh, const DofMap& dofs,
                                  Form form, const ScalarField* source,
                                  std::vector<double>* rhs, int threads) {
  const int degree = dofs.degree;
  const BasisTable table = tabulate(degree, degree == 1 ? 2 : 3);
  const int nb = table.n_basis;
  const std::int64_t ne = mesh.n_elements();

  const std::size_t n_batches = (ne + kElementBatch - 1) / kElementBatch;
  std::vector<std::vector<Triplet>> batch_triplets(n_batches);
  std::vector<std::vector<std::pair<std::int32_t, double>>> batch_rhs(
      rhs ? n_batches : 0);

  parallel_batches(ne, kElementBatch, threads, [&](std::size_t b,
                                                   std::size_t begin,
                                                   std::size_t end) {
    auto& triplets = batch_triplets[b];
    triplets.reserve((end - begin) * nb * nb);
    std::array<Vec3, 27> coords27;
    std::array<Vec3, 8> coords8;
    std::array<std::int32_t, 27> edofs;
    std::vector<double> ke(nb * nb), be(nb);
    std::vector<Vec3> phys_grad(nb);
    for (std::size_t e = begin; e < end; ++e) {
      if (degree == 1)
        mesh.element_coords(e, coords8);
      else
        mesh.element_coords(e, coords27);
      dofs.element_dofs(mesh, e, edofs);
      std::fill(ke.begin(), ke.end(), 0.0);
      std::fill(be.begin(), be.end(), 0.0);
      for (int q = 0; q < table.rule.size(); ++q) {
        MapData md;
        try {
          md = degree == 1 ? map_from_table(coords8, table.values[q],
                                            table.ref_grads[q])
                           : map_from_table(coords27, table.values[q],
                                            table.ref_grads[q]);
        } catch (const std::domain_error&) {
          throw std::domain_error(
              "assembly: non-positive Jacobian determinant in element " +
              std::to_string(e));
        }
        const double w = table.rule.weights[q] * md.det;
        if (form == Form::stiffness) {
          for (int i = 0; i < nb; ++i)
            phys_grad[i] = push_gradient(md.inv_jacobian, table.ref_grads[q][i]);
          for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
              ke[i * nb + j] += w * dot(phys_grad[i], phys_grad[j]);
        } else {
          for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
              ke[i * nb + j] += w * table.values[q][i] * table.values[q][j];
        }
        if (rhs) {
          const double fq =
              (*source)(md.point[0], md.point[1], md.point[2]);
          for (int i = 0; i < nb; ++i) be[i] += w * fq * table.values[q][i];
        }
      }
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
          triplets.push_back({edofs[i], edofs[j], ke[i * nb + j]});
      if (rhs)
        for (int i = 0; i < nb; ++i) batch_rhs[b].push_back({edofs[i], be[i]});
    }
  });

  std::size_t total = 0;
  for (const auto& t : batch_triplets) total += t.size();
  std::vector<Triplet> triplets;
  triplets.reserve(total);
  for (auto& t : batch_triplets) {
    triplets.insert(triplets.end(), t.begin(), t.end());
    t.clear();
    t.shrink_to_fit();
  }
  if (rhs) {
    rhs->assign(dofs.n_dofs, 0.0);
    for (const auto& contributions : batch_rhs)
      for (const auto& [dof, v] : contributions) (*rhs)[dof] += v;
  }
  return from_triplets(dofs.n_dofs, dofs.n_dofs, triplets);
}

}  // namespace detail

// Stiffness K_ij = int grad phi_i . grad phi_j and load b_i = int f phi_i
// (2x2x2 Gauss for Q1, 3x3x3 for Q2; exact for affine elements). Boundary
// rows are retained; call impose_dirichlet to obtain the solvable system.
inline DiscreteSystem assemble_poisson(const HexMesh& mesh, int degree,
                                       const ScalarField& source,
                                       int threads = 0) {
  if (threads <= 0) threads = default_threads();
  DiscreteSystem sys;
  sys.dofs = build_dof_map(mesh, degree);
  sys.interior_matrix = detail::assemble_form(
      mesh, sys.dofs, detail::Form::stiffness, &source, &sys.rhs, threads);
  for (std::int32_t node : mesh.boundary_nodes) {
    const std::int32_t dof = sys.dofs.dof_of_node[node];
    if (dof >= 0) sys.dirichlet_nodes.push_back(dof);
  }
  sys.dirichlet_values.assign(sys.dirichlet_nodes.size(), 0.0);
  return sys;
}

inline SparseMatrix assemble_mass(const HexMesh& mesh, int degree,
                                  int threads = 0) {
  if (threads <= 0) threads = default_threads();
  const DofMap dofs = build_dof_map(mesh, degree);
  return detail::assemble_form(mesh, dofs, detail::Form::mass, nullptr,
                               nullptr, threads);
}

// Symmetric imposition of u = g_D on the Dirichlet dofs: boundary rows and
// columns are replaced by identity, the right-hand side absorbs K_ij g_j,
// and rhs_j = g_D(x_j). The solution of the modified system interpolates
// g_D at boundary dofs exactly.
inline void impose_dirichlet(DiscreteSystem& sys, const ScalarField& g_d) {
  const SparseMatrix& k = sys.interior_matrix;
  const std::int32_t n = sys.n();
  std::vector<std::uint8_t> is_bc(n, 0);
  for (std::size_t b = 0; b < sys.dirichlet_nodes.size(); ++b) {
    const std::int32_t j = sys.dirichlet_nodes[b];
    const Vec3& x = sys.dofs.coords[j];
    sys.dirichlet_values[b] = g_d(x[0], x[1], x[2]);
    is_bc[j] = 1;
  }
  if (sys.rhs.empty()) sys.rhs.assign(n, 0.0);

  // rhs_i -= K_ij g_j for interior i (rows of boundary j by symmetry)
  for (std::size_t b = 0; b < sys.dirichlet_nodes.size(); ++b) {
    const std::int32_t j = sys.dirichlet_nodes[b];
    const double gj = sys.dirichlet_values[b];
    if (gj == 0.0) continue;
    for (std::int64_t p = k.row_offsets[j]; p < k.row_offsets[j + 1]; ++p) {
      const std::int32_t i = k.col_indices[p];
      if (!is_bc[i]) sys.rhs[i] -= k.values[p] * gj;
    }
  }
  for (std::size_t b = 0; b < sys.dirichlet_nodes.size(); ++b)
    sys.rhs[sys.dirichlet_nodes[b]] = sys.dirichlet_values[b];

  SparseMatrix m;
  m.rows = m.cols = n;
  m.row_offsets.assign(n + 1, 0);
  for (std::int32_t i = 0; i < n; ++i) {
    std::int64_t count = 0;
    if (is_bc[i]) {
      count = 1;
    } else {
      for (std::int64_t p = k.row_offsets[i]; p < k.row_offsets[i + 1]; ++p)
        if (!is_bc[k.col_indices[p]]) ++count;
    }
    m.row_offsets[i + 1] = m.row_offsets[i] + count;
  }
  m.col_indices.resize(m.row_offsets[n]);
  m.values.resize(m.row_offsets[n]);
  for (std::int32_t i = 0; i < n; ++i) {
    std::int64_t at = m.row_offsets[i];
    if (is_bc[i]) {
      m.col_indices[at] = i;
      m.values[at] = 1.0;
      continue;
    }
    for (std::int64_t p = k.row_offsets[i]; p < k.row_offsets[i + 1]; ++p) {
      const std::int32_t j = k.col_indices[p];
      if (is_bc[j]) continue;
      m.col_indices[at] = j;
      m.values[at] = k.values[p];
      ++at;
    }
  }
  sys.matrix = std::move(m);
  sys.imposed = true;
}

// Discrete energy u^T K u against the pre-imposition stiffness.
inline double energy_norm_sq(const DiscreteSystem& sys,
                             std::span<const double> u) {
  if (static_cast<std::int32_t>(u.size()) != sys.n())
    throw std::invalid_argument("energy_norm_sq: dimension mismatch");
  std::vector<double> ku(u.size());
  sys.interior_matrix.multiply(u, ku);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * ku[i];
  return s;
}

}  // namespace hexpde
