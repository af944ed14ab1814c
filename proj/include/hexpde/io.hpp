#pragma once

// Output formats: legacy-ASCII VTK unstructured grids (8-node hexahedra,
// nodal solution as point data, per-element indicators as cell data), CSV
// writers, and 1D line sampling through tensor-product meshes.

#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "hexpde/assembly.hpp"
#include "hexpde/mesh.hpp"

namespace hexpde {

// Legacy VTK unstructured grid. Points are the mesh vertices (the Q1 subset
// of the node array); point_data_by_node is indexed by mesh node id and may
// be empty, as may cell_data (one value per element).
inline void export_vtk(const HexMesh& mesh,
                       std::span<const double> point_data_by_node,
                       std::span<const double> cell_data,
                       const std::string& path,
                       const std::string& point_name = "u",
                       const std::string& cell_name = "eta") {
  if (!point_data_by_node.empty() &&
      point_data_by_node.size() != static_cast<std::size_t>(mesh.n_nodes()))
    throw std::invalid_argument("export_vtk: point data size mismatch");
  if (!cell_data.empty() &&
      cell_data.size() != static_cast<std::size_t>(mesh.n_elements()))
    throw std::invalid_argument("export_vtk: cell data size mismatch");

  const DofMap vertices = build_dof_map(mesh, 1);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# vtk DataFile Version 3.0\nhexpde\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << vertices.n_dofs << " double\n";
  out << std::setprecision(15);
  for (const Vec3& p : vertices.coords)
    out << p[0] << " " << p[1] << " " << p[2] << "\n";
  const std::int64_t ne = mesh.n_elements();
  out << "CELLS " << ne << " " << 9 * ne << "\n";
  for (std::int64_t e = 0; e < ne; ++e) {
    out << 8;
    for (int i = 0; i < 8; ++i)
      out << " " << vertices.dof_of_node[mesh.elements_q2[e][i]];
    out << "\n";
  }
  out << "CELL_TYPES " << ne << "\n";
  for (std::int64_t e = 0; e < ne; ++e) out << 12 << "\n";
  if (!point_data_by_node.empty()) {
    out << "POINT_DATA " << vertices.n_dofs << "\n";
    out << "SCALARS " << point_name << " double 1\nLOOKUP_TABLE default\n";
    for (std::int32_t d = 0; d < vertices.n_dofs; ++d)
      out << point_data_by_node[vertices.node_of_dof[d]] << "\n";
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << ne << "\n";
    out << "SCALARS " << cell_name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : cell_data) out << v << "\n";
  }
}

// Spreads a dof vector onto the mesh node array (nodes without a dof get 0).
inline std::vector<double> dof_values_by_node(const HexMesh& mesh,
                                              const DofMap& dofs,
                                              std::span<const double> u) {
  std::vector<double> by_node(mesh.n_nodes(), 0.0);
  for (std::int32_t d = 0; d < dofs.n_dofs; ++d)
    by_node[dofs.node_of_dof[d]] = u[d];
  return by_node;
}

struct LineSample {
  double coord = 0.0;
  double value = 0.0;
  bool inside = false;  // gap rows (removed cells) are marked, value unset
};

namespace detail {
inline std::int32_t locate_cell(const std::vector<double>& lines, double x) {
  if (x < lines.front() || x > lines.back()) return -1;
  auto it = std::upper_bound(lines.begin(), lines.end(), x);
  std::int32_t cell = static_cast<std::int32_t>(it - lines.begin()) - 1;
  const std::int32_t n_cells = static_cast<std::int32_t>(lines.size()) - 1;
  return std::min(std::max(cell, 0), n_cells - 1);
}
}  // namespace detail

// Samples u_h along an axis-parallel line through element-local
// interpolation at evenly spaced points; values are continuous across
// element boundaries. fixed holds the two frozen coordinates in increasing
// axis order. Points inside removed cells come back marked as gaps.
inline std::vector<LineSample> line_sample(const HexMesh& mesh,
                                           const DofMap& dofs,
                                           std::span<const double> u, int axis,
                                           const std::array<double, 2>& fixed,
                                           int samples) {
  if (!mesh.grid.present())
    throw std::invalid_argument("line_sample: mesh has no tensor-grid data");
  if (axis < 0 || axis > 2 || samples < 2)
    throw std::invalid_argument("line_sample: bad arguments");
  const int au = axis == 0 ? 1 : 0;
  const int av = axis == 2 ? 1 : 2;
  const auto& lines = mesh.grid.lines[axis];
  const std::int32_t cu = detail::locate_cell(mesh.grid.lines[au], fixed[0]);
  const std::int32_t cv = detail::locate_cell(mesh.grid.lines[av], fixed[1]);
  if (cu < 0 || cv < 0)
    throw std::invalid_argument("line_sample: line lies outside the domain box");

  std::vector<LineSample> out(samples);
  const double a = lines.front(), b = lines.back();
  std::array<std::int32_t, 27> edofs;
  for (int s = 0; s < samples; ++s) {
    const double x = a + (b - a) * s / (samples - 1);
    out[s].coord = x;
    const std::int32_t ca = detail::locate_cell(lines, x);
    std::array<std::int32_t, 3> cell{};
    cell[axis] = ca;
    cell[au] = cu;
    cell[av] = cv;
    const std::int32_t e =
        mesh.grid.cell_to_element[mesh.grid.cell_linear(cell[0], cell[1],
                                                        cell[2])];
    if (e < 0) continue;  // gap
    Vec3 pt;
    for (int d = 0; d < 3; ++d) {
      const auto& g = mesh.grid.lines[d];
      const double lo = g[cell[d]], hi = g[cell[d] + 1];
      const double coord = d == axis ? x : (d == au ? fixed[0] : fixed[1]);
      pt[d] = 2.0 * (coord - lo) / (hi - lo) - 1.0;
    }
    dofs.element_dofs(mesh, e, edofs);
    double value = 0.0;
    if (dofs.degree == 1) {
      const auto basis = q1_eval(pt);
      for (int i = 0; i < 8; ++i) value += u[edofs[i]] * basis.values[i];
    } else {
      const auto basis = q2_eval(pt);
      for (int i = 0; i < 27; ++i) value += u[edofs[i]] * basis.values[i];
    }
    out[s].value = value;
    out[s].inside = true;
  }
  return out;
}

// ---- CSV ---------------------------------------------------------------------

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(15);
  return out;
}

inline void write_residual_csv(std::span<const double> history,
                               const std::string& path) {
  auto out = open_csv(path);
  out << "iteration,residual\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i << "," << history[i] << "\n";
}

inline void write_line_csv(std::span<const LineSample> samples,
                           const std::string& path) {
  auto out = open_csv(path);
  out << "coord,value,inside\n";
  for (const auto& s : samples) {
    out << s.coord << ",";
    if (s.inside) out << s.value;
    out << "," << (s.inside ? 1 : 0) << "\n";
  }
}

inline void write_indicator_csv(std::span<const double> eta,
                                const std::string& path) {
  auto out = open_csv(path);
  out << "element,eta\n";
  for (std::size_t e = 0; e < eta.size(); ++e)
    out << e << "," << eta[e] << "\n";
}

}  // namespace hexpde
