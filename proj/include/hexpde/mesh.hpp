#pragma once

// Hexahedral tensor-product meshes for the reference domains (cube,
// staircase, borehole). Meshes carry the full triquadratic node set; the
// trilinear connectivity is the leading 8 entries of each element. Node
// numbering is lexicographic in (x, y, z) with x fastest; element-local
// orderings follow the reference element tables. Meshes are immutable after
// construction.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hexpde/reference_elements.hpp"

namespace hexpde {

enum class DomainTag : std::uint32_t { cube = 0, staircase = 1, borehole = 2, custom = 3 };

inline const char* to_string(DomainTag t) {
  switch (t) {
    case DomainTag::cube: return "cube";
    case DomainTag::staircase: return "staircase";
    case DomainTag::borehole: return "borehole";
    default: return "custom";
  }
}

// Axis grid lines and the (i,j,k) cell -> element index table for meshes
// built as tensor products (cells removed from the domain map to -1).
struct TensorGrid {
  std::array<std::vector<double>, 3> lines;
  std::array<std::int32_t, 3> cells{0, 0, 0};
  std::vector<std::int32_t> cell_to_element;

  bool present() const { return cells[0] > 0; }
  std::int64_t cell_linear(std::int32_t i, std::int32_t j,
                           std::int32_t k) const {
    return i + static_cast<std::int64_t>(cells[0]) *
                   (j + static_cast<std::int64_t>(cells[1]) * k);
  }
};

struct BoundaryFace {
  std::int32_t element;
  std::int32_t face;  // local face 0..5 (stored 1-based in mesh files)
};

struct HexMesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<std::int32_t, 27>> elements_q2;
  std::vector<std::int32_t> boundary_nodes;          // sorted
  std::vector<BoundaryFace> boundary_faces;
  std::vector<std::array<std::int32_t, 6>> neighbors;  // -1 across boundary
  DomainTag domain_tag = DomainTag::custom;
  TensorGrid grid;

  std::int64_t n_nodes() const { return static_cast<std::int64_t>(nodes.size()); }
  std::int64_t n_elements() const {
    return static_cast<std::int64_t>(elements_q2.size());
  }

  std::span<const std::int32_t> elements_q1(std::int64_t e) const {
    return {elements_q2[e].data(), 8};
  }

  template <std::size_t N>
  void element_coords(std::int64_t e, std::array<Vec3, N>& out) const {
    static_assert(N == 8 || N == 27);
    for (std::size_t i = 0; i < N; ++i) out[i] = nodes[elements_q2[e][i]];
  }
};

struct BoundaryInfo {
  std::vector<std::int32_t> boundary_nodes;
  std::vector<BoundaryFace> boundary_faces;
  std::vector<std::array<std::int32_t, 6>> neighbors;
};

// Boundary faces are exactly the element faces not shared with another
// element; boundary nodes are the union of their (9-node) face node sets.
// Throws on non-conforming connectivity (a face shared by more than two
// elements).
inline BoundaryInfo classify_boundary(const HexMesh& mesh) {
  struct FaceKey {
    std::array<std::int32_t, 4> v;
    bool operator==(const FaceKey&) const = default;
  };
  struct FaceKeyHash {
    std::size_t operator()(const FaceKey& k) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL;
      for (std::int32_t x : k.v) {
        h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) +
             (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  const std::int64_t ne = mesh.n_elements();
  BoundaryInfo info;
  info.neighbors.assign(ne, {-1, -1, -1, -1, -1, -1});

  std::unordered_map<FaceKey, std::pair<std::int32_t, std::int32_t>, FaceKeyHash>
      open_faces;
  open_faces.reserve(3 * ne);
  for (std::int64_t e = 0; e < ne; ++e) {
    for (int f = 0; f < 6; ++f) {
      FaceKey key;
      const auto& fv = face_vertices(f);
      for (int i = 0; i < 4; ++i) key.v[i] = mesh.elements_q2[e][fv[i]];
      std::sort(key.v.begin(), key.v.end());
      auto it = open_faces.find(key);
      if (it == open_faces.end()) {
        open_faces.emplace(key, std::make_pair(static_cast<std::int32_t>(e),
                                               static_cast<std::int32_t>(f)));
      } else if (it->second.first >= 0) {
        const auto [oe, of] = it->second;
        info.neighbors[e][f] = oe;
        info.neighbors[oe][of] = static_cast<std::int32_t>(e);
        it->second.first = -1;  // matched; a third occurrence is an error
      } else {
        throw std::runtime_error(
            "classify_boundary: face shared by more than two elements");
      }
    }
  }

  std::vector<std::int32_t> bnodes;
  for (std::int64_t e = 0; e < ne; ++e)
    for (int f = 0; f < 6; ++f)
      if (info.neighbors[e][f] < 0) {
        info.boundary_faces.push_back(
            {static_cast<std::int32_t>(e), static_cast<std::int32_t>(f)});
        for (int n : face_q2_nodes(f)) bnodes.push_back(mesh.elements_q2[e][n]);
      }
  std::sort(bnodes.begin(), bnodes.end());
  bnodes.erase(std::unique(bnodes.begin(), bnodes.end()), bnodes.end());
  info.boundary_nodes = std::move(bnodes);
  return info;
}

namespace detail {

// Generic tensor-product builder. keep(i,j,k) selects the cells that belong
// to the domain. Node numbering is lexicographic over the fine (half-spacing)
// lattice restricted to referenced nodes; memory stays proportional to one
// lattice plane.
inline HexMesh build_tensor_product_mesh(
    const std::vector<double>& xs, const std::vector<double>& ys,
    const std::vector<double>& zs,
    const std::function<bool(std::int32_t, std::int32_t, std::int32_t)>& keep,
    DomainTag tag) {
  const std::int32_t nx = static_cast<std::int32_t>(xs.size()) - 1;
  const std::int32_t ny = static_cast<std::int32_t>(ys.size()) - 1;
  const std::int32_t nz = static_cast<std::int32_t>(zs.size()) - 1;
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("tensor mesh: need at least one cell per axis");

  auto fine = [](const std::vector<double>& g) {
    std::vector<double> f(2 * g.size() - 1);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      f[2 * i] = g[i];
      f[2 * i + 1] = 0.5 * (g[i] + g[i + 1]);
    }
    f.back() = g.back();
    return f;
  };
  const std::vector<double> fx = fine(xs), fy = fine(ys), fz = fine(zs);
  const std::int64_t mx = fx.size(), my = fy.size();

  HexMesh mesh;
  mesh.domain_tag = tag;
  mesh.grid.lines = {xs, ys, zs};
  mesh.grid.cells = {nx, ny, nz};
  mesh.grid.cell_to_element.assign(
      static_cast<std::size_t>(nx) * ny * nz, -1);

  std::int32_t next_element = 0;
  for (std::int32_t k = 0; k < nz; ++k)
    for (std::int32_t j = 0; j < ny; ++j)
      for (std::int32_t i = 0; i < nx; ++i)
        if (keep(i, j, k))
          mesh.grid.cell_to_element[mesh.grid.cell_linear(i, j, k)] =
              next_element++;
  if (next_element == 0)
    throw std::invalid_argument("tensor mesh: no cells kept");

  // Mark nodes referenced by kept cells one fine-lattice plane at a time and
  // assign lexicographic ids; plane c touches cell layers (c-1)/2 and c/2.
  const std::int64_t plane = mx * my;
  std::vector<std::uint8_t> used(plane);
  std::vector<std::int32_t> rank_prev(plane), rank_cur(plane);
  std::vector<std::int64_t> plane_base(fz.size() + 1, 0);

  auto mark_plane = [&](std::int64_t c) {
    std::fill(used.begin(), used.end(), 0);
    for (std::int32_t k :
         {static_cast<std::int32_t>((c - 1) / 2), static_cast<std::int32_t>(c / 2)}) {
      if (k < 0 || k >= nz || 2 * k > c || 2 * k + 2 < c) continue;
      for (std::int32_t j = 0; j < ny; ++j)
        for (std::int32_t i = 0; i < nx; ++i) {
          if (mesh.grid.cell_to_element[mesh.grid.cell_linear(i, j, k)] < 0)
            continue;
          for (int db = 0; db <= 2; ++db)
            for (int da = 0; da <= 2; ++da)
              used[(2 * i + da) + mx * (2 * j + db)] = 1;
        }
    }
  };

  for (std::int64_t c = 0; c < static_cast<std::int64_t>(fz.size()); ++c) {
    mark_plane(c);
    std::int64_t count = 0;
    for (std::int64_t p = 0; p < plane; ++p)
      if (used[p]) {
        mesh.nodes.push_back({fx[p % mx], fy[p / mx], fz[c]});
        ++count;
      }
    plane_base[c + 1] = plane_base[c] + count;
  }

  auto compute_rank = [&](std::int64_t c, std::vector<std::int32_t>& rank) {
    mark_plane(c);
    std::int32_t r = 0;
    for (std::int64_t p = 0; p < plane; ++p) rank[p] = used[p] ? r++ : -1;
  };

  mesh.elements_q2.resize(next_element);
  std::vector<std::int32_t> rank_mid(plane), rank_top(plane);
  compute_rank(0, rank_prev);
  for (std::int32_t k = 0; k < nz; ++k) {
    // rank planes for fine layers 2k, 2k+1, 2k+2
    compute_rank(2 * k + 1, rank_mid);
    compute_rank(2 * k + 2, rank_top);
    const std::array<const std::vector<std::int32_t>*, 3> ranks = {
        &rank_prev, &rank_mid, &rank_top};
    const std::array<std::int64_t, 3> bases = {
        plane_base[2 * k], plane_base[2 * k + 1], plane_base[2 * k + 2]};
    for (std::int32_t j = 0; j < ny; ++j)
      for (std::int32_t i = 0; i < nx; ++i) {
        const std::int32_t e =
            mesh.grid.cell_to_element[mesh.grid.cell_linear(i, j, k)];
        if (e < 0) continue;
        auto& conn = mesh.elements_q2[e];
        for (int l = 0; l < 27; ++l) {
          const int da = kQ2Nodes[l][0] + 1;
          const int db = kQ2Nodes[l][1] + 1;
          const int dc = kQ2Nodes[l][2] + 1;
          const std::int64_t p = (2 * i + da) + mx * (2 * j + db);
          conn[l] = static_cast<std::int32_t>(bases[dc] + (*ranks[dc])[p]);
        }
      }
    rank_prev.swap(rank_top);
  }

  auto info = classify_boundary(mesh);
  mesh.boundary_nodes = std::move(info.boundary_nodes);
  mesh.boundary_faces = std::move(info.boundary_faces);
  mesh.neighbors = std::move(info.neighbors);
  return mesh;
}

inline std::vector<double> uniform_lines(double a, double b, std::int32_t n) {
  std::vector<double> g(n + 1);
  for (std::int32_t i = 0; i <= n; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / n;
  g.front() = a;
  g.back() = b;
  return g;
}

// Common ratio r > 1 such that first*(r^n - 1)/(r - 1) == length.
inline double geometric_ratio(double first, std::int32_t n, double length) {
  auto total = [&](double r) {
    double sum = 0.0, w = first;
    for (std::int32_t i = 0; i < n; ++i, w *= r) sum += w;
    return sum;
  };
  double lo = 1.0 + 1e-15, hi = 2.0;
  while (total(hi) < length) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < length ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Uniform mesh of the cube [-1,1]^3 with n^3 elements.
inline HexMesh build_cube_mesh(std::int32_t n) {
  if (n < 1) throw std::invalid_argument("build_cube_mesh: n must be >= 1");
  auto g = detail::uniform_lines(-1.0, 1.0, n);
  return detail::build_tensor_product_mesh(
      g, g, g, [](auto, auto, auto) { return true; }, DomainTag::cube);
}

// Uniform mesh of the staircase domain [-1,1]^3 \ [-1,0)x[-1,0)x[-1,1]
// with n^3 - (n/2)^2 * n elements. n must be even so the reentrant edge
// lies on grid lines.
inline HexMesh build_staircase_mesh(std::int32_t n) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("build_staircase_mesh: n must be even and >= 2");
  auto g = detail::uniform_lines(-1.0, 1.0, n);
  const std::int32_t half = n / 2;
  return detail::build_tensor_product_mesh(
      g, g, g,
      [half](std::int32_t i, std::int32_t j, std::int32_t) {
        return i >= half || j >= half;
      },
      DomainTag::staircase);
}

// Borehole domain [-1,1]^3 \ (-eps,eps)x[0,1]x(-eps,eps). The y grid is
// uniform with 32*2^(level-2) cells of width h_max; the x and z grids place
// 2*2^(level-2) uniform cells across the hole span and, per side, a
// geometric progression starting at width h_min = eps*2^(2-level) next to
// the hole, capped at h_max and finished with uniform h_max cells out to the
// boundary. Level 2 reproduces the 48x32x48 tensor layout with spacing
// growing from eps to 0.0625 (hole-adjacent aspect ratio 2/(32 eps)); each
// higher level halves all spacings.
inline HexMesh build_borehole_mesh(std::int32_t level, double eps) {
  if (level < 2 || level > 5)
    throw std::invalid_argument("build_borehole_mesh: level must be in 2..5");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("build_borehole_mesh: eps must be in (0,1)");
  const std::int32_t m = 1 << (level - 2);
  const std::int32_t n_side = 23 * m;
  const double h_min = eps / m;
  const double h_max = 2.0 / (32 * m);
  const double length = 1.0 - eps;
  if (h_min >= h_max || n_side * h_min >= length)
    throw std::invalid_argument(
        "build_borehole_mesh: eps not representable as a grid line "
        "(hole too wide for the graded layout)");

  // largest geometric run whose final cell stays below h_max; the remaining
  // cells are uniform at h_max
  std::int32_t n_geo = 0;
  double r = 1.0;
  for (std::int32_t k = n_side; k >= 1; --k) {
    const double target = length - (n_side - k) * h_max;
    if (target <= k * h_min || target >= k * h_max) continue;
    const double rk = detail::geometric_ratio(h_min, k, target);
    if (h_min * std::pow(rk, k - 1) <= h_max * (1.0 + 1e-12)) {
      n_geo = k;
      r = rk;
      break;
    }
  }
  if (n_geo == 0)
    throw std::invalid_argument(
        "build_borehole_mesh: eps not representable as a grid line "
        "(no admissible grading)");

  std::vector<double> x_lines;
  x_lines.reserve(2 * n_side + 2 * m + 1);
  // right side [eps, 1]: geometric then uniform
  std::vector<double> right(n_side + 1);
  right[0] = eps;
  double w = h_min;
  for (std::int32_t i = 0; i < n_side; ++i) {
    right[i + 1] = right[i] + (i < n_geo ? w : h_max);
    if (i < n_geo) w *= r;
  }
  right.back() = 1.0;
  // mirrored left side, hole span, right side
  for (std::int32_t i = n_side; i >= 1; --i) x_lines.push_back(-right[i]);
  for (std::int32_t t = -m; t <= m; ++t)
    x_lines.push_back(static_cast<double>(t) * h_min);
  for (std::int32_t i = 1; i <= n_side; ++i) x_lines.push_back(right[i]);

  const std::vector<double> y_lines = detail::uniform_lines(-1.0, 1.0, 32 * m);
  const std::vector<double>& z_lines = x_lines;

  auto centroid_in_hole = [&](std::int32_t i, std::int32_t j, std::int32_t k) {
    const double cx = 0.5 * (x_lines[i] + x_lines[i + 1]);
    const double cy = 0.5 * (y_lines[j] + y_lines[j + 1]);
    const double cz = 0.5 * (z_lines[k] + z_lines[k + 1]);
    return cx > -eps && cx < eps && cy > 0.0 && cy < 1.0 && cz > -eps &&
           cz < eps;
  };
  return detail::build_tensor_product_mesh(
      x_lines, y_lines, z_lines,
      [&](std::int32_t i, std::int32_t j, std::int32_t k) {
        return !centroid_in_hole(i, j, k);
      },
      DomainTag::borehole);
}

// Sum of Jacobian-determinant quadrature over all elements (compensated
// summation: element volumes span many orders of magnitude on graded grids).
inline double total_volume(const HexMesh& mesh, int points_per_axis = 3) {
  const QuadratureRule rule = gauss_rule(points_per_axis);
  double vol = 0.0, carry = 0.0;
  std::array<Vec3, 8> coords;
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    mesh.element_coords(e, coords);
    double cell = 0.0;
    for (int q = 0; q < rule.size(); ++q)
      cell +=
          rule.weights[q] * isoparametric_map(coords, rule.points[q], 1).det;
    const double y = cell - carry;
    const double t = vol + y;
    carry = (t - vol) - y;
    vol = t;
  }
  return vol;
}

// Throws if any element has a non-positive Jacobian determinant at the
// given rule's points; reports the offending element index.
inline void check_positive_jacobians(const HexMesh& mesh,
                                     int points_per_axis = 2) {
  const QuadratureRule rule = gauss_rule(points_per_axis);
  std::array<Vec3, 8> coords;
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    mesh.element_coords(e, coords);
    for (int q = 0; q < rule.size(); ++q) {
      try {
        (void)isoparametric_map(coords, rule.points[q], 1);
      } catch (const std::domain_error&) {
        throw std::domain_error("element " + std::to_string(e) +
                                ": non-positive Jacobian determinant");
      }
    }
  }
}

// Axis extents (hx, hy, hz) of an axis-aligned element, from its vertices.
inline Vec3 element_extents(const HexMesh& mesh, std::int64_t e) {
  const auto& c = mesh.elements_q2[e];
  return {mesh.nodes[c[1]][0] - mesh.nodes[c[0]][0],
          mesh.nodes[c[3]][1] - mesh.nodes[c[0]][1],
          mesh.nodes[c[4]][2] - mesh.nodes[c[0]][2]};
}

inline double max_aspect_ratio(const HexMesh& mesh) {
  double worst = 1.0;
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    const Vec3 h = element_extents(mesh, e);
    const double hi = std::max({h[0], h[1], h[2]});
    const double lo = std::min({h[0], h[1], h[2]});
    if (lo > 0.0) worst = std::max(worst, hi / lo);
  }
  return worst;
}

// ---- mesh files -----------------------------------------------------------
// Binary format (little-endian), version 1:
//   magic "HEXPDEM1", u32 version, u32 domain_tag,
//   i64 n_nodes, n_elements, n_boundary_nodes, n_boundary_faces,
//   nodes as f64 (x,y,z) triples, elements as 27 x i32,
//   boundary node ids as i32, boundary faces as (i32 element, i32 face 1..6),
//   u8 has_grid; if set: per axis i64 count + f64 lines, then i32 cell
//   counts and the cell->element table as i32.

namespace detail {
inline constexpr char kMeshMagic[8] = {'H', 'E', 'X', 'P', 'D', 'E', 'M', '1'};

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace detail

inline void save_mesh_binary(const HexMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(detail::kMeshMagic, 8);
  detail::write_pod(out, std::uint32_t{1});
  detail::write_pod(out, static_cast<std::uint32_t>(mesh.domain_tag));
  detail::write_pod(out, mesh.n_nodes());
  detail::write_pod(out, mesh.n_elements());
  detail::write_pod(out, static_cast<std::int64_t>(mesh.boundary_nodes.size()));
  detail::write_pod(out, static_cast<std::int64_t>(mesh.boundary_faces.size()));
  out.write(reinterpret_cast<const char*>(mesh.nodes.data()),
            static_cast<std::streamsize>(mesh.nodes.size() * sizeof(Vec3)));
  out.write(reinterpret_cast<const char*>(mesh.elements_q2.data()),
            static_cast<std::streamsize>(mesh.elements_q2.size() * 27 *
                                         sizeof(std::int32_t)));
  out.write(reinterpret_cast<const char*>(mesh.boundary_nodes.data()),
            static_cast<std::streamsize>(mesh.boundary_nodes.size() *
                                         sizeof(std::int32_t)));
  for (const auto& bf : mesh.boundary_faces) {
    detail::write_pod(out, bf.element);
    detail::write_pod(out, bf.face + 1);
  }
  const std::uint8_t has_grid = mesh.grid.present() ? 1 : 0;
  detail::write_pod(out, has_grid);
  if (has_grid) {
    for (int d = 0; d < 3; ++d) {
      detail::write_pod(out,
                        static_cast<std::int64_t>(mesh.grid.lines[d].size()));
      out.write(reinterpret_cast<const char*>(mesh.grid.lines[d].data()),
                static_cast<std::streamsize>(mesh.grid.lines[d].size() *
                                             sizeof(double)));
    }
    for (int d = 0; d < 3; ++d) detail::write_pod(out, mesh.grid.cells[d]);
    out.write(reinterpret_cast<const char*>(mesh.grid.cell_to_element.data()),
              static_cast<std::streamsize>(mesh.grid.cell_to_element.size() *
                                           sizeof(std::int32_t)));
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

inline HexMesh load_mesh_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, detail::kMeshMagic, 8) != 0)
    throw std::runtime_error(path + ": not a hexpde mesh file");
  std::uint32_t version = 0, tag = 0;
  detail::read_pod(in, version);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported mesh format version");
  detail::read_pod(in, tag);
  std::int64_t nn = 0, ne = 0, nbn = 0, nbf = 0;
  detail::read_pod(in, nn);
  detail::read_pod(in, ne);
  detail::read_pod(in, nbn);
  detail::read_pod(in, nbf);
  HexMesh mesh;
  mesh.domain_tag = static_cast<DomainTag>(tag);
  mesh.nodes.resize(nn);
  mesh.elements_q2.resize(ne);
  mesh.boundary_nodes.resize(nbn);
  mesh.boundary_faces.resize(nbf);
  in.read(reinterpret_cast<char*>(mesh.nodes.data()),
          static_cast<std::streamsize>(nn * sizeof(Vec3)));
  in.read(reinterpret_cast<char*>(mesh.elements_q2.data()),
          static_cast<std::streamsize>(ne * 27 * sizeof(std::int32_t)));
  in.read(reinterpret_cast<char*>(mesh.boundary_nodes.data()),
          static_cast<std::streamsize>(nbn * sizeof(std::int32_t)));
  for (auto& bf : mesh.boundary_faces) {
    detail::read_pod(in, bf.element);
    detail::read_pod(in, bf.face);
    bf.face -= 1;
  }
  std::uint8_t has_grid = 0;
  detail::read_pod(in, has_grid);
  if (has_grid) {
    for (int d = 0; d < 3; ++d) {
      std::int64_t count = 0;
      detail::read_pod(in, count);
      mesh.grid.lines[d].resize(count);
      in.read(reinterpret_cast<char*>(mesh.grid.lines[d].data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    }
    for (int d = 0; d < 3; ++d) detail::read_pod(in, mesh.grid.cells[d]);
    mesh.grid.cell_to_element.resize(static_cast<std::size_t>(
        mesh.grid.cells[0]) * mesh.grid.cells[1] * mesh.grid.cells[2]);
    in.read(reinterpret_cast<char*>(mesh.grid.cell_to_element.data()),
            static_cast<std::streamsize>(mesh.grid.cell_to_element.size() *
                                         sizeof(std::int32_t)));
  }
  if (!in) throw std::runtime_error("short read from " + path);
  mesh.neighbors = classify_boundary(mesh).neighbors;
  return mesh;
}

// Plain-text companion for debugging: one node per line, one element per
// line, then boundary lists.
inline void save_mesh_text(const HexMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "hexpde mesh v1 " << to_string(mesh.domain_tag) << "\n";
  out << "nodes " << mesh.n_nodes() << "\n";
  for (const auto& p : mesh.nodes)
    out << p[0] << " " << p[1] << " " << p[2] << "\n";
  out << "elements " << mesh.n_elements() << "\n";
  for (const auto& conn : mesh.elements_q2) {
    for (int i = 0; i < 27; ++i) out << conn[i] << (i == 26 ? '\n' : ' ');
  }
  out << "boundary_nodes " << mesh.boundary_nodes.size() << "\n";
  for (std::int32_t v : mesh.boundary_nodes) out << v << "\n";
  out << "boundary_faces " << mesh.boundary_faces.size() << "\n";
  for (const auto& bf : mesh.boundary_faces)
    out << bf.element << " " << bf.face + 1 << "\n";
}

}  // namespace hexpde
