#pragma once

// Reference hexahedron [-1,1]^3: trilinear (Q1, 8-node) and triquadratic
// (Q2, 27-node) Lagrangian bases, tensor Gauss rules and the isoparametric
// map with Jacobian data.
//
// Local orderings:
//   vertices 1..8   : (-1,-1,-1) (1,-1,-1) (1,1,-1) (-1,1,-1)
//                     (-1,-1, 1) (1,-1, 1) (1,1, 1) (-1,1, 1)
//   Q2 nodes 9..27  : the eta=-1 face (4 edge midpoints + face centre),
//                     then the eta=0 mid-layer ring + element centre,
//                     then the eta=+1 face
//   faces 1..6      : zeta=-1, xi=+1, zeta=+1, xi=-1, eta=-1, eta=+1

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hexpde {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Local node coordinates, entries in {-1,0,1}.
inline constexpr std::array<std::array<int, 3>, 27> kQ2Nodes = {{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1},  {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},   {-1, 1, 1},
    {0, -1, -1},  {1, -1, 0},  {0, -1, 1},  {-1, -1, 0}, {0, -1, 0},
    {0, 0, -1},   {1, 0, -1},  {1, 0, 0},   {1, 0, 1},   {0, 0, 1},
    {-1, 0, 1},   {-1, 0, 0},  {-1, 0, -1}, {0, 0, 0},
    {0, 1, -1},   {1, 1, 0},   {0, 1, 1},   {-1, 1, 0},  {0, 1, 0},
}};

// Face f is the plane {ref coord kFaceAxis[f] == kFaceSide[f]}.
inline constexpr std::array<int, 6> kFaceAxis = {2, 0, 2, 0, 1, 1};
inline constexpr std::array<int, 6> kFaceSide = {-1, 1, 1, -1, -1, 1};

// Local vertex ids (0-based) of each face, and all 9 Q2 node ids on it.
inline const std::array<int, 4>& face_vertices(int face) {
  static const std::array<std::array<int, 4>, 6> table = [] {
    std::array<std::array<int, 4>, 6> t{};
    for (int f = 0; f < 6; ++f) {
      int m = 0;
      for (int i = 0; i < 8; ++i)
        if (kQ2Nodes[i][kFaceAxis[f]] == kFaceSide[f]) t[f][m++] = i;
    }
    return t;
  }();
  return table[face];
}

inline const std::array<int, 9>& face_q2_nodes(int face) {
  static const std::array<std::array<int, 9>, 6> table = [] {
    std::array<std::array<int, 9>, 6> t{};
    for (int f = 0; f < 6; ++f) {
      int m = 0;
      for (int i = 0; i < 27; ++i)
        if (kQ2Nodes[i][kFaceAxis[f]] == kFaceSide[f]) t[f][m++] = i;
    }
    return t;
  }();
  return table[face];
}

template <int N>
struct BasisEval {
  std::array<double, N> values;
  std::array<Vec3, N> ref_gradients;
};

inline BasisEval<8> q1_eval(const Vec3& pt) {
  BasisEval<8> out;
  for (int i = 0; i < 8; ++i) {
    const double xi = kQ2Nodes[i][0], et = kQ2Nodes[i][1], ze = kQ2Nodes[i][2];
    const double a = 1.0 + xi * pt[0];
    const double b = 1.0 + et * pt[1];
    const double c = 1.0 + ze * pt[2];
    out.values[i] = 0.125 * a * b * c;
    out.ref_gradients[i] = {0.125 * xi * b * c, 0.125 * et * a * c,
                            0.125 * ze * a * b};
  }
  return out;
}

namespace detail {
// 1D quadratic Lagrange polynomials on nodes {-1,0,1}.
inline double n1d(double t, int node) {
  if (node < 0) return 0.5 * t * (t - 1.0);
  if (node == 0) return 1.0 - t * t;
  return 0.5 * t * (t + 1.0);
}
inline double dn1d(double t, int node) {
  if (node < 0) return t - 0.5;
  if (node == 0) return -2.0 * t;
  return t + 0.5;
}
}  // namespace detail

inline BasisEval<27> q2_eval(const Vec3& pt) {
  BasisEval<27> out;
  for (int i = 0; i < 27; ++i) {
    using detail::dn1d;
    using detail::n1d;
    const auto& nd = kQ2Nodes[i];
    const double a = n1d(pt[0], nd[0]), b = n1d(pt[1], nd[1]),
                 c = n1d(pt[2], nd[2]);
    out.values[i] = a * b * c;
    out.ref_gradients[i] = {dn1d(pt[0], nd[0]) * b * c,
                            a * dn1d(pt[1], nd[1]) * c,
                            a * b * dn1d(pt[2], nd[2])};
  }
  return out;
}

// Reference Hessian of the trilinear expansion sum_i u_i l^i: only the mixed
// second derivatives are nonzero. Returns the symmetric 3x3 matrix.
inline Mat3 q1_ref_hessian(std::span<const double> coeffs, const Vec3& pt) {
  Mat3 h{};
  for (int i = 0; i < 8; ++i) {
    const double xi = kQ2Nodes[i][0], et = kQ2Nodes[i][1], ze = kQ2Nodes[i][2];
    const double u = coeffs[i];
    h[0][1] += 0.125 * u * xi * et * (1.0 + ze * pt[2]);
    h[0][2] += 0.125 * u * xi * ze * (1.0 + et * pt[1]);
    h[1][2] += 0.125 * u * et * ze * (1.0 + xi * pt[0]);
  }
  h[1][0] = h[0][1];
  h[2][0] = h[0][2];
  h[2][1] = h[1][2];
  return h;
}

struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {
inline void gauss_1d(int k, std::span<double> x, std::span<double> w) {
  switch (k) {
    case 1:
      x[0] = 0.0;
      w[0] = 2.0;
      break;
    case 2:
      x[0] = -(x[1] = 0.57735026918962576450914878);
      w[0] = w[1] = 1.0;
      break;
    case 3:
      x[0] = -(x[2] = 0.77459666924148337703585308);
      x[1] = 0.0;
      w[0] = w[2] = 5.0 / 9.0;
      w[1] = 8.0 / 9.0;
      break;
    case 4:
      x[0] = -(x[3] = 0.86113631159405257522394649);
      x[1] = -(x[2] = 0.33998104358485626480266576);
      w[0] = w[3] = 0.34785484513745385737306395;
      w[1] = w[2] = 0.65214515486254614262693605;
      break;
    case 5:
      x[0] = -(x[4] = 0.90617984593866399279762688);
      x[1] = -(x[3] = 0.53846931010568309103631442);
      x[2] = 0.0;
      w[0] = w[4] = 0.23692688505618908751426404;
      w[1] = w[3] = 0.47862867049936646804129152;
      w[2] = 0.56888888888888888888888889;
      break;
    default:
      throw std::invalid_argument("gauss_rule: points_per_axis must be 1..5");
  }
}
}  // namespace detail

// Tensor-product Gauss-Legendre rule on [-1,1]^3, exact for per-axis
// polynomial degree <= 2*points_per_axis - 1.
inline QuadratureRule gauss_rule(int points_per_axis) {
  std::array<double, 5> x{}, w{};
  detail::gauss_1d(points_per_axis, x, w);
  QuadratureRule rule;
  const int k = points_per_axis;
  rule.points.reserve(k * k * k);
  rule.weights.reserve(k * k * k);
  for (int c = 0; c < k; ++c)
    for (int b = 0; b < k; ++b)
      for (int a = 0; a < k; ++a) {
        rule.points.push_back({x[a], x[b], x[c]});
        rule.weights.push_back(w[a] * w[b] * w[c]);
      }
  return rule;
}

// 2D tensor Gauss rule for a reference face; points embedded in 3D with the
// fixed coordinate set by the face plane.
inline QuadratureRule face_gauss_rule(int face, int points_per_axis) {
  std::array<double, 5> x{}, w{};
  detail::gauss_1d(points_per_axis, x, w);
  QuadratureRule rule;
  const int axis = kFaceAxis[face];
  const int u = axis == 0 ? 1 : 0;
  const int v = axis == 2 ? 1 : 2;
  for (int b = 0; b < points_per_axis; ++b)
    for (int a = 0; a < points_per_axis; ++a) {
      Vec3 p{};
      p[axis] = kFaceSide[face];
      p[u] = x[a];
      p[v] = x[b];
      rule.points.push_back(p);
      rule.weights.push_back(w[a] * w[b]);
    }
  return rule;
}

struct MapData {
  Vec3 point;
  Mat3 jacobian;      // d(x,y,z)/d(xi,eta,zeta)
  double det;
  Mat3 inv_jacobian;
};

inline Mat3 invert3(const Mat3& m, double det) {
  Mat3 inv;
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

// Isoparametric map x(xi) = sum_i x_i^e phi^i(xi) for degree 1 (8 coords)
// or 2 (27 coords). Throws std::domain_error on a non-positive Jacobian
// determinant (inverted or degenerate element).
inline MapData isoparametric_map(std::span<const Vec3> element_coords,
                                 const Vec3& pt, int degree) {
  const std::size_t expected = degree == 1 ? 8 : 27;
  if ((degree != 1 && degree != 2) || element_coords.size() != expected)
    throw std::invalid_argument("isoparametric_map: coords/degree mismatch");

  MapData out;
  out.point = {0, 0, 0};
  out.jacobian = {};
  // the Jacobian is translation-invariant; working relative to the first
  // vertex avoids cancellation on small elements far from the origin
  const Vec3 origin = element_coords[0];
  auto accumulate = [&](const auto& basis) {
    for (std::size_t i = 0; i < expected; ++i) {
      const Vec3& c = element_coords[i];
      for (int d = 0; d < 3; ++d) {
        out.point[d] += c[d] * basis.values[i];
        for (int r = 0; r < 3; ++r)
          out.jacobian[d][r] += (c[d] - origin[d]) * basis.ref_gradients[i][r];
      }
    }
  };
  if (degree == 1)
    accumulate(q1_eval(pt));
  else
    accumulate(q2_eval(pt));

  const Mat3& j = out.jacobian;
  out.det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
            j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
            j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
  if (!(out.det > 0.0))
    throw std::domain_error("isoparametric_map: non-positive Jacobian determinant");
  out.inv_jacobian = invert3(j, out.det);
  return out;
}

// Physical gradient from a reference gradient: grad_x = J^{-T} grad_ref.
inline Vec3 push_gradient(const Mat3& inv_jacobian, const Vec3& ref_grad) {
  Vec3 g{};
  for (int d = 0; d < 3; ++d)
    g[d] = inv_jacobian[0][d] * ref_grad[0] + inv_jacobian[1][d] * ref_grad[1] +
           inv_jacobian[2][d] * ref_grad[2];
  return g;
}

// Laplacian of the trilinear expansion at a reference point, using the
// constant-Jacobian (affine) change of variables. Exact for affine elements;
// for mildly distorted hexahedra the Jacobian-derivative terms are dropped.
inline double q1_laplacian(std::span<const double> coeffs, const Vec3& pt,
                           const Mat3& inv_jacobian) {
  const Mat3 h = q1_ref_hessian(coeffs, pt);
  // metric M = J^{-1} J^{-T}; laplacian = sum_ab M_ab * H_ab
  double lap = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double m = inv_jacobian[a][0] * inv_jacobian[b][0] +
                 inv_jacobian[a][1] * inv_jacobian[b][1] +
                 inv_jacobian[a][2] * inv_jacobian[b][2];
      lap += m * h[a][b];
    }
  return lap;
}

}  // namespace hexpde
