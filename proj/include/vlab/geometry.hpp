#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "vlab/core.hpp"

// Exact convex-polytope machinery: construction from points, supporting
// halfspaces, fan triangulation, closed-form degree-2 moments, halfspace
// clipping, dyadic inner cube approximation and SL(n) transform generation.
//
// Everything is dense Eigen, templated on the scalar type. Ambient
// dimension is dynamic and capped at kMaxDim; facet and vertex enumeration
// are combinatorial over index subsets, which is exact enough and fast
// enough for the small dimensions this library targets.

namespace vlab {

template <typename Scalar = double>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Outward-oriented supporting halfspace {x : normal.dot(x) <= offset}.
template <typename Scalar = double>
struct Halfspace {
  VectorX<Scalar> normal;  // unit length
  Scalar offset;
};

namespace detail {

template <typename F>
void for_each_combination(int m, int k, F&& fn) {
  if (k <= 0 || k > m) return;
  std::vector<int> c(static_cast<std::size_t>(k));
  std::iota(c.begin(), c.end(), 0);
  for (;;) {
    fn(static_cast<const std::vector<int>&>(c));
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

template <typename Scalar>
Scalar coordinate_scale_of(const MatrixX<Scalar>& pts) {
  if (pts.size() == 0) return Scalar(1);
  return std::max(Scalar(1), pts.cwiseAbs().maxCoeff());
}

// Unit normal of the hyperplane through n affinely independent points.
// Returns false when the points are (numerically) affinely dependent.
template <typename Scalar>
bool hyperplane_through(const MatrixX<Scalar>& pts, VectorX<Scalar>& normal, Scalar& offset) {
  const Eigen::Index n = pts.rows();
  if (n == 1) {
    normal = VectorX<Scalar>::Ones(1);
    offset = pts(0, 0);
    return true;
  }
  MatrixX<Scalar> edges(n, n - 1);
  for (Eigen::Index j = 0; j + 1 < n; ++j) edges.col(j) = pts.col(j + 1) - pts.col(0);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(edges.transpose(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar smax = sv(0);
  if (n >= 3 && sv(n - 2) <= Scalar(tol::kRank) * std::max(Scalar(1), smax)) return false;
  if (smax <= Scalar(0)) return false;
  normal = svd.matrixV().col(n - 1);
  offset = normal.dot(pts.col(0));
  return true;
}

// All supporting hyperplanes of conv(pts) found by brute force over
// n-point subsets, deduplicated and oriented outward. pts must be
// full-dimensional in R^n.
template <typename Scalar>
std::vector<Halfspace<Scalar>> supporting_halfspaces(const MatrixX<Scalar>& pts) {
  const int n = static_cast<int>(pts.rows());
  const int m = static_cast<int>(pts.cols());
  const Scalar scale = coordinate_scale_of(pts);
  const Scalar plane_tol = Scalar(tol::kPlane) * scale;
  const VectorX<Scalar> centroid = pts.rowwise().mean();

  std::vector<Halfspace<Scalar>> planes;
  MatrixX<Scalar> sub(n, n);
  VectorX<Scalar> normal;
  Scalar offset{};
  for_each_combination(m, n, [&](const std::vector<int>& idx) {
    for (int j = 0; j < n; ++j) sub.col(j) = pts.col(idx[static_cast<std::size_t>(j)]);
    if (!hyperplane_through(sub, normal, offset)) return;
    Scalar side = normal.dot(centroid) - offset;
    if (std::abs(side) <= plane_tol) return;  // through the interior
    if (side > Scalar(0)) {
      normal = -normal;
      offset = -offset;
    }
    Scalar worst = std::numeric_limits<Scalar>::lowest();
    for (int v = 0; v < m; ++v) worst = std::max(worst, normal.dot(pts.col(v)) - offset);
    if (worst > plane_tol) return;  // not supporting
    for (const auto& h : planes) {
      if (std::abs(h.normal.dot(normal) - Scalar(1)) <= Scalar(1e-7) &&
          std::abs(h.offset - offset) <= Scalar(1e-7) * scale)
        return;  // duplicate facet
    }
    planes.push_back(Halfspace<Scalar>{normal, offset});
  });
  return planes;
}

template <typename Scalar>
std::vector<int> points_on_plane(const MatrixX<Scalar>& pts, const Halfspace<Scalar>& h,
                                 Scalar plane_tol) {
  std::vector<int> on;
  for (int v = 0; v < pts.cols(); ++v)
    if (std::abs(h.normal.dot(pts.col(v)) - h.offset) <= plane_tol) on.push_back(v);
  return on;
}

// Affine dimension of a point set, and an orthonormal basis of its hull.
template <typename Scalar>
int affine_dimension(const MatrixX<Scalar>& pts, MatrixX<Scalar>* basis = nullptr,
                     VectorX<Scalar>* origin = nullptr) {
  const Eigen::Index m = pts.cols();
  if (m == 0) return -1;
  const VectorX<Scalar> mean = pts.rowwise().mean();
  if (origin) *origin = mean;
  if (m == 1) {
    if (basis) basis->resize(pts.rows(), 0);
    return 0;
  }
  MatrixX<Scalar> centered = pts.colwise() - mean;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(centered, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = Scalar(tol::kRank) * std::max(Scalar(1), sv.size() ? sv(0) : Scalar(0));
  int d = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++d;
  if (basis) *basis = svd.matrixU().leftCols(d);
  return d;
}

// Indices of the extreme points of a full-dimensional point set: a point
// is a hull vertex iff its active supporting-plane normals span R^n.
template <typename Scalar>
std::vector<int> extreme_indices_full_dim(const MatrixX<Scalar>& pts) {
  const int n = static_cast<int>(pts.rows());
  const int m = static_cast<int>(pts.cols());
  const Scalar plane_tol = Scalar(tol::kPlane) * coordinate_scale_of(pts);
  const auto planes = supporting_halfspaces(pts);
  std::vector<int> keep;
  MatrixX<Scalar> active(n, planes.size());
  for (int v = 0; v < m; ++v) {
    int na = 0;
    for (const auto& h : planes)
      if (std::abs(h.normal.dot(pts.col(v)) - h.offset) <= plane_tol) active.col(na++) = h.normal;
    if (na < n) continue;
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(active.leftCols(na));
    const auto& sv = svd.singularValues();
    if (sv(n - 1) > Scalar(1e-8) * std::max(Scalar(1), sv(0))) keep.push_back(v);
  }
  return keep;
}

template <typename Scalar>
std::vector<int> extreme_indices(const MatrixX<Scalar>& pts) {
  const Eigen::Index n = pts.rows();
  MatrixX<Scalar> basis;
  VectorX<Scalar> origin;
  const int d = affine_dimension(pts, &basis, &origin);
  if (d <= 0) return pts.cols() > 0 ? std::vector<int>{0} : std::vector<int>{};
  if (d == static_cast<int>(n)) return extreme_indices_full_dim(pts);
  MatrixX<Scalar> coords = basis.transpose() * (pts.colwise() - origin);
  return extreme_indices_full_dim(coords);
}

// Cyclic (counter-clockwise or clockwise) order of a planar convex
// vertex set, by angle around the centroid.
template <typename Scalar>
std::vector<int> polygon_cyclic_order(const MatrixX<Scalar>& pts) {
  const VectorX<Scalar> c = pts.rowwise().mean();
  std::vector<int> order(static_cast<std::size_t>(pts.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Scalar aa = std::atan2(pts(1, a) - c(1), pts(0, a) - c(0));
    const Scalar ab = std::atan2(pts(1, b) - c(1), pts(0, b) - c(0));
    if (aa != ab) return aa < ab;
    return a < b;
  });
  return order;
}

// Triangulation of a full-dimensional point set in R^d into index
// (d+1)-tuples, by coning the first point over the facets that do not
// contain it (facets themselves triangulated recursively).
template <typename Scalar>
std::vector<std::vector<int>> triangulate_point_set(const MatrixX<Scalar>& pts) {
  const int d = static_cast<int>(pts.rows());
  const int m = static_cast<int>(pts.cols());
  std::vector<std::vector<int>> out;
  if (d == 1) {
    int imin = 0, imax = 0;
    for (int i = 1; i < m; ++i) {
      if (pts(0, i) < pts(0, imin)) imin = i;
      if (pts(0, i) > pts(0, imax)) imax = i;
    }
    out.push_back({imin, imax});
    return out;
  }
  if (d == 2) {
    const auto cyc = polygon_cyclic_order(pts);
    for (std::size_t i = 1; i + 1 < cyc.size(); ++i)
      out.push_back({cyc[0], cyc[i], cyc[i + 1]});
    return out;
  }
  // apex: lexicographically smallest point, so the fan is canonical
  int apex = 0;
  for (int i = 1; i < m; ++i) {
    for (int r = 0; r < d; ++r) {
      if (pts(r, i) < pts(r, apex)) {
        apex = i;
        break;
      }
      if (pts(r, i) > pts(r, apex)) break;
    }
  }
  const Scalar plane_tol = Scalar(tol::kPlane) * coordinate_scale_of(pts);
  for (const auto& facet : supporting_halfspaces(pts)) {
    if (std::abs(facet.normal.dot(pts.col(apex)) - facet.offset) <= plane_tol) continue;
    const auto on = points_on_plane(pts, facet, plane_tol);
    MatrixX<Scalar> fpts(d, on.size());
    for (std::size_t j = 0; j < on.size(); ++j) fpts.col(static_cast<Eigen::Index>(j)) = pts.col(on[j]);
    MatrixX<Scalar> fbasis;
    VectorX<Scalar> forigin;
    if (affine_dimension(fpts, &fbasis, &forigin) != d - 1) continue;  // spurious sliver
    MatrixX<Scalar> fcoords = fbasis.transpose() * (fpts.colwise() - forigin);
    for (const auto& tri : triangulate_point_set(fcoords)) {
      std::vector<int> simplex;
      simplex.reserve(static_cast<std::size_t>(d) + 1);
      simplex.push_back(apex);
      for (int t : tri) simplex.push_back(on[static_cast<std::size_t>(t)]);
      out.push_back(std::move(simplex));
    }
  }
  return out;
}

template <typename Scalar>
bool lex_less(const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

}  // namespace detail

// --- SLTransform ----------------------------------------------------------

template <typename Scalar = double>
class SLTransform {
 public:
  explicit SLTransform(MatrixX<Scalar> entries, Scalar det_tolerance = Scalar(tol::kDeterminant))
      : entries_(std::move(entries)), det_tolerance_(det_tolerance) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1 || entries_.rows() > kMaxDim)
      throw DimensionMismatch("SLTransform: matrix must be square with dimension in 1..6");
    const Scalar det = entries_.determinant();
    if (!(std::abs(det - Scalar(1)) <= det_tolerance_))
      throw Error("SLTransform: determinant " + std::to_string(static_cast<double>(det)) +
                  " is not within tolerance of 1");
  }

  static SLTransform identity(int n) { return SLTransform(MatrixX<Scalar>::Identity(n, n)); }

  const MatrixX<Scalar>& matrix() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  Scalar det_tolerance() const { return det_tolerance_; }

  SLTransform inverse() const {
    return SLTransform(entries_.inverse().eval(), std::max(det_tolerance_, Scalar(1e-8)));
  }

  friend SLTransform operator*(const SLTransform& a, const SLTransform& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("SLTransform: dimension mismatch in product");
    return SLTransform((a.entries_ * b.entries_).eval(),
                       std::max(a.det_tolerance_, b.det_tolerance_) * Scalar(2));
  }

 private:
  MatrixX<Scalar> entries_;
  Scalar det_tolerance_;
};

// --- Simplex ---------------------------------------------------------------

template <typename Scalar = double>
class Simplex {
 public:
  // vertices: n x (n+1), one column per vertex
  explicit Simplex(MatrixX<Scalar> vertices) : vertices_(std::move(vertices)) {
    const Eigen::Index n = vertices_.rows();
    if (n < 1 || n > kMaxDim || vertices_.cols() != n + 1)
      throw DimensionMismatch("Simplex: need n x (n+1) vertex matrix with n in 1..6");
    if (!vertices_.allFinite()) throw Error("Simplex: non-finite vertex");
    MatrixX<Scalar> edges(n, n);
    for (Eigen::Index j = 0; j < n; ++j) edges.col(j) = vertices_.col(j + 1) - vertices_.col(0);
    const Scalar scale = detail::coordinate_scale_of(vertices_);
    if (std::abs(edges.determinant()) <=
        Scalar(tol::kSimplexVolume) * std::pow(scale, static_cast<Scalar>(n)))
      throw DegenerateSimplex("Simplex: vertices are affinely dependent");
  }

  const MatrixX<Scalar>& vertices() const { return vertices_; }
  int dim() const { return static_cast<int>(vertices_.rows()); }

 private:
  MatrixX<Scalar> vertices_;
};

// n! for the volume normalization.
inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Volume of the simplex spanned by the columns of V (n x (n+1)).
template <typename Derived>
typename Derived::Scalar simplex_volume_from_vertices(const Eigen::MatrixBase<Derived>& V) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = V.rows();
  MatrixX<Scalar> edges(n, n);
  for (Eigen::Index j = 0; j < n; ++j) edges.col(j) = V.col(j + 1) - V.col(0);
  return std::abs(edges.determinant()) / Scalar(factorial(static_cast<int>(n)));
}

// Second-moment matrix of a simplex:
//   integral over S of x x^t dx  =  vol(S) / ((n+1)(n+2)) * (sum_k v_k v_k^t + s s^t)
// with s the vertex sum. Exact up to rounding.
template <typename Derived>
MatrixX<typename Derived::Scalar> simplex_moment_from_vertices(
    const Eigen::MatrixBase<Derived>& V) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = V.rows();
  const Scalar vol = simplex_volume_from_vertices(V);
  const VectorX<Scalar> s = V.rowwise().sum();
  MatrixX<Scalar> gram = V * V.transpose();
  gram.noalias() += s * s.transpose();
  return (vol / Scalar((n + 1) * (n + 2))) * gram;
}

template <typename Scalar>
Scalar simplex_volume(const Simplex<Scalar>& s) {
  return simplex_volume_from_vertices(s.vertices());
}

template <typename Scalar>
MatrixX<Scalar> simplex_moment(const Simplex<Scalar>& s) {
  return simplex_moment_from_vertices(s.vertices());
}

// --- Box --------------------------------------------------------------------

template <typename Scalar = double>
class Box {
 public:
  Box(VectorX<Scalar> lower, VectorX<Scalar> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() < 1 || lower_.size() > kMaxDim)
      throw DimensionMismatch("Box: lower/upper dimension mismatch or out of range");
    if (!lower_.allFinite() || !upper_.allFinite()) throw Error("Box: non-finite bound");
    if (((upper_ - lower_).array() < Scalar(0)).any())
      throw Error("Box: lower must be componentwise <= upper");
  }

  const VectorX<Scalar>& lower() const { return lower_; }
  const VectorX<Scalar>& upper() const { return upper_; }
  int dim() const { return static_cast<int>(lower_.size()); }

  bool is_cube(Scalar rel_tol = Scalar(tol::kExact)) const {
    const VectorX<Scalar> side = upper_ - lower_;
    const Scalar s0 = side(0);
    return ((side.array() - s0).abs() <= rel_tol * std::max(Scalar(1), std::abs(s0))).all();
  }

  VectorX<Scalar> corner(unsigned code) const {
    VectorX<Scalar> c(dim());
    for (int i = 0; i < dim(); ++i) c(i) = (code >> i) & 1u ? upper_(i) : lower_(i);
    return c;
  }

 private:
  VectorX<Scalar> lower_, upper_;
};

template <typename Scalar>
Scalar box_volume(const Box<Scalar>& b) {
  return (b.upper() - b.lower()).prod();
}

// Closed-form second moment of an axis-aligned box (tensor products of
// 1-D integrals). Degenerate boxes give the zero matrix.
template <typename Scalar>
MatrixX<Scalar> box_moment(const Box<Scalar>& b) {
  const int n = b.dim();
  MatrixX<Scalar> M = MatrixX<Scalar>::Zero(n, n);
  VectorX<Scalar> len = b.upper() - b.lower();
  if ((len.array() <= Scalar(0)).any()) return M;
  VectorX<Scalar> m1(n), m2(n);
  for (int i = 0; i < n; ++i) {
    const Scalar lo = b.lower()(i), hi = b.upper()(i);
    m1(i) = (hi * hi - lo * lo) / Scalar(2);
    m2(i) = (hi * hi * hi - lo * lo * lo) / Scalar(3);
  }
  const Scalar vol = len.prod();
  for (int i = 0; i < n; ++i) {
    M(i, i) = m2(i) * (vol / len(i));
    for (int j = i + 1; j < n; ++j) {
      const Scalar off = m1(i) * m1(j) * (vol / (len(i) * len(j)));
      M(i, j) = off;
      M(j, i) = off;
    }
  }
  return M;
}

// --- Polytope ----------------------------------------------------------------

// Bounded convex polytope given by its extreme points, kept in canonical
// (lexicographically sorted) column order. Lower-dimensional polytopes are
// first-class values with zero volume and zero moment; the empty polytope
// has affine dimension -1.
template <typename Scalar = double>
class Polytope {
 public:
  static Polytope empty(int ambient_dim) {
    check_dim(ambient_dim);
    Polytope p;
    p.vertices_.resize(ambient_dim, 0);
    p.ambient_ = ambient_dim;
    p.affine_dim_ = -1;
    return p;
  }

  // Extreme-point filtering, deduplication and canonical ordering.
  static Polytope from_points(const MatrixX<Scalar>& pts) {
    check_dim(static_cast<int>(pts.rows()));
    if (!pts.allFinite()) throw Error("Polytope: non-finite vertex");
    if (pts.cols() == 0) return empty(static_cast<int>(pts.rows()));
    MatrixX<Scalar> unique = dedupe(pts);
    const auto keep = detail::extreme_indices(unique);
    MatrixX<Scalar> ext(unique.rows(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j)
      ext.col(static_cast<Eigen::Index>(j)) = unique.col(keep[j]);
    Polytope p;
    p.vertices_ = sort_columns(ext);
    p.ambient_ = static_cast<int>(pts.rows());
    p.affine_dim_ = detail::affine_dimension(p.vertices_);
    return p;
  }

  static Polytope from_box(const Box<Scalar>& b) {
    const int n = b.dim();
    MatrixX<Scalar> corners(n, 1u << n);
    if (((b.upper() - b.lower()).array() > Scalar(0)).all()) {
      // nondegenerate: every corner is extreme, and enumerating them with
      // axis 0 as the most significant bit gives lexicographic order
      for (unsigned rank = 0; rank < (1u << n); ++rank) {
        unsigned code = 0;
        for (int i = 0; i < n; ++i)
          if (rank & (1u << (n - 1 - i))) code |= 1u << i;
        corners.col(rank) = b.corner(code);
      }
      Polytope p;
      p.vertices_ = std::move(corners);
      p.ambient_ = n;
      p.affine_dim_ = n;
      return p;
    }
    for (unsigned code = 0; code < (1u << n); ++code) corners.col(code) = b.corner(code);
    return from_points(corners);
  }

  static Polytope unit_box(int n) {
    return from_box(Box<Scalar>(VectorX<Scalar>::Zero(n), VectorX<Scalar>::Ones(n)));
  }

  int dim() const { return ambient_; }
  int affine_dim() const { return affine_dim_; }
  bool is_empty() const { return vertices_.cols() == 0; }
  bool is_full_dimensional() const { return affine_dim_ == ambient_; }
  Eigen::Index vertex_count() const { return vertices_.cols(); }
  const MatrixX<Scalar>& vertices() const { return vertices_; }
  VectorX<Scalar> vertex(Eigen::Index i) const { return vertices_.col(i); }
  Scalar coordinate_scale() const { return detail::coordinate_scale_of(vertices_); }

  // Vertex-set equality within a per-coordinate tolerance; vertex order is
  // canonical, so this is a column-by-column comparison.
  bool approx_equal(const Polytope& other, Scalar coord_tol = Scalar(tol::kVertexCoord)) const {
    if (ambient_ != other.ambient_ || vertices_.cols() != other.vertices_.cols()) return false;
    return ((vertices_ - other.vertices_).cwiseAbs().array() <= coord_tol).all();
  }

 private:
  Polytope() : vertices_(0, 0), ambient_(0), affine_dim_(-1) {}

  static void check_dim(int n) {
    if (n < 1 || n > kMaxDim)
      throw DimensionMismatch("Polytope: ambient dimension must be in 1..6");
  }

  static MatrixX<Scalar> dedupe(const MatrixX<Scalar>& pts) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      bool dup = false;
      for (Eigen::Index j : keep)
        if (((pts.col(i) - pts.col(j)).cwiseAbs().array() <= Scalar(tol::kVertexCoord)).all()) {
          dup = true;
          break;
        }
      if (!dup) keep.push_back(i);
    }
    MatrixX<Scalar> out(pts.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = pts.col(keep[j]);
    return out;
  }

  static MatrixX<Scalar> sort_columns(const MatrixX<Scalar>& pts) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(pts.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return detail::lex_less<Scalar>(pts.col(a), pts.col(b));
    });
    MatrixX<Scalar> out(pts.rows(), pts.cols());
    for (std::size_t j = 0; j < order.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = pts.col(order[j]);
    return out;
  }

  MatrixX<Scalar> vertices_;
  int ambient_;
  int affine_dim_;
};

// Supporting halfspaces of a full-dimensional polytope.
template <typename Scalar>
std::vector<Halfspace<Scalar>> polytope_halfspaces(const Polytope<Scalar>& p) {
  if (!p.is_full_dimensional())
    throw Error("polytope_halfspaces: polytope is not full-dimensional");
  return detail::supporting_halfspaces(p.vertices());
}

template <typename Scalar>
bool halfspaces_contain(const std::vector<Halfspace<Scalar>>& hs, const VectorX<Scalar>& x,
                        Scalar slack) {
  for (const auto& h : hs)
    if (h.normal.dot(x) > h.offset + slack) return false;
  return true;
}

// Fan triangulation of a full-dimensional polytope, from its first
// canonical vertex over the boundary facets. Simplices are n x (n+1)
// vertex matrices that partition the polytope.
template <typename Scalar>
std::vector<MatrixX<Scalar>> triangulate(const Polytope<Scalar>& p) {
  std::vector<MatrixX<Scalar>> out;
  if (!p.is_full_dimensional()) return out;
  const int n = p.dim();
  if (p.vertex_count() == n + 1) {
    out.push_back(p.vertices());
    return out;
  }
  for (const auto& tuple : detail::triangulate_point_set(p.vertices())) {
    MatrixX<Scalar> simplex(n, n + 1);
    for (std::size_t j = 0; j < tuple.size(); ++j)
      simplex.col(static_cast<Eigen::Index>(j)) = p.vertices().col(tuple[j]);
    out.push_back(std::move(simplex));
  }
  return out;
}

namespace detail {

// Axis-aligned-box recognition: all 2^n corner combinations of the
// per-axis extremes must appear exactly once among the vertices.
template <typename Scalar>
bool as_box(const Polytope<Scalar>& p, Box<Scalar>* out) {
  const int n = p.dim();
  if (p.vertex_count() != (Eigen::Index(1) << n)) return false;
  const VectorX<Scalar> lo = p.vertices().rowwise().minCoeff();
  const VectorX<Scalar> hi = p.vertices().rowwise().maxCoeff();
  std::vector<bool> seen(static_cast<std::size_t>(p.vertex_count()), false);
  for (Eigen::Index v = 0; v < p.vertex_count(); ++v) {
    unsigned code = 0;
    for (int i = 0; i < n; ++i) {
      const Scalar x = p.vertices()(i, v);
      if (x == hi(i) && hi(i) != lo(i))
        code |= 1u << i;
      else if (x != lo(i))
        return false;
    }
    if (seen[code]) return false;
    seen[code] = true;
  }
  if (out) *out = Box<Scalar>(lo, hi);
  return true;
}

}  // namespace detail

// Volume via fan triangulation (no box shortcut); exposed so tests can
// cross-check the two routes.
template <typename Scalar>
Scalar polytope_volume_fan(const Polytope<Scalar>& p) {
  Scalar vol = 0;
  for (const auto& s : triangulate(p)) vol += simplex_volume_from_vertices(s);
  return vol;
}

template <typename Scalar>
Scalar polytope_volume(const Polytope<Scalar>& p) {
  if (!p.is_full_dimensional()) return Scalar(0);
  Box<Scalar> b(VectorX<Scalar>::Zero(p.dim()), VectorX<Scalar>::Zero(p.dim()));
  if (detail::as_box(p, &b)) return box_volume(b);
  return polytope_volume_fan(p);
}

// Moment via fan triangulation (no box shortcut); exposed for the same
// dual-route cross-checks.
template <typename Scalar>
MatrixX<Scalar> polytope_moment_fan(const Polytope<Scalar>& p) {
  MatrixX<Scalar> M = MatrixX<Scalar>::Zero(p.dim(), p.dim());
  for (const auto& s : triangulate(p)) M += simplex_moment_from_vertices(s);
  return M;
}

// Second-moment matrix M(P) = integral over P of x x^t dx. Polytopes of
// affine dimension < n are null sets and give the zero matrix.
template <typename Scalar>
MatrixX<Scalar> polytope_moment(const Polytope<Scalar>& p) {
  if (!p.is_full_dimensional()) return MatrixX<Scalar>::Zero(p.dim(), p.dim());
  Box<Scalar> b(VectorX<Scalar>::Zero(p.dim()), VectorX<Scalar>::Zero(p.dim()));
  if (detail::as_box(p, &b)) return box_moment(b);
  return polytope_moment_fan(p);
}

// Weighted measure mu(P) = integral over P of |x|^2 dx = trace M(P).
template <typename Scalar>
Scalar polytope_mu_measure(const Polytope<Scalar>& p) {
  return polytope_moment(p).trace();
}

// Image polytope phi(P); extreme-point canonicalization is re-applied.
template <typename Scalar>
Polytope<Scalar> transform_polytope(const SLTransform<Scalar>& phi, const Polytope<Scalar>& p) {
  if (phi.dim() != p.dim())
    throw DimensionMismatch("transform_polytope: transform and polytope dimensions differ");
  if (p.is_empty()) return p;
  return Polytope<Scalar>::from_points(phi.matrix() * p.vertices());
}

namespace detail {

// Keep {x : a.dot(x) <= b} of a convex polygon, walking its cyclic vertex
// list and inserting edge crossings.
template <typename Scalar>
MatrixX<Scalar> clip_polygon(const MatrixX<Scalar>& pts, const VectorX<Scalar>& a, Scalar b) {
  const auto cyc = polygon_cyclic_order(pts);
  std::vector<VectorX<Scalar>> out;
  const std::size_t k = cyc.size();
  for (std::size_t i = 0; i < k; ++i) {
    const VectorX<Scalar> p = pts.col(cyc[i]);
    const VectorX<Scalar> q = pts.col(cyc[(i + 1) % k]);
    const Scalar dp = a.dot(p) - b;
    const Scalar dq = a.dot(q) - b;
    if (dp <= Scalar(0)) out.push_back(p);
    if ((dp < Scalar(0) && dq > Scalar(0)) || (dp > Scalar(0) && dq < Scalar(0))) {
      const Scalar t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  MatrixX<Scalar> m(pts.rows(), static_cast<Eigen::Index>(out.size()));
  for (std::size_t j = 0; j < out.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = out[j];
  return m;
}

// All basic feasible points of a halfspace system, by solving every
// n-subset of constraints and keeping the feasible solutions.
template <typename Scalar>
MatrixX<Scalar> enumerate_vertices(const std::vector<Halfspace<Scalar>>& hs, int n,
                                   Scalar scale) {
  const int m = static_cast<int>(hs.size());
  std::vector<VectorX<Scalar>> found;
  MatrixX<Scalar> A(n, n);
  VectorX<Scalar> b(n);
  const Scalar feas_tol = Scalar(1e-9) * scale;
  for_each_combination(m, n, [&](const std::vector<int>& idx) {
    for (int r = 0; r < n; ++r) {
      A.row(r) = hs[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].normal.transpose();
      b(r) = hs[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].offset;
    }
    Eigen::FullPivLU<MatrixX<Scalar>> lu(A);
    lu.setThreshold(Scalar(1e-9));
    if (!lu.isInvertible()) return;
    const VectorX<Scalar> x = lu.solve(b);
    if (!x.allFinite()) return;
    for (const auto& h : hs)
      if (h.normal.dot(x) > h.offset + feas_tol) return;
    for (const auto& y : found)
      if (((x - y).cwiseAbs().array() <= Scalar(1e-9) * scale).all()) return;
    found.push_back(x);
  });
  MatrixX<Scalar> out(n, static_cast<Eigen::Index>(found.size()));
  for (std::size_t j = 0; j < found.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = found[j];
  return out;
}

}  // namespace detail

// Split P along the slab c_lo <= x.dot(u) <= c_hi into
//   P1 = P intersect {x.dot(u) <= c_hi}   and   P2 = P intersect {x.dot(u) >= c_lo},
// so that P1 union P2 = P and P1 intersect P2 is the (convex) slab piece.
// An empty side comes back as the empty polytope. Clipping is a polygon
// vertex walk in 2D and halfspace intersection with vertex enumeration in
// higher dimensions.
template <typename Scalar>
std::pair<Polytope<Scalar>, Polytope<Scalar>> halfspace_slice(const Polytope<Scalar>& p,
                                                              const VectorX<Scalar>& u,
                                                              Scalar c_lo, Scalar c_hi) {
  if (u.size() != p.dim()) throw DimensionMismatch("halfspace_slice: direction dimension");
  const Scalar unorm = u.norm();
  if (!(unorm > Scalar(0))) throw Error("halfspace_slice: direction must be nonzero");
  if (!(c_lo <= c_hi)) throw Error("halfspace_slice: c_lo must be <= c_hi");
  if (p.is_empty()) return {p, p};

  const VectorX<Scalar> un = u / unorm;
  const Scalar lo = c_lo / unorm, hi = c_hi / unorm;
  const int n = p.dim();

  if (!p.is_full_dimensional()) {
    // Clip inside the affine hull of P.
    MatrixX<Scalar> basis;
    VectorX<Scalar> origin;
    const int d = detail::affine_dimension(p.vertices(), &basis, &origin);
    if (d == 0) {
      const Scalar v = un.dot(p.vertex(0));
      auto pe = Polytope<Scalar>::empty(n);
      return {v <= hi + Scalar(tol::kExact) ? p : pe, v >= lo - Scalar(tol::kExact) ? p : pe};
    }
    MatrixX<Scalar> coords = basis.transpose() * (p.vertices().colwise() - origin);
    Polytope<Scalar> q = Polytope<Scalar>::from_points(coords);
    VectorX<Scalar> uq = basis.transpose() * un;
    const Scalar shift = un.dot(origin);
    if (uq.norm() <= Scalar(tol::kExact)) {
      auto pe = Polytope<Scalar>::empty(n);
      return {shift <= hi + Scalar(tol::kExact) ? p : pe,
              shift >= lo - Scalar(tol::kExact) ? p : pe};
    }
    auto [q1, q2] = halfspace_slice(q, uq, lo - shift, hi - shift);
    auto lift = [&](const Polytope<Scalar>& qq) {
      if (qq.is_empty()) return Polytope<Scalar>::empty(n);
      MatrixX<Scalar> back = (basis * qq.vertices()).colwise() + origin;
      return Polytope<Scalar>::from_points(back);
    };
    return {lift(q1), lift(q2)};
  }

  if (n == 1) {
    const Scalar s = un(0);  // +1 or -1
    const Scalar a = p.vertices().row(0).minCoeff(), b = p.vertices().row(0).maxCoeff();
    auto seg = [](Scalar x0, Scalar x1) {
      if (x0 > x1) return Polytope<Scalar>::empty(1);
      MatrixX<Scalar> verts(1, 2);
      verts(0, 0) = x0;
      verts(0, 1) = x1;
      return Polytope<Scalar>::from_points(verts);
    };
    if (s > Scalar(0)) return {seg(a, std::min(b, hi / s)), seg(std::max(a, lo / s), b)};
    return {seg(std::max(a, hi / s), b), seg(a, std::min(b, lo / s))};
  }

  if (n == 2) {
    MatrixX<Scalar> left = detail::clip_polygon(p.vertices(), un, hi);
    MatrixX<Scalar> right = detail::clip_polygon(p.vertices(), (-un).eval(), -lo);
    return {Polytope<Scalar>::from_points(left), Polytope<Scalar>::from_points(right)};
  }

  auto hs = polytope_halfspaces(p);
  const Scalar scale = std::max(p.coordinate_scale(), std::max(std::abs(lo), std::abs(hi)));
  auto piece = [&](const VectorX<Scalar>& normal, Scalar offset) {
    auto sys = hs;
    sys.push_back(Halfspace<Scalar>{normal, offset});
    MatrixX<Scalar> verts = detail::enumerate_vertices(sys, n, scale);
    if (verts.cols() == 0) return Polytope<Scalar>::empty(n);
    return Polytope<Scalar>::from_points(verts);
  };
  return {piece(un, hi), piece((-un).eval(), -lo)};
}

// Intersection of two full-dimensional convex polytopes (may come back
// lower-dimensional or empty). Used for interior-overlap checks and
// symmetric-difference measures.
template <typename Scalar>
Polytope<Scalar> intersect_polytopes(const Polytope<Scalar>& a, const Polytope<Scalar>& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("intersect_polytopes: dimension mismatch");
  if (a.is_empty() || b.is_empty()) return Polytope<Scalar>::empty(a.dim());
  if (!a.is_full_dimensional() || !b.is_full_dimensional())
    throw Error("intersect_polytopes: inputs must be full-dimensional");
  const int n = a.dim();
  if (n == 2) {
    MatrixX<Scalar> pts = a.vertices();
    for (const auto& h : polytope_halfspaces(b)) {
      if (pts.cols() == 0) break;
      pts = detail::clip_polygon(pts, h.normal, h.offset);
    }
    return Polytope<Scalar>::from_points(pts);
  }
  auto hs = polytope_halfspaces(a);
  const auto hb = polytope_halfspaces(b);
  hs.insert(hs.end(), hb.begin(), hb.end());
  const Scalar scale = std::max(a.coordinate_scale(), b.coordinate_scale());
  MatrixX<Scalar> verts = detail::enumerate_vertices(hs, n, scale);
  return Polytope<Scalar>::from_points(verts);
}

// All dyadic grid cells of side delta wholly contained in P, plus the
// uncovered Lebesgue volume gap(P) = vol(P) - sum of cell volumes.
// delta must be 2^-k for an integer k >= 0.
template <typename Scalar>
std::pair<std::vector<Box<Scalar>>, Scalar> dyadic_inner_cubes(const Polytope<Scalar>& p,
                                                               Scalar delta) {
  if (!(delta > Scalar(0))) throw Error("dyadic_inner_cubes: delta must be positive");
  const int k = static_cast<int>(std::lround(-std::log2(static_cast<double>(delta))));
  if (k < 0 || k > 40 || std::exp2(-k) != static_cast<double>(delta))
    throw Error("dyadic_inner_cubes: delta must be 2^-k for an integer k >= 0");
  if (!p.is_full_dimensional())
    throw Error("dyadic_inner_cubes: polytope must be full-dimensional");

  const int n = p.dim();
  const auto hs = polytope_halfspaces(p);
  const Scalar slack = Scalar(tol::kExact) * p.coordinate_scale();

  std::vector<long> ilo(static_cast<std::size_t>(n)), ihi(static_cast<std::size_t>(n));
  double total = 1;
  for (int i = 0; i < n; ++i) {
    const Scalar lo = p.vertices().row(i).minCoeff();
    const Scalar hi = p.vertices().row(i).maxCoeff();
    ilo[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(static_cast<double>(lo / delta)));
    ihi[static_cast<std::size_t>(i)] =
        static_cast<long>(std::ceil(static_cast<double>(hi / delta))) - 1;
    total *= std::max(0.0, static_cast<double>(ihi[static_cast<std::size_t>(i)] -
                                               ilo[static_cast<std::size_t>(i)] + 1));
  }
  if (total > 5e7) throw Error("dyadic_inner_cubes: grid too fine for this polytope");

  std::vector<Box<Scalar>> cells;
  std::vector<long> idx(ilo);
  VectorX<Scalar> corner(n);
  if (total >= 1) {
    for (;;) {
      bool inside = true;
      for (unsigned code = 0; code < (1u << n) && inside; ++code) {
        for (int i = 0; i < n; ++i)
          corner(i) = Scalar(idx[static_cast<std::size_t>(i)] + ((code >> i) & 1u)) * delta;
        inside = halfspaces_contain(hs, corner, slack);
      }
      if (inside) {
        VectorX<Scalar> lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
          lo(i) = Scalar(idx[static_cast<std::size_t>(i)]) * delta;
          hi(i) = Scalar(idx[static_cast<std::size_t>(i)] + 1) * delta;
        }
        cells.emplace_back(lo, hi);
      }
      int axis = 0;
      while (axis < n) {
        if (++idx[static_cast<std::size_t>(axis)] <= ihi[static_cast<std::size_t>(axis)]) break;
        idx[static_cast<std::size_t>(axis)] = ilo[static_cast<std::size_t>(axis)];
        ++axis;
      }
      if (axis == n) break;
    }
  }
  const Scalar covered =
      static_cast<Scalar>(cells.size()) * std::pow(delta, static_cast<Scalar>(n));
  return {std::move(cells), polytope_volume(p) - covered};
}

// Deterministic pseudo-random element of SL(n): a product of elementary
// shears with coefficients in [-shear_bound, shear_bound], interleaved
// with determinant-one diagonal scalings.
template <typename Scalar = double>
SLTransform<Scalar> random_sl_matrix(std::uint64_t seed, int n, int shear_count,
                                     Scalar shear_bound) {
  if (n < 2 || n > kMaxDim) throw DimensionMismatch("random_sl_matrix: n must be in 2..6");
  if (!(shear_bound > Scalar(0))) throw Error("random_sl_matrix: shear_bound must be positive");
  Rng rng(seed);
  MatrixX<Scalar> m = MatrixX<Scalar>::Identity(n, n);
  for (int i = 0; i < shear_count; ++i) {
    const int r = rng.range(0, n - 1);
    int c = rng.range(0, n - 2);
    if (c >= r) ++c;
    const Scalar sigma = Scalar(rng.uniform(-static_cast<double>(shear_bound),
                                            static_cast<double>(shear_bound)));
    m.row(r) += sigma * m.row(c);  // left-multiply by the shear E_{rc}(sigma)
    const int a = rng.range(0, n - 1);
    int b = rng.range(0, n - 2);
    if (b >= a) ++b;
    const Scalar f = Scalar(std::exp2(rng.uniform(-0.25, 0.25)));
    m.row(a) *= f;
    m.row(b) /= f;
  }
  return SLTransform<Scalar>(std::move(m));
}

// Convex hull of m uniform draws from [-scale, scale]^n; redrawn (up to 16
// attempts) until full-dimensional. Deterministic per seed.
template <typename Scalar = double>
Polytope<Scalar> random_polytope(std::uint64_t seed, int n, int m_points, Scalar scale) {
  if (n < 1 || n > kMaxDim) throw DimensionMismatch("random_polytope: n must be in 1..6");
  if (m_points < n + 1) throw Error("random_polytope: need at least n+1 points");
  Rng rng(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    MatrixX<Scalar> pts(n, m_points);
    for (int j = 0; j < m_points; ++j)
      for (int i = 0; i < n; ++i)
        pts(i, j) = Scalar(rng.uniform(-static_cast<double>(scale), static_cast<double>(scale)));
    Polytope<Scalar> p = Polytope<Scalar>::from_points(pts);
    if (p.is_full_dimensional()) return p;
  }
  throw DegenerateDraw("random_polytope: no full-dimensional draw in 16 attempts");
}

}  // namespace vlab
