#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vlab/expr.hpp"
#include "vlab/geometry.hpp"
#include "vlab/quadrature.hpp"

// Simple functions over polytope supports, dyadic grid functions closed
// under the max/min lattice, composition functions with power-growth
// bounds, the weighted L^p norm with weight |x|^2, and the probes built
// on them.

namespace vlab {

inline std::string format_scalar(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- CompositionFunction ---------------------------------------------------

// A continuous scalar reparameterization t -> xi(t) with xi(0) = 0,
// claiming the growth bound |xi(t)| <= d |t|^p. The claim is sampled by
// check_growth, never proven. The expression string is the canonical
// serialized form; evaluator and expression are kept consistent.
template <typename Scalar = double>
class CompositionFunction {
 public:
  CompositionFunction(std::string label, std::string expression, Scalar exponent_p,
                      Scalar growth_constant_d)
      : label_(std::move(label)),
        expression_(std::move(expression)),
        evaluator_(parse_expression<Scalar>(expression_)),
        exponent_p_(exponent_p),
        growth_d_(growth_constant_d) {
    validate();
  }

  CompositionFunction(std::string label, std::string expression,
                      std::function<Scalar(Scalar)> evaluator, Scalar exponent_p,
                      Scalar growth_constant_d)
      : label_(std::move(label)),
        expression_(std::move(expression)),
        evaluator_(std::move(evaluator)),
        exponent_p_(exponent_p),
        growth_d_(growth_constant_d) {
    validate();
  }

  Scalar operator()(Scalar t) const { return evaluator_(t); }

  const std::string& label() const { return label_; }
  const std::string& expression() const { return expression_; }
  Scalar exponent_p() const { return exponent_p_; }
  Scalar growth_constant_d() const { return growth_d_; }

  static CompositionFunction zero() {
    return CompositionFunction("zero", "0", [](Scalar) { return Scalar(0); }, Scalar(1),
                               Scalar(0));
  }

  // c * sign(t) * |t|^q; the q = p case is c * t * |t|^(p-1)
  static CompositionFunction signed_power(Scalar q, Scalar c) {
    std::string expr = format_scalar(static_cast<double>(c)) + "*sign(t)*abs(t)^" +
                       format_scalar(static_cast<double>(q));
    auto eval = [q, c](Scalar t) {
      if (t == Scalar(0)) return Scalar(0);
      const Scalar s = t > Scalar(0) ? Scalar(1) : Scalar(-1);
      return c * s * std::pow(std::abs(t), q);
    };
    return CompositionFunction("signed_power(q=" + format_scalar(static_cast<double>(q)) +
                                   ",c=" + format_scalar(static_cast<double>(c)) + ")",
                               expr, eval, q, std::abs(c));
  }

  // c * |t|^q (even in t)
  static CompositionFunction abs_power(Scalar q, Scalar c) {
    std::string expr =
        format_scalar(static_cast<double>(c)) + "*abs(t)^" + format_scalar(static_cast<double>(q));
    auto eval = [q, c](Scalar t) {
      if (t == Scalar(0)) return Scalar(0);
      return c * std::pow(std::abs(t), q);
    };
    return CompositionFunction("abs_power(q=" + format_scalar(static_cast<double>(q)) +
                                   ",c=" + format_scalar(static_cast<double>(c)) + ")",
                               expr, eval, q, std::abs(c));
  }

  // c * sign(t) * min(|t|^q, m): bounded, so it also satisfies the bound
  // d |t|^p for every p <= q with d = max(|c|, |c| m)
  static CompositionFunction clamped_power(Scalar q, Scalar c, Scalar m) {
    std::string expr = format_scalar(static_cast<double>(c)) + "*sign(t)*min(abs(t)^" +
                       format_scalar(static_cast<double>(q)) + "," +
                       format_scalar(static_cast<double>(m)) + ")";
    auto eval = [q, c, m](Scalar t) {
      if (t == Scalar(0)) return Scalar(0);
      const Scalar s = t > Scalar(0) ? Scalar(1) : Scalar(-1);
      return c * s * std::min(std::pow(std::abs(t), q), m);
    };
    return CompositionFunction("clamped_power(q=" + format_scalar(static_cast<double>(q)) +
                                   ",c=" + format_scalar(static_cast<double>(c)) +
                                   ",m=" + format_scalar(static_cast<double>(m)) + ")",
                               expr, eval, q, std::abs(c));
  }

  // The built-in family used by the verification suites, for a given
  // growth exponent p.
  static std::vector<CompositionFunction> builtin_family(Scalar p) {
    return {
        zero(),
        signed_power(p, Scalar(1)),
        signed_power(p, Scalar(-2)),
        signed_power(p + Scalar(1), Scalar(1.5)),
        abs_power(p, Scalar(1.5)),
        clamped_power(p, Scalar(1), Scalar(3)),
    };
  }

 private:
  void validate() const {
    if (!(exponent_p_ >= Scalar(1)))
      throw Error("CompositionFunction: exponent p must be >= 1");
    if (!(growth_d_ >= Scalar(0)))
      throw Error("CompositionFunction: growth constant d must be >= 0");
    if (evaluator_(Scalar(0)) != Scalar(0))
      throw Error("CompositionFunction: xi(0) must be 0 (growth bound at t = 0)");
  }

  std::string label_;
  std::string expression_;
  std::function<Scalar(Scalar)> evaluator_;
  Scalar exponent_p_;
  Scalar growth_d_;
};

// --- growth checking ---------------------------------------------------------

template <typename Scalar = double>
struct GrowthSampleSpec {
  Scalar t_min = Scalar(1e-8);
  Scalar t_max = Scalar(1e8);
  int count = 400;  // magnitudes per sign
};

template <typename Scalar = double>
struct GrowthReport {
  Scalar max_ratio = 0;   // max over samples of |xi(t)| / |t|^p
  Scalar argmax_t = 0;
  Scalar claimed_d = 0;
  Scalar exponent_p = 0;
  int samples = 0;
  bool pass = false;  // a sampled pass means "no violation found"
};

template <typename Scalar>
GrowthReport<Scalar> check_growth(const CompositionFunction<Scalar>& xi, Scalar p, Scalar d,
                                  const GrowthSampleSpec<Scalar>& spec = {}) {
  if (!(spec.t_min > Scalar(0)) || !(spec.t_max > spec.t_min) || spec.count < 2)
    throw Error("check_growth: bad sample spec");
  GrowthReport<Scalar> rep;
  rep.claimed_d = d;
  rep.exponent_p = p;
  const Scalar log_ratio = std::log(spec.t_max / spec.t_min);
  for (int k = 0; k < spec.count; ++k) {
    const Scalar mag = spec.t_min * std::exp(log_ratio * Scalar(k) / Scalar(spec.count - 1));
    for (const Scalar t : {mag, -mag}) {
      const Scalar ratio = std::abs(xi(t)) / std::pow(std::abs(t), p);
      ++rep.samples;
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.argmax_t = t;
      }
    }
  }
  rep.pass = rep.max_ratio <= d * (Scalar(1) + Scalar(1e-9));
  return rep;
}

// --- SimpleFunction ----------------------------------------------------------

template <typename Scalar = double>
struct Piece {
  Scalar alpha;
  Polytope<Scalar> support;
};

// Finite sum of weighted polytope indicators with pairwise disjoint
// interiors. Pieces with coefficient exactly zero are dropped; degenerate
// (lower-dimensional) supports are legal and carry no measure.
template <typename Scalar = double>
class SimpleFunction {
 public:
  explicit SimpleFunction(int dim) : dim_(dim) { check(); }

  SimpleFunction(int dim, std::vector<Piece<Scalar>> pieces) : dim_(dim) {
    check();
    pieces_.reserve(pieces.size());
    for (auto& pc : pieces) {
      if (!std::isfinite(static_cast<double>(pc.alpha)))
        throw Error("SimpleFunction: non-finite coefficient");
      if (pc.support.dim() != dim_)
        throw DimensionMismatch("SimpleFunction: piece dimension mismatch");
      if (pc.alpha != Scalar(0) && !pc.support.is_empty()) pieces_.push_back(std::move(pc));
    }
  }

  static SimpleFunction zero(int dim) { return SimpleFunction(dim); }

  static SimpleFunction indicator(Scalar alpha, const Polytope<Scalar>& p) {
    return SimpleFunction(p.dim(), {Piece<Scalar>{alpha, p}});
  }

  int dim() const { return dim_; }
  bool is_zero() const { return pieces_.empty(); }
  const std::vector<Piece<Scalar>>& pieces() const { return pieces_; }

  // Largest pairwise interior-overlap volume; the invariant asks this to
  // be <= 1e-12. Quadratic in the number of pieces, meant for validation
  // of untrusted inputs, not for hot paths.
  Scalar max_interior_overlap() const {
    Scalar worst = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!pieces_[i].support.is_full_dimensional()) continue;
      for (std::size_t j = i + 1; j < pieces_.size(); ++j) {
        if (!pieces_[j].support.is_full_dimensional()) continue;
        const auto inter = intersect_polytopes(pieces_[i].support, pieces_[j].support);
        worst = std::max(worst, polytope_volume(inter));
      }
    }
    return worst;
  }

  void require_disjoint_interiors(Scalar tolerance = Scalar(tol::kExact)) const {
    if (max_interior_overlap() > tolerance)
      throw OverlappingInteriors("SimpleFunction: supports share interior volume");
  }

 private:
  void check() const {
    if (dim_ < 1 || dim_ > kMaxDim)
      throw DimensionMismatch("SimpleFunction: dimension must be in 1..6");
  }

  int dim_;
  std::vector<Piece<Scalar>> pieces_;
};

// Point evaluator for a simple function; facet systems are prepared once.
template <typename Scalar>
std::function<Scalar(const VectorX<Scalar>&)> piecewise_density(const SimpleFunction<Scalar>& h) {
  struct Prepared {
    Scalar alpha;
    std::vector<Halfspace<Scalar>> facets;
    Scalar slack;
  };
  auto prepared = std::make_shared<std::vector<Prepared>>();
  for (const auto& pc : h.pieces()) {
    if (!pc.support.is_full_dimensional()) continue;  // null support
    prepared->push_back(Prepared{pc.alpha, polytope_halfspaces(pc.support),
                                 Scalar(tol::kExact) * pc.support.coordinate_scale()});
  }
  return [prepared](const VectorX<Scalar>& x) {
    Scalar v = 0;
    for (const auto& pr : *prepared)
      if (halfspaces_contain(pr.facets, x, pr.slack)) v += pr.alpha;
    return v;
  };
}

// --- GridFunction ------------------------------------------------------------

using GridIndex = std::array<std::int64_t, kMaxDim>;

// Piecewise-constant function on the dyadic grid of side 2^-level,
// nonzero on finitely many cells. Closed under max/min by construction,
// which is what makes the lattice operations exact.
template <typename Scalar = double>
class GridFunction {
 public:
  struct Cell {
    GridIndex index;
    Scalar value;
  };

  GridFunction(int dim, int level, std::vector<Cell> cells) : dim_(dim), level_(level) {
    if (dim_ < 1 || dim_ > kMaxDim)
      throw DimensionMismatch("GridFunction: dimension must be in 1..6");
    if (level_ < 0 || level_ > 40) throw Error("GridFunction: level must be in 0..40");
    cells_.reserve(cells.size());
    for (auto& c : cells) {
      if (!std::isfinite(static_cast<double>(c.value)))
        throw Error("GridFunction: non-finite value");
      for (int i = dim_; i < kMaxDim; ++i) c.index[static_cast<std::size_t>(i)] = 0;
      if (c.value != Scalar(0)) cells_.push_back(c);
    }
    std::sort(cells_.begin(), cells_.end(),
              [](const Cell& a, const Cell& b) { return a.index < b.index; });
    for (std::size_t i = 1; i < cells_.size(); ++i)
      if (cells_[i].index == cells_[i - 1].index)
        throw Error("GridFunction: duplicate cell index");
  }

  static GridFunction zero(int dim, int level = 0) { return GridFunction(dim, level, {}); }

  int dim() const { return dim_; }
  int level() const { return level_; }
  Scalar delta() const { return Scalar(std::exp2(-level_)); }
  const std::vector<Cell>& cells() const { return cells_; }
  bool is_zero() const { return cells_.empty(); }

  Box<Scalar> cell_box(const GridIndex& idx) const {
    VectorX<Scalar> lo(dim_), hi(dim_);
    const Scalar d = delta();
    for (int i = 0; i < dim_; ++i) {
      lo(i) = Scalar(idx[static_cast<std::size_t>(i)]) * d;
      hi(i) = Scalar(idx[static_cast<std::size_t>(i)] + 1) * d;
    }
    return Box<Scalar>(lo, hi);
  }

  // Same function on the grid refined to new_level >= level.
  GridFunction refine(int new_level) const {
    if (new_level == level_) return *this;
    if (new_level < level_) throw Error("GridFunction: can only refine to a finer level");
    const int shift = new_level - level_;
    const std::int64_t factor = std::int64_t(1) << shift;
    std::vector<Cell> out;
    out.reserve(cells_.size() << (static_cast<unsigned>(shift) * static_cast<unsigned>(dim_)));
    std::vector<std::int64_t> off(static_cast<std::size_t>(dim_), 0);
    for (const auto& c : cells_) {
      std::fill(off.begin(), off.end(), 0);
      for (;;) {
        Cell nc;
        nc.index.fill(0);
        for (int i = 0; i < dim_; ++i)
          nc.index[static_cast<std::size_t>(i)] =
              c.index[static_cast<std::size_t>(i)] * factor + off[static_cast<std::size_t>(i)];
        nc.value = c.value;
        out.push_back(nc);
        int axis = 0;
        while (axis < dim_) {
          if (++off[static_cast<std::size_t>(axis)] < factor) break;
          off[static_cast<std::size_t>(axis)] = 0;
          ++axis;
        }
        if (axis == dim_) break;
      }
    }
    return GridFunction(dim_, new_level, std::move(out));
  }

  SimpleFunction<Scalar> to_simple_function() const {
    std::vector<Piece<Scalar>> pieces;
    pieces.reserve(cells_.size());
    for (const auto& c : cells_)
      pieces.push_back(Piece<Scalar>{c.value, Polytope<Scalar>::from_box(cell_box(c.index))});
    return SimpleFunction<Scalar>(dim_, std::move(pieces));
  }

  friend bool operator==(const GridFunction& a, const GridFunction& b) {
    if (a.dim_ != b.dim_ || a.level_ != b.level_ || a.cells_.size() != b.cells_.size())
      return false;
    for (std::size_t i = 0; i < a.cells_.size(); ++i)
      if (a.cells_[i].index != b.cells_[i].index || a.cells_[i].value != b.cells_[i].value)
        return false;
    return true;
  }

 private:
  int dim_;
  int level_;
  std::vector<Cell> cells_;
};

// Bring two grid functions onto one (the finer) grid.
template <typename Scalar>
std::pair<GridFunction<Scalar>, GridFunction<Scalar>> common_refine(const GridFunction<Scalar>& h,
                                                                    const GridFunction<Scalar>& f) {
  if (h.dim() != f.dim()) throw GridMismatch("common_refine: dimension mismatch");
  const int level = std::max(h.level(), f.level());
  return {h.refine(level), f.refine(level)};
}

// Cellwise max and min over the union of supports, absent cells counting
// as value 0; zero-valued result cells are dropped.
template <typename Scalar>
std::pair<GridFunction<Scalar>, GridFunction<Scalar>> lattice_join_meet(
    const GridFunction<Scalar>& h, const GridFunction<Scalar>& f) {
  if (h.dim() != f.dim() || h.level() != f.level())
    throw GridMismatch("lattice_join_meet: functions must share one grid");
  using Cell = typename GridFunction<Scalar>::Cell;
  std::vector<Cell> join, meet;
  const auto& a = h.cells();
  const auto& b = f.cells();
  std::size_t i = 0, j = 0;
  auto push = [](std::vector<Cell>& out, const GridIndex& idx, Scalar v) {
    if (v != Scalar(0)) out.push_back(Cell{idx, v});
  };
  while (i < a.size() || j < b.size()) {
    if (j >= b.size() || (i < a.size() && a[i].index < b[j].index)) {
      push(join, a[i].index, std::max(a[i].value, Scalar(0)));
      push(meet, a[i].index, std::min(a[i].value, Scalar(0)));
      ++i;
    } else if (i >= a.size() || b[j].index < a[i].index) {
      push(join, b[j].index, std::max(b[j].value, Scalar(0)));
      push(meet, b[j].index, std::min(b[j].value, Scalar(0)));
      ++j;
    } else {
      push(join, a[i].index, std::max(a[i].value, b[j].value));
      push(meet, a[i].index, std::min(a[i].value, b[j].value));
      ++i;
      ++j;
    }
  }
  return {GridFunction<Scalar>(h.dim(), h.level(), std::move(join)),
          GridFunction<Scalar>(h.dim(), h.level(), std::move(meet))};
}

// --- composition and norms -----------------------------------------------------

template <typename Scalar>
SimpleFunction<Scalar> compose(const CompositionFunction<Scalar>& xi,
                               const SimpleFunction<Scalar>& h) {
  std::vector<Piece<Scalar>> pieces;
  pieces.reserve(h.pieces().size());
  for (const auto& pc : h.pieces()) {
    const Scalar v = xi(pc.alpha);
    if (v != Scalar(0)) pieces.push_back(Piece<Scalar>{v, pc.support});
  }
  return SimpleFunction<Scalar>(h.dim(), std::move(pieces));
}

template <typename Scalar>
GridFunction<Scalar> compose(const CompositionFunction<Scalar>& xi, const GridFunction<Scalar>& g) {
  std::vector<typename GridFunction<Scalar>::Cell> cells;
  cells.reserve(g.cells().size());
  for (const auto& c : g.cells()) {
    const Scalar v = xi(c.value);
    if (v != Scalar(0)) cells.push_back({c.index, v});
  }
  return GridFunction<Scalar>(g.dim(), g.level(), std::move(cells));
}

// ||h||_{L^p} against the measure |x|^2 dx: supports have pairwise
// disjoint interiors, so the norm is (sum |alpha_i|^p mu(P_i))^(1/p)
// with mu(P) = trace M(P).
template <typename Scalar>
Scalar lp_norm(const SimpleFunction<Scalar>& h, Scalar p) {
  if (!(p >= Scalar(1))) throw Error("lp_norm: p must be >= 1");
  Scalar acc = 0;
  for (const auto& pc : h.pieces())
    acc += std::pow(std::abs(pc.alpha), p) * polytope_moment(pc.support).trace();
  return std::pow(acc, Scalar(1) / p);
}

template <typename Scalar>
Scalar lp_norm(const GridFunction<Scalar>& g, Scalar p) {
  if (!(p >= Scalar(1))) throw Error("lp_norm: p must be >= 1");
  Scalar acc = 0;
  for (const auto& c : g.cells())
    acc += std::pow(std::abs(c.value), p) * box_moment(g.cell_box(c.index)).trace();
  return std::pow(acc, Scalar(1) / p);
}

// h composed with the inverse of phi: supports are transported forward.
template <typename Scalar>
SimpleFunction<Scalar> pullback(const SimpleFunction<Scalar>& h, const SLTransform<Scalar>& phi) {
  if (h.dim() != phi.dim()) throw DimensionMismatch("pullback: dimension mismatch");
  std::vector<Piece<Scalar>> pieces;
  pieces.reserve(h.pieces().size());
  for (const auto& pc : h.pieces())
    pieces.push_back(Piece<Scalar>{pc.alpha, transform_polytope(phi, pc.support)});
  return SimpleFunction<Scalar>(h.dim(), std::move(pieces));
}

// --- indicator distance ----------------------------------------------------------

template <typename Scalar = double>
struct IndicatorDistance {
  Scalar exact;            // || alpha 1_A - alpha 1_P ||_{L^p(mu)}
  Scalar bound;            // |alpha| a^(2/p) lambda(A sym-diff P)^(1/p)
  Scalar sym_diff_volume;  // lambda(A sym-diff P)
  Scalar radius;           // the a used in the bound
  bool inner;              // whether A was contained in P
};

namespace detail {

template <typename Scalar>
IndicatorDistance<Scalar> indicator_distance_impl(Scalar alpha,
                                                  const std::vector<Box<Scalar>>& cells,
                                                  const Polytope<Scalar>& p, Scalar q,
                                                  std::optional<Scalar> ball_radius) {
  if (!(q >= Scalar(1))) throw Error("indicator_distance: p must be >= 1");
  if (!p.is_full_dimensional())
    throw Error("indicator_distance: reference polytope must be full-dimensional");
  const auto hs = polytope_halfspaces(p);
  const Scalar slack = Scalar(tol::kExact) * p.coordinate_scale();
  bool inner = true;
  for (const auto& c : cells) {
    for (unsigned code = 0; code < (1u << p.dim()) && inner; ++code)
      inner = halfspaces_contain(hs, c.corner(code), slack);
    if (!inner) break;
  }
  if (!inner && !ball_radius)
    throw ContainmentViolation(
        "indicator_distance: approximation is not contained in the polytope and no ball radius "
        "was supplied");

  Scalar vol_p = polytope_volume(p), mu_p = polytope_moment(p).trace();
  Scalar vol_sym = 0, mu_sym = 0;
  Scalar radius = 0;
  for (Eigen::Index v = 0; v < p.vertex_count(); ++v)
    radius = std::max(radius, p.vertex(v).norm());
  if (inner) {
    Scalar vol_cells = 0, mu_cells = 0;
    for (const auto& c : cells) {
      vol_cells += box_volume(c);
      mu_cells += box_moment(c).trace();
    }
    vol_sym = std::max(Scalar(0), vol_p - vol_cells);
    mu_sym = std::max(Scalar(0), mu_p - mu_cells);
  } else {
    // cells may stick out of P; they are assumed pairwise disjoint
    Scalar vol_cells = 0, mu_cells = 0, vol_common = 0, mu_common = 0;
    for (const auto& c : cells) {
      vol_cells += box_volume(c);
      mu_cells += box_moment(c).trace();
      const auto inter = intersect_polytopes(p, Polytope<Scalar>::from_box(c));
      vol_common += polytope_volume(inter);
      mu_common += polytope_moment(inter).trace();
      for (unsigned code = 0; code < (1u << p.dim()); ++code)
        radius = std::max(radius, c.corner(code).norm());
    }
    vol_sym = std::max(Scalar(0), vol_p + vol_cells - 2 * vol_common);
    mu_sym = std::max(Scalar(0), mu_p + mu_cells - 2 * mu_common);
  }
  if (ball_radius) radius = *ball_radius;

  IndicatorDistance<Scalar> out;
  out.exact = std::abs(alpha) * std::pow(mu_sym, Scalar(1) / q);
  out.bound = std::abs(alpha) * std::pow(radius, Scalar(2) / q) * std::pow(vol_sym, Scalar(1) / q);
  out.sym_diff_volume = vol_sym;
  out.radius = radius;
  out.inner = inner;
  return out;
}

}  // namespace detail

template <typename Scalar>
IndicatorDistance<Scalar> indicator_distance(Scalar alpha, const std::vector<Box<Scalar>>& cells,
                                             const Polytope<Scalar>& p, Scalar q,
                                             std::optional<Scalar> ball_radius = std::nullopt) {
  return detail::indicator_distance_impl(alpha, cells, p, q, ball_radius);
}

template <typename Scalar>
IndicatorDistance<Scalar> indicator_distance(Scalar alpha, const Polytope<Scalar>& approx,
                                             const Polytope<Scalar>& p, Scalar q,
                                             std::optional<Scalar> ball_radius = std::nullopt) {
  if (!(q >= Scalar(1))) throw Error("indicator_distance: p must be >= 1");
  if (!p.is_full_dimensional())
    throw Error("indicator_distance: reference polytope must be full-dimensional");
  const auto hs = polytope_halfspaces(p);
  const Scalar slack = Scalar(tol::kExact) * p.coordinate_scale();
  bool inner = true;
  for (Eigen::Index v = 0; v < approx.vertex_count() && inner; ++v)
    inner = halfspaces_contain(hs, approx.vertex(v).eval(), slack);
  if (!inner && !ball_radius)
    throw ContainmentViolation(
        "indicator_distance: approximation is not contained in the polytope and no ball radius "
        "was supplied");

  const Scalar vol_p = polytope_volume(p), mu_p = polytope_moment(p).trace();
  const Scalar vol_a = polytope_volume(approx), mu_a = polytope_moment(approx).trace();
  Scalar vol_common = vol_a, mu_common = mu_a;
  if (!inner && approx.is_full_dimensional()) {
    const auto inter = intersect_polytopes(p, approx);
    vol_common = polytope_volume(inter);
    mu_common = polytope_moment(inter).trace();
  }
  Scalar radius = 0;
  for (Eigen::Index v = 0; v < p.vertex_count(); ++v)
    radius = std::max(radius, p.vertex(v).norm());
  for (Eigen::Index v = 0; v < approx.vertex_count(); ++v)
    radius = std::max(radius, approx.vertex(v).norm());
  if (ball_radius) radius = *ball_radius;

  IndicatorDistance<Scalar> out;
  out.sym_diff_volume = std::max(Scalar(0), vol_p + vol_a - 2 * vol_common);
  const Scalar mu_sym = std::max(Scalar(0), mu_p + mu_a - 2 * mu_common);
  out.exact = std::abs(alpha) * std::pow(mu_sym, Scalar(1) / q);
  out.bound =
      std::abs(alpha) * std::pow(radius, Scalar(2) / q) * std::pow(out.sym_diff_volume, Scalar(1) / q);
  out.radius = radius;
  out.inner = inner;
  return out;
}

// --- radial probe -----------------------------------------------------------------

// Probes h(x) = |x|^(-gamma) on the shell 1 <= |x| <= R: membership of h
// in L^p(|x|^2 dx) as R grows is the closed-form criterion gamma p > n+2,
// and the reduced one-dimensional integral of xi(r^-gamma) r^(n+1)
// either settles or grows without bound as R increases.
template <typename Scalar = double>
struct RadialProbeReport {
  int dim = 0;
  Scalar p = 0, gamma = 0, r_max = 0;
  bool in_lp = false;
  std::vector<Scalar> radii;
  std::vector<Scalar> partials;
  bool divergent = false;
};

template <typename Scalar>
RadialProbeReport<Scalar> radial_membership_and_K_probe(const CompositionFunction<Scalar>& xi,
                                                        Scalar p, int n, Scalar gamma,
                                                        Scalar r_max = Scalar(1e4)) {
  if (!(gamma > Scalar(0))) throw Error("radial probe: gamma must be positive");
  if (!(p >= Scalar(1))) throw Error("radial probe: p must be >= 1");
  if (n < 1 || n > kMaxDim) throw DimensionMismatch("radial probe: dimension out of range");
  if (!(r_max > Scalar(1))) throw Error("radial probe: r_max must exceed 1");

  RadialProbeReport<Scalar> rep;
  rep.dim = n;
  rep.p = p;
  rep.gamma = gamma;
  rep.r_max = r_max;
  rep.in_lp = gamma * p > Scalar(n) + Scalar(2);

  for (const Scalar r : {Scalar(10), Scalar(100), Scalar(1000)})
    if (r < r_max) rep.radii.push_back(r);
  rep.radii.push_back(r_max);

  auto integrand = [&](double r) {
    return static_cast<double>(xi(Scalar(std::pow(r, -static_cast<double>(gamma)))) *
                               Scalar(std::pow(r, n + 1)));
  };
  double from = 1.0, acc = 0.0;
  for (const Scalar r : rep.radii) {
    // log-spaced panels across the stretch keep the rule accurate
    const double to = static_cast<double>(r);
    const int panels = std::max(4, static_cast<int>(std::ceil(8 * std::log10(to / from + 1))));
    acc += integrate(integrand, from, to, panels);
    rep.partials.push_back(Scalar(acc));
    from = to;
  }

  // Divergence verdict from the growth of decade increments: shrinking
  // increments settle, non-shrinking ones (including the log case) do not.
  const std::size_t m = rep.partials.size();
  if (m >= 3) {
    const Scalar d_last = rep.partials[m - 1] - rep.partials[m - 2];
    const Scalar d_prev = rep.partials[m - 2] - rep.partials[m - 3];
    const Scalar tiny = Scalar(1e-12) * std::max(Scalar(1), std::abs(rep.partials[m - 1]));
    rep.divergent = (std::abs(d_prev) > tiny && std::abs(d_last) >= Scalar(0.999) * std::abs(d_prev));
  }
  if (std::abs(rep.partials.back()) > Scalar(1e12)) rep.divergent = true;
  return rep;
}

// --- function sequences ----------------------------------------------------------

// A sequence h_k -> limit whose distance in L^p(mu) is computable per k;
// the factory that builds a sequence also supplies its exact distance.
template <typename Scalar = double>
struct FunctionSequence {
  std::string label;
  std::function<SimpleFunction<Scalar>(int)> generator;
  SimpleFunction<Scalar> limit = SimpleFunction<Scalar>::zero(1);
  std::function<Scalar(int)> distance;  // ||h_k - limit||_{L^p(mu)}
};

}  // namespace vlab
