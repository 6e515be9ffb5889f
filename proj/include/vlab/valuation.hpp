#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vlab/functions.hpp"
#include "vlab/geometry.hpp"

// The moment operator K on simple functions, the valuation family
//   Psi(h) = K(xi . h) + s * rho
// (rho the quarter-turn rotation, present only in dimension 2), residual
// checks for the valuation identity and SL(n) covariance, zero-structure
// analysis, and black-box extraction of (xi, s).

namespace vlab {

// The quarter-turn rotation [[0,-1],[1,0]]; phi rho phi^t = rho for every
// determinant-one 2x2 matrix, which is what lets it ride along in 2-D.
template <typename Scalar = double>
MatrixX<Scalar> quarter_turn() {
  MatrixX<Scalar> rho(2, 2);
  rho << Scalar(0), Scalar(-1), Scalar(1), Scalar(0);
  return rho;
}

// --- ValuationSpec -----------------------------------------------------------

// A concrete member of the constructive family: dimension, the exponent p
// of the weighted L^p space it acts on, the composition function xi, and
// the rotation coefficient s (dimension 2 only).
template <typename Scalar = double>
class ValuationSpec {
 public:
  ValuationSpec(int dim, Scalar space_p, CompositionFunction<Scalar> xi, Scalar rotation_s)
      : dim_(dim), space_p_(space_p), xi_(std::move(xi)), rotation_s_(rotation_s) {
    if (dim_ < 1 || dim_ > kMaxDim)
      throw DimensionMismatch("ValuationSpec: dimension must be in 1..6");
    if (!(space_p_ >= Scalar(1))) throw Error("ValuationSpec: p must be >= 1");
    if (dim_ != 2 && rotation_s_ != Scalar(0))
      throw RotationInHighDim(
          "ValuationSpec: the rotation coefficient s must be 0 unless the dimension is 2");
    const auto growth = check_growth(xi_, xi_.exponent_p(), xi_.growth_constant_d());
    if (!growth.pass)
      throw Error("ValuationSpec: xi '" + xi_.label() + "' violates its claimed growth bound (" +
                  format_scalar(static_cast<double>(growth.max_ratio)) + " > d = " +
                  format_scalar(static_cast<double>(xi_.growth_constant_d())) + ")");
  }

  int dim() const { return dim_; }
  Scalar space_exponent() const { return space_p_; }
  const CompositionFunction<Scalar>& xi() const { return xi_; }
  Scalar rotation_coefficient() const { return rotation_s_; }

 private:
  int dim_;
  Scalar space_p_;
  CompositionFunction<Scalar> xi_;
  Scalar rotation_s_;
};

// --- the moment operator K ----------------------------------------------------

// K on a simple function: additive over pieces, alpha * M(P) per piece.
template <typename Scalar>
MatrixX<Scalar> moment_of_simple(const SimpleFunction<Scalar>& h) {
  MatrixX<Scalar> acc = MatrixX<Scalar>::Zero(h.dim(), h.dim());
  for (const auto& pc : h.pieces()) acc += pc.alpha * polytope_moment(pc.support);
  return acc;
}

// Same operator on the grid representation (closed-form cell moments).
template <typename Scalar>
MatrixX<Scalar> moment_of_grid(const GridFunction<Scalar>& g) {
  MatrixX<Scalar> acc = MatrixX<Scalar>::Zero(g.dim(), g.dim());
  for (const auto& c : g.cells()) acc += c.value * box_moment(g.cell_box(c.index));
  return acc;
}

template <typename Scalar>
MatrixX<Scalar> psi_evaluate(const ValuationSpec<Scalar>& spec, const SimpleFunction<Scalar>& h) {
  if (h.dim() != spec.dim()) throw DimensionMismatch("psi_evaluate: dimension mismatch");
  MatrixX<Scalar> out = moment_of_simple(compose(spec.xi(), h));
  if (spec.dim() == 2) out += spec.rotation_coefficient() * quarter_turn<Scalar>();
  return out;
}

template <typename Scalar>
MatrixX<Scalar> psi_evaluate(const ValuationSpec<Scalar>& spec, const GridFunction<Scalar>& g) {
  if (g.dim() != spec.dim()) throw DimensionMismatch("psi_evaluate: dimension mismatch");
  MatrixX<Scalar> out = moment_of_grid(compose(spec.xi(), g));
  if (spec.dim() == 2) out += spec.rotation_coefficient() * quarter_turn<Scalar>();
  return out;
}

// --- BlackBoxValuation -----------------------------------------------------------

// An opaque evaluator under test. Only the simple-function hook is
// required; the grid hook, when absent, goes through to_simple_function.
// Evaluators that are not safe to call concurrently say so, and the
// harness runs them serially.
template <typename Scalar = double>
struct BlackBoxValuation {
  int dim = 0;
  Scalar p = Scalar(1);
  std::function<MatrixX<Scalar>(const SimpleFunction<Scalar>&)> evaluate_simple;
  std::function<MatrixX<Scalar>(const GridFunction<Scalar>&)> evaluate_grid;
  bool thread_safe = true;

  MatrixX<Scalar> operator()(const SimpleFunction<Scalar>& h) const { return evaluate_simple(h); }
  MatrixX<Scalar> operator()(const GridFunction<Scalar>& g) const {
    if (evaluate_grid) return evaluate_grid(g);
    return evaluate_simple(g.to_simple_function());
  }
  MatrixX<Scalar> at_zero() const { return evaluate_simple(SimpleFunction<Scalar>::zero(dim)); }
};

template <typename Scalar>
BlackBoxValuation<Scalar> make_black_box(const ValuationSpec<Scalar>& spec) {
  BlackBoxValuation<Scalar> v;
  v.dim = spec.dim();
  v.p = spec.space_exponent();
  v.evaluate_simple = [spec](const SimpleFunction<Scalar>& h) { return psi_evaluate(spec, h); };
  v.evaluate_grid = [spec](const GridFunction<Scalar>& g) { return psi_evaluate(spec, g); };
  return v;
}

// --- Monte Carlo moment oracle --------------------------------------------------

template <typename Scalar = double>
struct McSampler {
  Box<Scalar> region;
  long sample_count = 1000000;
  std::uint64_t seed = 1;
};

template <typename Scalar = double>
struct McMoment {
  MatrixX<Scalar> estimate;
  MatrixX<Scalar> stderr_;
  // integral of |h(x)|^p |x|^2 dx over the region, with its own error bar
  Scalar weighted_power_integral = 0;
  Scalar weighted_power_stderr = 0;
};

// Uniform-sampling estimate of the moment integral of a density, with
// per-entry standard errors. Deterministic per seed.
template <typename Scalar>
McMoment<Scalar> moment_monte_carlo(const std::function<Scalar(const VectorX<Scalar>&)>& density,
                                    Scalar p, const McSampler<Scalar>& sampler) {
  const int n = sampler.region.dim();
  const Scalar vol = box_volume(sampler.region);
  Rng rng(sampler.seed);
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(n, n), sumsq = MatrixX<Scalar>::Zero(n, n);
  Scalar wsum = 0, wsumsq = 0;
  VectorX<Scalar> x(n);
  for (long s = 0; s < sampler.sample_count; ++s) {
    for (int i = 0; i < n; ++i)
      x(i) = Scalar(rng.uniform(static_cast<double>(sampler.region.lower()(i)),
                                static_cast<double>(sampler.region.upper()(i))));
    const Scalar hv = density(x);
    if (hv != Scalar(0)) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const Scalar g = hv * x(i) * x(j);
          sum(i, j) += g;
          sumsq(i, j) += g * g;
        }
      const Scalar w = std::pow(std::abs(hv), p) * x.squaredNorm();
      wsum += w;
      wsumsq += w * w;
    }
  }
  const Scalar count = Scalar(static_cast<double>(sampler.sample_count));
  McMoment<Scalar> out;
  out.estimate.resize(n, n);
  out.stderr_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Scalar mean = sum(i, j) / count;
      const Scalar var = std::max(Scalar(0), sumsq(i, j) / count - mean * mean);
      out.estimate(i, j) = vol * mean;
      out.estimate(j, i) = out.estimate(i, j);
      out.stderr_(i, j) = vol * std::sqrt(var / count);
      out.stderr_(j, i) = out.stderr_(i, j);
    }
  const Scalar wmean = wsum / count;
  out.weighted_power_integral = vol * wmean;
  out.weighted_power_stderr =
      vol * std::sqrt(std::max(Scalar(0), wsumsq / count - wmean * wmean) / count);
  return out;
}

// --- residuals ---------------------------------------------------------------------

// Frobenius norm of V(h v f) + V(h ^ f) - V(h) - V(f) on a shared grid.
template <typename Scalar>
Scalar valuation_residual(const BlackBoxValuation<Scalar>& v, const GridFunction<Scalar>& h,
                          const GridFunction<Scalar>& f) {
  if (h.dim() != f.dim() || h.level() != f.level())
    throw GridMismatch("valuation_residual: functions must share one grid");
  auto [join, meet] = lattice_join_meet(h, f);
  return (v(join) + v(meet) - v(h) - v(f)).norm();
}

// Frobenius norm of V(h . phi^-1) - phi V(h) phi^t, normalized by
// 1 + ||V(h)||_F.
template <typename Scalar>
Scalar covariance_residual(const BlackBoxValuation<Scalar>& v, const SimpleFunction<Scalar>& h,
                           const SLTransform<Scalar>& phi) {
  if (h.dim() != phi.dim() || v.dim != h.dim())
    throw DimensionMismatch("covariance_residual: dimension mismatch");
  const MatrixX<Scalar> vh = v(h);
  const MatrixX<Scalar> lhs = v(pullback(h, phi));
  return (lhs - phi.matrix() * vh * phi.matrix().transpose()).norm() / (Scalar(1) + vh.norm());
}

// --- zero structure ----------------------------------------------------------------

template <typename Scalar = double>
struct ZeroStructureReport {
  int dim = 0;
  bool conformant = false;
  Scalar s_hat = 0;      // extracted rotation coefficient (dimension 2)
  Scalar residual = 0;   // what must vanish for conformance
  Scalar tolerance = 0;
  MatrixX<Scalar> value;  // V(0)
};

// In dimension 2 the value at the zero function must be antisymmetric
// (s * rho for some s); in any other dimension it must vanish outright.
template <typename Scalar>
ZeroStructureReport<Scalar> zero_structure(const BlackBoxValuation<Scalar>& v,
                                           Scalar tolerance = Scalar(tol::kExact)) {
  ZeroStructureReport<Scalar> rep;
  rep.dim = v.dim;
  rep.tolerance = tolerance;
  rep.value = v.at_zero();
  if (v.dim == 2) {
    const MatrixX<Scalar> sym = (rep.value + rep.value.transpose()) / Scalar(2);
    rep.residual = sym.norm();
    rep.s_hat = (rep.value(1, 0) - rep.value(0, 1)) / Scalar(2);
  } else {
    rep.residual = rep.value.norm();
    rep.s_hat = 0;
  }
  rep.conformant = rep.residual <= tolerance;
  return rep;
}

// --- extraction of (xi, s) ------------------------------------------------------------

template <typename Scalar = double>
struct ExtractionResult {
  std::vector<Scalar> alphas;
  std::vector<Scalar> xi_hat;          // xi(alpha) samples
  std::vector<Scalar> fit_residuals;   // per-alpha distance from the rank-one model
  Scalar s_hat = 0;
  Scalar s_spread = 0;                 // max deviation of per-alpha s estimates
  Scalar max_fit_residual = 0;
};

// Sample the composition function and rotation coefficient of a black box
// from its values on weighted indicators of one full-dimensional polytope:
//   V(alpha 1_P) = xi(alpha) M(P) + s rho.
// xi(alpha) is recovered by Frobenius projection onto M(P), which averages
// rounding error; the per-alpha residual exposes any non-rank-one response.
template <typename Scalar>
ExtractionResult<Scalar> extract_xi_and_s(const BlackBoxValuation<Scalar>& v,
                                          const std::vector<Scalar>& alphas,
                                          const Polytope<Scalar>& p) {
  if (p.dim() != v.dim) throw DimensionMismatch("extract_xi_and_s: dimension mismatch");
  const MatrixX<Scalar> m = polytope_moment(p);
  const Scalar m_norm2 = m.squaredNorm();
  if (!(m_norm2 > Scalar(0)))
    throw DegenerateSupport("extract_xi_and_s: M(P) vanishes (support has empty interior)");

  ExtractionResult<Scalar> out;
  out.alphas = alphas;
  std::vector<Scalar> s_samples;
  for (const Scalar alpha : alphas) {
    const MatrixX<Scalar> a = v(SimpleFunction<Scalar>::indicator(alpha, p));
    MatrixX<Scalar> shape;
    if (v.dim == 2) {
      s_samples.push_back((a(1, 0) - a(0, 1)) / Scalar(2));
      shape = (a + a.transpose()) / Scalar(2);
    } else {
      shape = a;
    }
    const Scalar xi_alpha = (shape.array() * m.array()).sum() / m_norm2;
    out.xi_hat.push_back(xi_alpha);
    out.fit_residuals.push_back((shape - xi_alpha * m).norm());
    out.max_fit_residual = std::max(out.max_fit_residual, out.fit_residuals.back());
  }
  if (!s_samples.empty()) {
    Scalar acc = 0;
    for (const Scalar s : s_samples) acc += s;
    out.s_hat = acc / Scalar(static_cast<double>(s_samples.size()));
    for (const Scalar s : s_samples)
      out.s_spread = std::max(out.s_spread, std::abs(s - out.s_hat));
  }
  return out;
}

// --- decomposition check -----------------------------------------------------------------

// For same-sign coefficients on supports with disjoint interiors,
//   V(join of alpha_i 1_Pi) - V(0)  =  sum of (V(alpha_i 1_Pi) - V(0)),
// with the join replaced by the meet for nonpositive coefficients.
// Returns the Frobenius norm of the difference.
template <typename Scalar>
Scalar decomposition_residual(const BlackBoxValuation<Scalar>& v,
                              const std::vector<Piece<Scalar>>& pieces) {
  bool has_pos = false, has_neg = false;
  for (const auto& pc : pieces) {
    has_pos = has_pos || pc.alpha > Scalar(0);
    has_neg = has_neg || pc.alpha < Scalar(0);
  }
  if (has_pos && has_neg)
    throw MixedSigns("decomposition_residual: coefficients must share one sign");
  if (pieces.empty()) return Scalar(0);

  SimpleFunction<Scalar> h(pieces.front().support.dim(), pieces);
  h.require_disjoint_interiors();

  const MatrixX<Scalar> at_zero = v.at_zero();
  MatrixX<Scalar> sum = v(h) - at_zero;
  for (const auto& pc : pieces)
    sum -= v(SimpleFunction<Scalar>::indicator(pc.alpha, pc.support)) - at_zero;
  return sum.norm();
}

}  // namespace vlab
