#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vlab/valuation.hpp"

using namespace vlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Spec = ValuationSpec<double>;
using XiFn = CompositionFunction<double>;
using Grid = GridFunction<double>;

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

Polytope<double> unit_square() { return Polytope<double>::unit_box(2); }

GridIndex idx2(std::int64_t i, std::int64_t j) {
  GridIndex g{};
  g[0] = i;
  g[1] = j;
  return g;
}

double rel_fro(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

SLTransform<double> conditioned_sl(std::uint64_t seed, int n, double max_cond = 50.0) {
  for (std::uint64_t k = 0;; ++k) {
    auto phi = random_sl_matrix<double>(splitmix64(seed + k), n, 6, 1.0);
    Eigen::JacobiSVD<MatrixXd> svd(phi.matrix());
    const auto& sv = svd.singularValues();
    if (sv(0) / sv(n - 1) <= max_cond) return phi;
  }
}

// two disjoint-interior pieces obtained by slicing a random polytope
SimpleFunction<double> random_simple(std::uint64_t seed, int n) {
  Rng rng(seed);
  const auto p =
      random_polytope<double>(splitmix64(seed), n, n + 4 + static_cast<int>(rng.index(4)), 1.5);
  VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = rng.uniform(-1, 1);
  if (u.norm() < 1e-3) u(0) = 1;
  double lo = 1e30, hi = -1e30;
  for (Eigen::Index v = 0; v < p.vertex_count(); ++v) {
    lo = std::min(lo, u.dot(p.vertex(v)));
    hi = std::max(hi, u.dot(p.vertex(v)));
  }
  const double cut = lo + (hi - lo) * rng.uniform(0.3, 0.7);
  auto [a, b] = halfspace_slice(p, u, cut, cut);
  std::vector<Piece<double>> pieces;
  if (!a.is_empty()) pieces.push_back({rng.uniform(-3, 3), a});
  if (!b.is_empty()) pieces.push_back({rng.uniform(-3, 3), b});
  return SimpleFunction<double>(n, std::move(pieces));
}

}  // namespace

TEST_CASE("moment_of_simple: scaling, zero, and tiling additivity") {
  auto h = SimpleFunction<double>::indicator(3.0, unit_square());
  CHECK(rel_fro(moment_of_simple(h), mat2(1.0, 3.0 / 4, 3.0 / 4, 1.0)) < 1e-15);

  CHECK(moment_of_simple(SimpleFunction<double>::zero(2)).isZero(0.0));

  // two triangles tiling the unit square reproduce its moment
  MatrixXd t1(2, 3), t2(2, 3);
  t1 << 0, 1, 1, 0, 0, 1;
  t2 << 0, 1, 0, 0, 1, 1;
  SimpleFunction<double> tiled(2, {{1.0, Polytope<double>::from_points(t1)},
                                   {1.0, Polytope<double>::from_points(t2)}});
  CHECK(rel_fro(moment_of_simple(tiled), mat2(1.0 / 3, 1.0 / 4, 1.0 / 4, 1.0 / 3)) < 1e-14);
}

TEST_CASE("K bridge: both routes agree on weighted indicators") {
  for (int n = 2; n <= 3; ++n) {
    for (int c = 0; c < 60; ++c) {
      const std::uint64_t seed =
          derive_seed(51, "kbridge", static_cast<std::uint64_t>(n * 1000 + c));
      Rng rng(seed);
      const double alpha = rng.uniform(-4, 4);
      const auto p = random_polytope<double>(splitmix64(seed), n, n + 5, 1.5);
      const MatrixXd direct = alpha * polytope_moment(p);
      const MatrixXd viaK = moment_of_simple(SimpleFunction<double>::indicator(alpha, p));
      CHECK(rel_fro(viaK, direct) < 1e-12);
    }
  }
}

TEST_CASE("psi_evaluate: the worked 2-D example") {
  Spec spec(2, 2.0, XiFn::signed_power(2, 1), 5.0);  // xi(t) = t|t|, s = 5
  auto h = SimpleFunction<double>::indicator(2.0, unit_square());
  // xi(2) = 4 times the unit-square moment, plus 5 * rho
  CHECK(rel_fro(psi_evaluate(spec, h), mat2(4.0 / 3, -4.0, 6.0, 4.0 / 3)) < 1e-14);

  // at the zero function only the rotation term remains
  CHECK(rel_fro(psi_evaluate(spec, SimpleFunction<double>::zero(2)),
                (5.0 * quarter_turn<double>()).eval()) < 1e-15);
  Spec spec3(3, 2.0, XiFn::signed_power(2, 1), 0.0);
  CHECK(psi_evaluate(spec3, SimpleFunction<double>::zero(3)).isZero(0.0));

  CHECK_THROWS_AS(Spec(3, 2.0, XiFn::signed_power(2, 1), 0.1), RotationInHighDim);
}

TEST_CASE("grid and simple evaluation routes agree") {
  Spec spec(2, 1.0, XiFn::clamped_power(1, 2, 5), -3.0);
  Grid g(2, 1, {{idx2(-1, 0), 2.0}, {idx2(0, 0), -1.5}, {idx2(2, 1), 0.75}});
  CHECK(rel_fro(psi_evaluate(spec, g), psi_evaluate(spec, g.to_simple_function())) < 1e-14);
  CHECK(rel_fro(moment_of_grid(g), moment_of_simple(g.to_simple_function())) < 1e-14);
}

TEST_CASE("moment_monte_carlo hits the exact square moment") {
  McSampler<double> sampler{Box<double>(VectorXd::Zero(2), VectorXd::Ones(2)), 1000000, 77};
  auto indicator = [](const VectorXd&) { return 1.0; };
  const auto mc = moment_monte_carlo<double>(indicator, 2.0, sampler);
  CHECK(std::abs(mc.estimate(0, 0) - 1.0 / 3) <= 4.0 * mc.stderr_(0, 0));
  CHECK(std::abs(mc.estimate(0, 1) - 1.0 / 4) <= 4.0 * mc.stderr_(0, 1));
  // the weighted power integral estimates mu of the square = 2/3
  CHECK(std::abs(mc.weighted_power_integral - 2.0 / 3) <= 4.0 * mc.weighted_power_stderr);

  auto zero = [](const VectorXd&) { return 0.0; };
  const auto z = moment_monte_carlo<double>(zero, 2.0, sampler);
  CHECK(z.estimate.isZero(0.0));
  CHECK(z.stderr_.isZero(0.0));
}

TEST_CASE("moment_monte_carlo standard errors shrink like 1/sqrt(samples)") {
  auto indicator = [](const VectorXd& x) { return x.sum() <= 1.0 ? 1.0 : 0.0; };
  double r1 = 0, r4 = 0;
  const int reps = 6;
  for (int r = 0; r < reps; ++r) {
    McSampler<double> small{Box<double>(VectorXd::Zero(2), VectorXd::Ones(2)), 50000,
                            derive_seed(53, "mc", static_cast<std::uint64_t>(r))};
    McSampler<double> big = small;
    big.sample_count = 200000;
    big.seed ^= 0x5a5a;
    r1 += moment_monte_carlo<double>(indicator, 1.0, small).stderr_(0, 0);
    r4 += moment_monte_carlo<double>(indicator, 1.0, big).stderr_(0, 0);
  }
  CHECK(r1 / r4 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("valuation residual vanishes for the constructive family") {
  for (int c = 0; c < 50; ++c) {
    const std::uint64_t seed = derive_seed(55, "valres", static_cast<std::uint64_t>(c));
    Rng rng(seed);
    const int n = rng.range(2, 3);
    const auto family = XiFn::builtin_family(static_cast<double>(rng.range(1, 3)));
    const auto& xi = family[rng.index(family.size())];
    Spec spec(n, 2.0, xi, n == 2 ? rng.uniform(-5, 5) : 0.0);
    auto v = make_black_box(spec);

    auto draw_cells = [&](int count) {
      std::vector<Grid::Cell> cells;
      for (int k = 0; k < count; ++k) {
        Grid::Cell cell;
        cell.index.fill(0);
        for (int i = 0; i < n; ++i) cell.index[static_cast<std::size_t>(i)] = rng.range(-2, 2);
        cell.value = rng.uniform(-3, 3);
        bool dup = false;
        for (const auto& o : cells) dup = dup || o.index == cell.index;
        if (!dup) cells.push_back(cell);
      }
      return cells;
    };
    Grid h(n, 1, draw_cells(6)), f(n, 1, draw_cells(6));
    CHECK(valuation_residual(v, h, f) <= 1e-10);
    CHECK(valuation_residual(v, h, h) == 0.0);  // join = meet = h
  }
}

TEST_CASE("the squared moment operator is not a valuation") {
  BlackBoxValuation<double> broken;
  broken.dim = 2;
  broken.p = 1.0;
  broken.evaluate_simple = [](const SimpleFunction<double>& h) {
    const MatrixXd k = moment_of_simple(h);
    return (k * k).eval();
  };

  Grid h(2, 0, {{idx2(0, 0), 1.0}});
  Grid f(2, 0, {{idx2(1, 0), 1.0}});
  // hand computation: residual = || Mc Mc' + Mc' Mc ||_F for the two cells
  const MatrixXd mc = mat2(1.0 / 3, 1.0 / 4, 1.0 / 4, 1.0 / 3);
  const MatrixXd mcp = mat2(7.0 / 3, 3.0 / 4, 3.0 / 4, 1.0 / 3);
  const double expected = (mc * mcp + mcp * mc).norm();
  CHECK(valuation_residual(broken, h, f) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(valuation_residual(broken, h, f) > 1e-3);
}

TEST_CASE("covariance residual for the constructive family") {
  for (int c = 0; c < 40; ++c) {
    const std::uint64_t seed = derive_seed(57, "covres", static_cast<std::uint64_t>(c));
    Rng rng(seed);
    const int n = rng.range(2, 4);
    const auto family = XiFn::builtin_family(2.0);
    Spec spec(n, 2.0, family[rng.index(family.size())], n == 2 ? rng.uniform(-5, 5) : 0.0);
    auto v = make_black_box(spec);
    const auto h = random_simple(splitmix64(seed), n);
    const auto phi = conditioned_sl(seed ^ 0x1234, n);
    CHECK(covariance_residual(v, h, phi) <= 1e-9);
  }

  // the pure rotation case: h = 0, s != 0
  Spec spec(2, 2.0, XiFn::zero(), 5.0);
  auto v = make_black_box(spec);
  const auto phi = conditioned_sl(404, 2);
  CHECK(covariance_residual(v, SimpleFunction<double>::zero(2), phi) <= 1e-12);
}

TEST_CASE("a determinant-2 map breaks moment covariance by the hand-computed amount") {
  // diag(2,1) is constructible only by widening the declared det tolerance
  SLTransform<double> stretch(mat2(2, 0, 0, 1), 1.5);
  BlackBoxValuation<double> v;
  v.dim = 2;
  v.p = 1.0;
  v.evaluate_simple = [](const SimpleFunction<double>& h) { return moment_of_simple(h); };

  auto h = SimpleFunction<double>::indicator(1.0, unit_square());
  // M(phi P) = 2 phi M phi^t, so the defect is exactly ||phi M phi^t|| / (1 + ||M||)
  const MatrixXd m = mat2(1.0 / 3, 1.0 / 4, 1.0 / 4, 1.0 / 3);
  const MatrixXd cov = stretch.matrix() * m * stretch.matrix().transpose();
  const double expected = cov.norm() / (1.0 + m.norm());
  CHECK(covariance_residual(v, h, stretch) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(covariance_residual(v, h, stretch) > 1e-2);
}

TEST_CASE("rho is invariant under 1000 random SL(2) conjugations") {
  const MatrixXd rho = quarter_turn<double>();
  for (int c = 0; c < 1000; ++c) {
    const auto phi = conditioned_sl(derive_seed(59, "rho", static_cast<std::uint64_t>(c)), 2);
    CHECK((phi.matrix() * rho * phi.matrix().transpose() - rho).norm() <= 1e-12);
  }
}

TEST_CASE("zero structure reports") {
  Spec s2(2, 2.0, XiFn::signed_power(2, 1), 5.0);
  auto r2 = zero_structure(make_black_box(s2));
  CHECK(r2.conformant);
  CHECK(r2.s_hat == doctest::Approx(5.0).epsilon(1e-15));

  Spec s3(3, 2.0, XiFn::signed_power(2, 1), 0.0);
  auto r3 = zero_structure(make_black_box(s3));
  CHECK(r3.conformant);
  CHECK(r3.value.isZero(0.0));

  // a constant nonzero symmetric response at zero cannot be covariant
  BlackBoxValuation<double> bad;
  bad.dim = 2;
  bad.p = 1.0;
  bad.evaluate_simple = [](const SimpleFunction<double>&) {
    return (MatrixXd(2, 2) << 1, 0, 0, 1).finished().eval();
  };
  CHECK_FALSE(zero_structure(bad).conformant);
}

TEST_CASE("extraction round-trip on the worked example") {
  Spec spec(2, 2.0, XiFn::signed_power(2, 1), 5.0);
  auto v = make_black_box(spec);
  const auto res = extract_xi_and_s(v, {-2.0, -1.0, 1.0, 2.0}, unit_square());
  REQUIRE(res.xi_hat.size() == 4);
  CHECK(res.xi_hat[0] == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(res.xi_hat[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(res.xi_hat[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.xi_hat[3] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(res.s_hat - 5.0) <= 1e-12);
  CHECK(res.s_spread <= 1e-12);
  CHECK(res.max_fit_residual <= 1e-10);

  // s = 0 gives symmetric responses
  Spec sym(2, 2.0, XiFn::signed_power(2, 1), 0.0);
  const auto rsym = extract_xi_and_s(make_black_box(sym), {-1.0, 2.0}, unit_square());
  CHECK(rsym.s_hat == 0.0);

  // a segment support has no interior and no moment
  MatrixXd seg(2, 2);
  seg << 0, 1, 0, 1;
  CHECK_THROWS_AS(extract_xi_and_s(v, {1.0}, Polytope<double>::from_points(seg)),
                  DegenerateSupport);
}

TEST_CASE("decomposition residual") {
  auto v = make_black_box(Spec(2, 2.0, XiFn::signed_power(2, 1), 5.0));

  MatrixXd sq2 = unit_square().vertices();
  sq2.row(0).array() += 1.0;
  std::vector<Piece<double>> pieces = {{2.0, unit_square()},
                                       {3.0, Polytope<double>::from_points(sq2)}};
  CHECK(decomposition_residual(v, pieces) <= 1e-10);

  CHECK(decomposition_residual(v, {pieces[0]}) == 0.0);

  std::vector<Piece<double>> mixed = {{2.0, unit_square()},
                                      {-3.0, Polytope<double>::from_points(sq2)}};
  CHECK_THROWS_AS(decomposition_residual(v, mixed), MixedSigns);

  MatrixXd shifted = unit_square().vertices();
  shifted.row(0).array() += 0.5;
  std::vector<Piece<double>> overlapping = {{2.0, unit_square()},
                                            {3.0, Polytope<double>::from_points(shifted)}};
  CHECK_THROWS_AS(decomposition_residual(v, overlapping), OverlappingInteriors);
}

TEST_CASE("negative-coefficient decomposition uses the meet") {
  auto v = make_black_box(Spec(3, 1.0, XiFn::signed_power(1, -2), 0.0));
  MatrixXd c2 = Polytope<double>::unit_box(3).vertices();
  c2.row(1).array() += 1.0;
  std::vector<Piece<double>> pieces = {{-2.0, Polytope<double>::unit_box(3)},
                                       {-0.5, Polytope<double>::from_points(c2)}};
  CHECK(decomposition_residual(v, pieces) <= 1e-10);
}

TEST_CASE("extraction reproduces a black box from its samples") {
  // the testable restatement of the classification: sample (xi, s) from a
  // black box, rebuild the constructive form, and compare on functions
  // whose coefficients come from the sampled grid
  Spec hidden(2, 2.0, XiFn::clamped_power(2, 1, 3), -5.0);
  auto v = make_black_box(hidden);

  std::vector<double> alphas;
  for (int k = 0; k <= 16; ++k) alphas.push_back(-4.0 + 0.5 * k);
  const auto res = extract_xi_and_s(v, alphas, unit_square());

  // piecewise-linear xi through the sampled values (clamped outside)
  auto samples = std::make_shared<std::vector<std::pair<double, double>>>();
  for (std::size_t i = 0; i < alphas.size(); ++i)
    samples->push_back({alphas[i], res.xi_hat[i]});
  auto interp = [samples](double t) {
    if (t <= samples->front().first) return samples->front().second;
    if (t >= samples->back().first) return samples->back().second;
    for (std::size_t i = 1; i < samples->size(); ++i)
      if (t <= (*samples)[i].first) {
        const auto [t0, v0] = (*samples)[i - 1];
        const auto [t1, v1] = (*samples)[i];
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    return samples->back().second;
  };
  double slope = 0;
  for (const auto& [a, x] : *samples)
    if (a != 0) slope = std::max(slope, std::abs(x / a));
  XiFn xi_hat("interp", "0", interp, 1.0, slope * (1 + 1e-9));
  Spec rebuilt(2, 2.0, xi_hat, res.s_hat);

  Rng rng(2718);
  for (int c = 0; c < 20; ++c) {
    const auto p1 = random_polytope<double>(derive_seed(61, "rep", static_cast<std::uint64_t>(c)),
                                            2, 6, 1.0);
    MatrixXd far = p1.vertices();
    far.row(0).array() += 5.0;
    const double a1 = alphas[rng.index(alphas.size())];
    const double a2 = alphas[rng.index(alphas.size())];
    SimpleFunction<double> h(2, {{a1, p1}, {a2, Polytope<double>::from_points(far)}});
    CHECK((v(h) - psi_evaluate(rebuilt, h)).norm() <= 1e-8);
  }
}
