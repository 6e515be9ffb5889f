#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlab/valuation.hpp"

// Seeded randomized property suites, continuity and cube-convergence
// probes, Monte Carlo cross-checks, and machine-readable reports. Every
// case seed is a pure function of (master seed, property id, case index),
// so a failure line in a report is enough to reproduce the case.

namespace vlab {

// --- deterministic generators shared by suites and tests -------------------------

// Deterministic SL(n) element with condition number capped (residual
// tolerances are meaningless for unbounded shears).
inline SLTransform<double> random_conditioned_sl(std::uint64_t seed, int n,
                                                 double max_cond = 50.0, int shears = 6,
                                                 double bound = 1.0) {
  for (std::uint64_t k = 0;; ++k) {
    auto phi = random_sl_matrix<double>(splitmix64(seed + k), n, shears, bound);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi.matrix());
    const auto& sv = svd.singularValues();
    if (sv(0) / sv(n - 1) <= max_cond) return phi;
  }
}

// 1..3 disjoint-interior pieces cut from a random polytope.
inline SimpleFunction<double> random_simple_function(std::uint64_t seed, int n,
                                                     int max_pieces = 3) {
  Rng rng(seed);
  const auto p =
      random_polytope<double>(splitmix64(seed), n, n + 4 + static_cast<int>(rng.index(4)), 1.5);
  const int want = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_pieces)));
  std::vector<Polytope<double>> parts = {p};
  while (static_cast<int>(parts.size()) < want) {
    // split the widest remaining part along a random direction
    std::size_t pick = 0;
    for (std::size_t i = 1; i < parts.size(); ++i)
      if (polytope_volume(parts[i]) > polytope_volume(parts[pick])) pick = i;
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = rng.uniform(-1, 1);
    if (u.norm() < 1e-3) u(0) = 1;
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index v = 0; v < parts[pick].vertex_count(); ++v) {
      lo = std::min(lo, u.dot(parts[pick].vertex(v)));
      hi = std::max(hi, u.dot(parts[pick].vertex(v)));
    }
    const double cut = lo + (hi - lo) * rng.uniform(0.35, 0.65);
    auto [a, b] = halfspace_slice(parts[pick], u, cut, cut);
    if (!a.is_full_dimensional() || !b.is_full_dimensional()) break;
    parts[pick] = a;
    parts.push_back(b);
  }
  std::vector<Piece<double>> pieces;
  for (const auto& part : parts) {
    double alpha = rng.uniform(-3, 3);
    if (std::abs(alpha) < 0.1) alpha = 0.5;
    pieces.push_back({alpha, part});
  }
  return SimpleFunction<double>(n, std::move(pieces));
}

inline GridFunction<double> random_grid_function(std::uint64_t seed, int n, int level,
                                                 int max_cells) {
  Rng rng(seed);
  const int count = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_cells)));
  std::vector<typename GridFunction<double>::Cell> cells;
  for (int c = 0; c < count; ++c) {
    typename GridFunction<double>::Cell cell;
    cell.index.fill(0);
    for (int i = 0; i < n; ++i) cell.index[static_cast<std::size_t>(i)] = rng.range(-3, 2);
    cell.value = rng.uniform(-3, 3);
    bool dup = false;
    for (const auto& o : cells) dup = dup || o.index == cell.index;
    if (!dup) cells.push_back(cell);
  }
  return GridFunction<double>(n, level, std::move(cells));
}

// Random member of the constructive family (built-in xi panel; rotation
// coefficient only in dimension 2).
inline ValuationSpec<double> random_spec(std::uint64_t seed, int n, double p) {
  Rng rng(seed);
  const auto family = CompositionFunction<double>::builtin_family(p);
  const auto& xi = family[rng.index(family.size())];
  double s = 0;
  if (n == 2) {
    const int mode = rng.range(0, 3);
    s = mode == 0 ? -5.0 : mode == 1 ? 0.0 : mode == 2 ? 5.0 : rng.uniform(-5, 5);
  }
  return ValuationSpec<double>(n, p, xi, s);
}

// The 17-point coefficient grid used by extraction checks.
inline std::vector<double> extraction_grid() {
  std::vector<double> alphas;
  for (int k = 0; k <= 16; ++k) alphas.push_back(-4.0 + 0.5 * k);
  return alphas;
}

// --- function-sequence factories ---------------------------------------------------

// h_k = (alpha + 1/k) 1_P -> alpha 1_P; the norm gap has the closed form
// (1/k) mu(P)^(1/p).
inline FunctionSequence<double> coefficient_sequence(const Polytope<double>& p, double alpha,
                                                     double space_p) {
  FunctionSequence<double> seq;
  seq.label = "coefficient alpha+1/k";
  seq.generator = [p, alpha](int k) {
    return SimpleFunction<double>::indicator(alpha + 1.0 / k, p);
  };
  seq.limit = SimpleFunction<double>::indicator(alpha, p);
  const double mu = polytope_moment(p).trace();
  seq.distance = [mu, space_p](int k) { return (1.0 / k) * std::pow(mu, 1.0 / space_p); };
  return seq;
}

// h_k = alpha * (union of the inner dyadic cubes of P at level k) -> alpha 1_P.
inline FunctionSequence<double> dyadic_cube_sequence(const Polytope<double>& p, double alpha,
                                                     double space_p) {
  FunctionSequence<double> seq;
  seq.label = "dyadic inner cubes";
  seq.generator = [p, alpha](int k) {
    auto [cells, gap] = dyadic_inner_cubes(p, std::exp2(-k));
    std::vector<Piece<double>> pieces;
    pieces.reserve(cells.size());
    for (const auto& c : cells)
      pieces.push_back({alpha, Polytope<double>::from_box(c)});
    return SimpleFunction<double>(p.dim(), std::move(pieces));
  };
  seq.limit = SimpleFunction<double>::indicator(alpha, p);
  seq.distance = [p, alpha, space_p](int k) {
    auto [cells, gap] = dyadic_inner_cubes(p, std::exp2(-k));
    return indicator_distance(alpha, cells, p, space_p).exact;
  };
  return seq;
}

// --- probes -------------------------------------------------------------------------

struct ContinuityRow {
  int k = 0;
  double norm_gap = 0;  // ||h_k - h|| in L^p(mu)
  double psi_gap = 0;   // ||V(h_k) - V(h)||_F
};

struct ContinuityReport {
  std::string label;
  std::vector<ContinuityRow> rows;
  double tolerance = 1e-6;
  bool monotone_tail = false;
  bool pass = false;
};

// Tabulates (||h_k - h||, ||V(h_k) - V(h)||) over a k-schedule up to
// k_max (every k when k_max is small, doubling steps when it is not) and
// passes iff the residual column is non-increasing over the last five
// rows and its final entry is below tolerance whenever the norm column
// has reached 1e-6.
inline ContinuityReport continuity_probe(const BlackBoxValuation<double>& v,
                                         const FunctionSequence<double>& seq, int k_max,
                                         double tolerance = 1e-6) {
  if (!seq.distance) throw Error("continuity_probe: sequence lacks its distance hook");
  ContinuityReport rep;
  rep.label = seq.label;
  rep.tolerance = tolerance;

  std::vector<int> schedule;
  if (k_max <= 24) {
    for (int k = 1; k <= k_max; ++k) schedule.push_back(k);
  } else {
    for (int k = 1; k < k_max; k *= 2) schedule.push_back(k);
    schedule.push_back(k_max);
  }

  const Eigen::MatrixXd at_limit = v(seq.limit);
  for (int k : schedule) {
    ContinuityRow row;
    row.k = k;
    row.psi_gap = (v(seq.generator(k)) - at_limit).norm();
    row.norm_gap = seq.distance(k);
    rep.rows.push_back(row);
  }

  const std::size_t m = rep.rows.size();
  rep.monotone_tail = true;
  const std::size_t first = m > 5 ? m - 5 : 0;
  for (std::size_t i = first + 1; i < m; ++i)
    if (rep.rows[i].psi_gap > rep.rows[i - 1].psi_gap * (1 + 1e-12)) rep.monotone_tail = false;
  bool final_ok = true;
  if (!rep.rows.empty() && rep.rows.back().norm_gap < 1e-6)
    final_ok = rep.rows.back().psi_gap <= tolerance;
  rep.pass = rep.monotone_tail && final_ok;
  return rep;
}

struct CubeConvergenceReport {
  std::vector<double> deltas;
  std::vector<double> errors;  // E(delta)
  std::vector<double> ratios;  // E(delta/2) / E(delta)
  bool exact_tiling = false;
  bool pass = false;
};

// E(delta) = || K(xi(alpha) 1_cubes) - xi(alpha) M(P) ||_F over halving
// deltas; passes on exact tilings (E identically ~0) or when E strictly
// decreases with the last ratio inside [ratio_lo, ratio_hi].
inline CubeConvergenceReport cube_convergence_probe(const Polytope<double>& p,
                                                    const CompositionFunction<double>& xi,
                                                    double alpha,
                                                    const std::vector<double>& deltas,
                                                    double ratio_lo = 0.3,
                                                    double ratio_hi = 0.8) {
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (std::abs(deltas[i] - deltas[i - 1] / 2) > 1e-15)
      throw Error("cube_convergence_probe: deltas must halve");
  CubeConvergenceReport rep;
  rep.deltas = deltas;
  const double weight = xi(alpha);
  const Eigen::MatrixXd target = weight * polytope_moment(p);
  for (const double delta : deltas) {
    auto [cells, gap] = dyadic_inner_cubes(p, delta);
    std::vector<Piece<double>> pieces;
    pieces.reserve(cells.size());
    for (const auto& c : cells) pieces.push_back({weight, Polytope<double>::from_box(c)});
    const SimpleFunction<double> approx(p.dim(), std::move(pieces));
    rep.errors.push_back((moment_of_simple(approx) - target).norm());
  }
  for (std::size_t i = 1; i < rep.errors.size(); ++i)
    rep.ratios.push_back(rep.errors[i - 1] > 0 ? rep.errors[i] / rep.errors[i - 1] : 0.0);

  const double scale = std::max(1.0, target.norm());
  rep.exact_tiling = true;
  for (const double e : rep.errors) rep.exact_tiling = rep.exact_tiling && e <= 1e-13 * scale;
  if (rep.exact_tiling) {
    rep.pass = true;
    return rep;
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < rep.errors.size(); ++i)
    decreasing = decreasing && rep.errors[i] < rep.errors[i - 1];
  const double last = rep.ratios.empty() ? 1.0 : rep.ratios.back();
  rep.pass = decreasing && last >= ratio_lo && last <= ratio_hi;
  return rep;
}

struct CrosscheckReport {
  int targets = 0;
  int within = 0;          // targets with every entry inside 4 standard errors
  double worst_sigma_ratio = 0;
  double min_fraction = 0.95;
  bool pass = false;
};

// Exact M(P) against the Monte Carlo estimate of the indicator moment,
// per target; passes when at least min_fraction of the targets have every
// entry within 4 standard errors.
inline CrosscheckReport oracle_crosscheck(const std::vector<Polytope<double>>& targets,
                                          long samples, std::uint64_t seed,
                                          double min_fraction = 0.95) {
  CrosscheckReport rep;
  rep.targets = static_cast<int>(targets.size());
  rep.min_fraction = min_fraction;
  int t = 0;
  for (const auto& p : targets) {
    const Eigen::MatrixXd exact = polytope_moment(p);
    std::function<double(const VectorX<double>&)> density;
    Box<double> region(VectorX<double>::Zero(p.dim()), VectorX<double>::Ones(p.dim()));
    if (p.is_full_dimensional()) {
      region = Box<double>(p.vertices().rowwise().minCoeff(), p.vertices().rowwise().maxCoeff());
      auto hs = std::make_shared<std::vector<Halfspace<double>>>(polytope_halfspaces(p));
      const double slack = tol::kExact * p.coordinate_scale();
      density = [hs, slack](const VectorX<double>& x) {
        return halfspaces_contain(*hs, x, slack) ? 1.0 : 0.0;
      };
    } else {
      density = [](const VectorX<double>&) { return 0.0; };
    }
    const auto mc = moment_monte_carlo<double>(
        density, 1.0, McSampler<double>{region, samples, splitmix64(seed + static_cast<std::uint64_t>(t))});
    bool ok = true;
    for (int i = 0; i < p.dim(); ++i)
      for (int j = 0; j < p.dim(); ++j) {
        const double err = std::abs(mc.estimate(i, j) - exact(i, j));
        const double band = 4.0 * mc.stderr_(i, j) + 1e-12;
        ok = ok && err <= band;
        rep.worst_sigma_ratio = std::max(rep.worst_sigma_ratio, err / band);
      }
    rep.within += ok;
    ++t;
  }
  rep.pass = rep.within >= static_cast<int>(std::ceil(min_fraction * rep.targets));
  return rep;
}

// --- the randomized suite -------------------------------------------------------------

// Per-property pass thresholds. Two entries are read with special rules:
// oracle_crosscheck and extraction_roundtrip hold normalized residuals
// (pass at 1.0), and falsification_witness must be exceeded, not met.
std::map<std::string, double> default_tolerances();

struct SuiteConfig {
  std::uint64_t master_seed = 7;
  std::vector<int> dims = {2, 3, 4};
  std::vector<double> ps = {1.0, 2.0, 3.0};
  int cases_per_property = 100;
  std::map<std::string, double> tolerances = default_tolerances();
  bool parallel = true;
  long mc_samples = 200000;  // Monte Carlo samples per crosscheck target
};

struct CaseRef {
  long index = -1;
  std::uint64_t seed = 0;
  std::string descriptor;
  double residual = 0;
};

struct PropertyResult {
  std::string id;
  long cases = 0;
  double max_residual = 0;
  CaseRef argmax;
  double tolerance = 0;
  bool pass = false;
  std::vector<CaseRef> failures;  // capped at 10, each seed-reconstructible
  std::vector<std::string> covers;
  double wall_ms = 0;
};

struct SuiteReport {
  int schema_version = 1;
  SuiteConfig config;
  std::vector<PropertyResult> properties;
  bool all_pass = false;
  bool coverage_complete = false;
  std::vector<std::string> uncovered;
  double wall_ms_total = 0;
  std::string platform;
};

// Override points for falsification tests: wrap or replace the valuation
// under test while keeping the case generation identical.
struct SuiteHooks {
  std::function<BlackBoxValuation<double>(const ValuationSpec<double>&)> make_valuation =
      [](const ValuationSpec<double>& spec) { return make_black_box(spec); };
};

// The mathematical facts the suite claims to exercise; run_suite checks
// that the union of per-property coverage equals this registry.
const std::vector<std::string>& coverage_registry();

SuiteReport run_suite(const SuiteConfig& config, const SuiteHooks& hooks = SuiteHooks{});

nlohmann::json report_to_json(const SuiteReport& report);

// The same document with every timing field removed; two runs with one
// seed must serialize identically after this.
nlohmann::json strip_timing(nlohmann::json report);

int resolve_thread_count(bool parallel);

}  // namespace vlab
