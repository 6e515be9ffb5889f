// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Tolerances are pinned here, not configurable.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "vlab/harness.hpp"
#include "vlab/io.hpp"

using namespace vlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

int g_failures = 0;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Polytope<double> standard_triangle() {
  MatrixXd pts(2, 3);
  pts << 0, 1, 0, 0, 0, 1;
  return Polytope<double>::from_points(pts);
}

std::string fmt(double v) { return format_scalar(v); }

// --- criterion 1: K bridge ------------------------------------------------------

void criterion_1() {
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t seed = derive_seed(7, "acc_k_bridge", static_cast<std::uint64_t>(i));
    Rng rng(seed);
    const int n = 2 + i % 2;
    double alpha = rng.uniform(-4, 4);
    if (std::abs(alpha) < 1e-3) alpha = 1.5;
    const auto p = random_polytope<double>(splitmix64(seed), n,
                                           n + 3 + static_cast<int>(rng.index(5)), 1.5);
    const MatrixXd direct = alpha * polytope_moment(p);
    const MatrixXd via = moment_of_simple(SimpleFunction<double>::indicator(alpha, p));
    worst = std::max(worst, (via - direct).norm() / std::max(1.0, direct.norm()));
  }
  record(1, "K bridge over 500 random weighted indicators", worst <= 1e-12,
         "max relative deviation " + fmt(worst));
}

// --- criterion 2: Monte Carlo oracle for M(P) -----------------------------------

void criterion_2() {
  std::vector<Polytope<double>> targets;
  for (int i = 0; i < 50; ++i)
    targets.push_back(random_polytope<double>(derive_seed(7, "acc_mc2", static_cast<std::uint64_t>(i)),
                                              2, 6 + i % 5, 1.5));
  for (int i = 0; i < 20; ++i)
    targets.push_back(random_polytope<double>(derive_seed(7, "acc_mc3", static_cast<std::uint64_t>(i)),
                                              3, 7 + i % 5, 1.5));
  const auto rep = oracle_crosscheck(targets, 1000000, derive_seed(7, "acc_mc_seed", 0));
  record(2, "Monte Carlo oracle: 50 2-D + 20 3-D targets at 1e6 samples", rep.pass,
         std::to_string(rep.within) + "/70 within 4 standard errors");
}

// --- criterion 3: SL(n) covariance ------------------------------------------------

void criterion_3() {
  double worst = 0;
  bool saw_rotation = false;
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t seed = derive_seed(7, "acc_cov", static_cast<std::uint64_t>(i));
    const int n = 2 + i % 3;
    const double p = std::vector<double>{1.0, 2.0, 3.0}[static_cast<std::size_t>(i / 3) % 3];
    const auto spec = random_spec(splitmix64(seed ^ 0x11), n, p);
    saw_rotation = saw_rotation || (n == 2 && spec.rotation_coefficient() != 0.0);
    const auto v = make_black_box(spec);
    const auto h = random_simple_function(splitmix64(seed ^ 0x22), n);
    const auto phi = random_conditioned_sl(seed ^ 0x33, n);
    worst = std::max(worst, covariance_residual(v, h, phi));
  }
  record(3, "SL(n) covariance over 500 random (spec, h, phi)", worst <= 1e-9 && saw_rotation,
         "max normalized residual " + fmt(worst) +
             (saw_rotation ? ", rotation terms exercised" : ", no rotation term drawn"));
}

// --- criterion 4: valuation identity ------------------------------------------------

void criterion_4() {
  double worst = 0;
  long idx = 0;
  for (int n : {2, 3}) {
    for (double p : {1.0, 2.0, 3.0}) {
      for (int i = 0; i < 500; ++i, ++idx) {
        const std::uint64_t seed = derive_seed(7, "acc_val", static_cast<std::uint64_t>(idx));
        Rng rng(seed);
        const auto spec = random_spec(splitmix64(seed ^ 0x44), n, p);
        const auto v = make_black_box(spec);
        const int level = rng.range(1, 2);
        const auto h = random_grid_function(splitmix64(seed ^ 0x55), n, level, 12);
        const auto f = random_grid_function(splitmix64(seed ^ 0x66), n, level, 12);
        worst = std::max(worst, valuation_residual(v, h, f));
      }
    }
  }

  BlackBoxValuation<double> broken;
  broken.dim = 2;
  broken.p = 1.0;
  broken.evaluate_simple = [](const SimpleFunction<double>& h) {
    const MatrixXd k = moment_of_simple(h);
    return (k * k).eval();
  };
  GridIndex a{}, b{};
  b[0] = 1;
  const double witness =
      valuation_residual(broken, GridFunction<double>(2, 0, {{a, 1.0}}),
                         GridFunction<double>(2, 0, {{b, 1.0}}));

  record(4, "valuation identity: 500 grid pairs per (n, p) in {2,3}x{1,2,3}",
         worst <= 1e-10 && witness > 1e-3,
         "max residual " + fmt(worst) + ", broken-operator witness " + fmt(witness));
}

// --- criterion 5: zero structure -----------------------------------------------------

void criterion_5() {
  const ValuationSpec<double> s2(2, 2.0, CompositionFunction<double>::signed_power(2, 1), 5.0);
  const MatrixXd at_zero_2 = make_black_box(s2).at_zero();
  const double err2 = (at_zero_2 - 5.0 * quarter_turn<double>()).norm();

  const ValuationSpec<double> s3(3, 2.0, CompositionFunction<double>::signed_power(2, 1), 0.0);
  const double err3 = make_black_box(s3).at_zero().norm();

  record(5, "zero structure: Psi(0) = 5 rho in 2-D, 0 in 3-D", err2 <= 1e-12 && err3 <= 1e-12,
         "2-D error " + fmt(err2) + ", 3-D error " + fmt(err3));
}

// --- criterion 6: extraction round-trip ----------------------------------------------

void criterion_6() {
  double worst_xi = 0, worst_s = 0, worst_fit = 0;
  const auto alphas = extraction_grid();
  for (double p : {1.0, 2.0, 3.0}) {
    for (const auto& xi : CompositionFunction<double>::builtin_family(p)) {
      for (double s : {-5.0, 0.0, 5.0}) {
        const ValuationSpec<double> spec(2, p, xi, s);
        const auto res = extract_xi_and_s(make_black_box(spec), alphas,
                                          Polytope<double>::unit_box(2));
        for (std::size_t i = 0; i < alphas.size(); ++i)
          worst_xi = std::max(worst_xi, std::abs(res.xi_hat[i] - xi(alphas[i])));
        worst_s = std::max(worst_s, std::abs(res.s_hat - s));
        worst_s = std::max(worst_s, res.s_spread);
        worst_fit = std::max(worst_fit, res.max_fit_residual);
      }
      // dimension >= 3 admits no rotation term
      const ValuationSpec<double> spec3(3, p, xi, 0.0);
      const auto res3 = extract_xi_and_s(make_black_box(spec3), alphas,
                                         Polytope<double>::unit_box(3));
      for (std::size_t i = 0; i < alphas.size(); ++i)
        worst_xi = std::max(worst_xi, std::abs(res3.xi_hat[i] - xi(alphas[i])));
      worst_fit = std::max(worst_fit, res3.max_fit_residual);
    }
  }
  record(6, "extraction round-trip on the 17-point grid for every built-in xi",
         worst_xi <= 1e-9 && worst_s <= 1e-10 && worst_fit <= 1e-10,
         "xi error " + fmt(worst_xi) + ", s error " + fmt(worst_s) + ", fit " + fmt(worst_fit));
}

// --- criterion 7: continuity ----------------------------------------------------------

void criterion_7() {
  bool all = true;
  std::string detail;

  struct Probe {
    std::string what;
    ContinuityReport rep;
  };
  std::vector<Probe> probes;

  for (const auto& [n, p] : std::vector<std::pair<int, double>>{{2, 2.0}, {3, 1.0}}) {
    const ValuationSpec<double> spec(n, p, CompositionFunction<double>::signed_power(2, 1),
                                     n == 2 ? 5.0 : 0.0);
    const auto seq = coefficient_sequence(Polytope<double>::unit_box(n), 0.5, p);
    probes.push_back({"alpha+1/k n=" + std::to_string(n),
                      continuity_probe(make_black_box(spec), seq, 1 << 21)});
  }
  {
    const ValuationSpec<double> spec(2, 1.0, CompositionFunction<double>::signed_power(2, 1), 5.0);
    const auto seq = dyadic_cube_sequence(standard_triangle(), 1e-3, 1.0);
    probes.push_back({"dyadic cubes", continuity_probe(make_black_box(spec), seq, 9)});
  }

  for (const auto& probe : probes) {
    bool crossed = false;
    bool residual_small_when_norm_small = true;
    for (const auto& row : probe.rep.rows)
      if (row.norm_gap < 1e-6) {
        crossed = true;
        residual_small_when_norm_small = residual_small_when_norm_small && row.psi_gap < 1e-6;
      }
    const bool ok = probe.rep.pass && probe.rep.monotone_tail && crossed &&
                    residual_small_when_norm_small;
    all = all && ok;
    detail += probe.what + (ok ? " ok" : " FAILED") + " (final norm " +
              fmt(probe.rep.rows.back().norm_gap) + ", residual " +
              fmt(probe.rep.rows.back().psi_gap) + "); ";
  }
  record(7, "continuity along the coefficient and dyadic-cube sequences", all, detail);
}

// --- criterion 8: cube convergence ------------------------------------------------------

void criterion_8() {
  const auto xi = CompositionFunction<double>::signed_power(2, 1);
  const auto tri = cube_convergence_probe(standard_triangle(), xi, 2.0,
                                          {0.25, 0.125, 0.0625, 0.03125, 0.015625});
  bool tri_ok = !tri.exact_tiling;
  for (std::size_t i = 1; i < tri.errors.size(); ++i)
    tri_ok = tri_ok && tri.errors[i] < tri.errors[i - 1];
  for (double r : tri.ratios) tri_ok = tri_ok && r >= 0.3 && r <= 0.8;

  const auto square =
      cube_convergence_probe(Polytope<double>::unit_box(2), xi, 2.0, {0.5, 0.25});
  const bool square_ok = square.exact_tiling && square.pass;

  std::string ratios;
  for (double r : tri.ratios) ratios += fmt(r) + " ";
  record(8, "cube convergence: triangle ratios in [0.3, 0.8], boxes exact", tri_ok && square_ok,
         "ratios " + ratios);
}

// --- criterion 9: growth and divergence probes -------------------------------------------

void criterion_9() {
  const auto abs_t = CompositionFunction<double>::abs_power(1, 1);
  const auto square_t = CompositionFunction<double>::abs_power(2, 1);

  const auto div3 = radial_membership_and_K_probe(abs_t, 2.0, 2, 3.0);
  const bool a = div3.in_lp && div3.divergent && div3.partials.back() > 1e3;

  const auto conv5 = radial_membership_and_K_probe(abs_t, 2.0, 2, 5.0);
  const bool b = conv5.in_lp && !conv5.divergent;

  bool c = true;
  for (double gamma : {2.5, 3.0, 5.0}) {
    const auto rep = radial_membership_and_K_probe(square_t, 2.0, 2, gamma);
    c = c && rep.in_lp && !rep.divergent;
  }
  record(9, "growth/divergence probes (gamma = 3 diverges, gamma = 5 and t^2 settle)",
         a && b && c,
         "partial at R=1e4 for gamma=3: " + fmt(div3.partials.back()));
}

// --- criterion 10: determinism of verify ---------------------------------------------------

void criterion_10() {
  auto run = [](const std::string& out) {
    const std::string cmd = std::string(VLAB_CLI_PATH) + " verify --seed 7 --cases 20 --out " +
                            out + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const int rc1 = run("acc_report_a.json");
  const int rc2 = run("acc_report_b.json");
  bool equal = false;
  if (rc1 == 0 && rc2 == 0) {
    std::ifstream fa("acc_report_a.json"), fb("acc_report_b.json");
    json ja, jb;
    fa >> ja;
    fb >> jb;
    equal = strip_timing(ja).dump() == strip_timing(jb).dump();
  }
  record(10, "verify --seed 7 twice: identical reports modulo timing", rc1 == 0 && rc2 == 0 && equal,
         "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) +
             (equal ? ", reports identical" : ", reports differ"));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
