#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <memory>
#include <set>
#include <thread>

#include "vlab/harness.hpp"

using namespace vlab;
using Eigen::MatrixXd;

namespace {

SuiteConfig small_config(std::uint64_t seed = 7) {
  SuiteConfig cfg;
  cfg.master_seed = seed;
  cfg.cases_per_property = 12;
  cfg.mc_samples = 60000;
  return cfg;
}

Polytope<double> standard_triangle() {
  MatrixXd pts(2, 3);
  pts << 0, 1, 0, 0, 0, 1;
  return Polytope<double>::from_points(pts);
}

}  // namespace

TEST_CASE("the default suite passes and covers the registry") {
  const auto report = run_suite(small_config());
  for (const auto& pr : report.properties) {
    INFO(pr.id, ": ", pr.argmax.descriptor, " residual ", pr.max_residual);
    CHECK(pr.pass);
  }
  CHECK(report.coverage_complete);
  CHECK(report.all_pass);
}

TEST_CASE("an injected rotation term in dimension 3 is caught with seeds") {
  SuiteHooks hooks;
  hooks.make_valuation = [](const ValuationSpec<double>& spec) {
    auto v = make_black_box(spec);
    if (spec.dim() == 3) {
      auto base = v.evaluate_simple;
      v.evaluate_simple = [base](const SimpleFunction<double>& h) {
        MatrixXd out = base(h);
        out(0, 1) -= 0.1;  // smuggled quarter-turn block
        out(1, 0) += 0.1;
        return out;
      };
      v.evaluate_grid = {};
    }
    return v;
  };
  const auto report = run_suite(small_config(), hooks);
  CHECK_FALSE(report.all_pass);
  bool cov_failed = false, zero_failed = false;
  for (const auto& pr : report.properties) {
    if (pr.id == "sl_covariance" && !pr.pass) {
      cov_failed = true;
      REQUIRE_FALSE(pr.failures.empty());
      CHECK(pr.failures.front().seed != 0);  // reproduction seed recorded
    }
    if (pr.id == "zero_structure" && !pr.pass) zero_failed = true;
  }
  CHECK(cov_failed);
  CHECK(zero_failed);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  const auto a = strip_timing(report_to_json(run_suite(small_config(3))));
  const auto b = strip_timing(report_to_json(run_suite(small_config(3))));
  CHECK(a.dump() == b.dump());

  SuiteConfig serial = small_config(3);
  serial.parallel = false;
  const auto c = strip_timing(report_to_json(run_suite(serial)));
  // the parallel flag itself is echoed in the config; compare properties only
  CHECK(a.at("properties").dump() == c.at("properties").dump());

  // different seeds genuinely change the sampled cases
  const auto d = strip_timing(report_to_json(run_suite(small_config(4))));
  CHECK(a.at("properties").dump() != d.at("properties").dump());
}

TEST_CASE("continuity probe: coefficient sequence matches its closed form") {
  const ValuationSpec<double> spec(2, 2.0, CompositionFunction<double>::signed_power(2, 1), 5.0);
  const auto seq = coefficient_sequence(Polytope<double>::unit_box(2), 0.5, 2.0);
  const auto rep = continuity_probe(make_black_box(spec), seq, 1 << 21);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) {
    CHECK(row.norm_gap ==
          doctest::Approx((1.0 / row.k) * std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  }
  CHECK(rep.rows.back().norm_gap < 1e-6);
  CHECK(rep.rows.back().psi_gap < 1e-6);
}

TEST_CASE("continuity probe: constant sequence is all zeros") {
  const ValuationSpec<double> spec(2, 2.0, CompositionFunction<double>::signed_power(2, 1), 0.0);
  FunctionSequence<double> seq;
  seq.label = "constant";
  seq.limit = SimpleFunction<double>::indicator(2.0, Polytope<double>::unit_box(2));
  seq.generator = [limit = seq.limit](int) { return limit; };
  seq.distance = [](int) { return 0.0; };
  const auto rep = continuity_probe(make_black_box(spec), seq, 6);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) {
    CHECK(row.norm_gap == 0.0);
    CHECK(row.psi_gap == 0.0);
  }
}

TEST_CASE("continuity probe: dyadic cube sequence decreases on the triangle") {
  const ValuationSpec<double> spec(2, 1.0, CompositionFunction<double>::signed_power(2, 1), 5.0);
  const auto seq = dyadic_cube_sequence(standard_triangle(), 1e-3, 1.0);
  const auto rep = continuity_probe(make_black_box(spec), seq, 9);
  CHECK(rep.pass);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].norm_gap < rep.rows[i - 1].norm_gap);
    CHECK(rep.rows[i].psi_gap < rep.rows[i - 1].psi_gap);
  }
  CHECK(rep.rows.back().norm_gap < 1e-6);
  CHECK(rep.rows.back().psi_gap < 1e-6);
}

TEST_CASE("cube convergence probe: exact tilings and boundary decay") {
  const auto xi = CompositionFunction<double>::signed_power(2, 1);

  const auto square = cube_convergence_probe(Polytope<double>::unit_box(2), xi, 2.0, {0.5, 0.25});
  CHECK(square.pass);
  CHECK(square.exact_tiling);
  for (double e : square.errors) CHECK(e <= 1e-13);

  const auto tri = cube_convergence_probe(standard_triangle(), xi, 2.0,
                                          {0.25, 0.125, 0.0625, 0.03125, 0.015625});
  CHECK(tri.pass);
  CHECK_FALSE(tri.exact_tiling);
  for (std::size_t i = 0; i < tri.ratios.size(); ++i) {
    CHECK(tri.ratios[i] >= 0.3);
    CHECK(tri.ratios[i] <= 0.8);
  }

  // a sheared image behaves the same way
  const auto phi = random_conditioned_sl(99, 2, 10.0);
  const auto sheared = cube_convergence_probe(transform_polytope(phi, standard_triangle()), xi,
                                              2.0, {0.25, 0.125, 0.0625, 0.03125, 0.015625});
  CHECK(sheared.pass);

  CHECK_THROWS_AS(cube_convergence_probe(standard_triangle(), xi, 2.0, {0.25, 0.2}), Error);
}

TEST_CASE("oracle crosscheck on known targets") {
  // single unit square: the (0,1) entry estimate lands near 1/4
  const auto rep = oracle_crosscheck({Polytope<double>::unit_box(2)}, 200000, 42);
  CHECK(rep.pass);
  CHECK(rep.within == 1);

  // degenerate target: exact and estimate are both zero
  MatrixXd seg(2, 2);
  seg << 0, 1, 0, 1;
  const auto degenerate = oracle_crosscheck({Polytope<double>::from_points(seg)}, 10000, 42);
  CHECK(degenerate.pass);
}

TEST_CASE("evaluators that declare themselves serial run on one thread") {
  auto thread_ids = std::make_shared<std::set<std::thread::id>>();
  SuiteHooks hooks;
  hooks.make_valuation = [thread_ids](const ValuationSpec<double>& spec) {
    auto v = make_black_box(spec);
    v.thread_safe = false;
    auto base = v.evaluate_simple;
    v.evaluate_simple = [base, thread_ids](const SimpleFunction<double>& h) {
      thread_ids->insert(std::this_thread::get_id());  // safe only if serial
      return base(h);
    };
    v.evaluate_grid = {};
    return v;
  };
  SuiteConfig cfg = small_config();
  cfg.parallel = true;
  const auto report = run_suite(cfg, hooks);
  CHECK(report.all_pass);
  CHECK(thread_ids->size() == 1);
}

TEST_CASE("thread count respects the environment cap") {
  setenv("VALUATION_LAB_THREADS", "0", 1);
  CHECK(resolve_thread_count(true) == 1);
  setenv("VALUATION_LAB_THREADS", "3", 1);
  CHECK(resolve_thread_count(true) == 3);
  unsetenv("VALUATION_LAB_THREADS");
  CHECK(resolve_thread_count(false) == 1);
  CHECK(resolve_thread_count(true) >= 1);
}

TEST_CASE("case seeds are pure functions of the triple") {
  CHECK(derive_seed(7, "k_bridge", 3) == derive_seed(7, "k_bridge", 3));
  CHECK(derive_seed(7, "k_bridge", 3) != derive_seed(7, "k_bridge", 4));
  CHECK(derive_seed(7, "k_bridge", 3) != derive_seed(8, "k_bridge", 3));
  CHECK(derive_seed(7, "k_bridge", 3) != derive_seed(7, "sl_covariance", 3));
}
