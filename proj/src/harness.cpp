#include "vlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace vlab {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct CaseOutcome {
  double residual = 0;
  std::string descriptor;
};

using CaseFn = std::function<CaseOutcome(std::uint64_t seed, long index)>;

// A custom rule replaces the default "max residual <= tolerance" pass
// decision (fraction rules, inverted witnesses).
using PassRule = std::function<bool(const std::vector<double>&, double tolerance)>;

PropertyResult run_property(const SuiteConfig& cfg, const std::string& id, long cases,
                            std::vector<std::string> covers, const CaseFn& fn,
                            bool thread_safe = true, PassRule pass_rule = {}) {
  const auto start = Clock::now();
  PropertyResult result;
  result.id = id;
  result.cases = cases;
  result.covers = std::move(covers);
  result.tolerance = cfg.tolerances.count(id) ? cfg.tolerances.at(id) : 0.0;

  std::vector<double> residuals(static_cast<std::size_t>(cases), 0.0);
  std::vector<std::string> descriptors(static_cast<std::size_t>(cases));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cases));
  for (long i = 0; i < cases; ++i)
    seeds[static_cast<std::size_t>(i)] =
        derive_seed(cfg.master_seed, id, static_cast<std::uint64_t>(i));

  auto work = [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      try {
        auto outcome = fn(seeds[static_cast<std::size_t>(i)], i);
        residuals[static_cast<std::size_t>(i)] = outcome.residual;
        descriptors[static_cast<std::size_t>(i)] = std::move(outcome.descriptor);
      } catch (const std::exception& e) {
        residuals[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
        descriptors[static_cast<std::size_t>(i)] = std::string("exception: ") + e.what();
      }
    }
  };

  const int threads =
      thread_safe ? static_cast<int>(std::min<long>(resolve_thread_count(cfg.parallel), cases))
                  : 1;
  if (threads <= 1) {
    work(0, cases);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (cases + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const long begin = t * chunk;
      const long end = std::min<long>(cases, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // deterministic reduction in index order, independent of scheduling
  for (long i = 0; i < cases; ++i) {
    const double r = residuals[static_cast<std::size_t>(i)];
    if (i == 0 || r > result.max_residual) {
      result.max_residual = r;
      result.argmax = CaseRef{i, seeds[static_cast<std::size_t>(i)],
                              descriptors[static_cast<std::size_t>(i)], r};
    }
  }
  auto fails = [&](long i) {
    const double r = residuals[static_cast<std::size_t>(i)];
    if (pass_rule) return !pass_rule({r}, result.tolerance);
    return r > result.tolerance;
  };
  if (pass_rule) {
    result.pass = pass_rule(residuals, result.tolerance);
  } else {
    result.pass = result.max_residual <= result.tolerance;
  }
  for (long i = 0; i < cases && result.failures.size() < 10; ++i)
    if (fails(i))
      result.failures.push_back(CaseRef{i, seeds[static_cast<std::size_t>(i)],
                                        descriptors[static_cast<std::size_t>(i)],
                                        residuals[static_cast<std::size_t>(i)]});
  result.wall_ms = ms_since(start);
  return result;
}

std::vector<int> dims_in(const SuiteConfig& cfg, int lo, int hi) {
  std::vector<int> out;
  for (int d : cfg.dims)
    if (d >= lo && d <= hi) out.push_back(d);
  if (out.empty())
    for (int d = lo; d <= std::min(hi, 3); ++d) out.push_back(d);
  return out;
}

std::string describe(std::initializer_list<std::pair<const char*, std::string>> kv) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << " ";
    first = false;
    os << k << "=" << v;
  }
  return os.str();
}

std::string fmt(double v) { return format_scalar(v); }

}  // namespace

std::map<std::string, double> default_tolerances() {
  return {
      {"k_bridge", 1e-12},
      {"oracle_crosscheck", 1.0},
      {"sl_covariance", 1e-9},
      {"valuation_identity", 1e-10},
      {"falsification_witness", 1e-3},
      {"zero_structure", 1e-12},
      {"extraction_roundtrip", 1.0},
      {"continuity", 1e-6},
      {"cube_convergence", 0.5},
      {"growth_divergence", 0.5},
      {"rho_invariance", 1e-12},
      {"decomposition", 1e-10},
      {"norm_lattice", 1e-12},
      {"extraction_reproduction", 1e-8},
  };
}

const std::vector<std::string>& coverage_registry() {
  static const std::vector<std::string> items = {
      "valuation identity on the function lattice",
      "SL(n) covariance of the valuation",
      "moment matrix of a function (K)",
      "moment matrix of a polytope (M)",
      "bridge K(alpha 1_P) = alpha M(P)",
      "weighted L^p norm and measure",
      "growth class membership |xi| <= d|t|^p",
      "constructive family K(xi o h) + s rho",
      "rotation invariance phi rho phi^t = rho",
      "zero structure in dimension 2",
      "zero structure in dimension >= 3",
      "cube approximation of polytopes",
      "symmetric difference distance bound",
      "extraction of xi and s from indicators",
      "decomposition over disjoint supports",
      "continuity along L^p-convergent sequences",
      "divergence probes for growth violations",
  };
  return items;
}

int resolve_thread_count(bool parallel) {
  if (!parallel) return 1;
  if (const char* env = std::getenv("VALUATION_LAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v <= 0) return 1;
    return static_cast<int>(std::min<long>(v, 64));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(8u, hw == 0 ? 1u : hw));
}

SuiteReport run_suite(const SuiteConfig& cfg, const SuiteHooks& hooks) {
  const auto start = Clock::now();
  SuiteReport report;
  report.config = cfg;
  {
    std::ostringstream os;
    os << "cxx " << __VERSION__ << "; eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION
       << "." << EIGEN_MINOR_VERSION << "; ieee754-binary64";
    report.platform = os.str();
  }
  const long cases = cfg.cases_per_property;

  // evaluators that declare themselves serial force their properties
  // onto one thread
  bool hooks_safe = true;
  try {
    hooks_safe = hooks
                     .make_valuation(ValuationSpec<double>(
                         2, 1.0, CompositionFunction<double>::zero(), 0.0))
                     .thread_safe;
  } catch (const std::exception&) {
  }

  // K bridge: both evaluation routes of K(alpha 1_P)
  report.properties.push_back(run_property(
      cfg, "k_bridge", cases,
      {"bridge K(alpha 1_P) = alpha M(P)", "moment matrix of a polytope (M)",
       "moment matrix of a function (K)"},
      [&](std::uint64_t seed, long idx) {
        Rng rng(seed);
        const auto dims = dims_in(cfg, 2, 3);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        double alpha = rng.uniform(-4, 4);
        if (std::abs(alpha) < 1e-3) alpha = 1.5;
        const auto p = random_polytope<double>(splitmix64(seed), n,
                                               n + 3 + static_cast<int>(rng.index(5)), 1.5);
        const Eigen::MatrixXd direct = alpha * polytope_moment(p);
        const Eigen::MatrixXd via = moment_of_simple(SimpleFunction<double>::indicator(alpha, p));
        const double residual = (via - direct).norm() / std::max(1.0, direct.norm());
        return CaseOutcome{residual, describe({{"n", std::to_string(n)},
                                               {"alpha", fmt(alpha)},
                                               {"vertices", std::to_string(p.vertex_count())}})};
      }));

  // Monte Carlo oracle for M(P): worst entry error in units of its band
  report.properties.push_back(run_property(
      cfg, "oracle_crosscheck", cases,
      {"moment matrix of a polytope (M)", "moment matrix of a function (K)"},
      [&](std::uint64_t seed, long idx) {
        const int n = (idx % 7 < 5) ? 2 : 3;
        const auto p = random_polytope<double>(splitmix64(seed), n,
                                               n + 4 + static_cast<int>(seed % 5), 1.5);
        const auto rep = oracle_crosscheck({p}, cfg.mc_samples, seed);
        return CaseOutcome{rep.worst_sigma_ratio,
                           describe({{"n", std::to_string(n)},
                                     {"samples", std::to_string(cfg.mc_samples)}})};
      },
      true,
      [](const std::vector<double>& rs, double) {
        long within = 0;
        for (double r : rs) within += r <= 1.0;
        return within >= static_cast<long>(std::ceil(0.95 * static_cast<double>(rs.size())));
      }));

  // SL(n) covariance of the constructive family
  report.properties.push_back(run_property(
      cfg, "sl_covariance", cases,
      {"SL(n) covariance of the valuation", "constructive family K(xi o h) + s rho",
       "rotation invariance phi rho phi^t = rho"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, 4);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        const double p = cfg.ps[(static_cast<std::size_t>(idx) / dims.size()) % cfg.ps.size()];
        const auto spec = random_spec(splitmix64(seed ^ 0x11), n, p);
        const auto v = hooks.make_valuation(spec);
        const auto h = random_simple_function(splitmix64(seed ^ 0x22), n);
        const auto phi = random_conditioned_sl(seed ^ 0x33, n);
        return CaseOutcome{covariance_residual(v, h, phi),
                           describe({{"n", std::to_string(n)},
                                     {"p", fmt(p)},
                                     {"xi", spec.xi().label()},
                                     {"s", fmt(spec.rotation_coefficient())}})};
      },
      hooks_safe));

  // valuation identity on random grid pairs
  report.properties.push_back(run_property(
      cfg, "valuation_identity", cases,
      {"valuation identity on the function lattice", "constructive family K(xi o h) + s rho"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, 3);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        const double p = cfg.ps[(static_cast<std::size_t>(idx) / dims.size()) % cfg.ps.size()];
        Rng rng(seed);
        const int level = rng.range(1, 2);
        const auto spec = random_spec(splitmix64(seed ^ 0x44), n, p);
        const auto v = hooks.make_valuation(spec);
        const auto h = random_grid_function(splitmix64(seed ^ 0x55), n, level, 12);
        const auto f = random_grid_function(splitmix64(seed ^ 0x66), n, level, 12);
        return CaseOutcome{
            valuation_residual(v, h, f),
            describe({{"n", std::to_string(n)},
                      {"p", fmt(p)},
                      {"xi", spec.xi().label()},
                      {"cells", std::to_string(h.cells().size() + f.cells().size())}})};
      },
      hooks_safe));

  // the deliberately broken operator V = K K must fail loudly
  report.properties.push_back(run_property(
      cfg, "falsification_witness", 1, {"valuation identity on the function lattice"},
      [&](std::uint64_t, long) {
        BlackBoxValuation<double> broken;
        broken.dim = 2;
        broken.p = 1.0;
        broken.evaluate_simple = [](const SimpleFunction<double>& h) {
          const Eigen::MatrixXd k = moment_of_simple(h);
          return (k * k).eval();
        };
        GridIndex a{}, b{};
        b[0] = 1;
        GridFunction<double> h(2, 0, {{a, 1.0}});
        GridFunction<double> f(2, 0, {{b, 1.0}});
        return CaseOutcome{valuation_residual(broken, h, f),
                           "V(h) = K(h) K(h) on two unit cells"};
      },
      true,
      [](const std::vector<double>& rs, double tolerance) {
        for (double r : rs)
          if (!(r > tolerance)) return false;
        return true;
      }));

  // zero structure across dimensions
  report.properties.push_back(run_property(
      cfg, "zero_structure", cases,
      {"zero structure in dimension 2", "zero structure in dimension >= 3",
       "constructive family K(xi o h) + s rho"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, kMaxDim);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        const double p = cfg.ps[(static_cast<std::size_t>(idx) / dims.size()) % cfg.ps.size()];
        const auto spec = random_spec(splitmix64(seed ^ 0x77), n, p);
        const auto rep = zero_structure(hooks.make_valuation(spec));
        double residual = rep.residual;
        if (n == 2)
          residual = std::max(residual, std::abs(rep.s_hat - spec.rotation_coefficient()));
        if (!rep.conformant) residual = std::max(residual, 1.0);
        return CaseOutcome{residual, describe({{"n", std::to_string(n)},
                                               {"s", fmt(spec.rotation_coefficient())},
                                               {"s_hat", fmt(rep.s_hat)}})};
      },
      hooks_safe));

  // extraction round-trip, normalized against its three tolerances
  report.properties.push_back(run_property(
      cfg, "extraction_roundtrip", cases,
      {"extraction of xi and s from indicators", "constructive family K(xi o h) + s rho"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, 3);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        Rng rng(seed);
        const double p = cfg.ps[rng.index(cfg.ps.size())];
        const auto family = CompositionFunction<double>::builtin_family(p);
        const auto& xi = family[static_cast<std::size_t>(idx / 3) % family.size()];
        const double s =
            n == 2 ? std::vector<double>{-5, 0, 5}[static_cast<std::size_t>(idx) % 3] : 0.0;
        const ValuationSpec<double> spec(n, p, xi, s);
        const auto v = hooks.make_valuation(spec);
        const auto P = idx % 2 == 0
                           ? Polytope<double>::unit_box(n)
                           : random_polytope<double>(splitmix64(seed ^ 0x88), n, n + 4, 1.2);
        const auto res = extract_xi_and_s(v, extraction_grid(), P);
        double xi_err = 0;
        for (std::size_t i = 0; i < res.alphas.size(); ++i)
          xi_err = std::max(xi_err, std::abs(res.xi_hat[i] - xi(res.alphas[i])));
        const double normalized =
            std::max({xi_err / 1e-9, std::abs(res.s_hat - s) / 1e-10, res.s_spread / 1e-10,
                      res.max_fit_residual / 1e-10});
        return CaseOutcome{normalized, describe({{"n", std::to_string(n)},
                                                 {"xi", xi.label()},
                                                 {"s", fmt(s)},
                                                 {"xi_err", fmt(xi_err)},
                                                 {"fit", fmt(res.max_fit_residual)}})};
      },
      hooks_safe));

  // continuity probes: the coefficient sequence panel plus dyadic cubes
  {
    struct ContCase {
      std::string what;
      std::function<ContinuityReport()> run;
    };
    std::vector<ContCase> panel;
    for (int n : dims_in(cfg, 2, 3)) {
      for (double p : cfg.ps) {
        panel.push_back(
            {describe({{"seq", "alpha+1/k"}, {"n", std::to_string(n)}, {"p", fmt(p)}}), [=]() {
               const ValuationSpec<double> spec(
                   n, p, CompositionFunction<double>::signed_power(2, 1), n == 2 ? 5.0 : 0.0);
               const auto seq = coefficient_sequence(Polytope<double>::unit_box(n), 0.5, p);
               return continuity_probe(make_black_box(spec), seq, 1 << 21);
             }});
      }
    }
    panel.push_back({"seq=dyadic n=2 p=1 alpha=0.001", []() {
                       Eigen::MatrixXd tri(2, 3);
                       tri << 0, 1, 0, 0, 0, 1;
                       const ValuationSpec<double> spec(
                           2, 1.0, CompositionFunction<double>::signed_power(2, 1), 5.0);
                       const auto seq =
                           dyadic_cube_sequence(Polytope<double>::from_points(tri), 1e-3, 1.0);
                       return continuity_probe(make_black_box(spec), seq, 9);
                     }});
    panel.push_back({"seq=dyadic n=2 p=2 alpha=1 (monotone only)", []() {
                       Eigen::MatrixXd tri(2, 3);
                       tri << 0, 1, 0, 0, 0, 1;
                       const ValuationSpec<double> spec(
                           2, 2.0, CompositionFunction<double>::signed_power(2, 1), 0.0);
                       const auto seq =
                           dyadic_cube_sequence(Polytope<double>::from_points(tri), 1.0, 2.0);
                       return continuity_probe(make_black_box(spec), seq, 7);
                     }});
    panel.push_back(
        {"seq=constant", []() {
           const ValuationSpec<double> spec(
               2, 2.0, CompositionFunction<double>::signed_power(2, 1), 0.0);
           FunctionSequence<double> seq;
           seq.label = "constant";
           seq.limit = SimpleFunction<double>::indicator(2.0, Polytope<double>::unit_box(2));
           seq.generator = [limit = seq.limit](int) { return limit; };
           seq.distance = [](int) { return 0.0; };
           return continuity_probe(make_black_box(spec), seq, 8);
         }});
    report.properties.push_back(run_property(
        cfg, "continuity", static_cast<long>(panel.size()),
        {"continuity along L^p-convergent sequences", "cube approximation of polytopes",
         "weighted L^p norm and measure", "symmetric difference distance bound"},
        [&](std::uint64_t, long idx) {
          const auto& pc = panel[static_cast<std::size_t>(idx)];
          const auto rep = pc.run();
          const auto& last = rep.rows.back();
          return CaseOutcome{rep.pass ? 0.0 : 1.0,
                             describe({{"case", pc.what},
                                       {"final_norm", fmt(last.norm_gap)},
                                       {"final_residual", fmt(last.psi_gap)},
                                       {"monotone", rep.monotone_tail ? "yes" : "no"}})};
        }));
  }

  // cube convergence: exact tilings and O(delta) boundary decay
  {
    struct CubeCase {
      std::string what;
      std::function<CubeConvergenceReport()> run;
    };
    Eigen::MatrixXd tri(2, 3);
    tri << 0, 1, 0, 0, 0, 1;
    const auto triangle = Polytope<double>::from_points(tri);
    const auto xi = CompositionFunction<double>::signed_power(2, 1);
    std::vector<CubeCase> panel;
    panel.push_back({"standard triangle", [=]() {
                       return cube_convergence_probe(triangle, xi, 2.0,
                                                     {0.25, 0.125, 0.0625, 0.03125, 0.015625});
                     }});
    panel.push_back({"unit square exact tiling", [=]() {
                       return cube_convergence_probe(Polytope<double>::unit_box(2), xi, 2.0,
                                                     {0.5, 0.25});
                     }});
    for (int k = 0; k < 2; ++k) {
      panel.push_back(
          {describe({{"sheared_triangle", std::to_string(k)}}), [=]() {
             const auto phi = random_conditioned_sl(
                 derive_seed(cfg.master_seed, "cube_shear", static_cast<std::uint64_t>(k)), 2,
                 10.0);
             return cube_convergence_probe(transform_polytope(phi, triangle), xi, 2.0,
                                           {0.25, 0.125, 0.0625, 0.03125, 0.015625});
           }});
    }
    report.properties.push_back(run_property(
        cfg, "cube_convergence", static_cast<long>(panel.size()),
        {"cube approximation of polytopes", "moment matrix of a polytope (M)"},
        [&](std::uint64_t, long idx) {
          const auto& pc = panel[static_cast<std::size_t>(idx)];
          const auto rep = pc.run();
          std::string ratios;
          for (double r : rep.ratios) ratios += fmt(r) + " ";
          return CaseOutcome{rep.pass ? 0.0 : 1.0,
                             describe({{"case", pc.what},
                                       {"exact", rep.exact_tiling ? "yes" : "no"},
                                       {"ratios", ratios}})};
        }));
  }

  // growth and divergence probes
  {
    struct GrowthCase {
      std::string what;
      std::function<bool()> ok;
    };
    std::vector<GrowthCase> panel;
    panel.push_back({"abs(t) gamma=3 divergent", []() {
                       const auto xi = CompositionFunction<double>::abs_power(1, 1);
                       const auto rep = radial_membership_and_K_probe(xi, 2.0, 2, 3.0);
                       return rep.in_lp && rep.divergent && rep.partials.back() > 1e3;
                     }});
    panel.push_back({"abs(t) gamma=5 convergent", []() {
                       const auto xi = CompositionFunction<double>::abs_power(1, 1);
                       const auto rep = radial_membership_and_K_probe(xi, 2.0, 2, 5.0);
                       return rep.in_lp && !rep.divergent;
                     }});
    for (double gamma : {2.5, 3.0, 5.0}) {
      panel.push_back({describe({{"t^2_gamma", fmt(gamma)}}), [gamma]() {
                         const auto xi = CompositionFunction<double>::abs_power(2, 1);
                         const auto rep = radial_membership_and_K_probe(xi, 2.0, 2, gamma);
                         return rep.in_lp && !rep.divergent;
                       }});
    }
    panel.push_back({"abs(t) gamma=1 not in the space", []() {
                       const auto xi = CompositionFunction<double>::abs_power(1, 1);
                       return !radial_membership_and_K_probe(xi, 2.0, 2, 1.0).in_lp;
                     }});
    report.properties.push_back(run_property(
        cfg, "growth_divergence", static_cast<long>(panel.size()),
        {"growth class membership |xi| <= d|t|^p", "divergence probes for growth violations",
         "weighted L^p norm and measure"},
        [&](std::uint64_t, long idx) {
          const auto& pc = panel[static_cast<std::size_t>(idx)];
          return CaseOutcome{pc.ok() ? 0.0 : 1.0, pc.what};
        }));
  }

  // rho invariance under many conditioned SL(2) elements
  report.properties.push_back(run_property(
      cfg, "rho_invariance", std::max<long>(cases, 1000),
      {"rotation invariance phi rho phi^t = rho"},
      [&](std::uint64_t seed, long) {
        const auto phi = random_conditioned_sl(seed, 2);
        const Eigen::MatrixXd rho = quarter_turn<double>();
        return CaseOutcome{(phi.matrix() * rho * phi.matrix().transpose() - rho).norm(),
                           "conditioned SL(2) conjugation"};
      }));

  // same-sign decompositions over disjoint supports
  report.properties.push_back(run_property(
      cfg, "decomposition", cases,
      {"decomposition over disjoint supports", "valuation identity on the function lattice"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, 3);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        Rng rng(seed);
        const auto spec =
            random_spec(splitmix64(seed ^ 0x99), n, cfg.ps[rng.index(cfg.ps.size())]);
        const auto v = hooks.make_valuation(spec);
        auto h = random_simple_function(splitmix64(seed ^ 0xaa), n);
        const double sign = rng.coin() ? 1.0 : -1.0;
        std::vector<Piece<double>> pieces;
        for (const auto& pc : h.pieces()) pieces.push_back({sign * std::abs(pc.alpha), pc.support});
        return CaseOutcome{decomposition_residual(v, pieces),
                           describe({{"n", std::to_string(n)},
                                     {"pieces", std::to_string(pieces.size())},
                                     {"sign", fmt(sign)}})};
      },
      hooks_safe));

  // the p-th power of the norm is a valuation on nonnegative functions
  report.properties.push_back(run_property(
      cfg, "norm_lattice", cases,
      {"weighted L^p norm and measure", "valuation identity on the function lattice"},
      [&](std::uint64_t seed, long idx) {
        const auto dims = dims_in(cfg, 2, 3);
        const int n = dims[static_cast<std::size_t>(idx) % dims.size()];
        const double p = cfg.ps[(static_cast<std::size_t>(idx) / dims.size()) % cfg.ps.size()];
        auto abs_cells = [](GridFunction<double> g) {
          std::vector<typename GridFunction<double>::Cell> cells;
          for (auto c : g.cells()) {
            c.value = std::abs(c.value);
            cells.push_back(c);
          }
          return GridFunction<double>(g.dim(), g.level(), std::move(cells));
        };
        const auto h = abs_cells(random_grid_function(splitmix64(seed ^ 0xbb), n, 2, 10));
        const auto f = abs_cells(random_grid_function(splitmix64(seed ^ 0xcc), n, 2, 10));
        auto [join, meet] = lattice_join_meet(h, f);
        const double lhs = std::pow(lp_norm(join, p), p) + std::pow(lp_norm(meet, p), p);
        const double rhs = std::pow(lp_norm(h, p), p) + std::pow(lp_norm(f, p), p);
        return CaseOutcome{std::abs(lhs - rhs) / std::max(1.0, rhs),
                           describe({{"n", std::to_string(n)}, {"p", fmt(p)}})};
      }));

  // extraction followed by reconstruction reproduces the black box
  report.properties.push_back(run_property(
      cfg, "extraction_reproduction", std::min<long>(cases, 10),
      {"extraction of xi and s from indicators", "constructive family K(xi o h) + s rho",
       "zero structure in dimension 2"},
      [&](std::uint64_t seed, long) {
        Rng rng(seed);
        const int n = 2;
        const auto spec =
            random_spec(splitmix64(seed ^ 0xdd), n, cfg.ps[rng.index(cfg.ps.size())]);
        const auto v = hooks.make_valuation(spec);
        const auto alphas = extraction_grid();
        const auto res = extract_xi_and_s(v, alphas, Polytope<double>::unit_box(n));
        // reproduce on indicators with coefficients from the sampled grid
        double worst = 0;
        const Eigen::MatrixXd rho = quarter_turn<double>();
        for (int c = 0; c < 5; ++c) {
          const auto p = random_polytope<double>(splitmix64(seed + static_cast<std::uint64_t>(c)),
                                                 n, n + 4, 1.2);
          const std::size_t ai = rng.index(alphas.size());
          const double alpha = alphas[ai];
          const Eigen::MatrixXd predicted = res.xi_hat[ai] * polytope_moment(p) + res.s_hat * rho;
          const Eigen::MatrixXd actual = v(SimpleFunction<double>::indicator(alpha, p));
          worst = std::max(worst, (actual - predicted).norm());
        }
        return CaseOutcome{worst, describe({{"xi", spec.xi().label()},
                                            {"s", fmt(spec.rotation_coefficient())}})};
      },
      hooks_safe));

  // coverage bookkeeping
  std::vector<std::string> covered;
  for (const auto& pr : report.properties)
    for (const auto& c : pr.covers)
      if (std::find(covered.begin(), covered.end(), c) == covered.end()) covered.push_back(c);
  report.coverage_complete = true;
  for (const auto& item : coverage_registry())
    if (std::find(covered.begin(), covered.end(), item) == covered.end()) {
      report.coverage_complete = false;
      report.uncovered.push_back(item);
    }

  report.all_pass = report.coverage_complete;
  for (const auto& pr : report.properties) report.all_pass = report.all_pass && pr.pass;
  report.wall_ms_total = ms_since(start);
  return report;
}

namespace {

nlohmann::json case_to_json(const CaseRef& c) {
  return {{"index", c.index},
          {"seed", c.seed},
          {"descriptor", c.descriptor},
          {"residual", c.residual}};
}

}  // namespace

nlohmann::json report_to_json(const SuiteReport& report) {
  nlohmann::json cfg = {
      {"master_seed", report.config.master_seed},
      {"dims", report.config.dims},
      {"ps", report.config.ps},
      {"cases_per_property", report.config.cases_per_property},
      {"tolerances", report.config.tolerances},
      {"parallel", report.config.parallel},
      {"mc_samples", report.config.mc_samples},
  };
  nlohmann::json props = nlohmann::json::array();
  for (const auto& pr : report.properties) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : pr.failures) failures.push_back(case_to_json(f));
    props.push_back({{"id", pr.id},
                     {"cases", pr.cases},
                     {"max_residual", pr.max_residual},
                     {"argmax_case", case_to_json(pr.argmax)},
                     {"tolerance", pr.tolerance},
                     {"pass", pr.pass},
                     {"failures", failures},
                     {"covers", pr.covers},
                     {"wall_ms", pr.wall_ms}});
  }
  return {{"schema_version", report.schema_version},
          {"tool", "valuation-lab"},
          {"config", cfg},
          {"properties", props},
          {"coverage_registry", coverage_registry()},
          {"coverage_complete", report.coverage_complete},
          {"uncovered", report.uncovered},
          {"all_pass", report.all_pass},
          {"platform", report.platform},
          {"wall_ms_total", report.wall_ms_total}};
}

nlohmann::json strip_timing(nlohmann::json report) {
  if (report.is_object()) {
    report.erase("wall_ms");
    report.erase("wall_ms_total");
    for (auto& [key, value] : report.items()) value = strip_timing(value);
  } else if (report.is_array()) {
    for (auto& value : report) value = strip_timing(value);
  }
  return report;
}

}  // namespace vlab
