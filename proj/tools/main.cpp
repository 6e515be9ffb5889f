// valuation-lab: compute polytope moments, evaluate the valuation family,
// run the randomized verification suites, extract (xi, s) from a spec
// treated as a black box, and run approximation/growth probes on files.
//
// Exit codes: 0 success or all properties pass, 1 property failure (the
// report is still written), 2 input error (one-line diagnostic on stderr).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vlab/harness.hpp"
#include "vlab/io.hpp"

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vlab::Error("cannot open input file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw vlab::ParseError("malformed document " + path + ": " + e.what());
  }
  return j;
}

void write_output(const json& doc, const std::string& out) {
  const std::string text = doc.dump(2);
  if (out.empty() || out == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream os(out);
  if (!os) throw vlab::Error("cannot open output file: " + out);
  os << text << "\n";
}

json crosscheck_to_json(const vlab::CrosscheckReport& r) {
  return {{"targets", r.targets},
          {"within_four_sigma", r.within},
          {"worst_sigma_ratio", r.worst_sigma_ratio},
          {"min_fraction", r.min_fraction},
          {"pass", r.pass}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"valuation-lab: moment matrices and SL(n) covariant valuations on weighted "
               "L^p spaces"};
  app.require_subcommand(1);

  std::string input, spec_path, out;
  int dim = 0;
  double p_value = 2.0;
  std::uint64_t seed = 7;
  int cases = 0;
  double tol_scale = 1.0;
  double delta = 0.25;

  auto* moment = app.add_subcommand("moment", "moment matrix of a polytope or simple function");
  moment->add_option("--input", input, "polytope or simple-function document")->required();
  moment->add_option("--out", out, "output path ('-' for stdout)");

  auto* psi = app.add_subcommand("psi", "evaluate the valuation of a spec on a function");
  psi->add_option("--spec", spec_path, "valuation spec document")->required();
  psi->add_option("--input", input, "simple- or grid-function document")->required();
  psi->add_option("--out", out, "output path ('-' for stdout)");

  auto* verify = app.add_subcommand("verify", "run the randomized property suite");
  verify->add_option("--dim", dim, "restrict to one dimension (default panel 2,3,4)");
  verify->add_option("--p", p_value, "restrict to one exponent (default panel 1,2,3)");
  verify->add_option("--cases", cases, "cases per property (default 100)");
  verify->add_option("--seed", seed, "master seed (default 7)");
  verify->add_option("--tol", tol_scale, "scale every property tolerance by this factor");
  verify->add_option("--out", out, "report path ('-' for stdout)");

  auto* extract = app.add_subcommand("extract", "sample (xi, s) of a spec treated as a black box");
  extract->add_option("--spec", spec_path, "valuation spec document")->required();
  extract->add_option("--input", input, "polytope document (default: unit cube)");
  extract->add_option("--out", out, "output path ('-' for stdout)");

  auto* approx = app.add_subcommand("approx", "inner dyadic-cube approximation of a polytope");
  approx->add_option("--input", input, "polytope document")->required();
  approx->add_option("--delta", delta, "dyadic cell side 2^-k (default 0.25)");
  approx->add_option("--p", p_value, "exponent for the indicator distance (default 2)");
  approx->add_option("--out", out, "output path ('-' for stdout)");

  auto* growth = app.add_subcommand("probe-growth", "growth check and radial divergence probes");
  growth->add_option("--input", input, "composition function document")->required();
  growth->add_option("--dim", dim, "ambient dimension (default 2)");
  growth->add_option("--p", p_value, "space exponent (default 2)");
  growth->add_option("--out", out, "output path ('-' for stdout)");

  auto* crosscheck = app.add_subcommand("crosscheck", "Monte Carlo oracle vs exact moments");
  crosscheck->add_option("--dim", dim, "ambient dimension (default 2)");
  crosscheck->add_option("--cases", cases, "number of random targets (default 50)");
  crosscheck->add_option("--seed", seed, "seed (default 7)");
  crosscheck->add_option("--out", out, "output path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (moment->parsed()) {
      const json doc = read_json_file(input);
      Eigen::MatrixXd m;
      if (doc.contains("pieces")) {
        m = vlab::moment_of_simple(vlab::io::simple_function_from_json(doc));
      } else if (doc.contains("cells")) {
        m = vlab::moment_of_grid(vlab::io::grid_function_from_json(doc));
      } else {
        m = vlab::polytope_moment(vlab::io::polytope_from_json(doc));
      }
      write_output(vlab::io::matrix_to_json(m), out);
      return 0;
    }

    if (psi->parsed()) {
      const auto spec = vlab::io::spec_from_json(read_json_file(spec_path));
      const json doc = read_json_file(input);
      Eigen::MatrixXd m;
      if (doc.contains("cells"))
        m = vlab::psi_evaluate(spec, vlab::io::grid_function_from_json(doc));
      else
        m = vlab::psi_evaluate(spec, vlab::io::simple_function_from_json(doc));
      write_output(vlab::io::matrix_to_json(m), out);
      return 0;
    }

    if (verify->parsed()) {
      vlab::SuiteConfig cfg;
      cfg.master_seed = seed;
      if (verify->count("--dim")) cfg.dims = {dim};
      if (verify->count("--p")) cfg.ps = {p_value};
      if (cases > 0) cfg.cases_per_property = cases;
      for (auto& [key, value] : cfg.tolerances) value *= tol_scale;
      const auto report = vlab::run_suite(cfg);
      write_output(vlab::report_to_json(report), out);
      return report.all_pass ? 0 : 1;
    }

    if (extract->parsed()) {
      const auto spec = vlab::io::spec_from_json(read_json_file(spec_path));
      vlab::Polytope<double> P = input.empty()
                                     ? vlab::Polytope<double>::unit_box(spec.dim())
                                     : vlab::io::polytope_from_json(read_json_file(input));
      const auto res =
          vlab::extract_xi_and_s(vlab::make_black_box(spec), vlab::extraction_grid(), P);
      json doc = vlab::io::to_json(res);
      doc["xi_label"] = spec.xi().label();
      write_output(doc, out);
      return 0;
    }

    if (approx->parsed()) {
      const auto P = vlab::io::polytope_from_json(read_json_file(input));
      auto [cells, gap] = vlab::dyadic_inner_cubes(P, delta);
      json boxes = json::array();
      for (const auto& c : cells) boxes.push_back(vlab::io::to_json(c));
      const auto dist = vlab::indicator_distance(1.0, cells, P, p_value);
      write_output({{"delta", delta},
                    {"cell_count", cells.size()},
                    {"gap", gap},
                    {"indicator_distance", vlab::io::to_json(dist)},
                    {"cells", boxes}},
                   out);
      return 0;
    }

    if (growth->parsed()) {
      const auto xi = vlab::io::xi_from_json(read_json_file(input));
      const int n = growth->count("--dim") ? dim : 2;
      const auto rep = vlab::check_growth(xi, p_value, xi.growth_constant_d());
      json radial = json::array();
      for (double gamma : {2.5, 3.0, 5.0})
        radial.push_back(
            vlab::io::to_json(vlab::radial_membership_and_K_probe(xi, p_value, n, gamma)));
      write_output({{"growth", vlab::io::to_json(rep)}, {"radial", radial}}, out);
      return 0;
    }

    if (crosscheck->parsed()) {
      const int n = crosscheck->count("--dim") ? dim : 2;
      const int targets = cases > 0 ? cases : 50;
      std::vector<vlab::Polytope<double>> polys;
      for (int t = 0; t < targets; ++t)
        polys.push_back(vlab::random_polytope<double>(
            vlab::derive_seed(seed, "crosscheck_target", static_cast<std::uint64_t>(t)), n,
            n + 4 + t % 5, 1.5));
      const auto rep = vlab::oracle_crosscheck(polys, 1000000, seed);
      write_output(crosscheck_to_json(rep), out);
      return rep.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
