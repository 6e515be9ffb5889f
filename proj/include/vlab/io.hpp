#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vlab/valuation.hpp"

// JSON interchange for the domain types. Documents are plain objects;
// matrices serialize as row-major lists of rows, polytopes as vertex
// coordinate lists. Readers validate and throw vlab errors on malformed
// input, which the CLI maps to exit code 2.

namespace vlab {
namespace io {

using nlohmann::json;

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("matrix: expected a list of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw ParseError("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("vector: expected a list");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

// --- polytopes and boxes ------------------------------------------------------

inline json to_json(const Polytope<double>& p) {
  json verts = json::array();
  for (Eigen::Index v = 0; v < p.vertex_count(); ++v)
    verts.push_back(vector_to_json(p.vertex(v)));
  return {{"dim", p.dim()}, {"vertices", verts}};
}

inline Polytope<double> polytope_from_json(const json& j) {
  if (!j.contains("dim") || !j.contains("vertices"))
    throw ParseError("polytope: need fields dim and vertices");
  const int dim = j.at("dim").get<int>();
  const auto& verts = j.at("vertices");
  if (!verts.is_array()) throw ParseError("polytope: vertices must be a list");
  if (verts.empty()) return Polytope<double>::empty(dim);
  Eigen::MatrixXd pts(dim, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const Eigen::VectorXd pt = vector_from_json(verts[v]);
    if (pt.size() != dim) throw ParseError("polytope: vertex dimension mismatch");
    pts.col(static_cast<Eigen::Index>(v)) = pt;
  }
  return Polytope<double>::from_points(pts);
}

inline json to_json(const Box<double>& b) {
  return {{"lower", vector_to_json(b.lower())}, {"upper", vector_to_json(b.upper())}};
}

inline Box<double> box_from_json(const json& j) {
  if (!j.contains("lower") || !j.contains("upper"))
    throw ParseError("box: need fields lower and upper");
  return Box<double>(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")));
}

// --- functions ------------------------------------------------------------------

inline json to_json(const CompositionFunction<double>& xi) {
  return {{"label", xi.label()},
          {"expression", xi.expression()},
          {"p", xi.exponent_p()},
          {"d", xi.growth_constant_d()}};
}

inline CompositionFunction<double> xi_from_json(const json& j) {
  if (!j.contains("expression") || !j.contains("p") || !j.contains("d"))
    throw ParseError("composition function: need fields expression, p, d");
  return CompositionFunction<double>(j.value("label", std::string("user")),
                                     j.at("expression").get<std::string>(),
                                     j.at("p").get<double>(), j.at("d").get<double>());
}

inline json to_json(const SimpleFunction<double>& h) {
  json pieces = json::array();
  for (const auto& pc : h.pieces())
    pieces.push_back({{"alpha", pc.alpha}, {"polytope", to_json(pc.support)}});
  return {{"dim", h.dim()}, {"pieces", pieces}};
}

inline SimpleFunction<double> simple_function_from_json(const json& j) {
  if (!j.contains("dim") || !j.contains("pieces"))
    throw ParseError("simple function: need fields dim and pieces");
  const int dim = j.at("dim").get<int>();
  std::vector<Piece<double>> pieces;
  for (const auto& pc : j.at("pieces")) {
    if (!pc.contains("alpha") || !pc.contains("polytope"))
      throw ParseError("simple function: each piece needs alpha and polytope");
    pieces.push_back({pc.at("alpha").get<double>(), polytope_from_json(pc.at("polytope"))});
  }
  SimpleFunction<double> h(dim, std::move(pieces));
  h.require_disjoint_interiors();
  return h;
}

inline json to_json(const GridFunction<double>& g) {
  json cells = json::array();
  for (const auto& c : g.cells()) {
    json idx = json::array();
    for (int i = 0; i < g.dim(); ++i) idx.push_back(c.index[static_cast<std::size_t>(i)]);
    cells.push_back({{"index", idx}, {"value", c.value}});
  }
  return {{"dim", g.dim()}, {"delta", g.delta()}, {"cells", cells}};
}

inline GridFunction<double> grid_function_from_json(const json& j) {
  if (!j.contains("dim") || !j.contains("delta") || !j.contains("cells"))
    throw ParseError("grid function: need fields dim, delta, cells");
  const int dim = j.at("dim").get<int>();
  const double delta = j.at("delta").get<double>();
  const int level = static_cast<int>(std::lround(-std::log2(delta)));
  if (level < 0 || level > 40 || std::exp2(-level) != delta)
    throw ParseError("grid function: delta must be 2^-k");
  std::vector<typename GridFunction<double>::Cell> cells;
  for (const auto& c : j.at("cells")) {
    if (!c.contains("index") || !c.contains("value"))
      throw ParseError("grid function: each cell needs index and value");
    typename GridFunction<double>::Cell cell;
    cell.index.fill(0);
    const auto& idx = c.at("index");
    if (static_cast<int>(idx.size()) != dim)
      throw ParseError("grid function: index dimension mismatch");
    for (int i = 0; i < dim; ++i)
      cell.index[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i)].get<std::int64_t>();
    cell.value = c.at("value").get<double>();
    cells.push_back(cell);
  }
  return GridFunction<double>(dim, level, std::move(cells));
}

// --- valuation specs ---------------------------------------------------------------

inline json to_json(const ValuationSpec<double>& spec) {
  return {{"n", spec.dim()},
          {"p", spec.space_exponent()},
          {"xi", to_json(spec.xi())},
          {"s", spec.rotation_coefficient()}};
}

inline ValuationSpec<double> spec_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("p") || !j.contains("xi"))
    throw ParseError("valuation spec: need fields n, p, xi");
  return ValuationSpec<double>(j.at("n").get<int>(), j.at("p").get<double>(),
                               xi_from_json(j.at("xi")), j.value("s", 0.0));
}

// --- reports -----------------------------------------------------------------------

inline json to_json(const GrowthReport<double>& r) {
  return {{"max_ratio", r.max_ratio}, {"argmax_t", r.argmax_t},  {"claimed_d", r.claimed_d},
          {"exponent_p", r.exponent_p}, {"samples", r.samples},  {"pass", r.pass}};
}

inline json to_json(const RadialProbeReport<double>& r) {
  return {{"dim", r.dim},
          {"p", r.p},
          {"gamma", r.gamma},
          {"r_max", r.r_max},
          {"in_lp", r.in_lp},
          {"radii", r.radii},
          {"partials", r.partials},
          {"verdict", r.divergent ? "divergent" : "convergent"}};
}

inline json to_json(const ZeroStructureReport<double>& r) {
  return {{"dim", r.dim},          {"conformant", r.conformant}, {"s_hat", r.s_hat},
          {"residual", r.residual}, {"tolerance", r.tolerance},  {"value", matrix_to_json(r.value)}};
}

inline json to_json(const ExtractionResult<double>& r) {
  return {{"alphas", r.alphas},
          {"xi_hat", r.xi_hat},
          {"fit_residuals", r.fit_residuals},
          {"s_hat", r.s_hat},
          {"s_spread", r.s_spread},
          {"max_fit_residual", r.max_fit_residual}};
}

inline json to_json(const IndicatorDistance<double>& d) {
  return {{"exact", d.exact},
          {"bound", d.bound},
          {"sym_diff_volume", d.sym_diff_volume},
          {"radius", d.radius},
          {"inner", d.inner}};
}

}  // namespace io
}  // namespace vlab
