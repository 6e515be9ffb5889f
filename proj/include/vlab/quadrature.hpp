#pragma once

#include <cmath>
#include <vector>

// Gauss-Legendre quadrature on an interval, with nodes computed by Newton
// iteration on the Legendre recurrence. Used by the radial probes, whose
// integrands are smooth on each panel.

namespace vlab {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1 - x * x) * dp * dp);
  }
  return rule;
}

// Composite Gauss-Legendre over [a, b] with the panel count chosen by the
// caller; order 32 per panel.
template <typename F>
double integrate(F&& f, double a, double b, int panels = 8, int order = 32) {
  const auto rule = gauss_legendre(order);
  double total = 0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h, half = 0.5 * h;
    double s = 0;
    for (int i = 0; i < order; ++i)
      s += rule.weights[static_cast<std::size_t>(i)] * f(mid + half * rule.nodes[static_cast<std::size_t>(i)]);
    total += s * half;
  }
  return total;
}

}  // namespace vlab
