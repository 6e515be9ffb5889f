#pragma once

// Test-side oracles, deliberately independent of the library's moment
// code paths: determinants by cofactor expansion, simplex sampling by
// uniform barycentric coordinates (no membership tests), and a plain
// rejection-free box sampler for densities.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "vlab/core.hpp"

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline double det_cofactor(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0);
  double det = 0;
  for (int j = 0; j < n; ++j) {
    Mat minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = a(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * det_cofactor(minor);
  }
  return det;
}

struct McResult {
  Mat estimate;
  Mat stderr_;
};

// Uniform samples inside a simplex via normalized exponential spacings;
// moment = vol * E[x x^t].
inline McResult mc_simplex_moment(const Mat& verts, int samples, std::uint64_t seed) {
  const int n = static_cast<int>(verts.rows());
  Mat edges(n, n);
  for (int j = 0; j < n; ++j) edges.col(j) = verts.col(j + 1) - verts.col(0);
  double fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  const double vol = std::abs(det_cofactor(edges)) / fact;

  vlab::Rng rng(seed);
  Mat sum = Mat::Zero(n, n), sumsq = Mat::Zero(n, n);
  Vec lambda(n + 1);
  for (int s = 0; s < samples; ++s) {
    double tot = 0;
    for (int k = 0; k <= n; ++k) {
      lambda(k) = -std::log(1.0 - rng.unit());
      tot += lambda(k);
    }
    lambda /= tot;
    Vec x = verts * lambda;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = x(i) * x(j);
        sum(i, j) += g;
        sumsq(i, j) += g * g;
      }
  }
  McResult r;
  r.estimate = vol * sum / samples;
  r.stderr_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double mean = sum(i, j) / samples;
      const double var = std::max(0.0, sumsq(i, j) / samples - mean * mean);
      r.stderr_(i, j) = vol * std::sqrt(var / samples);
    }
  return r;
}

// Monte Carlo estimate of integral of h(x) x_i x_j dx over a box.
inline McResult mc_density_moment(const std::function<double(const Vec&)>& h, const Vec& lo,
                                  const Vec& hi, int samples, std::uint64_t seed) {
  const int n = static_cast<int>(lo.size());
  const double vol = (hi - lo).prod();
  vlab::Rng rng(seed);
  Mat sum = Mat::Zero(n, n), sumsq = Mat::Zero(n, n);
  Vec x(n);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(lo(i), hi(i));
    const double hv = h(x);
    if (hv == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = hv * x(i) * x(j);
        sum(i, j) += g;
        sumsq(i, j) += g * g;
      }
  }
  McResult r;
  r.estimate = vol * sum / samples;
  r.stderr_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double mean = sum(i, j) / samples;
      const double var = std::max(0.0, sumsq(i, j) / samples - mean * mean);
      r.stderr_(i, j) = vol * std::sqrt(var / samples);
    }
  return r;
}

}  // namespace oracle
