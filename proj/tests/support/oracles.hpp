#pragma once

// Reference implementations written independently of the library code paths
// they check. Slow and direct on purpose.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "plkan/plkan.hpp"

namespace plkan::testing {

/// Walks the segments left to right, anchoring each one at its left breakpoint.
inline double oracle_pl(const std::vector<double>& bps, const std::vector<double>& slopes, double c, double x) {
  if (bps.empty() || x < bps.front()) return slopes[0] * x + c;
  double anchor_x = bps[0];
  double anchor_y = slopes[0] * bps[0] + c;
  std::size_t seg = 1;
  while (seg < bps.size() && x >= bps[seg]) {
    anchor_y += slopes[seg] * (bps[seg] - anchor_x);
    anchor_x = bps[seg];
    ++seg;
  }
  return anchor_y + slopes[seg] * (x - anchor_x);
}

inline double oracle_pl(const PiecewiseLinear& f, double x) {
  return oracle_pl(f.breakpoints(), f.slopes(), f.intercept(), x);
}

inline std::vector<double> oracle_kan(const Kan& kan, std::vector<double> x) {
  for (const auto& layer : kan.layers()) {
    std::vector<double> y(layer.n_out(), 0.0);
    for (std::size_t q = 0; q < layer.n_out(); ++q) {
      for (std::size_t p = 0; p < layer.n_in(); ++p) y[q] += oracle_pl(layer.activation(q, p), x[p]);
    }
    x = std::move(y);
  }
  return x;
}

inline std::vector<double> oracle_mlp(const Mlp& mlp, std::vector<double> x) {
  for (const auto& layer : mlp.layers()) {
    std::vector<double> y(layer.n_out());
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      double s = layer.bias()[r];
      for (std::size_t c = 0; c < layer.n_in(); ++c) s += layer.weight()(r, c) * x[c];
      y[r] = layer.activation() == Activation::relu ? (s > 0 ? s : 0.0) : s;
    }
    x = std::move(y);
  }
  return x;
}

/// Montufar bound through a Pascal triangle in 64-bit integers (small widths only).
inline std::uint64_t oracle_relu_bound(std::size_t n, const std::vector<std::size_t>& hidden) {
  std::vector<std::vector<std::uint64_t>> pascal(64);
  for (std::size_t i = 0; i < 64; ++i) {
    pascal[i].assign(i + 1, 1);
    for (std::size_t j = 1; j < i; ++j) pascal[i][j] = pascal[i - 1][j - 1] + pascal[i - 1][j];
  }
  std::uint64_t prod = 1;
  std::size_t d = n;
  for (std::size_t w : hidden) {
    d = std::min(d, w);
    std::uint64_t s = 0;
    for (std::size_t j = 0; j <= d; ++j) s += pascal[w][j];
    prod *= s;
  }
  return prod;
}

/// Parameter count by enumerating every entry of every layer.
inline std::uint64_t oracle_entry_count(const Mlp& m) {
  std::uint64_t n = 0;
  for (const auto& l : m.layers()) {
    for (std::size_t r = 0; r < l.n_out(); ++r) {
      ++n;  // bias
      for (std::size_t c = 0; c < l.n_in(); ++c) ++n;
    }
  }
  return n;
}

/// Number of maximal intervals of constant slope of a continuous 1-D function,
/// given a superset of its kink locations. Slopes are measured by finite
/// differences at interval midpoints.
inline std::size_t oracle_count_pieces(const std::function<double(double)>& f, std::vector<double> candidates,
                                       double slope_tol = 1e-7) {
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                   candidates.end());
  std::vector<double> probes;
  if (candidates.empty()) return 1;
  probes.push_back(candidates.front() - 1.0);
  for (std::size_t i = 0; i + 1 < candidates.size(); ++i) probes.push_back(0.5 * (candidates[i] + candidates[i + 1]));
  probes.push_back(candidates.back() + 1.0);
  std::vector<double> slopes;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double lo = i == 0 ? candidates.front() - 2.0 : candidates[i - 1];
    const double hi = i + 1 == probes.size() ? candidates.back() + 2.0 : candidates[i];
    const double h = std::min(1e-3, 0.25 * (hi - lo));
    if (h <= 1e-10) continue;  // degenerate sliver
    slopes.push_back((f(probes[i] + h) - f(probes[i] - h)) / (2 * h));
  }
  std::size_t pieces = 1;
  for (std::size_t i = 1; i < slopes.size(); ++i) {
    if (std::abs(slopes[i] - slopes[i - 1]) > slope_tol * (1.0 + std::abs(slopes[i]))) ++pieces;
  }
  return pieces;
}

/// Candidate kinks of g(f(x)) for univariate PL f, g: breakpoints of f and
/// every preimage under f of a breakpoint of g.
inline std::vector<double> oracle_composition_candidates(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  std::vector<double> out(f.breakpoints().begin(), f.breakpoints().end());
  const auto& fb = f.breakpoints();
  for (std::size_t s = 0; s < f.segments(); ++s) {
    const double lo = s == 0 ? -INFINITY : fb[s - 1];
    const double hi = s + 1 == f.segments() ? INFINITY : fb[s];
    const double a = f.slopes()[s];
    if (a == 0.0) continue;
    // f(x) = a x + c_s on this segment; c_s from the oracle value at any point.
    const double x0 = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
    const double c_s = oracle_pl(f, x0) - a * x0;
    for (double b : g.breakpoints()) {
      const double x = (b - c_s) / a;
      if (x >= lo && x <= hi) out.push_back(x);
    }
  }
  return out;
}

/// Combined error metric used throughout the suites.
inline double combined_error(double a, double b) { return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))); }

}  // namespace plkan::testing
