#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/kan.hpp"

namespace plkan {

/// Largest polynomial degree accepted for spline pieces.
inline constexpr std::size_t kMaxSplineDegree = 5;

/// Monomial-basis polynomial a_0 + a_1 x + ... evaluated by Horner's rule.
inline double poly_eval(std::span<const double> coeffs, double x) noexcept {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

/// Coefficients of x -> P(x + b).
inline std::vector<double> shift_poly(std::span<const double> coeffs, double b) {
  if (coeffs.empty()) throw ValidationError("shift_poly: coefficient list must be nonempty");
  const std::size_t n = coeffs.size();
  std::vector<double> out(n, 0.0);
  // out_j = sum_{i >= j} a_i C(i, j) b^(i-j)
  for (std::size_t j = 0; j < n; ++j) {
    double binom = 1.0;  // C(i, j) starting at i = j
    double power = 1.0;  // b^(i - j)
    double acc = 0.0;
    for (std::size_t i = j; i < n; ++i) {
      if (i > j) {
        binom = binom * static_cast<double>(i) / static_cast<double>(i - j);
        power *= b;
      }
      acc += coeffs[i] * binom * power;
    }
    out[j] = acc;
  }
  return out;
}

inline std::vector<double> poly_sub(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

inline std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

inline std::vector<double> poly_mul(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

inline std::vector<double> poly_scale(std::span<const double> a, double s) {
  std::vector<double> out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

/// Continuous piecewise polynomial: k pieces separated by breakpoints b_1 < ... < b_{k-1},
/// each piece of degree at most degree_bound in the monomial basis.
class PolySegmentSpline {
 public:
  PolySegmentSpline() : pieces_{{0.0}}, degree_bound_(1) {}

  PolySegmentSpline(std::vector<double> breakpoints, std::vector<std::vector<double>> pieces, std::size_t degree_bound)
      : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)), degree_bound_(degree_bound) {
    validate();
  }

  static PolySegmentSpline polynomial(std::vector<double> coeffs, std::size_t degree_bound) {
    return PolySegmentSpline({}, {std::move(coeffs)}, degree_bound);
  }

  [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  [[nodiscard]] const std::vector<std::vector<double>>& pieces() const noexcept { return pieces_; }
  [[nodiscard]] std::size_t degree_bound() const noexcept { return degree_bound_; }
  [[nodiscard]] std::size_t segments() const noexcept { return pieces_.size(); }

  /// Highest degree with a nonzero coefficient over all pieces.
  [[nodiscard]] std::size_t degree() const noexcept {
    std::size_t d = 0;
    for (const auto& p : pieces_) {
      for (std::size_t i = p.size(); i-- > 1;) {
        if (p[i] != 0.0) {
          d = std::max(d, i);
          break;
        }
      }
    }
    return d;
  }

  [[nodiscard]] std::size_t segment_index(double x) const noexcept {
    return static_cast<std::size_t>(
        std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
  }

  [[nodiscard]] double operator()(double x) const {
    if (!std::isfinite(x)) throw DomainError("PolySegmentSpline: input is not finite");
    return poly_eval(pieces_[segment_index(x)], x);
  }

  friend bool operator==(const PolySegmentSpline&, const PolySegmentSpline&) = default;

 private:
  void validate() const {
    if (degree_bound_ > kMaxSplineDegree) {
      throw ValidationError("PolySegmentSpline: degree bound " + std::to_string(degree_bound_) + " exceeds cap " +
                            std::to_string(kMaxSplineDegree));
    }
    if (pieces_.size() != breakpoints_.size() + 1) {
      throw ValidationError("PolySegmentSpline: piece count must equal breakpoint count + 1");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (!std::isfinite(breakpoints_[i])) throw ValidationError("PolySegmentSpline: breakpoints must be finite");
      if (i > 0 && !(breakpoints_[i - 1] < breakpoints_[i])) {
        throw ValidationError("PolySegmentSpline: breakpoints must be strictly increasing");
      }
    }
    for (const auto& p : pieces_) {
      if (p.empty() || p.size() > degree_bound_ + 1) {
        throw ValidationError("PolySegmentSpline: piece coefficient lists must have 1 to degree_bound + 1 entries");
      }
      for (double c : p) {
        if (!std::isfinite(c)) throw ValidationError("PolySegmentSpline: coefficients must be finite");
      }
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      const double left = poly_eval(pieces_[i], breakpoints_[i]);
      const double right = poly_eval(pieces_[i + 1], breakpoints_[i]);
      if (std::abs(left - right) > 1e-9 * std::max({1.0, std::abs(left), std::abs(right)})) {
        throw ValidationError("PolySegmentSpline: pieces must agree at breakpoint " + std::to_string(i));
      }
    }
  }

  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> pieces_;
  std::size_t degree_bound_;
};

using SplineKanLayer = BasicKanLayer<PolySegmentSpline>;
using SplineKan = BasicKan<PolySegmentSpline>;

/// Converts a B-spline given by knots, control points and degree to piecewise
/// polynomial form. The first and last polynomial pieces extend beyond the
/// knot domain [t_p, t_{n+1}].
inline PolySegmentSpline from_bspline(std::span<const double> knots, std::span<const double> control_points,
                                      std::size_t degree) {
  const std::size_t p = degree;
  const std::size_t n_ctrl = control_points.size();
  if (p > kMaxSplineDegree) throw ValidationError("from_bspline: degree exceeds cap");
  if (n_ctrl < p + 1) throw ValidationError("from_bspline: need at least degree + 1 control points");
  if (knots.size() != n_ctrl + p + 1) {
    throw ValidationError("from_bspline: knot count must equal control points + degree + 1");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i] < knots[i - 1]) throw ValidationError("from_bspline: knots must be non-decreasing");
  }

  std::vector<double> bps;
  std::vector<std::vector<double>> pieces;
  for (std::size_t span = p; span < n_ctrl; ++span) {
    const double lo = knots[span];
    const double hi = knots[span + 1];
    if (!(lo < hi)) continue;
    // Cox-de Boor with polynomial coefficients, restricted to [lo, hi).
    std::vector<std::vector<double>> basis(p + 1);
    basis[p] = {1.0};  // N_{span,0}; index i - (span - p)
    for (std::size_t q = 1; q <= p; ++q) {
      std::vector<std::vector<double>> next(p + 1);
      for (std::size_t idx = p - q; idx <= p; ++idx) {
        const std::size_t i = span - p + idx;
        std::vector<double> acc{0.0};
        const double d1 = knots[i + q] - knots[i];
        if (d1 > 0.0 && !basis[idx].empty()) {
          const std::vector<double> lin{-knots[i] / d1, 1.0 / d1};
          acc = poly_add(acc, poly_mul(lin, basis[idx]));
        }
        const double d2 = knots[i + q + 1] - knots[i + 1];
        if (idx + 1 <= p && d2 > 0.0 && !basis[idx + 1].empty()) {
          const std::vector<double> lin{knots[i + q + 1] / d2, -1.0 / d2};
          acc = poly_add(acc, poly_mul(lin, basis[idx + 1]));
        }
        next[idx] = std::move(acc);
      }
      basis = std::move(next);
    }
    std::vector<double> poly(p + 1, 0.0);
    for (std::size_t idx = 0; idx <= p; ++idx) {
      const auto term = poly_scale(basis[idx], control_points[span - p + idx]);
      for (std::size_t j = 0; j < term.size() && j <= p; ++j) poly[j] += term[j];
    }
    if (!pieces.empty()) bps.push_back(lo);
    pieces.push_back(std::move(poly));
  }
  if (pieces.empty()) throw ValidationError("from_bspline: knot vector has an empty domain");
  return PolySegmentSpline(std::move(bps), std::move(pieces), std::max<std::size_t>(p, 1));
}

}  // namespace plkan
