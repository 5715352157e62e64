#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "plkan/error.hpp"

namespace plkan {

/// Affine function x -> slope * x + intercept.
struct Affine1D {
  double slope = 0.0;
  double intercept = 0.0;

  [[nodiscard]] double operator()(double x) const noexcept { return slope * x + intercept; }
  friend bool operator==(const Affine1D&, const Affine1D&) = default;
};

/// Continuous univariate piecewise linear function.
///
/// Stored as breakpoints b_1 < ... < b_{n-1}, slopes a_1 ... a_n and the
/// intercept c of the first segment. Continuity holds by construction: each
/// segment starts where the previous one ends. At a breakpoint the right
/// segment is used, which agrees with the left one.
///
/// Adjacent segments with equal slope are kept as-is; call normalized() to
/// merge them.
class PiecewiseLinear {
 public:
  PiecewiseLinear() : slopes_{0.0} {}

  PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> slopes, double intercept)
      : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), intercept_(intercept) {
    validate();
  }

  static PiecewiseLinear affine(double slope, double intercept) {
    return PiecewiseLinear({}, {slope}, intercept);
  }
  static PiecewiseLinear identity() { return affine(1.0, 0.0); }
  static PiecewiseLinear relu() { return PiecewiseLinear({0.0}, {0.0, 1.0}, 0.0); }
  /// w * relu(x) + bias
  static PiecewiseLinear scaled_relu(double weight, double bias) {
    return PiecewiseLinear({0.0}, {0.0, weight}, bias);
  }

  [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  [[nodiscard]] const std::vector<double>& slopes() const noexcept { return slopes_; }
  [[nodiscard]] double intercept() const noexcept { return intercept_; }
  [[nodiscard]] std::size_t segments() const noexcept { return slopes_.size(); }

  /// f(x) = a_1 x + c + sum_{i : b_i <= x} (a_{i+1} - a_i)(x - b_i)
  [[nodiscard]] double operator()(double x) const {
    if (!std::isfinite(x)) throw DomainError("eval_pl: input is not finite");
    double value = slopes_.front() * x + intercept_;
    for (std::size_t i = 0; i < breakpoints_.size() && breakpoints_[i] <= x; ++i) {
      value += (slopes_[i + 1] - slopes_[i]) * (x - breakpoints_[i]);
    }
    return value;
  }

  /// Index of the segment containing x; breakpoints belong to the right segment.
  [[nodiscard]] std::size_t segment_index(double x) const noexcept {
    return static_cast<std::size_t>(
        std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
  }

  /// Affine formula of segment i.
  [[nodiscard]] Affine1D segment(std::size_t i) const {
    if (i >= slopes_.size()) throw ShapeError("segment index out of range");
    double intercept = intercept_;
    for (std::size_t j = 0; j < i; ++j) intercept += (slopes_[j] - slopes_[j + 1]) * breakpoints_[j];
    return {slopes_[i], intercept};
  }

  [[nodiscard]] std::vector<Affine1D> segment_formulas() const {
    std::vector<Affine1D> out;
    out.reserve(slopes_.size());
    double intercept = intercept_;
    for (std::size_t i = 0; i < slopes_.size(); ++i) {
      if (i > 0) intercept += (slopes_[i - 1] - slopes_[i]) * breakpoints_[i - 1];
      out.push_back({slopes_[i], intercept});
    }
    return out;
  }

  /// Copy with adjacent equal-slope segments merged.
  [[nodiscard]] PiecewiseLinear normalized() const {
    std::vector<double> bps;
    std::vector<double> sl{slopes_.front()};
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (slopes_[i + 1] == sl.back()) continue;
      bps.push_back(breakpoints_[i]);
      sl.push_back(slopes_[i + 1]);
    }
    return PiecewiseLinear(std::move(bps), std::move(sl), intercept_);
  }

  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

 private:
  void validate() const {
    if (slopes_.size() != breakpoints_.size() + 1) {
      throw ValidationError("PiecewiseLinear: slopes length must equal breakpoints length + 1 (got " +
                            std::to_string(slopes_.size()) + " slopes, " +
                            std::to_string(breakpoints_.size()) + " breakpoints)");
    }
    for (double b : breakpoints_) {
      if (!std::isfinite(b)) throw ValidationError("PiecewiseLinear: breakpoints must be finite");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i - 1] < breakpoints_[i])) {
        throw ValidationError("PiecewiseLinear: breakpoints must be strictly increasing");
      }
    }
    for (double a : slopes_) {
      if (!std::isfinite(a)) throw ValidationError("PiecewiseLinear: slopes must be finite");
    }
    if (!std::isfinite(intercept_)) throw ValidationError("PiecewiseLinear: intercept must be finite");
  }

  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  double intercept_ = 0.0;
};

inline double eval_pl(const PiecewiseLinear& f, double x) { return f(x); }

}  // namespace plkan
