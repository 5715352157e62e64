#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/piecewise_linear.hpp"

namespace plkan {

/// A univariate function usable as a KAN activation.
template <class F>
concept UnivariateActivation = requires(const F& f, double x) {
  { f(x) } -> std::convertible_to<double>;
  { f.segments() } -> std::convertible_to<std::size_t>;
};

/// One KAN layer: an n_out x n_in grid of univariate activations. Output q is
/// the sum over p of activation(q, p)(x_p), accumulated in ascending p.
template <UnivariateActivation F>
class BasicKanLayer {
 public:
  using activation_type = F;

  BasicKanLayer(std::size_t n_in, std::size_t n_out, std::vector<F> activations)
      : n_in_(n_in), n_out_(n_out), activations_(std::move(activations)) {
    if (n_in_ == 0 || n_out_ == 0) throw ValidationError("KanLayer: zero-width layer");
    if (activations_.size() != n_in_ * n_out_) {
      throw ValidationError("KanLayer: activation grid must be n_out x n_in (expected " +
                            std::to_string(n_in_ * n_out_) + " activations, got " +
                            std::to_string(activations_.size()) + ")");
    }
  }

  /// Grid given as n_out rows of n_in activations.
  explicit BasicKanLayer(const std::vector<std::vector<F>>& grid)
      : BasicKanLayer(grid.empty() ? 0 : grid.front().size(), grid.size(), flatten(grid)) {}

  [[nodiscard]] std::size_t n_in() const noexcept { return n_in_; }
  [[nodiscard]] std::size_t n_out() const noexcept { return n_out_; }
  [[nodiscard]] const F& activation(std::size_t q, std::size_t p) const { return activations_[q * n_in_ + p]; }
  [[nodiscard]] const std::vector<F>& activations() const noexcept { return activations_; }

  void apply(std::span<const double> x, std::vector<double>& y) const {
    if (x.size() != n_in_) throw ShapeError("KanLayer: input has wrong length");
    y.assign(n_out_, 0.0);
    for (std::size_t q = 0; q < n_out_; ++q) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n_in_; ++p) acc += activations_[q * n_in_ + p](x[p]);
      y[q] = acc;
    }
  }

  [[nodiscard]] std::size_t max_segments() const noexcept {
    std::size_t k = 0;
    for (const auto& f : activations_) k = std::max<std::size_t>(k, f.segments());
    return k;
  }

  friend bool operator==(const BasicKanLayer&, const BasicKanLayer&) = default;

 private:
  static std::vector<F> flatten(const std::vector<std::vector<F>>& grid) {
    std::vector<F> out;
    for (const auto& row : grid) {
      if (!grid.empty() && row.size() != grid.front().size()) {
        throw ValidationError("KanLayer: ragged activation grid");
      }
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  }

  std::size_t n_in_;
  std::size_t n_out_;
  std::vector<F> activations_;
};

/// Composition of KAN layers, applied first to last.
template <UnivariateActivation F>
class BasicKan {
 public:
  using layer_type = BasicKanLayer<F>;

  explicit BasicKan(std::vector<layer_type> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ValidationError("Kan: at least one layer required");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
      if (layers_[i - 1].n_out() != layers_[i].n_in()) {
        throw ValidationError("Kan: layer " + std::to_string(i - 1) + " n_out must equal layer " +
                              std::to_string(i) + " n_in");
      }
    }
  }

  [[nodiscard]] const std::vector<layer_type>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }
  [[nodiscard]] std::size_t input_dim() const noexcept { return layers_.front().n_in(); }
  [[nodiscard]] std::size_t output_dim() const noexcept { return layers_.back().n_out(); }

  /// n_0, ..., n_L followed by the output width.
  [[nodiscard]] std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w;
    for (const auto& l : layers_) w.push_back(l.n_in());
    w.push_back(output_dim());
    return w;
  }

  [[nodiscard]] std::size_t max_width() const noexcept {
    std::size_t n = input_dim();
    for (const auto& l : layers_) n = std::max(n, l.n_out());
    return n;
  }

  [[nodiscard]] std::size_t max_segments() const noexcept {
    std::size_t k = 0;
    for (const auto& l : layers_) k = std::max(k, l.max_segments());
    return k;
  }

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
    if (x.size() != input_dim()) {
      throw ShapeError("Kan: expected input of length " + std::to_string(input_dim()) + ", got " +
                       std::to_string(x.size()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& layer : layers_) {
      layer.apply(cur, next);
      std::swap(cur, next);
    }
    return cur;
  }

  friend bool operator==(const BasicKan&, const BasicKan&) = default;

 private:
  std::vector<layer_type> layers_;
};

using KanLayer = BasicKanLayer<PiecewiseLinear>;
using Kan = BasicKan<PiecewiseLinear>;

inline std::vector<double> eval_kan(const Kan& kan, std::span<const double> x) { return kan(x); }

}  // namespace plkan
