#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/matrix.hpp"
#include "plkan/provenance.hpp"

namespace plkan {

enum class Activation { relu, identity };

inline std::string_view to_string(Activation a) noexcept {
  return a == Activation::relu ? "relu" : "identity";
}

/// Per-entry provenance of one affine layer, aligned with weight and bias.
struct LayerProvenance {
  std::vector<Provenance> weight;  // row-major, rows * cols
  std::vector<Provenance> bias;

  friend bool operator==(const LayerProvenance&, const LayerProvenance&) = default;
};

/// Affine layer x -> act(W x + B).
///
/// Layers built by a converter carry provenance for every entry. Layers
/// without provenance are authored: each entry is its own free parameter.
class MlpLayer {
 public:
  MlpLayer(Matrix weight, std::vector<double> bias, Activation activation,
           std::optional<LayerProvenance> provenance = std::nullopt)
      : weight_(std::move(weight)),
        bias_(std::move(bias)),
        activation_(activation),
        provenance_(std::move(provenance)) {
    if (weight_.rows() == 0 || weight_.cols() == 0) throw ValidationError("MlpLayer: zero-width layer");
    if (bias_.size() != weight_.rows()) {
      throw ValidationError("MlpLayer: bias length must equal weight row count");
    }
    for (double v : weight_.values()) {
      if (!std::isfinite(v)) throw ValidationError("MlpLayer: weights must be finite");
    }
    for (double v : bias_) {
      if (!std::isfinite(v)) throw ValidationError("MlpLayer: biases must be finite");
    }
    if (provenance_ &&
        (provenance_->weight.size() != weight_.size() || provenance_->bias.size() != bias_.size())) {
      throw ValidationError("MlpLayer: provenance must tag every entry");
    }
  }

  [[nodiscard]] const Matrix& weight() const noexcept { return weight_; }
  [[nodiscard]] const std::vector<double>& bias() const noexcept { return bias_; }
  [[nodiscard]] Activation activation() const noexcept { return activation_; }
  [[nodiscard]] const std::optional<LayerProvenance>& provenance() const noexcept { return provenance_; }
  [[nodiscard]] std::size_t n_in() const noexcept { return weight_.cols(); }
  [[nodiscard]] std::size_t n_out() const noexcept { return weight_.rows(); }

  [[nodiscard]] ParamTag weight_tag(std::size_t r, std::size_t c) const {
    return provenance_ ? tag_of(provenance_->weight[r * n_in() + c]) : ParamTag::free;
  }
  [[nodiscard]] ParamTag bias_tag(std::size_t r) const {
    return provenance_ ? tag_of(provenance_->bias[r]) : ParamTag::free;
  }

  void apply(std::span<const double> x, std::vector<double>& y) const {
    if (x.size() != n_in()) throw ShapeError("MlpLayer: input has wrong length");
    affine_apply(weight_, bias_, x, y);
    if (activation_ == Activation::relu) {
      for (double& v : y) v = std::max(v, 0.0);
    }
  }

  friend bool operator==(const MlpLayer&, const MlpLayer&) = default;

 private:
  Matrix weight_;
  std::vector<double> bias_;
  Activation activation_;
  std::optional<LayerProvenance> provenance_;
};

/// Feedforward ReLU network. Every layer but the last applies relu; the last
/// is a plain affine read-out.
class Mlp {
 public:
  explicit Mlp(std::vector<MlpLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ValidationError("Mlp: at least one layer required");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const bool last = i + 1 == layers_.size();
      if (last && layers_[i].activation() != Activation::identity) {
        throw ValidationError("Mlp: output layer must have identity activation");
      }
      if (!last && layers_[i].activation() != Activation::relu) {
        throw ValidationError("Mlp: hidden layer " + std::to_string(i) + " must have relu activation");
      }
      if (i > 0 && layers_[i - 1].n_out() != layers_[i].n_in()) {
        throw ValidationError("Mlp: layer " + std::to_string(i - 1) + " n_out must equal layer " +
                              std::to_string(i) + " n_in");
      }
    }
  }

  [[nodiscard]] const std::vector<MlpLayer>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }
  [[nodiscard]] std::size_t input_dim() const noexcept { return layers_.front().n_in(); }
  [[nodiscard]] std::size_t output_dim() const noexcept { return layers_.back().n_out(); }

  [[nodiscard]] std::vector<std::size_t> hidden_widths() const {
    std::vector<std::size_t> w;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) w.push_back(layers_[i].n_out());
    return w;
  }

  [[nodiscard]] std::size_t max_hidden_width() const {
    const auto w = hidden_widths();
    return w.empty() ? 0 : *std::max_element(w.begin(), w.end());
  }

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
    if (x.size() != input_dim()) {
      throw ShapeError("Mlp: expected input of length " + std::to_string(input_dim()) + ", got " +
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

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<MlpLayer> layers_;
};

inline std::vector<double> eval_mlp(const Mlp& mlp, std::span<const double> x) { return mlp(x); }

}  // namespace plkan
