#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/kan.hpp"
#include "plkan/matrix.hpp"
#include "plkan/mlp.hpp"
#include "plkan/piecewise_linear.hpp"
#include "plkan/provenance.hpp"

namespace plkan {

/// How a piecewise linear activation is lowered to relu units.
///
/// exact: hidden units (x, -x, x - b_1, ..., x - b_{n-1}); equal on all of R.
/// paper: hidden units (x, x - b_1, ..., x - b_{n-1}); equal only where every
///        lowered activation sees a non-negative input.
enum class ConversionMode { exact, paper };

inline std::string_view to_string(ConversionMode m) noexcept {
  return m == ConversionMode::exact ? "exact" : "paper";
}

/// Set of activation inputs on which a lowered block is known to be exact.
struct ValidityRegion {
  double lower = -std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains(double s) const noexcept { return s >= lower; }
  [[nodiscard]] bool global() const noexcept { return lower == -std::numeric_limits<double>::infinity(); }
};

/// One-hidden-layer relu network x -> w2 relu(w1 x + b1) + b2, every entry tagged.
struct ReluBlock {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  LayerProvenance hidden_provenance;
  LayerProvenance output_provenance;
  ValidityRegion validity;

  [[nodiscard]] std::size_t hidden_width() const noexcept { return w1.rows(); }
  [[nodiscard]] std::size_t n_in() const noexcept { return w1.cols(); }
  [[nodiscard]] std::size_t n_out() const noexcept { return w2.rows(); }

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
    if (x.size() != n_in()) throw ShapeError("ReluBlock: input has wrong length");
    std::vector<double> h;
    affine_apply(w1, b1, x, h);
    for (double& v : h) v = v > 0.0 ? v : 0.0;
    std::vector<double> y;
    affine_apply(w2, b2, h, y);
    return y;
  }

  [[nodiscard]] Mlp to_mlp() const {
    return Mlp({MlpLayer(w1, b1, Activation::relu, hidden_provenance),
                MlpLayer(w2, b2, Activation::identity, output_provenance)});
  }
};

namespace detail {

inline SourceParam activation_source(SourceKind kind, std::size_t layer, std::size_t q, std::size_t p,
                                     std::size_t index) {
  return {kind, static_cast<std::uint32_t>(layer), static_cast<std::uint32_t>(q),
          static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(index)};
}

inline std::size_t block_hidden_width(const KanLayer& layer, ConversionMode mode) {
  std::size_t width = mode == ConversionMode::exact ? 2 * layer.n_in() : 0;
  for (const auto& f : layer.activations()) {
    width += mode == ConversionMode::exact ? f.segments() - 1 : f.segments();
  }
  return width;
}

/// Lowers one KAN layer. layer_index only feeds provenance.
inline ReluBlock lower_layer(const KanLayer& layer, ConversionMode mode, std::size_t layer_index) {
  const std::size_t n_in = layer.n_in();
  const std::size_t n_out = layer.n_out();
  const std::size_t hidden = block_hidden_width(layer, mode);

  ReluBlock block;
  block.w1 = Matrix(hidden, n_in);
  block.b1.assign(hidden, 0.0);
  block.w2 = Matrix(n_out, hidden);
  block.b2.assign(n_out, 0.0);
  block.hidden_provenance.weight.resize(hidden * n_in);
  block.hidden_provenance.bias.resize(hidden);
  block.output_provenance.weight.resize(n_out * hidden);
  block.output_provenance.bias.resize(n_out);

  auto slope_src = [&](std::size_t q, std::size_t p, std::size_t i) {
    return activation_source(SourceKind::kan_slope, layer_index, q, p, i);
  };
  auto bp_src = [&](std::size_t q, std::size_t p, std::size_t i) {
    return activation_source(SourceKind::kan_breakpoint, layer_index, q, p, i);
  };

  bool all_first_slopes_zero = true;
  std::size_t unit = 0;
  auto breakpoint_units = [&](std::size_t q, std::size_t p) {
    const auto& f = layer.activation(q, p);
    const auto& bps = f.breakpoints();
    const auto& a = f.slopes();
    for (std::size_t i = 0; i < bps.size(); ++i, ++unit) {
      block.w1(unit, p) = 1.0;
      block.b1[unit] = -bps[i];
      block.hidden_provenance.bias[unit] = {bp_src(q, p, i)};
      block.w2(q, unit) = a[i + 1] - a[i];
      block.output_provenance.weight[q * hidden + unit] = make_provenance({slope_src(q, p, i), slope_src(q, p, i + 1)});
    }
  };

  for (std::size_t p = 0; p < n_in; ++p) {
    if (mode == ConversionMode::exact) {
      // Identity pair relu(x_p) - relu(-x_p) = x_p, shared by every activation reading x_p.
      const std::size_t pos = unit++;
      const std::size_t neg = unit++;
      block.w1(pos, p) = 1.0;
      block.w1(neg, p) = -1.0;
      for (std::size_t q = 0; q < n_out; ++q) {
        const double a1 = layer.activation(q, p).slopes().front();
        block.w2(q, pos) = a1;
        block.w2(q, neg) = -a1;
        block.output_provenance.weight[q * hidden + pos] = {slope_src(q, p, 0)};
        block.output_provenance.weight[q * hidden + neg] = {slope_src(q, p, 0)};
      }
      for (std::size_t q = 0; q < n_out; ++q) breakpoint_units(q, p);
    } else {
      for (std::size_t q = 0; q < n_out; ++q) {
        const double a1 = layer.activation(q, p).slopes().front();
        if (a1 != 0.0) all_first_slopes_zero = false;
        const std::size_t first = unit++;
        block.w1(first, p) = 1.0;
        block.w2(q, first) = a1;
        block.output_provenance.weight[q * hidden + first] = {slope_src(q, p, 0)};
        breakpoint_units(q, p);
      }
    }
  }

  for (std::size_t q = 0; q < n_out; ++q) {
    double c = 0.0;
    Provenance prov;
    for (std::size_t p = 0; p < n_in; ++p) {
      c += layer.activation(q, p).intercept();
      merge_provenance(prov, {activation_source(SourceKind::kan_intercept, layer_index, q, p, 0)});
    }
    block.b2[q] = c;
    block.output_provenance.bias[q] = std::move(prov);
  }

  if (mode == ConversionMode::paper && !all_first_slopes_zero) block.validity.lower = 0.0;
  return block;
}

struct AffineStage {
  Matrix weight;
  std::vector<double> bias;
  LayerProvenance provenance;
};

/// Combines next.weight * (prev.weight h + prev.bias) + next.bias into one affine stage.
/// An entry stays structural only when every contributing term is structural.
inline AffineStage merge_affine(const AffineStage& next, const AffineStage& prev) {
  const std::size_t rows = next.weight.rows();
  const std::size_t mid = next.weight.cols();
  const std::size_t cols = prev.weight.cols();
  if (prev.weight.rows() != mid) throw ShapeError("merge_affine: stage dimensions differ");

  auto live = [](double v, const Provenance& p) { return v != 0.0 || !p.empty(); };

  AffineStage out{matmul(next.weight, prev.weight), std::vector<double>(rows, 0.0), {}};
  out.provenance.weight.resize(rows * cols);
  out.provenance.bias.resize(rows);

  std::vector<std::size_t> terms;
  for (std::size_t h = 0; h < rows; ++h) {
    terms.clear();
    for (std::size_t j = 0; j < mid; ++j) {
      if (live(next.weight(h, j), next.provenance.weight[h * mid + j])) terms.push_back(j);
    }
    double bias = 0.0;
    Provenance bias_prov;
    for (std::size_t j : terms) {
      const Provenance& left = next.provenance.weight[h * mid + j];
      for (std::size_t u = 0; u < cols; ++u) {
        const Provenance& right = prev.provenance.weight[j * cols + u];
        if (!live(prev.weight(j, u), right)) continue;
        Provenance& dst = out.provenance.weight[h * cols + u];
        merge_provenance(dst, left);
        merge_provenance(dst, right);
      }
      bias += next.weight(h, j) * prev.bias[j];
      if (live(prev.bias[j], prev.provenance.bias[j])) {
        merge_provenance(bias_prov, left);
        merge_provenance(bias_prov, prev.provenance.bias[j]);
      }
    }
    out.bias[h] = bias + next.bias[h];
    merge_provenance(bias_prov, next.provenance.bias[h]);
    out.provenance.bias[h] = std::move(bias_prov);
  }
  return out;
}

}  // namespace detail

/// Lowers a single piecewise linear activation to a one-hidden-layer relu block.
inline ReluBlock pl_to_relu_unit(const PiecewiseLinear& f, ConversionMode mode) {
  return detail::lower_layer(KanLayer(1, 1, {f}), mode, 0);
}

/// Lowers a KAN layer. Units are grouped per input coordinate so w1 is block diagonal.
inline ReluBlock kan_layer_to_relu(const KanLayer& layer, ConversionMode mode) {
  return detail::lower_layer(layer, mode, 0);
}

/// Lowers a whole KAN to an MLP with depth + 1 affine layers, merging each
/// block's read-out into the next block's first affine map.
inline Mlp kan_to_mlp(const Kan& kan, ConversionMode mode) {
  std::vector<ReluBlock> blocks;
  blocks.reserve(kan.depth());
  for (std::size_t l = 0; l < kan.depth(); ++l) blocks.push_back(detail::lower_layer(kan.layers()[l], mode, l));

  std::vector<MlpLayer> layers;
  layers.reserve(kan.depth() + 1);
  layers.emplace_back(blocks.front().w1, blocks.front().b1, Activation::relu, blocks.front().hidden_provenance);
  for (std::size_t l = 1; l < blocks.size(); ++l) {
    const detail::AffineStage next{blocks[l].w1, blocks[l].b1, blocks[l].hidden_provenance};
    const detail::AffineStage prev{blocks[l - 1].w2, blocks[l - 1].b2, blocks[l - 1].output_provenance};
    auto merged = detail::merge_affine(next, prev);
    layers.emplace_back(std::move(merged.weight), std::move(merged.bias), Activation::relu,
                        std::move(merged.provenance));
  }
  layers.emplace_back(blocks.back().w2, blocks.back().b2, Activation::identity, blocks.back().output_provenance);
  return Mlp(std::move(layers));
}

/// Rewrites an MLP as a KAN of the same depth whose activations have at most two segments.
///
/// Layer 0: phi(x) = W[q][p] x, plus the whole bias B[q] on p = 0.
/// Layer l > 0: phi(s) = W[q][p] relu(s), plus B[q] on p = 0. The relu of the
/// preceding MLP layer moves into these activations.
inline Kan mlp_to_kan(const Mlp& mlp) {
  std::vector<KanLayer> layers;
  layers.reserve(mlp.depth());
  for (std::size_t l = 0; l < mlp.depth(); ++l) {
    const auto& src = mlp.layers()[l];
    std::vector<PiecewiseLinear> acts;
    acts.reserve(src.n_in() * src.n_out());
    for (std::size_t q = 0; q < src.n_out(); ++q) {
      for (std::size_t p = 0; p < src.n_in(); ++p) {
        const double w = src.weight()(q, p);
        const double b = p == 0 ? src.bias()[q] : 0.0;
        acts.push_back(l == 0 ? PiecewiseLinear::affine(w, b) : PiecewiseLinear::scaled_relu(w, b));
      }
    }
    layers.emplace_back(src.n_in(), src.n_out(), std::move(acts));
  }
  return Kan(std::move(layers));
}

}  // namespace plkan
