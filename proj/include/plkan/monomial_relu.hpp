#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/matrix.hpp"
#include "plkan/spline.hpp"

namespace plkan {

/// One block of the (ReLU, x^r) architecture: affine map into R^{(r+1) n'},
/// componentwise relu, then on every group of r + 1 components
/// (y_0, ..., y_r) -> (1, y_1, y_2^2, ..., y_r^r).
struct MonomialReluBlock {
  Matrix weight;
  std::vector<double> bias;

  [[nodiscard]] std::size_t n_in() const noexcept { return weight.cols(); }
  [[nodiscard]] std::size_t n_out() const noexcept { return weight.rows(); }

  void apply(std::size_t degree, std::span<const double> x, std::vector<double>& y) const {
    affine_apply(weight, bias, x, y);
    const std::size_t group = degree + 1;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t j = i % group;
      const double r = y[i] > 0.0 ? y[i] : 0.0;
      double m = 1.0;
      for (std::size_t e = 0; e < j; ++e) m *= r;
      y[i] = m;
    }
  }

  friend bool operator==(const MonomialReluBlock&, const MonomialReluBlock&) = default;
};

/// Stack of (ReLU, x^r) blocks followed by an affine read-out.
class MonomialReluNetwork {
 public:
  MonomialReluNetwork(std::size_t degree, std::vector<MonomialReluBlock> blocks, Matrix readout_weight,
                      std::vector<double> readout_bias)
      : degree_(degree),
        blocks_(std::move(blocks)),
        readout_weight_(std::move(readout_weight)),
        readout_bias_(std::move(readout_bias)) {
    if (degree_ == 0 || degree_ > kMaxSplineDegree) {
      throw ValidationError("MonomialReluNetwork: degree must be between 1 and " + std::to_string(kMaxSplineDegree));
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (b.n_out() == 0 || b.n_in() == 0) throw ValidationError("MonomialReluNetwork: zero-width block");
      if (b.n_out() % (degree_ + 1) != 0) {
        throw ValidationError("MonomialReluNetwork: block width must be a multiple of degree + 1");
      }
      if (b.bias.size() != b.n_out()) throw ValidationError("MonomialReluNetwork: block bias length mismatch");
      if (i > 0 && blocks_[i - 1].n_out() != b.n_in()) {
        throw ValidationError("MonomialReluNetwork: block " + std::to_string(i) + " input width does not chain");
      }
    }
    if (readout_weight_.rows() == 0 || readout_weight_.cols() == 0) {
      throw ValidationError("MonomialReluNetwork: empty read-out");
    }
    if (!blocks_.empty() && readout_weight_.cols() != blocks_.back().n_out()) {
      throw ValidationError("MonomialReluNetwork: read-out input width does not chain");
    }
    if (readout_bias_.size() != readout_weight_.rows()) {
      throw ValidationError("MonomialReluNetwork: read-out bias length mismatch");
    }
  }

  [[nodiscard]] std::size_t degree() const noexcept { return degree_; }
  [[nodiscard]] const std::vector<MonomialReluBlock>& blocks() const noexcept { return blocks_; }
  [[nodiscard]] const Matrix& readout_weight() const noexcept { return readout_weight_; }
  [[nodiscard]] const std::vector<double>& readout_bias() const noexcept { return readout_bias_; }
  [[nodiscard]] std::size_t input_dim() const noexcept {
    return blocks_.empty() ? readout_weight_.cols() : blocks_.front().n_in();
  }
  [[nodiscard]] std::size_t output_dim() const noexcept { return readout_weight_.rows(); }

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
    if (x.size() != input_dim()) throw ShapeError("MonomialReluNetwork: input has wrong length");
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& b : blocks_) {
      b.apply(degree_, cur, next);
      std::swap(cur, next);
    }
    affine_apply(readout_weight_, readout_bias_, cur, next);
    return next;
  }

  friend bool operator==(const MonomialReluNetwork&, const MonomialReluNetwork&) = default;

 private:
  std::size_t degree_;
  std::vector<MonomialReluBlock> blocks_;
  Matrix readout_weight_;
  std::vector<double> readout_bias_;
};

inline std::vector<double> eval_monomial_relu(const MonomialReluNetwork& net, std::span<const double> x) {
  return net(x);
}

/// One telescoping term (P_{i+1}^{b} - P_i^{b}) applied to relu(x - b).
struct TelescopingTerm {
  double breakpoint = 0.0;
  std::vector<double> coeffs;
};

/// spline(x) = P_1(x) + sum_i terms[i].coeffs(relu(x - terms[i].breakpoint)).
struct TelescopingForm {
  std::vector<double> leading;
  std::vector<TelescopingTerm> terms;

  /// Sum of the leading polynomial and the first `count` terms.
  [[nodiscard]] double partial(double x, std::size_t count) const {
    double v = poly_eval(leading, x);
    for (std::size_t i = 0; i < count && i < terms.size(); ++i) {
      const double r = x - terms[i].breakpoint;
      v += poly_eval(terms[i].coeffs, r > 0.0 ? r : 0.0);
    }
    return v;
  }
  [[nodiscard]] double operator()(double x) const { return partial(x, terms.size()); }
};

inline TelescopingForm telescoping_form(const PolySegmentSpline& s) {
  TelescopingForm form;
  form.leading = s.pieces().front();
  for (std::size_t i = 0; i < s.breakpoints().size(); ++i) {
    const double b = s.breakpoints()[i];
    form.terms.push_back({b, poly_sub(shift_poly(s.pieces()[i + 1], b), shift_poly(s.pieces()[i], b))});
  }
  return form;
}

namespace detail {

/// Writes one group of degree + 1 identical rows computing relu(sign * x_p - offset).
inline void write_group(MonomialReluBlock& block, std::size_t group, std::size_t degree, std::size_t p, double sign,
                        double offset) {
  for (std::size_t j = 0; j <= degree; ++j) {
    const std::size_t row = group * (degree + 1) + j;
    block.weight(row, p) = sign;
    block.bias[row] = 0.0 - offset;
  }
}

inline void write_readout(Matrix& readout, std::size_t q, std::size_t group, std::size_t degree,
                          std::span<const double> coeffs) {
  for (std::size_t j = 0; j < coeffs.size(); ++j) readout(q, group * (degree + 1) + j) += coeffs[j];
}

struct LoweredSplineLayer {
  MonomialReluBlock block;
  Matrix readout;
  std::vector<double> readout_bias;
};

/// Lowers a spline KAN layer to one block plus read-out. Per input p a shared
/// pair of groups reads relu(x_p) and relu(-x_p) and realizes every leading
/// polynomial P_1 on all of R; each breakpoint gets its own group.
inline LoweredSplineLayer lower_spline_layer(const SplineKanLayer& layer, std::size_t degree) {
  std::size_t groups = 2 * layer.n_in();
  for (const auto& f : layer.activations()) {
    if (f.degree() > degree) {
      throw ValidationError("bspline_to_monomial_relu: spline degree " + std::to_string(f.degree()) +
                            " exceeds configured degree " + std::to_string(degree));
    }
    groups += f.segments() - 1;
  }
  const std::size_t width = groups * (degree + 1);
  LoweredSplineLayer out{{Matrix(width, layer.n_in()), std::vector<double>(width, 0.0)},
                         Matrix(layer.n_out(), width),
                         std::vector<double>(layer.n_out(), 0.0)};

  std::size_t g = 0;
  for (std::size_t p = 0; p < layer.n_in(); ++p) {
    const std::size_t pos = g++;
    const std::size_t neg = g++;
    write_group(out.block, pos, degree, p, 1.0, 0.0);
    write_group(out.block, neg, degree, p, -1.0, 0.0);
    for (std::size_t q = 0; q < layer.n_out(); ++q) {
      auto form = telescoping_form(layer.activation(q, p));
      form.leading.resize(std::min(form.leading.size(), degree + 1));
      // P(x) = P(relu(x)) + sum_{j>=1} a_j (-1)^j relu(-x)^j
      write_readout(out.readout, q, pos, degree, form.leading);
      std::vector<double> mirrored(form.leading.size(), 0.0);
      for (std::size_t j = 1; j < mirrored.size(); ++j) mirrored[j] = (j % 2 == 0 ? 1.0 : -1.0) * form.leading[j];
      write_readout(out.readout, q, neg, degree, mirrored);
      for (const auto& term : form.terms) {
        const std::size_t grp = g++;
        write_group(out.block, grp, degree, p, 1.0, term.breakpoint);
        std::vector<double> coeffs = term.coeffs;
        coeffs.resize(std::min(coeffs.size(), degree + 1));
        write_readout(out.readout, q, grp, degree, coeffs);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Lowers a spline KAN to the (ReLU, x^r) architecture: one block per KAN layer,
/// each read-out folded into the next block's affine map.
inline MonomialReluNetwork spline_kan_to_monomial_relu(const SplineKan& kan, std::optional<std::size_t> degree = {}) {
  std::size_t r = 1;
  for (const auto& layer : kan.layers()) {
    for (const auto& f : layer.activations()) r = std::max(r, f.degree_bound());
  }
  if (degree) r = *degree;
  if (r == 0 || r > kMaxSplineDegree) throw ValidationError("spline_kan_to_monomial_relu: degree out of range");

  std::vector<MonomialReluBlock> blocks;
  Matrix readout;
  std::vector<double> readout_bias;
  for (std::size_t l = 0; l < kan.depth(); ++l) {
    auto lowered = detail::lower_spline_layer(kan.layers()[l], r);
    if (l > 0) {
      // W (R m + c) + b = (W R) m + (W c + b)
      Matrix w = matmul(lowered.block.weight, readout);
      std::vector<double> b(lowered.block.bias.size());
      for (std::size_t i = 0; i < b.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < readout_bias.size(); ++j) acc += lowered.block.weight(i, j) * readout_bias[j];
        b[i] = acc + lowered.block.bias[i];
      }
      lowered.block.weight = std::move(w);
      lowered.block.bias = std::move(b);
    }
    blocks.push_back(std::move(lowered.block));
    readout = std::move(lowered.readout);
    readout_bias = std::move(lowered.readout_bias);
  }
  return MonomialReluNetwork(r, std::move(blocks), std::move(readout), std::move(readout_bias));
}

/// Single-activation form of spline_kan_to_monomial_relu.
inline MonomialReluNetwork bspline_to_monomial_relu(const PolySegmentSpline& s, std::optional<std::size_t> degree = {}) {
  return spline_kan_to_monomial_relu(SplineKan({SplineKanLayer(1, 1, {s})}), degree);
}

/// Rewrites each stage of a (ReLU, x^r) network as a spline KAN layer: affine
/// stages become degree-1 splines, the relu stage the relu spline, the monomial
/// stage x -> x^j (or the constant 1).
inline SplineKan monomial_relu_to_spline_kan(const MonomialReluNetwork& net) {
  const std::size_t r = net.degree();
  auto affine_layer = [r](const Matrix& w, std::span<const double> b) {
    std::vector<PolySegmentSpline> acts;
    for (std::size_t q = 0; q < w.rows(); ++q) {
      for (std::size_t p = 0; p < w.cols(); ++p) {
        acts.push_back(PolySegmentSpline::polynomial({p == 0 ? b[q] : 0.0, w(q, p)}, r));
      }
    }
    return SplineKanLayer(w.cols(), w.rows(), std::move(acts));
  };
  auto diagonal_layer = [r](std::size_t n, auto&& make) {
    std::vector<PolySegmentSpline> acts;
    for (std::size_t q = 0; q < n; ++q) {
      for (std::size_t p = 0; p < n; ++p) {
        acts.push_back(p == q ? make(q) : PolySegmentSpline::polynomial({0.0}, r));
      }
    }
    return SplineKanLayer(n, n, std::move(acts));
  };

  std::vector<SplineKanLayer> layers;
  for (const auto& b : net.blocks()) {
    layers.push_back(affine_layer(b.weight, b.bias));
    layers.push_back(diagonal_layer(b.n_out(), [r](std::size_t) {
      return PolySegmentSpline({0.0}, {{0.0}, {0.0, 1.0}}, r);
    }));
    layers.push_back(diagonal_layer(b.n_out(), [r](std::size_t q) {
      const std::size_t j = q % (r + 1);
      std::vector<double> coeffs(j + 1, 0.0);
      coeffs[j] = 1.0;
      return PolySegmentSpline::polynomial(std::move(coeffs), r);
    }));
  }
  layers.push_back(affine_layer(net.readout_weight(), net.readout_bias()));
  return SplineKan(std::move(layers));
}

}  // namespace plkan
