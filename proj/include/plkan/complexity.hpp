#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "plkan/converter.hpp"
#include "plkan/error.hpp"
#include "plkan/kan.hpp"
#include "plkan/mlp.hpp"

namespace plkan {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Parameter accounting
// ---------------------------------------------------------------------------

struct ParamCounts {
  std::uint64_t total = 0;
  std::uint64_t nonzero = 0;
  std::uint64_t free = 0;

  friend bool operator==(const ParamCounts&, const ParamCounts&) = default;
};

/// Three-tier parameter count.
///
/// total: every stored entry. nonzero: entries with a nonzero value. free: for
/// MLPs, distinct source parameters referenced by nonzero entries (each one
/// attributed to the first layer it appears in); for KANs, every nonzero stored
/// parameter, since no KAN entry is fixed by construction.
struct ParamReport {
  std::uint64_t total_entries = 0;
  std::uint64_t nonzero_entries = 0;
  std::uint64_t free_entries = 0;
  std::vector<ParamCounts> per_layer;
};

inline ParamReport count_params_mlp(const Mlp& m) {
  ParamReport report;
  std::set<SourceParam> seen;
  for (std::size_t l = 0; l < m.depth(); ++l) {
    const auto& layer = m.layers()[l];
    const auto& prov = layer.provenance();
    ParamCounts counts;
    auto visit = [&](double value, const Provenance* p, SourceParam own) {
      ++counts.total;
      if (value == 0.0) return;
      ++counts.nonzero;
      if (p == nullptr) {
        seen.insert(own);
        ++counts.free;
        return;
      }
      for (const auto& s : *p) {
        if (seen.insert(s).second) ++counts.free;
      }
    };
    const auto lu = static_cast<std::uint32_t>(l);
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      for (std::size_t c = 0; c < layer.n_in(); ++c) {
        visit(layer.weight()(r, c), prov ? &prov->weight[r * layer.n_in() + c] : nullptr,
              {SourceKind::mlp_weight, lu, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), 0});
      }
    }
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      visit(layer.bias()[r], prov ? &prov->bias[r] : nullptr,
            {SourceKind::mlp_bias, lu, static_cast<std::uint32_t>(r), 0, 0});
    }
    report.total_entries += counts.total;
    report.nonzero_entries += counts.nonzero;
    report.free_entries += counts.free;
    report.per_layer.push_back(counts);
  }
  return report;
}

/// Each activation with s segments holds s slopes, s - 1 breakpoints and one intercept.
inline ParamReport count_params_kan(const Kan& k) {
  ParamReport report;
  for (const auto& layer : k.layers()) {
    ParamCounts counts;
    for (const auto& f : layer.activations()) {
      counts.total += 2 * f.segments();
      counts.nonzero += static_cast<std::uint64_t>(
          std::count_if(f.slopes().begin(), f.slopes().end(), [](double v) { return v != 0.0; }) +
          std::count_if(f.breakpoints().begin(), f.breakpoints().end(), [](double v) { return v != 0.0; }) +
          (f.intercept() != 0.0 ? 1 : 0));
      counts.free = counts.nonzero;
    }
    report.total_entries += counts.total;
    report.nonzero_entries += counts.nonzero;
    report.free_entries += counts.free;
    report.per_layer.push_back(counts);
  }
  return report;
}

/// 1 + n n_1 + 2 n_L + sum_{i=1}^{L-1} (n_i n_{i+1} + n_i) for a scalar-output
/// network with hidden widths n_1..n_L; n + 1 when there is no hidden layer.
inline std::uint64_t mlp_param_closed_form(std::size_t input_dim, std::span<const std::size_t> hidden) {
  if (hidden.empty()) return input_dim + 1;
  std::uint64_t total = 1 + input_dim * hidden.front() + 2 * hidden.back();
  for (std::size_t i = 0; i + 1 < hidden.size(); ++i) total += hidden[i] * hidden[i + 1] + hidden[i];
  return total;
}

/// #(g) + 4 (n_1 + ... + n_L + 1), with #(g) the total entry count of m.
inline std::uint64_t paper_formula_relu_to_kan(const Mlp& m) {
  if (m.output_dim() != 1) throw ShapeError("paper_formula_relu_to_kan: requires a scalar-output network");
  std::uint64_t relu_applications = 1;
  for (std::size_t w : m.hidden_widths()) relu_applications += w;
  return count_params_mlp(m).total_entries + 4 * relu_applications;
}

struct KanToReluFormula {
  std::uint64_t value = 0;
  bool uniform = false;
  std::size_t segments = 0;  // common segment count when uniform
};

/// 2 k sum_l n_l n_{l-1} for k uniform segments; otherwise the per-activation
/// sum of 2 * segments.
inline KanToReluFormula paper_formula_kan_to_relu(const Kan& k) {
  KanToReluFormula out;
  const std::size_t first = k.layers().front().activations().front().segments();
  out.uniform = true;
  std::uint64_t activations = 0;
  std::uint64_t per_activation_sum = 0;
  for (const auto& layer : k.layers()) {
    activations += layer.n_in() * layer.n_out();
    for (const auto& f : layer.activations()) {
      per_activation_sum += 2 * f.segments();
      if (f.segments() != first) out.uniform = false;
    }
  }
  if (out.uniform) {
    out.segments = first;
    out.value = 2 * first * activations;
  } else {
    out.value = per_activation_sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Region bounds
// ---------------------------------------------------------------------------

inline BigInt binomial(std::size_t n, std::size_t j) {
  if (j > n) return 0;
  j = std::min(j, n - j);
  BigInt c = 1;
  for (std::size_t i = 1; i <= j; ++i) {
    c *= n - j + i;
    c /= i;
  }
  return c;
}

/// prod_l sum_{j=0}^{d_l} C(n_l, j) with d_l = min(n, n_1, ..., n_l).
inline BigInt relu_region_upper_bound(std::size_t input_dim, std::span<const std::size_t> hidden) {
  BigInt bound = 1;
  std::size_t d = input_dim;
  for (std::size_t width : hidden) {
    if (width == 0) throw DomainError("relu_region_upper_bound: widths must be positive");
    d = std::min(d, width);
    BigInt layer_sum = 0;
    for (std::size_t j = 0; j <= d; ++j) layer_sum += binomial(width, j);
    bound *= layer_sum;
  }
  return bound;
}

inline BigInt big_pow(std::size_t base, std::uint64_t exponent) {
  BigInt result = 1;
  BigInt b = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= b;
    b *= b;
    exponent >>= 1U;
  }
  return result;
}

/// k^(n_L + sum_{i<L} n_i n_{i+1}) for layer input widths n_0..n_L of a
/// scalar-output KAN whose activations have at most k segments.
inline BigInt kan_region_upper_bound(std::span<const std::size_t> widths, std::size_t k) {
  if (k == 0) throw DomainError("kan_region_upper_bound: k must be at least 1");
  if (widths.empty()) throw DomainError("kan_region_upper_bound: widths must be nonempty");
  std::uint64_t exponent = widths.back();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0) throw DomainError("kan_region_upper_bound: widths must be positive");
    exponent += widths[i] * widths[i + 1];
  }
  return big_pow(k, exponent);
}

/// Same bound for a concrete network: the exponent counts every activation, so
/// multi-output final layers are covered too.
inline BigInt kan_region_upper_bound(const Kan& kan) {
  std::uint64_t exponent = 0;
  for (const auto& l : kan.layers()) exponent += l.n_in() * l.n_out();
  return big_pow(std::max<std::size_t>(kan.max_segments(), 1), exponent);
}

inline BigInt relu_region_upper_bound(const Mlp& m) {
  const auto hidden = m.hidden_widths();
  return relu_region_upper_bound(m.input_dim(), hidden);
}

enum class Family { kan, relu };

inline std::string_view to_string(Family f) noexcept { return f == Family::kan ? "kan" : "relu"; }

/// Numerator and denominator of a regions-per-parameter ratio, kept apart so
/// callers can divide without losing precision.
struct RegionsPerParameter {
  BigInt bound;
  std::uint64_t params = 0;
  /// KAN only: 2 k sum n_l n_{l-1}, the count the ratio's printed denominator abbreviates.
  std::optional<std::uint64_t> activation_params;

  [[nodiscard]] double ratio() const { return bound.convert_to<double>() / static_cast<double>(params); }
};

/// dims = (n, n_1, ..., n_L).
inline RegionsPerParameter relu_regions_per_parameter(std::span<const std::size_t> dims) {
  if (dims.empty()) throw DomainError("relu_regions_per_parameter: dims must include the input dimension");
  const auto hidden = dims.subspan(1);
  return {relu_region_upper_bound(dims.front(), hidden), mlp_param_closed_form(dims.front(), hidden), std::nullopt};
}

/// dims = (n_0, ..., n_L), k segments. params uses the printed 2 k sum_{l=1}^{L+1} n_l
/// (with n_{L+1} = 1); activation_params the per-activation 2 k sum n_l n_{l-1}.
inline RegionsPerParameter kan_regions_per_parameter(std::span<const std::size_t> dims, std::size_t k) {
  RegionsPerParameter out;
  out.bound = kan_region_upper_bound(dims, k);
  std::uint64_t width_sum = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) width_sum += dims[i];
  out.params = 2 * k * width_sum;
  std::uint64_t activations = dims.back();
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) activations += dims[i] * dims[i + 1];
  out.activation_params = 2 * k * activations;
  return out;
}

inline RegionsPerParameter regions_per_parameter(Family family, std::span<const std::size_t> dims, std::size_t k) {
  return family == Family::kan ? kan_regions_per_parameter(dims, k) : relu_regions_per_parameter(dims);
}

// ---------------------------------------------------------------------------
// Class embeddings
// ---------------------------------------------------------------------------

/// KAN(L, n, k): L layers, width n, activations with at most k + 1 segments.
/// ReLU(L, n): L affine layers, hidden width n.
struct ClassSignature {
  Family family = Family::kan;
  std::size_t depth = 0;
  std::size_t width = 0;
  std::size_t segment_bound = 0;

  friend bool operator==(const ClassSignature&, const ClassSignature&) = default;
};

inline ClassSignature signature_of(const Kan& k) {
  return {Family::kan, k.depth(), k.max_width(), k.max_segments() - 1};
}

inline ClassSignature signature_of(const Mlp& m) {
  return {Family::relu, m.depth(), m.max_hidden_width(), 0};
}

struct EmbeddingReport {
  ClassSignature source;
  ClassSignature converted;        // paper-mode lowering
  ClassSignature converted_exact;  // exact-mode lowering
  ClassSignature reconverted;      // mlp_to_kan of the paper-mode lowering
  std::size_t paper_width_bound = 0;  // n^2 (k + 1)
  std::size_t exact_width_bound = 0;  // n^2 k + 2 n
  bool depth_bound_satisfied = false;
  bool width_bound_satisfied = false;
  bool exact_width_bound_satisfied = false;
  bool segment_bound_satisfied = false;

  [[nodiscard]] bool all_satisfied() const noexcept {
    return depth_bound_satisfied && width_bound_satisfied && exact_width_bound_satisfied && segment_bound_satisfied;
  }
};

inline EmbeddingReport class_embedding_check(const Kan& k) {
  EmbeddingReport r;
  r.source = signature_of(k);
  const Mlp paper = kan_to_mlp(k, ConversionMode::paper);
  const Mlp exact = kan_to_mlp(k, ConversionMode::exact);
  r.converted = signature_of(paper);
  r.converted_exact = signature_of(exact);
  const Kan back = mlp_to_kan(paper);
  const Kan back_exact = mlp_to_kan(exact);
  r.reconverted = signature_of(back);

  const std::size_t n = r.source.width;
  const std::size_t kb = r.source.segment_bound;
  r.paper_width_bound = n * n * (kb + 1);
  r.exact_width_bound = n * n * kb + 2 * n;

  const std::size_t L = r.source.depth;
  r.depth_bound_satisfied = paper.depth() <= L + 1 && exact.depth() <= L + 1 && back.depth() == paper.depth();
  r.width_bound_satisfied = r.converted.width <= r.paper_width_bound;
  r.exact_width_bound_satisfied = r.converted_exact.width <= r.exact_width_bound;
  r.segment_bound_satisfied = back.max_segments() <= 2 && back_exact.max_segments() <= 2;
  return r;
}

}  // namespace plkan
