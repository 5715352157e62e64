#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <string_view>
#include <vector>

namespace plkan {

/// Which kind of source-model parameter a converted entry derives from.
enum class SourceKind : std::uint8_t {
  kan_slope = 0,
  kan_breakpoint = 1,
  kan_intercept = 2,
  mlp_weight = 3,
  mlp_bias = 4,
};

/// Identity of one scalar parameter of a source model.
///
/// For KAN activations: layer, row = output index q, col = input index p,
/// index = slope/breakpoint number. For MLP entries: layer, row, col; index unused.
struct SourceParam {
  SourceKind kind = SourceKind::mlp_weight;
  std::uint32_t layer = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const SourceParam&, const SourceParam&) = default;
};

/// Sorted, duplicate-free set of source parameters an entry derives from.
/// Empty means the entry is a structural constant forced by the construction.
using Provenance = std::vector<SourceParam>;

enum class ParamTag : std::uint8_t { structural, free };

inline ParamTag tag_of(const Provenance& p) noexcept {
  return p.empty() ? ParamTag::structural : ParamTag::free;
}

inline std::string_view to_string(ParamTag t) noexcept {
  return t == ParamTag::structural ? "structural" : "free";
}

inline void merge_provenance(Provenance& dst, const Provenance& src) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = src;
    return;
  }
  Provenance out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  dst = std::move(out);
}

inline Provenance make_provenance(std::initializer_list<SourceParam> sources) {
  Provenance p(sources);
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

}  // namespace plkan
