#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <ostream>
#include <span>
#include <vector>

#include "plkan/error.hpp"
#include "plkan/format.hpp"
#include "plkan/kan.hpp"
#include "plkan/mlp.hpp"
#include "plkan/piecewise_linear.hpp"

namespace plkan {

/// Cut points closer than this are treated as one.
inline constexpr double kCutMergeTolerance = 1e-12;
/// Adjacent pieces whose slopes differ by less than this (relative) are merged.
inline constexpr double kSlopeMergeTolerance = 1e-10;

/// Affine map R -> R^m restricted to one interval.
struct AffinePiece {
  std::vector<double> slope;
  std::vector<double> intercept;

  [[nodiscard]] std::vector<double> operator()(double x) const {
    std::vector<double> y(slope.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = slope[i] * x + intercept[i];
    return y;
  }
  friend bool operator==(const AffinePiece&, const AffinePiece&) = default;
};

/// Exact polyhedral complex of a map R -> R^m: sorted cut points and one affine
/// piece per maximal interval. A cut point belongs to the interval on its right.
struct Complex1D {
  std::vector<double> cuts;
  std::vector<AffinePiece> pieces;

  [[nodiscard]] std::size_t regions() const noexcept { return pieces.size(); }
  [[nodiscard]] std::size_t output_dim() const noexcept { return pieces.empty() ? 0 : pieces.front().slope.size(); }

  [[nodiscard]] std::size_t piece_index(double x) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
  }

  [[nodiscard]] std::vector<double> operator()(double x) const { return pieces[piece_index(x)](x); }

  /// A point strictly inside piece i.
  [[nodiscard]] double interior_point(std::size_t i) const noexcept {
    if (cuts.empty()) return 0.0;
    if (i == 0) return cuts.front() - std::max(1.0, std::abs(cuts.front()));
    if (i == cuts.size()) return cuts.back() + std::max(1.0, std::abs(cuts.back()));
    return 0.5 * (cuts[i - 1] + cuts[i]);
  }
};

namespace detail {

inline bool slopes_match(const AffinePiece& a, const AffinePiece& b) {
  for (std::size_t i = 0; i < a.slope.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a.slope[i]), std::abs(b.slope[i])});
    if (std::abs(a.slope[i] - b.slope[i]) > kSlopeMergeTolerance * scale) return false;
  }
  return true;
}

/// Symbolic state: a partition of R and, on each interval, every coordinate as an affine function of x.
struct SymbolicState {
  std::vector<double> cuts;
  std::vector<std::vector<Affine1D>> coords;  // [interval][coordinate]

  [[nodiscard]] double representative(std::size_t i) const {
    if (cuts.empty()) return 0.0;
    if (i == 0) return cuts.front() - std::max(1.0, std::abs(cuts.front()));
    if (i == cuts.size()) return cuts.back() + std::max(1.0, std::abs(cuts.back()));
    return 0.5 * (cuts[i - 1] + cuts[i]);
  }
  [[nodiscard]] double lower(std::size_t i) const { return i == 0 ? -INFINITY : cuts[i - 1]; }
  [[nodiscard]] double upper(std::size_t i) const { return i == cuts.size() ? INFINITY : cuts[i]; }
};

/// A univariate PL function applied to one input coordinate.
struct ActivationUse {
  const PiecewiseLinear* f;
  std::size_t input;
};

/// Inserts cuts where some coordinate crosses a breakpoint of a function reading it.
/// Zero-slope coordinates never cross; their side is decided later by segment_index.
inline void refine(SymbolicState& s, std::span<const ActivationUse> uses) {
  std::vector<double> fresh;
  for (std::size_t i = 0; i <= s.cuts.size(); ++i) {
    const double lo = s.lower(i);
    const double hi = s.upper(i);
    for (const auto& use : uses) {
      const Affine1D u = s.coords[i][use.input];
      if (u.slope == 0.0) continue;
      for (double beta : use.f->breakpoints()) {
        const double x = (beta - u.intercept) / u.slope;
        if (x > lo && x < hi) fresh.push_back(x);
      }
    }
  }
  if (fresh.empty()) return;

  // (value, existing); existing cuts win merges so refinement never moves a boundary.
  std::vector<std::pair<double, bool>> all;
  all.reserve(s.cuts.size() + fresh.size());
  for (double c : s.cuts) all.emplace_back(c, true);
  for (double c : fresh) all.emplace_back(c, false);
  std::sort(all.begin(), all.end());
  std::vector<std::pair<double, bool>> merged;
  for (const auto& cut : all) {
    if (!merged.empty() && cut.first - merged.back().first <= kCutMergeTolerance) {
      if (cut.second && !merged.back().second) merged.back() = cut;
      continue;
    }
    merged.push_back(cut);
  }

  SymbolicState out;
  for (const auto& cut : merged) out.cuts.push_back(cut.first);
  out.coords.resize(out.cuts.size() + 1);
  for (std::size_t i = 0; i <= out.cuts.size(); ++i) {
    const double t = out.representative(i);
    const auto old = static_cast<std::size_t>(std::upper_bound(s.cuts.begin(), s.cuts.end(), t) - s.cuts.begin());
    out.coords[i] = s.coords[old];
  }
  s = std::move(out);
}

/// Composes f after coordinate u on interval i.
inline Affine1D compose(const PiecewiseLinear& f, std::span<const Affine1D> formulas, Affine1D u, double t) {
  const Affine1D seg = formulas[f.segment_index(u(t))];
  return {seg.slope * u.slope, seg.slope * u.intercept + seg.intercept};
}

inline void push_kan_layer(SymbolicState& s, const KanLayer& layer) {
  std::vector<ActivationUse> uses;
  std::vector<std::vector<Affine1D>> formulas;
  for (std::size_t q = 0; q < layer.n_out(); ++q) {
    for (std::size_t p = 0; p < layer.n_in(); ++p) {
      uses.push_back({&layer.activation(q, p), p});
      formulas.push_back(layer.activation(q, p).segment_formulas());
    }
  }
  refine(s, uses);
  for (std::size_t i = 0; i <= s.cuts.size(); ++i) {
    const double t = s.representative(i);
    std::vector<Affine1D> next(layer.n_out());
    for (std::size_t q = 0; q < layer.n_out(); ++q) {
      Affine1D acc;
      for (std::size_t p = 0; p < layer.n_in(); ++p) {
        const auto term = compose(layer.activation(q, p), formulas[q * layer.n_in() + p], s.coords[i][p], t);
        acc.slope += term.slope;
        acc.intercept += term.intercept;
      }
      next[q] = acc;
    }
    s.coords[i] = std::move(next);
  }
}

inline void push_mlp_layer(SymbolicState& s, const MlpLayer& layer) {
  for (auto& coords : s.coords) {
    std::vector<Affine1D> next(layer.n_out());
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      Affine1D acc{0.0, 0.0};
      for (std::size_t c = 0; c < layer.n_in(); ++c) {
        acc.slope += layer.weight()(r, c) * coords[c].slope;
        acc.intercept += layer.weight()(r, c) * coords[c].intercept;
      }
      acc.intercept += layer.bias()[r];
      next[r] = acc;
    }
    coords = std::move(next);
  }
  if (layer.activation() != Activation::relu) return;

  static const PiecewiseLinear relu = PiecewiseLinear::relu();
  static const std::vector<Affine1D> relu_formulas = relu.segment_formulas();
  std::vector<ActivationUse> uses;
  for (std::size_t r = 0; r < layer.n_out(); ++r) uses.push_back({&relu, r});
  refine(s, uses);
  for (std::size_t i = 0; i <= s.cuts.size(); ++i) {
    const double t = s.representative(i);
    for (auto& u : s.coords[i]) u = compose(relu, relu_formulas, u, t);
  }
}

inline Complex1D finish(const SymbolicState& s) {
  Complex1D raw;
  raw.cuts = s.cuts;
  for (const auto& coords : s.coords) {
    AffinePiece piece;
    for (const auto& u : coords) {
      piece.slope.push_back(u.slope);
      piece.intercept.push_back(u.intercept);
    }
    raw.pieces.push_back(std::move(piece));
  }
  return raw;
}

inline SymbolicState identity_state() {
  SymbolicState s;
  s.coords = {{Affine1D{1.0, 0.0}}};
  return s;
}

}  // namespace detail

/// Merges adjacent pieces whose slope vectors agree; continuity makes intercepts agree too.
inline Complex1D normalize(const Complex1D& c) {
  Complex1D out;
  if (c.pieces.empty()) return out;
  out.pieces.push_back(c.pieces.front());
  for (std::size_t i = 1; i < c.pieces.size(); ++i) {
    if (detail::slopes_match(out.pieces.back(), c.pieces[i])) continue;
    out.cuts.push_back(c.cuts[i - 1]);
    out.pieces.push_back(c.pieces[i]);
  }
  return out;
}

/// Exact linear-region complex of a KAN with one input, by symbolic propagation.
inline Complex1D exact_regions_1d(const Kan& kan) {
  if (kan.input_dim() != 1) throw UnsupportedDimensionError("exact_regions_1d: input dimension must be 1");
  auto s = detail::identity_state();
  for (const auto& layer : kan.layers()) detail::push_kan_layer(s, layer);
  return normalize(detail::finish(s));
}

inline Complex1D exact_regions_1d(const Mlp& mlp) {
  if (mlp.input_dim() != 1) throw UnsupportedDimensionError("exact_regions_1d: input dimension must be 1");
  auto s = detail::identity_state();
  for (const auto& layer : mlp.layers()) detail::push_mlp_layer(s, layer);
  return normalize(detail::finish(s));
}

/// Upper bound on the segments of g o f when f has k and g has k_prime segments.
inline std::size_t composition_segment_bound(std::size_t k, std::size_t k_prime) {
  if (k == 0 || k_prime == 0) throw DomainError("composition_segment_bound: segment counts must be positive");
  return k * k_prime;
}

// ---------------------------------------------------------------------------
// 2-D grid fingerprint
// ---------------------------------------------------------------------------

struct Box2D {
  double x0 = -1.0;
  double x1 = 1.0;
  double y0 = -1.0;
  double y1 = 1.0;
};

/// Quantized gradient fingerprints on a regular grid over a 2-D box.
///
/// Cells whose one-sided differences disagree straddle a kink and get
/// fingerprint id -1; they join no component. estimated_regions counts
/// 4-connected components of equal-fingerprint cells.
struct RegionGrid {
  Box2D box;
  std::size_t resolution = 0;
  std::vector<std::int64_t> fingerprint_ids;  // row-major, index iy * resolution + ix
  std::vector<std::vector<std::int64_t>> fingerprints;  // quantized gradients, by id
  std::size_t estimated_regions = 0;

  [[nodiscard]] double cell_x(std::size_t ix) const {
    return box.x0 + (static_cast<double>(ix) + 0.5) * (box.x1 - box.x0) / static_cast<double>(resolution);
  }
  [[nodiscard]] double cell_y(std::size_t iy) const {
    return box.y0 + (static_cast<double>(iy) + 0.5) * (box.y1 - box.y0) / static_cast<double>(resolution);
  }

  /// CSV with header x,y,fingerprint_id; one row per cell center.
  void write_csv(std::ostream& os) const {
    os << "x,y,fingerprint_id\n";
    for (std::size_t iy = 0; iy < resolution; ++iy) {
      for (std::size_t ix = 0; ix < resolution; ++ix) {
        os << format_double(cell_x(ix)) << ',' << format_double(cell_y(iy)) << ','
           << fingerprint_ids[iy * resolution + ix] << '\n';
      }
    }
  }
};

inline constexpr double kGradientQuantum = 1e-6;

template <class Net>
RegionGrid grid_fingerprint_2d(const Net& net, const Box2D& box, std::size_t resolution) {
  if (net.input_dim() != 2) throw UnsupportedDimensionError("grid_fingerprint_2d: input dimension must be 2");
  if (resolution < 8) throw DomainError("grid_fingerprint_2d: resolution must be at least 8");
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) throw DomainError("grid_fingerprint_2d: empty box");

  RegionGrid grid;
  grid.box = box;
  grid.resolution = resolution;
  grid.fingerprint_ids.assign(resolution * resolution, -1);

  const double hx = (box.x1 - box.x0) / static_cast<double>(resolution) / 4.0;
  const double hy = (box.y1 - box.y0) / static_cast<double>(resolution) / 4.0;
  std::map<std::vector<std::int64_t>, std::int64_t> ids;

  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double cx = grid.cell_x(ix);
      const double cy = grid.cell_y(iy);
      const std::vector<double> center = net(std::vector<double>{cx, cy});
      const std::vector<double> xp = net(std::vector<double>{cx + hx, cy});
      const std::vector<double> xm = net(std::vector<double>{cx - hx, cy});
      const std::vector<double> yp = net(std::vector<double>{cx, cy + hy});
      const std::vector<double> ym = net(std::vector<double>{cx, cy - hy});
      std::vector<std::int64_t> key;
      bool mixed = false;
      for (std::size_t o = 0; o < center.size(); ++o) {
        const double fx = (xp[o] - center[o]) / hx;
        const double bx = (center[o] - xm[o]) / hx;
        const double fy = (yp[o] - center[o]) / hy;
        const double by = (center[o] - ym[o]) / hy;
        if (std::abs(fx - bx) > kGradientQuantum || std::abs(fy - by) > kGradientQuantum) mixed = true;
        key.push_back(std::llround(0.5 * (fx + bx) / kGradientQuantum));
        key.push_back(std::llround(0.5 * (fy + by) / kGradientQuantum));
      }
      if (mixed) continue;
      auto [it, inserted] = ids.emplace(key, static_cast<std::int64_t>(grid.fingerprints.size()));
      if (inserted) grid.fingerprints.push_back(key);
      grid.fingerprint_ids[iy * resolution + ix] = it->second;
    }
  }

  std::vector<bool> visited(grid.fingerprint_ids.size(), false);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < visited.size(); ++start) {
    if (visited[start] || grid.fingerprint_ids[start] < 0) continue;
    ++grid.estimated_regions;
    visited[start] = true;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t cell = queue.front();
      queue.pop_front();
      const std::size_t ix = cell % resolution;
      const std::size_t iy = cell / resolution;
      auto visit = [&](std::size_t n) {
        if (!visited[n] && grid.fingerprint_ids[n] == grid.fingerprint_ids[cell]) {
          visited[n] = true;
          queue.push_back(n);
        }
      };
      if (ix > 0) visit(cell - 1);
      if (ix + 1 < resolution) visit(cell + 1);
      if (iy > 0) visit(cell - resolution);
      if (iy + 1 < resolution) visit(cell + resolution);
    }
  }
  return grid;
}

}  // namespace plkan
