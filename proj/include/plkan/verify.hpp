#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <boost/random/sobol.hpp>

#include "plkan/error.hpp"
#include "plkan/kan.hpp"
#include "plkan/mlp.hpp"
#include "plkan/monomial_relu.hpp"
#include "plkan/regions.hpp"
#include "plkan/spline.hpp"

namespace plkan {

/// Seed used for sampling when the caller does not pass one.
inline constexpr std::uint64_t kDefaultSeed = 0x5eedULL;
/// Offset of the deterministic probes placed on either side of each first-layer breakpoint.
inline constexpr double kBreakpointProbeOffset = 1e-6;
/// Two cut points pair up in exact comparison when closer than this.
inline constexpr double kCutPairTolerance = 1e-9;

enum class EquivMode { sampled, exact_1d };

inline std::string_view to_string(EquivMode m) noexcept { return m == EquivMode::sampled ? "sampled" : "exact_1d"; }

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Outcome of an equivalence check. Errors use |a - b| / (1 + max(|a|, |b|))
/// for max_rel_error; passed iff max_rel_error <= tolerance.
struct EquivReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::vector<double> worst_point;
  std::size_t samples = 0;
  bool passed = false;
  EquivMode mode = EquivMode::sampled;
  double tolerance = 0.0;
};

template <class Net>
concept Network = requires(const Net& n, std::span<const double> x) {
  { n.input_dim() } -> std::convertible_to<std::size_t>;
  { n.output_dim() } -> std::convertible_to<std::size_t>;
  { n(x) } -> std::convertible_to<std::vector<double>>;
};

/// Breakpoint coordinates of the first layer, per input coordinate.
template <UnivariateActivation F>
std::vector<std::vector<double>> first_layer_breakpoints(const BasicKan<F>& kan) {
  const auto& layer = kan.layers().front();
  std::vector<std::vector<double>> out(layer.n_in());
  for (std::size_t q = 0; q < layer.n_out(); ++q) {
    for (std::size_t p = 0; p < layer.n_in(); ++p) {
      const auto& bps = layer.activation(q, p).breakpoints();
      out[p].insert(out[p].end(), bps.begin(), bps.end());
    }
  }
  return out;
}

namespace detail {

/// Kinks of the first affine + relu stage; coordinate-aligned only for one input.
inline std::vector<std::vector<double>> affine_kinks(const Matrix& w, std::span<const double> b) {
  std::vector<std::vector<double>> out(w.cols());
  if (w.cols() != 1) return out;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (w(r, 0) != 0.0) out[0].push_back(-b[r] / w(r, 0));
  }
  return out;
}

}  // namespace detail

inline std::vector<std::vector<double>> first_layer_breakpoints(const Mlp& mlp) {
  const auto& l = mlp.layers().front();
  if (l.activation() != Activation::relu) return std::vector<std::vector<double>>(l.n_in());
  return detail::affine_kinks(l.weight(), l.bias());
}

inline std::vector<std::vector<double>> first_layer_breakpoints(const MonomialReluNetwork& net) {
  if (net.blocks().empty()) return std::vector<std::vector<double>>(net.input_dim());
  return detail::affine_kinks(net.blocks().front().weight, net.blocks().front().bias);
}

namespace detail {

struct ErrorTracker {
  EquivReport report;

  void observe(std::span<const double> point, std::span<const double> ya, std::span<const double> yb) {
    ++report.samples;
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < ya.size(); ++i) {
      const double abs_err = std::abs(ya[i] - yb[i]);
      const double rel_err = abs_err / (1.0 + std::max(std::abs(ya[i]), std::abs(yb[i])));
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      worst_rel = std::max(worst_rel, std::isnan(rel_err) ? std::numeric_limits<double>::infinity() : rel_err);
    }
    const bool better = worst_rel > report.max_rel_error ||
                        (worst_rel == report.max_rel_error &&
                         (report.worst_point.empty() ||
                          std::lexicographical_compare(point.begin(), point.end(), report.worst_point.begin(),
                                                       report.worst_point.end())));
    if (better) {
      report.max_rel_error = worst_rel;
      report.worst_point.assign(point.begin(), point.end());
    }
  }
};

}  // namespace detail

/// Sampled equivalence check over a box.
///
/// Points: `samples` Sobol points (Cranley-Patterson shifted by the seed) plus,
/// for every first-layer breakpoint b of either network on coordinate p, two
/// probes with x_p = b -/+ 1e-6 and the remaining coordinates taken from the
/// Sobol sequence. Probes that fall outside the box are skipped.
template <Network A, Network B>
EquivReport assert_equiv(const A& a, const B& b, std::span<const Interval> box, std::size_t samples, double tol,
                         std::uint64_t seed = kDefaultSeed) {
  const std::size_t n = a.input_dim();
  if (b.input_dim() != n || a.output_dim() != b.output_dim()) {
    throw ShapeError("assert_equiv: networks have different input or output dimensions");
  }
  if (box.size() != n) throw ShapeError("assert_equiv: box dimension must equal input dimension");
  if (samples == 0) throw DomainError("assert_equiv: at least one sample required");
  for (const auto& iv : box) {
    if (!(iv.hi >= iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      throw DomainError("assert_equiv: invalid box interval");
    }
  }

  boost::random::sobol sobol(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(n);
  for (double& s : shift) s = unit(rng);
  const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);

  std::vector<std::vector<double>> points(samples, std::vector<double>(n));
  for (auto& pt : points) {
    for (std::size_t d = 0; d < n; ++d) {
      double u = static_cast<double>(sobol()) * scale + shift[d];
      u -= std::floor(u);
      pt[d] = box[d].lo + u * (box[d].hi - box[d].lo);
    }
  }

  std::vector<std::vector<double>> kinks(n);
  for (const auto& per : {first_layer_breakpoints(a), first_layer_breakpoints(b)}) {
    for (std::size_t p = 0; p < n && p < per.size(); ++p) kinks[p].insert(kinks[p].end(), per[p].begin(), per[p].end());
  }
  std::size_t base = 0;
  const std::size_t sobol_count = points.size();
  for (std::size_t p = 0; p < n; ++p) {
    std::sort(kinks[p].begin(), kinks[p].end());
    kinks[p].erase(std::unique(kinks[p].begin(), kinks[p].end()), kinks[p].end());
    for (double k : kinks[p]) {
      for (double offset : {-kBreakpointProbeOffset, kBreakpointProbeOffset}) {
        if (k + offset < box[p].lo || k + offset > box[p].hi) continue;
        std::vector<double> pt = points[base++ % sobol_count];
        pt[p] = k + offset;
        points.push_back(std::move(pt));
      }
    }
  }

  detail::ErrorTracker tracker;
  tracker.report.mode = EquivMode::sampled;
  tracker.report.tolerance = tol;
  for (const auto& pt : points) tracker.observe(pt, a(pt), b(pt));
  tracker.report.passed = tracker.report.max_rel_error <= tol;
  return tracker.report;
}

template <Network A, Network B>
EquivReport assert_equiv(const A& a, const B& b, Interval box, std::size_t samples, double tol,
                         std::uint64_t seed = kDefaultSeed) {
  const std::vector<Interval> full(a.input_dim(), box);
  return assert_equiv(a, b, std::span<const Interval>(full), samples, tol, seed);
}

/// Compares normalized 1-D complexes: cut sets must pair up within 1e-9 and
/// every piece's slope and intercept must agree within tol.
template <class A, class B>
EquivReport equiv_exact_1d(const A& a, const B& b, double tol) {
  if (a.input_dim() != 1 || b.input_dim() != 1) {
    throw UnsupportedDimensionError("equiv_exact_1d: both networks must have input dimension 1");
  }
  if (a.output_dim() != b.output_dim()) throw ShapeError("equiv_exact_1d: output dimensions differ");
  const Complex1D ca = exact_regions_1d(a);
  const Complex1D cb = exact_regions_1d(b);

  EquivReport report;
  report.mode = EquivMode::exact_1d;
  report.tolerance = tol;
  constexpr double inf = std::numeric_limits<double>::infinity();

  if (ca.cuts.size() != cb.cuts.size()) {
    report.max_abs_error = inf;
    report.max_rel_error = inf;
    const std::size_t m = std::min(ca.cuts.size(), cb.cuts.size());
    std::size_t i = 0;
    while (i < m && std::abs(ca.cuts[i] - cb.cuts[i]) <= kCutPairTolerance) ++i;
    const auto& longer = ca.cuts.size() > cb.cuts.size() ? ca.cuts : cb.cuts;
    report.worst_point = {i < m ? std::min(ca.cuts[i], cb.cuts[i]) : longer[i]};
    report.samples = 0;
    report.passed = false;
    return report;
  }
  for (std::size_t i = 0; i < ca.cuts.size(); ++i) {
    if (std::abs(ca.cuts[i] - cb.cuts[i]) > kCutPairTolerance) {
      report.max_abs_error = inf;
      report.max_rel_error = inf;
      report.worst_point = {std::min(ca.cuts[i], cb.cuts[i])};
      report.passed = false;
      return report;
    }
  }

  detail::ErrorTracker tracker;
  for (std::size_t i = 0; i < ca.pieces.size(); ++i) {
    const auto& pa = ca.pieces[i];
    const auto& pb = cb.pieces[i];
    std::vector<double> va;
    std::vector<double> vb;
    for (std::size_t o = 0; o < pa.slope.size(); ++o) {
      va.push_back(pa.slope[o]);
      va.push_back(pa.intercept[o]);
      vb.push_back(pb.slope[o]);
      vb.push_back(pb.intercept[o]);
    }
    const double x = ca.interior_point(i);
    tracker.observe(std::vector<double>{x}, va, vb);
  }
  report.max_abs_error = tracker.report.max_abs_error;
  report.max_rel_error = tracker.report.max_rel_error;
  report.worst_point = tracker.report.worst_point;
  report.samples = tracker.report.samples;
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace plkan
