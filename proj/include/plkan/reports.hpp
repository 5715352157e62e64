#pragma once

#include <string>
#include <vector>

#include "plkan/complexity.hpp"
#include "plkan/regions.hpp"
#include "plkan/serialization.hpp"
#include "plkan/verify.hpp"

namespace plkan {

inline Json to_json(const EquivReport& r) {
  Json worst = Json::array();
  for (double v : r.worst_point) worst.push_back(number_or_string(v));
  return {{"max_abs_error", number_or_string(r.max_abs_error)},
          {"max_rel_error", number_or_string(r.max_rel_error)},
          {"worst_point", std::move(worst)},
          {"samples", r.samples},
          {"passed", r.passed},
          {"mode", to_string(r.mode)},
          {"tolerance", r.tolerance}};
}

inline Json to_json(const ParamCounts& c) {
  return {{"total", c.total}, {"nonzero", c.nonzero}, {"free", c.free}};
}

inline Json to_json(const ParamReport& r) {
  Json layers = Json::array();
  for (const auto& c : r.per_layer) layers.push_back(to_json(c));
  return {{"total_entries", r.total_entries},
          {"nonzero_entries", r.nonzero_entries},
          {"free_entries", r.free_entries},
          {"per_layer", std::move(layers)}};
}

inline Json to_json(const KanToReluFormula& f) {
  return {{"value", f.value}, {"uniform", f.uniform}, {"segments", f.segments}};
}

/// Big integers are written as decimal strings so no precision is lost.
inline Json to_json(const RegionsPerParameter& r) {
  Json out = {{"bound", r.bound.str()}, {"params", r.params}, {"ratio", number_or_string(r.ratio())}};
  if (r.activation_params) {
    out["activation_params"] = *r.activation_params;
    out["activation_ratio"] =
        number_or_string(r.bound.convert_to<double>() / static_cast<double>(*r.activation_params));
  }
  return out;
}

inline Json to_json(const ClassSignature& s) {
  return {{"family", to_string(s.family)},
          {"depth", s.depth},
          {"width", s.width},
          {"segment_bound", s.segment_bound}};
}

inline Json to_json(const EmbeddingReport& r) {
  return {{"source", to_json(r.source)},
          {"converted", to_json(r.converted)},
          {"converted_exact", to_json(r.converted_exact)},
          {"reconverted", to_json(r.reconverted)},
          {"paper_width_bound", r.paper_width_bound},
          {"exact_width_bound", r.exact_width_bound},
          {"depth_bound_satisfied", r.depth_bound_satisfied},
          {"width_bound_satisfied", r.width_bound_satisfied},
          {"exact_width_bound_satisfied", r.exact_width_bound_satisfied},
          {"segment_bound_satisfied", r.segment_bound_satisfied},
          {"all_satisfied", r.all_satisfied()}};
}

/// Summary of a grid fingerprint; the per-cell ids go to CSV.
inline Json to_json(const RegionGrid& g) {
  return {{"box", {g.box.x0, g.box.x1, g.box.y0, g.box.y1}},
          {"resolution", g.resolution},
          {"distinct_fingerprints", g.fingerprints.size()},
          {"estimated_regions", g.estimated_regions}};
}

}  // namespace plkan
