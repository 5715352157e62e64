#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "plkan/error.hpp"
#include "plkan/kan.hpp"
#include "plkan/mlp.hpp"
#include "plkan/monomial_relu.hpp"
#include "plkan/provenance.hpp"
#include "plkan/regions.hpp"
#include "plkan/spline.hpp"

namespace plkan {

using Json = nlohmann::json;

using Model = std::variant<Kan, Mlp, SplineKan, MonomialReluNetwork>;

inline constexpr std::string_view kModelFileVersion = "1";

inline std::string_view kind_name(const Model& m) noexcept {
  constexpr std::string_view names[] = {"kan", "mlp", "bspline_kan", "monomial_relu"};
  return names[m.index()];
}

struct ModelFile {
  Model model;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

struct SaveOptions {
  /// Write MLP weights as (row, col, value, tag) triplets, skipping structural zeros.
  bool sparse = false;
};

namespace detail {

/// Walks a parsed document while remembering the field path for error messages.
class Field {
 public:
  Field(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  [[nodiscard]] const std::string& path() const noexcept { return path_; }
  [[nodiscard]] const Json& raw() const noexcept { return *j_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": " + what); }

  [[nodiscard]] bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  [[nodiscard]] Field at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) throw ParseError(path_ + "." + key + ": missing field");
    return Field(*it, path_ + "." + key);
  }

  [[nodiscard]] Field at(std::size_t i) const { return Field((*j_)[i], path_ + "[" + std::to_string(i) + "]"); }

  [[nodiscard]] std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  [[nodiscard]] double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  [[nodiscard]] std::size_t index() const {
    if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<std::int64_t>() >= 0)) {
      fail("expected a non-negative integer");
    }
    return j_->get<std::size_t>();
  }

  [[nodiscard]] std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  [[nodiscard]] std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }

 private:
  const Json* j_;
  std::string path_;
};

/// Rethrows validation failures with the field they came from.
template <class Fn>
auto validated(const Field& f, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(f.path() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ValidationError(f.path() + ": " + e.what());
  }
}

inline Json numbers_json(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

inline Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(numbers_json(m.row(r)));
  return out;
}

inline Matrix read_dense_matrix(const Field& f) {
  const std::size_t rows = f.size();
  if (rows == 0) f.fail("matrix must have at least one row");
  std::vector<std::vector<double>> data(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    data[r] = f.at(r).numbers();
    if (data[r].size() != data[0].size()) f.at(r).fail("rows must have equal length");
  }
  return validated(f, [&] { return Matrix::from_rows(data); });
}

// Provenance ---------------------------------------------------------------

inline std::string_view source_kind_name(SourceKind k) noexcept {
  constexpr std::string_view names[] = {"kan_slope", "kan_breakpoint", "kan_intercept", "mlp_weight", "mlp_bias"};
  return names[static_cast<std::size_t>(k)];
}

inline SourceKind parse_source_kind(const Field& f) {
  const std::string s = f.string();
  for (std::uint8_t i = 0; i < 5; ++i) {
    if (source_kind_name(static_cast<SourceKind>(i)) == s) return static_cast<SourceKind>(i);
  }
  f.fail("unknown source kind \"" + s + "\"");
}

inline Json provenance_json(const Provenance& p) {
  Json out = Json::array();
  for (const auto& s : p) out.push_back({source_kind_name(s.kind), s.layer, s.row, s.col, s.index});
  return out;
}

inline Provenance read_provenance(const Field& f) {
  Provenance out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Field e = f.at(i);
    if (e.size() != 5) e.fail("source must be [kind, layer, row, col, index]");
    out.push_back({parse_source_kind(e.at(std::size_t{0})), static_cast<std::uint32_t>(e.at(1).index()),
                   static_cast<std::uint32_t>(e.at(2).index()), static_cast<std::uint32_t>(e.at(3).index()),
                   static_cast<std::uint32_t>(e.at(4).index())});
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i - 1] < out[i])) f.fail("sources must be sorted and distinct");
  }
  return out;
}

// KAN ----------------------------------------------------------------------

inline Json pl_json(const PiecewiseLinear& f) {
  return {{"breakpoints", numbers_json(f.breakpoints())},
          {"slopes", numbers_json(f.slopes())},
          {"intercept", f.intercept()}};
}

inline PiecewiseLinear read_pl(const Field& f) {
  auto bps = f.at("breakpoints").numbers();
  auto slopes = f.at("slopes").numbers();
  const double c = f.at("intercept").number();
  return validated(f, [&] { return PiecewiseLinear(std::move(bps), std::move(slopes), c); });
}

inline Json spline_json(const PolySegmentSpline& s) {
  Json pieces = Json::array();
  for (const auto& p : s.pieces()) pieces.push_back(numbers_json(p));
  return {{"breakpoints", numbers_json(s.breakpoints())}, {"pieces", std::move(pieces)},
          {"degree_bound", s.degree_bound()}};
}

/// Either piecewise-polynomial form or B-spline {knots, control_points, degree}.
inline PolySegmentSpline read_spline(const Field& f) {
  if (f.has("knots")) {
    const auto knots = f.at("knots").numbers();
    const auto ctrl = f.at("control_points").numbers();
    const std::size_t degree = f.at("degree").index();
    return validated(f, [&] { return from_bspline(knots, ctrl, degree); });
  }
  auto bps = f.at("breakpoints").numbers();
  const Field pf = f.at("pieces");
  std::vector<std::vector<double>> pieces(pf.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) pieces[i] = pf.at(i).numbers();
  const std::size_t bound = f.at("degree_bound").index();
  return validated(f, [&] { return PolySegmentSpline(std::move(bps), std::move(pieces), bound); });
}

template <class F, class Write>
Json kan_json(const BasicKan<F>& kan, Write write) {
  Json layers = Json::array();
  for (const auto& layer : kan.layers()) {
    Json grid = Json::array();
    for (std::size_t q = 0; q < layer.n_out(); ++q) {
      Json row = Json::array();
      for (std::size_t p = 0; p < layer.n_in(); ++p) row.push_back(write(layer.activation(q, p)));
      grid.push_back(std::move(row));
    }
    layers.push_back({{"n_in", layer.n_in()}, {"n_out", layer.n_out()}, {"activations", std::move(grid)}});
  }
  return {{"layers", std::move(layers)}};
}

template <class F, class Read>
BasicKan<F> read_kan(const Field& payload, Read read) {
  const Field lf = payload.at("layers");
  if (lf.size() == 0) lf.fail("at least one layer required");
  std::vector<BasicKanLayer<F>> layers;
  for (std::size_t l = 0; l < lf.size(); ++l) {
    const Field layer = lf.at(l);
    const std::size_t n_in = layer.at("n_in").index();
    const std::size_t n_out = layer.at("n_out").index();
    const Field grid = layer.at("activations");
    if (grid.size() != n_out) grid.fail("expected " + std::to_string(n_out) + " rows (n_out)");
    std::vector<F> acts;
    for (std::size_t q = 0; q < n_out; ++q) {
      const Field row = grid.at(q);
      if (row.size() != n_in) row.fail("expected " + std::to_string(n_in) + " activations (n_in)");
      for (std::size_t p = 0; p < n_in; ++p) acts.push_back(read(row.at(p)));
    }
    layers.push_back(validated(layer, [&] { return BasicKanLayer<F>(n_in, n_out, std::move(acts)); }));
  }
  return validated(lf, [&] { return BasicKan<F>(std::move(layers)); });
}

// MLP ----------------------------------------------------------------------

inline Json sparse_weight_json(const MlpLayer& layer) {
  const Matrix& w = layer.weight();
  Json entries = Json::array();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      const ParamTag tag = layer.weight_tag(r, c);
      if (w(r, c) == 0.0 && (tag == ParamTag::structural || !layer.provenance())) continue;
      entries.push_back({r, c, w(r, c), to_string(tag)});
    }
  }
  return {{"format", "triplets"}, {"rows", w.rows()}, {"cols", w.cols()}, {"entries", std::move(entries)}};
}

inline Matrix read_sparse_weight(const Field& f) {
  if (f.at("format").string() != "triplets") f.at("format").fail("expected \"triplets\"");
  const std::size_t rows = f.at("rows").index();
  const std::size_t cols = f.at("cols").index();
  if (rows == 0 || cols == 0) f.fail("rows and cols must be positive");
  Matrix m(rows, cols);
  std::vector<bool> seen(rows * cols, false);
  const Field entries = f.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Field e = entries.at(i);
    if (e.size() != 4) e.fail("triplet must be [row, col, value, tag]");
    const std::size_t r = e.at(std::size_t{0}).index();
    const std::size_t c = e.at(1).index();
    if (r >= rows || c >= cols) e.fail("index out of range");
    if (seen[r * cols + c]) e.fail("duplicate entry");
    seen[r * cols + c] = true;
    const std::string tag = e.at(3).string();
    if (tag != "free" && tag != "structural") e.at(3).fail("tag must be \"free\" or \"structural\"");
    m(r, c) = e.at(2).number();
  }
  return m;
}

inline Json mlp_json(const Mlp& mlp, const SaveOptions& opts) {
  Json layers = Json::array();
  for (const auto& layer : mlp.layers()) {
    Json l = {{"activation", to_string(layer.activation())},
              {"weight", opts.sparse ? sparse_weight_json(layer) : matrix_json(layer.weight())},
              {"bias", numbers_json(layer.bias())}};
    if (const auto& prov = layer.provenance()) {
      Json weight = Json::array();
      for (const auto& p : prov->weight) weight.push_back(provenance_json(p));
      Json bias = Json::array();
      for (const auto& p : prov->bias) bias.push_back(provenance_json(p));
      l["provenance"] = {{"weight", std::move(weight)}, {"bias", std::move(bias)}};
    }
    layers.push_back(std::move(l));
  }
  return {{"layers", std::move(layers)}};
}

inline Mlp read_mlp(const Field& payload) {
  const Field lf = payload.at("layers");
  if (lf.size() == 0) lf.fail("at least one layer required");
  std::vector<MlpLayer> layers;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    const Field lj = lf.at(i);
    const Field act = lj.at("activation");
    const std::string a = act.string();
    if (a != "relu" && a != "identity") act.fail("activation must be \"relu\" or \"identity\"");
    const Field wf = lj.at("weight");
    Matrix w = wf.raw().is_object() ? read_sparse_weight(wf) : read_dense_matrix(wf);
    auto b = lj.at("bias").numbers();
    std::optional<LayerProvenance> prov;
    if (lj.has("provenance")) {
      const Field pf = lj.at("provenance");
      LayerProvenance lp;
      const Field pw = pf.at("weight");
      for (std::size_t k = 0; k < pw.size(); ++k) lp.weight.push_back(read_provenance(pw.at(k)));
      const Field pb = pf.at("bias");
      for (std::size_t k = 0; k < pb.size(); ++k) lp.bias.push_back(read_provenance(pb.at(k)));
      prov = std::move(lp);
    }
    layers.push_back(validated(lj, [&] {
      return MlpLayer(std::move(w), std::move(b), a == "relu" ? Activation::relu : Activation::identity,
                      std::move(prov));
    }));
  }
  return validated(lf, [&] { return Mlp(std::move(layers)); });
}

// Monomial-relu -------------------------------------------------------------

inline Json monomial_json(const MonomialReluNetwork& net) {
  Json blocks = Json::array();
  for (const auto& b : net.blocks()) {
    blocks.push_back({{"weight", matrix_json(b.weight)}, {"bias", numbers_json(b.bias)}});
  }
  return {{"degree", net.degree()},
          {"blocks", std::move(blocks)},
          {"readout", {{"weight", matrix_json(net.readout_weight())}, {"bias", numbers_json(net.readout_bias())}}}};
}

inline MonomialReluNetwork read_monomial(const Field& payload) {
  const std::size_t degree = payload.at("degree").index();
  const Field bf = payload.at("blocks");
  std::vector<MonomialReluBlock> blocks;
  for (std::size_t i = 0; i < bf.size(); ++i) {
    const Field b = bf.at(i);
    blocks.push_back({read_dense_matrix(b.at("weight")), b.at("bias").numbers()});
  }
  const Field rf = payload.at("readout");
  Matrix rw = read_dense_matrix(rf.at("weight"));
  auto rb = rf.at("bias").numbers();
  return validated(payload, [&] {
    return MonomialReluNetwork(degree, std::move(blocks), std::move(rw), std::move(rb));
  });
}

inline Json parse_text(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(e.what());
  }
}

}  // namespace detail

inline Json to_json(const ModelFile& file, const SaveOptions& opts = {}) {
  Json payload = std::visit(
      [&](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Kan>) {
          return detail::kan_json(m, detail::pl_json);
        } else if constexpr (std::is_same_v<T, Mlp>) {
          return detail::mlp_json(m, opts);
        } else if constexpr (std::is_same_v<T, SplineKan>) {
          return detail::kan_json(m, detail::spline_json);
        } else {
          return detail::monomial_json(m);
        }
      },
      file.model);
  Json metadata = Json::object();
  for (const auto& [k, v] : file.metadata) metadata[k] = v;
  return {{"kind", kind_name(file.model)},
          {"version", kModelFileVersion},
          {"metadata", std::move(metadata)},
          {"payload", std::move(payload)}};
}

inline ModelFile model_from_json(const Json& j) {
  const detail::Field root(j, "$");
  const detail::Field kind_field = root.at("kind");
  const std::string kind = kind_field.string();
  const std::string version = root.at("version").string();
  if (version != kModelFileVersion) root.at("version").fail("unsupported version \"" + version + "\"");
  ModelFile out{Kan({KanLayer(1, 1, {PiecewiseLinear::identity()})}), {}};
  if (root.has("metadata")) {
    const detail::Field mf = root.at("metadata");
    if (!mf.raw().is_object()) mf.fail("expected an object");
    for (const auto& [k, v] : mf.raw().items()) {
      out.metadata[k] = detail::Field(v, mf.path() + "." + k).string();
    }
  }
  const detail::Field payload = root.at("payload");
  if (kind == "kan") {
    out.model = detail::read_kan<PiecewiseLinear>(payload, detail::read_pl);
  } else if (kind == "mlp") {
    out.model = detail::read_mlp(payload);
  } else if (kind == "bspline_kan") {
    out.model = detail::read_kan<PolySegmentSpline>(payload, detail::read_spline);
  } else if (kind == "monomial_relu") {
    out.model = detail::read_monomial(payload);
  } else {
    kind_field.fail("unknown kind \"" + kind + "\"");
  }
  return out;
}

/// Canonical text: sorted keys, two-space indent, shortest round-trip numbers, trailing newline.
inline std::string dump_canonical(const Json& j) { return j.dump(2) + "\n"; }

inline std::string save_string(const ModelFile& file, const SaveOptions& opts = {}) {
  return dump_canonical(to_json(file, opts));
}

inline ModelFile load_string(std::string_view text) { return model_from_json(detail::parse_text(text)); }

inline void save(const ModelFile& file, const std::string& path, const SaveOptions& opts = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << save_string(file, opts);
  if (!os) throw Error("failed writing " + path);
}

inline ModelFile load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return load_string(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Reports ---------------------------------------------------------------------

/// Non-finite values have no JSON number form; they are written as strings.
inline Json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json to_json(const Complex1D& c) {
  Json pieces = Json::array();
  for (const auto& p : c.pieces) {
    pieces.push_back({{"slope", detail::numbers_json(p.slope)}, {"intercept", detail::numbers_json(p.intercept)}});
  }
  return {{"cuts", detail::numbers_json(c.cuts)}, {"pieces", std::move(pieces)}, {"regions", c.regions()}};
}

}  // namespace plkan
