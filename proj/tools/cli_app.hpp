#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "plkan/plkan.hpp"

namespace plkan::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

namespace detail {

/// Thrown for command-line misuse that CLI11 cannot detect (wrong model kind etc).
struct UsageError : Error {
  using Error::Error;
};

inline std::vector<double> parse_input(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("--input: \"" + item + "\" is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw UsageError("--input: \"" + item + "\" is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--input: no values given");
  return out;
}

template <class Fn>
decltype(auto) with_kan_or_mlp(const Model& m, const char* command, Fn&& fn) {
  if (const auto* k = std::get_if<Kan>(&m)) return fn(*k);
  if (const auto* p = std::get_if<Mlp>(&m)) return fn(*p);
  throw UsageError(std::string(command) + ": model kind \"" + std::string(kind_name(m)) +
                   "\" is not supported (expected kan or mlp)");
}

inline void emit(std::ostream& out, const Json& j) { out << dump_canonical(j); }

inline ModelFile convert_model(const ModelFile& in, const std::string& to, ConversionMode mode) {
  ModelFile out{in.model, in.metadata};
  const std::string from(kind_name(in.model));
  if (from == to) return out;
  if (from == "kan" && to == "mlp") {
    out.model = kan_to_mlp(std::get<Kan>(in.model), mode);
  } else if (from == "mlp" && to == "kan") {
    out.model = mlp_to_kan(std::get<Mlp>(in.model));
  } else if (from == "bspline_kan" && to == "monomial_relu") {
    out.model = spline_kan_to_monomial_relu(std::get<SplineKan>(in.model));
  } else if (from == "monomial_relu" && to == "bspline_kan") {
    out.model = monomial_relu_to_spline_kan(std::get<MonomialReluNetwork>(in.model));
  } else {
    throw UsageError("convert: no conversion from " + from + " to " + to);
  }
  out.metadata["converted_from"] = from;
  if (to == "mlp") out.metadata["conversion_mode"] = std::string(to_string(mode));
  return out;
}

}  // namespace detail

/// Runs one command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piecewise-linear KAN and ReLU network converter and analyzer", "plkan"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json = false;
  std::optional<std::uint64_t> seed;
  app.add_flag("--json", json, "Emit the report as JSON");
  app.add_option("--seed", seed, "Seed for sampled verification");

  std::string in_path;
  std::string out_path;
  std::string other_path;

  auto* convert = app.add_subcommand("convert", "Convert a model to another family");
  std::string to;
  std::string mode_name = "exact";
  bool sparse = false;
  convert->add_option("--to", to, "Target kind")
      ->required()
      ->check(CLI::IsMember({"kan", "mlp", "bspline_kan", "monomial_relu"}));
  convert->add_option("--mode", mode_name, "Lowering of KAN activations")->check(CLI::IsMember({"exact", "paper"}));
  convert->add_flag("--sparse", sparse, "Write mlp weights as triplets");
  convert->add_option("IN", in_path)->required();
  convert->add_option("OUT", out_path)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model at one point");
  std::string input_text;
  eval->add_option("MODEL", in_path)->required();
  eval->add_option("--input", input_text, "Comma-separated input vector")->required();

  auto* verify = app.add_subcommand("verify", "Check two models compute the same function");
  std::size_t samples = 1000;
  std::vector<double> box{-4.0, 4.0};
  double tol = 1e-8;
  bool exact_1d = false;
  verify->add_option("A", in_path)->required();
  verify->add_option("B", other_path)->required();
  verify->add_option("--samples", samples, "Quasi-random sample count")->capture_default_str();
  verify->add_option("--box", box, "Per-coordinate sampling interval LO HI")->expected(2)->capture_default_str();
  verify->add_option("--tol", tol, "Tolerance on |a-b|/(1+max(|a|,|b|))")->capture_default_str();
  verify->add_flag("--exact-1d", exact_1d, "Compare exact 1-D region complexes");

  auto* params = app.add_subcommand("params", "Count parameters");
  bool paper_formula = false;
  params->add_option("MODEL", in_path)->required();
  params->add_flag("--paper-formula", paper_formula, "Also report the closed-form conversion count");

  auto* bounds = app.add_subcommand("bounds", "Linear-region upper bound and regions per parameter");
  bounds->add_option("MODEL", in_path)->required();

  auto* regions = app.add_subcommand("regions", "Exact linear regions of a 1-D model");
  regions->add_option("MODEL", in_path)->required();
  regions->add_option("--out", out_path, "Output JSON path");

  auto* fingerprint = app.add_subcommand("fingerprint", "Gradient fingerprint grid of a 2-D model");
  std::vector<double> fbox{-1.0, 1.0, -1.0, 1.0};
  std::size_t res = 64;
  fingerprint->add_option("MODEL", in_path)->required();
  fingerprint->add_option("--box", fbox, "x0 x1 y0 y1")->expected(4)->capture_default_str();
  fingerprint->add_option("--res", res, "Cells per axis")->capture_default_str();
  fingerprint->add_option("--out", out_path, "Output CSV path");

  auto* embed = app.add_subcommand("embed-check", "Depth, width and segment laws of the KAN to ReLU embedding");
  embed->add_option("MODEL", in_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (convert->parsed()) {
      const auto mode = mode_name == "paper" ? ConversionMode::paper : ConversionMode::exact;
      const ModelFile src = load(in_path);
      const ModelFile dst = detail::convert_model(src, to, mode);
      save(dst, out_path, SaveOptions{sparse});
      if (json) {
        detail::emit(out, {{"from", kind_name(src.model)}, {"to", to}, {"mode", mode_name}, {"output", out_path}});
      } else {
        out << "wrote " << to << " model to " << out_path << "\n";
      }
      return kOk;
    }

    if (eval->parsed()) {
      const ModelFile m = load(in_path);
      const auto x = detail::parse_input(input_text);
      const auto y = std::visit([&](const auto& net) { return net(x); }, m.model);
      if (json) {
        detail::emit(out, {{"input", plkan::detail::numbers_json(x)}, {"output", plkan::detail::numbers_json(y)}});
      } else {
        out << format_vector(y) << "\n";
      }
      return kOk;
    }

    if (verify->parsed()) {
      const ModelFile a = load(in_path);
      const ModelFile b = load(other_path);
      EquivReport report;
      if (exact_1d) {
        report = detail::with_kan_or_mlp(a.model, "verify --exact-1d", [&](const auto& na) {
          return detail::with_kan_or_mlp(b.model, "verify --exact-1d",
                                         [&](const auto& nb) { return equiv_exact_1d(na, nb, tol); });
        });
      } else {
        report = std::visit(
            [&](const auto& na, const auto& nb) {
              return assert_equiv(na, nb, Interval{box[0], box[1]}, samples, tol, seed.value_or(kDefaultSeed));
            },
            a.model, b.model);
      }
      if (json) {
        detail::emit(out, to_json(report));
      } else {
        out << (report.passed ? "PASS" : "FAIL") << " mode=" << to_string(report.mode)
            << " max_abs_error=" << format_double(report.max_abs_error)
            << " max_rel_error=" << format_double(report.max_rel_error) << " samples=" << report.samples
            << " worst_point=" << format_vector(report.worst_point) << "\n";
      }
      return report.passed ? kOk : kFailure;
    }

    if (params->parsed()) {
      const ModelFile m = load(in_path);
      Json j = detail::with_kan_or_mlp(m.model, "params", [&](const auto& net) -> Json {
        using T = std::decay_t<decltype(net)>;
        if constexpr (std::is_same_v<T, Kan>) {
          Json r = to_json(count_params_kan(net));
          if (paper_formula) r["paper_formula"] = to_json(paper_formula_kan_to_relu(net));
          return r;
        } else {
          Json r = to_json(count_params_mlp(net));
          if (paper_formula) r["paper_formula"] = {{"value", paper_formula_relu_to_kan(net)}};
          return r;
        }
      });
      if (json) {
        detail::emit(out, j);
      } else {
        out << "total_entries " << j["total_entries"] << "\nnonzero_entries " << j["nonzero_entries"]
            << "\nfree_entries " << j["free_entries"] << "\n";
        if (paper_formula) out << "paper_formula " << j["paper_formula"]["value"] << "\n";
      }
      return kOk;
    }

    if (bounds->parsed()) {
      const ModelFile m = load(in_path);
      Json j = detail::with_kan_or_mlp(m.model, "bounds", [&](const auto& net) -> Json {
        using T = std::decay_t<decltype(net)>;
        if constexpr (std::is_same_v<T, Kan>) {
          auto dims = net.widths();
          dims.pop_back();
          const std::size_t k = net.max_segments();
          return {{"family", "kan"},
                  {"upper_bound", kan_region_upper_bound(net).str()},
                  {"regions_per_parameter", to_json(kan_regions_per_parameter(dims, k))}};
        } else {
          std::vector<std::size_t> dims{net.input_dim()};
          for (std::size_t w : net.hidden_widths()) dims.push_back(w);
          return {{"family", "relu"},
                  {"upper_bound", relu_region_upper_bound(net).str()},
                  {"regions_per_parameter", to_json(relu_regions_per_parameter(dims))}};
        }
      });
      if (json) {
        detail::emit(out, j);
      } else {
        const Json& rpp = j["regions_per_parameter"];
        out << "family " << j["family"].get<std::string>() << "\nupper_bound "
            << j["upper_bound"].get<std::string>() << "\nregions_per_parameter "
            << rpp["bound"].get<std::string>() << " / " << rpp["params"] << "\n";
      }
      return kOk;
    }

    if (regions->parsed()) {
      const ModelFile m = load(in_path);
      const Complex1D c =
          detail::with_kan_or_mlp(m.model, "regions", [](const auto& net) { return exact_regions_1d(net); });
      const Json j = to_json(c);
      if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw Error("cannot open " + out_path + " for writing");
        os << dump_canonical(j);
      }
      if (json) {
        detail::emit(out, j);
      } else {
        out << "regions " << c.regions() << "\n";
      }
      return kOk;
    }

    if (fingerprint->parsed()) {
      const ModelFile m = load(in_path);
      const Box2D b{fbox[0], fbox[1], fbox[2], fbox[3]};
      const RegionGrid g = std::visit([&](const auto& net) { return grid_fingerprint_2d(net, b, res); }, m.model);
      if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw Error("cannot open " + out_path + " for writing");
        g.write_csv(os);
      }
      if (json) {
        detail::emit(out, to_json(g));
      } else {
        out << "estimated_regions " << g.estimated_regions << "\n";
      }
      return kOk;
    }

    if (embed->parsed()) {
      const ModelFile m = load(in_path);
      const auto* kan = std::get_if<Kan>(&m.model);
      if (kan == nullptr) throw detail::UsageError("embed-check: model kind must be kan");
      const EmbeddingReport r = class_embedding_check(*kan);
      if (json) {
        detail::emit(out, to_json(r));
      } else {
        out << (r.all_satisfied() ? "PASS" : "FAIL") << " depth " << r.converted.depth << " width "
            << r.converted.width << " <= " << r.paper_width_bound << " exact_width " << r.converted_exact.width
            << " <= " << r.exact_width_bound << " reconverted_segments " << r.reconverted.segment_bound + 1
            << " <= 2\n";
      }
      return r.all_satisfied() ? kOk : kFailure;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const UnsupportedDimensionError& e) {
    err << "error: unsupported dimension: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"plkan"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace plkan::cli
