#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "mapalign/align_local.hpp"
#include "mapalign/bubbles.hpp"
#include "mapalign/csv.hpp"
#include "mapalign/error.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/mapper.hpp"
#include "mapalign/membrane.hpp"
#include "mapalign/merge.hpp"
#include "mapalign/serialize.hpp"

namespace mapalign {

/// Everything a batch run or a session needs. Both sides use `mapper_a`
/// unless `mapper_b` overrides it.
struct RunConfig {
  std::filesystem::path input_a;
  std::filesystem::path input_b;
  MapperParams mapper_a;
  std::optional<MapperParams> mapper_b;
  LayoutParams layout;
  std::vector<double> lambdas{1.0};
  double side_margin = 2.0;  // gap between the two graphs in the overview
  AffinityWeights weights;
  std::optional<int> k;
  int k_max = 50;
  double tau = 0.05;
  MergeStrategy strategy = MergeStrategy::conditional;
  BubbleParams bubbles;
  MembraneParams membrane;
  std::filesystem::path output;
  std::uint64_t seed = 0;

  const MapperParams& mapper_for_b() const { return mapper_b ? *mapper_b : mapper_a; }

  /// Lambda of the overview layout (bubbles, membrane anchors): the last listed.
  double primary_lambda() const { return lambdas.back(); }

  /// Layout parameters for `lambda` with the run seed applied.
  LayoutParams layout_for(double lambda) const {
    LayoutParams p = layout;
    p.lambda = lambda;
    p.seed = seed;
    return p;
  }

  DiscoveryOptions discovery() const {
    DiscoveryOptions d;
    d.weights = weights;
    d.k = k;
    d.k_max = k_max;
    d.seed = derive_seed(seed, 2);
    return d;
  }

  MembraneParams membrane_params() const {
    MembraneParams m = membrane;
    m.seed = derive_seed(seed, 3);
    return m;
  }

  void validate() const {
    mapper_a.validate();
    if (mapper_b) mapper_b->validate();
    layout.validate();
    if (lambdas.empty()) throw Error("invalid_config", "at least one lambda is required");
    for (double l : lambdas) {
      if (!(l >= 0.0)) throw Error("invalid_params", "lambda must be >= 0", std::to_string(l));
    }
    weights.validate();
    if (k && *k < 1) throw Error("invalid_params", "k must be >= 1");
    if (k_max < 2) throw Error("invalid_params", "k_max must be >= 2");
    if (!(tau >= 0.0)) throw Error("invalid_params", "tau must be >= 0");
    if (!(bubbles.node_radius > 0.0) || !(bubbles.cell() > 0.0)) throw Error("invalid_params", "bubble radius and cell must be > 0");
    membrane.validate();
  }
};

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error("invalid_config", where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw Error("invalid_config", "unknown key", where.empty() ? key : where + "." + key);
  }
}

template <class T>
void read_into(const Json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error("invalid_config", "wrong type", where + "." + key);
  }
}

inline FilterSpec parse_filter(const std::string& s) {
  if (s == "l2_norm") return FilterSpec::l2_norm();
  if (s.rfind("attr:", 0) == 0 && s.size() > 5) return FilterSpec::attr(s.substr(5));
  throw Error("invalid_config", "filter must be 'l2_norm' or 'attr:<name>'", s);
}

inline MapperParams parse_mapper(const Json& j, MapperParams base, const std::string& where) {
  check_keys(j, {"filter", "num_intervals", "overlap", "dbscan_min_pts", "dbscan_eps"}, where);
  if (auto it = j.find("filter"); it != j.end()) {
    if (!it->is_string()) throw Error("invalid_config", "wrong type", where + ".filter");
    base.filter = parse_filter(it->get<std::string>());
  }
  read_into(j, "num_intervals", base.num_intervals, where);
  read_into(j, "overlap", base.overlap, where);
  read_into(j, "dbscan_min_pts", base.dbscan_min_pts, where);
  if (auto it = j.find("dbscan_eps"); it != j.end()) {
    if (it->is_string() && it->get<std::string>() == "auto") {
      base.dbscan_eps.reset();
    } else if (it->is_number()) {
      base.dbscan_eps = it->get<double>();
    } else {
      throw Error("invalid_config", "dbscan_eps must be a number or \"auto\"", where + ".dbscan_eps");
    }
  }
  return base;
}

inline Json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    Json out = Json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    Json out = Json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw Error("invalid_config", "unsupported TOML value type");
}

}  // namespace detail

/// Validates and converts a config object. Relative paths resolve against `base_dir`.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
  using detail::check_keys;
  using detail::read_into;
  check_keys(j, {"inputs", "mapper", "mapper_b", "layout", "alignment", "motif", "merge", "bubbles", "membrane", "output", "seed"}, "");
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  auto inputs = j.find("inputs");
  if (inputs == j.end()) throw Error("invalid_config", "missing key", "inputs");
  check_keys(*inputs, {"a", "b"}, "inputs");
  for (const char* side : {"a", "b"}) {
    auto it = inputs->find(side);
    if (it == inputs->end() || !it->is_string()) throw Error("invalid_config", "missing or non-string input path", std::string("inputs.") + side);
    (side[0] == 'a' ? c.input_a : c.input_b) = resolve(it->get<std::string>());
  }
  if (auto it = j.find("mapper"); it != j.end()) c.mapper_a = detail::parse_mapper(*it, c.mapper_a, "mapper");
  if (auto it = j.find("mapper_b"); it != j.end()) c.mapper_b = detail::parse_mapper(*it, c.mapper_a, "mapper_b");

  if (auto it = j.find("layout"); it != j.end()) {
    check_keys(*it, {"lambda", "lambdas", "edge_length", "repulsion", "max_iters", "initial_step", "decay", "convergence_tol",
                     "barnes_hut_threshold", "theta", "side_margin"},
               "layout");
    read_into(*it, "lambda", c.layout.lambda, "layout");
    read_into(*it, "edge_length", c.layout.edge_length, "layout");
    read_into(*it, "repulsion", c.layout.repulsion, "layout");
    read_into(*it, "max_iters", c.layout.max_iters, "layout");
    read_into(*it, "initial_step", c.layout.initial_step, "layout");
    read_into(*it, "decay", c.layout.decay, "layout");
    double tol = 0.0;
    if (it->contains("convergence_tol")) {
      read_into(*it, "convergence_tol", tol, "layout");
      c.layout.convergence_tol = tol;
    }
    read_into(*it, "barnes_hut_threshold", c.layout.barnes_hut_threshold, "layout");
    read_into(*it, "theta", c.layout.theta, "layout");
    read_into(*it, "side_margin", c.side_margin, "layout");
    if (it->contains("lambdas")) {
      read_into(*it, "lambdas", c.lambdas, "layout");
    } else if (it->contains("lambda")) {
      c.lambdas = {c.layout.lambda};
    }
  }
  if (auto it = j.find("alignment"); it != j.end()) {
    check_keys(*it, {"alpha", "beta", "gamma", "scale_inter_by_jaccard", "k", "k_max"}, "alignment");
    read_into(*it, "alpha", c.weights.alpha, "alignment");
    read_into(*it, "beta", c.weights.beta, "alignment");
    read_into(*it, "gamma", c.weights.gamma, "alignment");
    read_into(*it, "scale_inter_by_jaccard", c.weights.scale_inter_by_jaccard, "alignment");
    if (it->contains("k") && !(*it)["k"].is_null()) {
      int k = 0;
      read_into(*it, "k", k, "alignment");
      c.k = k;
    }
    read_into(*it, "k_max", c.k_max, "alignment");
  }
  if (auto it = j.find("motif"); it != j.end()) {
    check_keys(*it, {"tau"}, "motif");
    read_into(*it, "tau", c.tau, "motif");
  }
  if (auto it = j.find("merge"); it != j.end()) {
    check_keys(*it, {"strategy"}, "merge");
    std::string s = "conditional";
    read_into(*it, "strategy", s, "merge");
    c.strategy = strategy_from_string(s);
  }
  if (auto it = j.find("bubbles"); it != j.end()) {
    check_keys(*it, {"node_radius", "grid_cell", "member_factor", "obstacle_factor", "threshold"}, "bubbles");
    read_into(*it, "node_radius", c.bubbles.node_radius, "bubbles");
    if (it->contains("grid_cell") && !(*it)["grid_cell"].is_null()) {
      double cell = 0.0;
      read_into(*it, "grid_cell", cell, "bubbles");
      c.bubbles.grid_cell = cell;
    }
    read_into(*it, "member_factor", c.bubbles.member_factor, "bubbles");
    read_into(*it, "obstacle_factor", c.bubbles.obstacle_factor, "bubbles");
    read_into(*it, "threshold", c.bubbles.threshold, "bubbles");
  }
  if (auto it = j.find("membrane"); it != j.end()) {
    check_keys(*it, {"gap", "repulsion", "radius_scale", "max_iters"}, "membrane");
    read_into(*it, "gap", c.membrane.gap, "membrane");
    read_into(*it, "repulsion", c.membrane.repulsion, "membrane");
    read_into(*it, "radius_scale", c.membrane.radius_scale, "membrane");
    read_into(*it, "max_iters", c.membrane.max_iters, "membrane");
  }
  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) throw Error("invalid_config", "wrong type", "output");
    c.output = resolve(it->get<std::string>());
  }
  read_into(j, "seed", c.seed, "");
  c.validate();
  return c;
}

/// Reads a JSON or TOML (by .toml extension) config file into its JSON form.
inline Json read_config_document(const std::filesystem::path& path) {
  const std::string text = csv::read_file(path.string());
  if (path.extension() == ".toml") {
    try {
      return detail::toml_to_json(toml::parse(text, path.string()));
    } catch (const toml::parse_error& e) {
      std::ostringstream where;
      where << e.source().begin;
      throw Error("invalid_config", std::string(e.description()), where.str());
    }
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("invalid_config", "malformed JSON config", e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_config_document(path), path.parent_path());
}

/// JSON echo of the effective parameters.
inline Json to_json(const RunConfig& c) {
  Json layout = {{"edge_length", c.layout.edge_length},
                 {"repulsion", c.layout.repulsion},
                 {"max_iters", c.layout.max_iters},
                 {"initial_step", c.layout.initial_step},
                 {"decay", c.layout.decay},
                 {"convergence_tol", c.layout.tolerance()},
                 {"lambdas", c.lambdas}};
  Json alignment = to_json(c.weights);
  alignment["k"] = c.k ? Json(*c.k) : Json("auto");
  alignment["k_max"] = c.k_max;
  return {{"mapper_a", to_json(c.mapper_a)},
          {"mapper_b", to_json(c.mapper_for_b())},
          {"layout", std::move(layout)},
          {"alignment", std::move(alignment)},
          {"motif", {{"tau", c.tau}}},
          {"merge", {{"strategy", std::string(to_string(c.strategy))}}},
          {"bubbles", {{"node_radius", c.bubbles.node_radius}, {"grid_cell", c.bubbles.cell()}}},
          {"membrane", {{"gap", c.membrane.gap}}},
          {"seed", c.seed}};
}

}  // namespace mapalign
