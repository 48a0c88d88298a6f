#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mapalign/mapalign.hpp"

namespace scenario {

using mapalign::Json;

/// Api configured like `mapalign serve --config data/demo/demo.json`.
inline mapalign::ApiOptions demo_options(const std::filesystem::path& demo_dir) {
  mapalign::ApiOptions opt;
  opt.defaults = mapalign::read_config_document(demo_dir / "demo.json");
  opt.defaults.erase("output");
  opt.base_dir = demo_dir;
  return opt;
}

struct Call {
  std::string name;  // golden file stem
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

/// Every endpoint, in an order where later calls depend on earlier state.
inline std::vector<Call> demo_calls() {
  const std::string s = "/sessions/s0001";
  return {
      {"health", "GET", "/health", {}, ""},
      {"create_session", "POST", "/sessions", {}, "{}"},
      {"list_sessions", "GET", "/sessions", {}, ""},
      {"get_session", "GET", s, {}, ""},
      {"mappers", "GET", s + "/mappers", {}, ""},
      {"layout_primary", "GET", s + "/layout", {}, ""},
      {"layout_lambda0", "GET", s + "/layout", {{"lambda", "0"}}, ""},
      {"alignments", "GET", s + "/alignments", {}, ""},
      {"merge_pair0", "GET", s + "/alignments/0/merge", {}, ""},
      {"merge_pair0_step0", "GET", s + "/alignments/0/merge", {{"step", "0"}}, ""},
      {"merge_pair1_raw", "GET", s + "/alignments/1/merge", {{"strategy", "raw"}}, ""},
      {"items_pair", "GET", s + "/items", {{"selector", "pair:0"}}, ""},
      {"items_node", "GET", s + "/items", {{"selector", "node:a:0"}}, ""},
      {"items_edge", "GET", s + "/items", {{"selector", "edge:0:0"}}, ""},
      {"summarize_selector", "POST", s + "/summarize", {}, R"({"selector": "pair:0"})"},
      {"summarize_empty", "POST", s + "/summarize", {}, R"({"items": []})"},
      {"projection", "GET", s + "/projection", {}, ""},
      {"put_lambda", "PUT", s + "/lambda", {}, R"({"lambda": 0.5})"},
      {"layout_after_put", "GET", s + "/layout", {}, ""},
      {"put_alignment_params", "PUT", s + "/alignment-params", {}, R"({"k": 8, "gamma": 2.0})"},
      {"alignments_after_put", "GET", s + "/alignments", {}, ""},
      {"err_unknown_session", "GET", "/sessions/s9999", {}, ""},
      {"err_unknown_pair", "GET", s + "/alignments/999/merge", {}, ""},
      {"err_bad_selector", "GET", s + "/items", {{"selector", "bogus"}}, ""},
      {"err_bad_step", "GET", s + "/alignments/0/merge", {{"step", "100000"}}, ""},
      {"err_bad_lambda", "PUT", s + "/lambda", {}, R"({"lambda": -1})"},
      {"err_bad_weights", "PUT", s + "/alignment-params", {}, R"({"alpha": -1})"},
      {"err_method", "DELETE", s + "/mappers", {}, ""},
      {"err_not_found", "GET", "/nope", {}, ""},
      {"err_bad_params", "POST", "/sessions", {}, R"({"mapper": {"overlap": 1.5}})"},
  };
}

/// Stable text for a golden file: status plus pretty-printed body.
inline Json record(const mapalign::ApiResponse& r) { return Json{{"status", r.status}, {"body", r.body}}; }

inline std::optional<Json> read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  return Json::parse(in);
}

/// First location where `got` differs from `want`, or empty when they agree.
/// Numbers agree within rel * max(|a|, |b|) + abs; everything else exactly.
inline std::string first_difference(const Json& want, const Json& got, double rel = 1e-6, double abs = 1e-9,
                                    const std::string& at = "$") {
  if (want.is_number() && got.is_number()) {
    const double a = want.get<double>();
    const double b = got.get<double>();
    if (std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs) return {};
    std::ostringstream s;
    s << at << ": " << a << " vs " << b;
    return s.str();
  }
  if (want.type() != got.type()) return at + ": type " + want.type_name() + " vs " + got.type_name();
  if (want.is_object()) {
    if (want.size() != got.size()) return at + ": object size " + std::to_string(want.size()) + " vs " + std::to_string(got.size());
    auto wi = want.begin();
    auto gi = got.begin();
    for (; wi != want.end(); ++wi, ++gi) {
      if (wi.key() != gi.key()) return at + ": key " + wi.key() + " vs " + gi.key();
      if (auto d = first_difference(*wi, *gi, rel, abs, at + "." + wi.key()); !d.empty()) return d;
    }
    return {};
  }
  if (want.is_array()) {
    if (want.size() != got.size()) return at + ": array size " + std::to_string(want.size()) + " vs " + std::to_string(got.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (auto d = first_difference(want[i], got[i], rel, abs, at + "[" + std::to_string(i) + "]"); !d.empty()) return d;
    }
    return {};
  }
  return want == got ? std::string{} : at + ": " + want.dump() + " vs " + got.dump();
}

inline bool update_requested() {
  const char* v = std::getenv("UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

}  // namespace scenario
