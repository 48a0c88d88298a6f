#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mapalign/config.hpp"
#include "mapalign/pipeline.hpp"
#include "mapalign/serialize.hpp"
#include "mapalign/summarizer.hpp"

#ifndef MAPALIGN_VERSION
#define MAPALIGN_VERSION "0.0.0"
#endif

namespace mapalign {

struct ApiResponse {
  int status = 200;
  Json body;
};

/// HTTP status for a structured error code.
inline int status_for(const std::string& code) {
  static const std::map<std::string, int> table = {
      {"not_found", 404},         {"unknown_session", 404},   {"unknown_pair", 404},     {"unknown_lambda", 404},
      {"unknown_selector", 404},  {"unknown_item", 404},      {"invalid_params", 400},   {"invalid_weights", 400},
      {"invalid_config", 400},    {"invalid_request", 400},   {"invalid_selector", 400}, {"step_out_of_range", 400},
      {"invalid_merge", 400},     {"method_not_allowed", 405}, {"summarizer_unavailable", 502}, {"internal", 500}};
  auto it = table.find(code);
  return it == table.end() ? 422 : it->second;
}

inline ApiResponse error_response(const Error& e) {
  return {status_for(e.code()), Json{{"code", e.code()}, {"message", e.what()}, {"detail", e.detail()}}};
}

/// Live state of one comparison. Derived fields always match the parameters
/// that produced them; `mu` serializes mutations and admits concurrent reads.
class Session {
 public:
  Session(std::string id, Json request, const std::filesystem::path& base_dir) : id_(std::move(id)), request_(std::move(request)) {
    config_ = parse_config(request_, base_dir);
    analysis_ = prepare(config_);
    try {
      projection_a_ = project_2d(analysis_.input.set_a);
      projection_b_ = project_2d(analysis_.input.set_b);
    } catch (const Error& e) {
      projection_error_ = error_response(e).body;
    }
    discovery_ = config_.discovery();
    tau_ = config_.tau;
    lambda_ = config_.primary_lambda();
    layouts_.emplace(lambda_, display_layout(analysis_.joint, config_, lambda_));
    recompute_alignments();
  }

  const std::string& id() const { return id_; }
  const Json& request() const { return request_; }
  Json history() const {
    std::shared_lock lock(mu_);
    return history_;
  }

  Json summary() const {
    std::shared_lock lock(mu_);
    Json j;
    j["id"] = id_;
    j["seed"] = config_.seed;
    j["items"] = analysis_.input.shared_items.size();
    j["sets"] = {{"a", {{"name", analysis_.input.set_a.name}, {"dim", analysis_.input.set_a.dim()}, {"nodes", analysis_.joint.size_a()}}},
                 {"b", {{"name", analysis_.input.set_b.name}, {"dim", analysis_.input.set_b.dim()}, {"nodes", analysis_.joint.size_b()}}}};
    j["inter_edges"] = analysis_.joint.inter_edges.size();
    Json params = to_json(config_);
    params["mapper_a"]["eps_resolved"] = analysis_.joint.graph_a.eps;
    params["mapper_b"]["eps_resolved"] = analysis_.joint.graph_b.eps;
    params["mapper_a"]["intervals_built"] = analysis_.joint.graph_a.cover.size();
    params["mapper_b"]["intervals_built"] = analysis_.joint.graph_b.cover.size();
    params["alignment"] = alignment_params_json();
    j["params"] = std::move(params);
    j["lambda"] = lambda_;
    Json cached = Json::array();
    for (const auto& [l, _] : layouts_) cached.push_back(l);
    j["cached_lambdas"] = std::move(cached);
    j["warnings"] = analysis_.warnings;
    return j;
  }

  Json mappers() const {
    std::shared_lock lock(mu_);
    return {{"seed", config_.seed},
            {"a", to_json(analysis_.joint.graph_a, &analysis_.input.set_a)},
            {"b", to_json(analysis_.joint.graph_b, &analysis_.input.set_b)},
            {"joint", to_json(analysis_.joint)}};
  }

  Json layout(std::optional<double> lambda) const {
    std::shared_lock lock(mu_);
    const double l = lambda.value_or(lambda_);
    auto it = layouts_.find(l);
    if (it == layouts_.end()) throw Error("unknown_lambda", "no layout computed for this lambda", std::to_string(l));
    return to_json(it->second, analysis_.joint.size_a());
  }

  /// Warm-started re-optimization from the current layout; cached per lambda.
  Json set_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw Error("invalid_params", "lambda must be >= 0", std::to_string(lambda));
    std::unique_lock lock(mu_);
    if (!layouts_.count(lambda)) {
      auto warm = layouts_.at(lambda_).raw_positions(analysis_.joint.size_a());
      layouts_.emplace(lambda, display_layout(analysis_.joint, config_, lambda, std::move(warm)));
    }
    if (lambda != lambda_) {
      lambda_ = lambda;
      bubbles_ = compute_bubbles(alignments_.pairs, analysis_.joint, layouts_.at(lambda_), config_.bubbles);
    }
    history_.push_back({{"op", "lambda"}, {"lambda", lambda}});
    return to_json(layouts_.at(lambda_), analysis_.joint.size_a());
  }

  /// Partial update of {alpha, beta, gamma, scale_inter_by_jaccard, k, k_max, seed, tau}.
  Json set_alignment_params(const Json& body) {
    detail::check_keys(body, {"alpha", "beta", "gamma", "scale_inter_by_jaccard", "k", "k_max", "seed", "tau"}, "alignment-params");
    std::unique_lock lock(mu_);
    DiscoveryOptions next = discovery_;
    double tau = tau_;
    detail::read_into(body, "alpha", next.weights.alpha, "alignment-params");
    detail::read_into(body, "beta", next.weights.beta, "alignment-params");
    detail::read_into(body, "gamma", next.weights.gamma, "alignment-params");
    detail::read_into(body, "scale_inter_by_jaccard", next.weights.scale_inter_by_jaccard, "alignment-params");
    detail::read_into(body, "k_max", next.k_max, "alignment-params");
    detail::read_into(body, "seed", next.seed, "alignment-params");
    detail::read_into(body, "tau", tau, "alignment-params");
    if (body.contains("k")) {
      if (body["k"].is_null() || (body["k"].is_string() && body["k"] == "auto")) {
        next.k.reset();
      } else {
        int k = 0;
        detail::read_into(body, "k", k, "alignment-params");
        if (k < 1) throw Error("invalid_params", "k must be >= 1");
        next.k = k;
      }
    }
    next.weights.validate();
    if (!(tau >= 0.0)) throw Error("invalid_params", "tau must be >= 0");
    if (next.k_max < 2) throw Error("invalid_params", "k_max must be >= 2");
    discovery_ = next;
    tau_ = tau;
    recompute_alignments();
    history_.push_back({{"op", "alignment-params"}, {"params", body}});
    return alignments_json();
  }

  Json alignments() const {
    std::shared_lock lock(mu_);
    return alignments_json();
  }

  Json merge(int pair_id, std::optional<MergeStrategy> strategy, std::optional<std::size_t> step) const {
    std::shared_lock lock(mu_);
    const auto& pair = find_pair(alignments_.pairs, pair_id);
    const MergeStrategy s = strategy.value_or(config_.strategy);
    MergeSequence seq;
    {
      std::lock_guard cache_lock(cache_mu_);
      auto key = std::pair{pair_id, s};
      auto it = merge_cache_.find(key);
      if (it == merge_cache_.end()) it = merge_cache_.emplace(key, greedy_merge(pair, analysis_.joint, s)).first;
      seq = it->second;
    }
    if (step && *step > seq.steps.size()) {
      throw Error("step_out_of_range", "merge step out of range",
                  std::to_string(*step) + " > " + std::to_string(seq.steps.size()));
    }
    const auto view = merge_view(seq, step, analysis_.joint, layouts_.at(lambda_), config_.membrane_params());
    Json j = to_json(view, pair_id, analysis_.joint);
    j["seed"] = config_.seed;
    return j;
  }

  Json items(const std::string& selector) const {
    std::shared_lock lock(mu_);
    const auto groups = resolve_selector(selector);
    Json j;
    j["selector"] = selector;
    j["shared"] = item_rows(groups[0]);
    j["only_a"] = item_rows(groups[1]);
    j["only_b"] = item_rows(groups[2]);
    return j;
  }

  /// Item meta texts for a list of ids or a selector's item union.
  std::vector<std::string> texts_for(const Json& body) const {
    detail::check_keys(body, {"items", "selector"}, "summarize");
    std::shared_lock lock(mu_);
    std::vector<ItemIndex> ids;
    if (auto it = body.find("selector"); it != body.end()) {
      if (!it->is_string()) throw Error("invalid_request", "selector must be a string");
      const auto g = resolve_selector(it->get<std::string>());
      ids = set_union(set_union(g[0], g[1]), g[2]);
    } else if (auto it2 = body.find("items"); it2 != body.end()) {
      if (!it2->is_array()) throw Error("invalid_request", "items must be an array of ids");
      for (const auto& v : *it2) {
        if (!v.is_string()) throw Error("invalid_request", "items must be an array of ids");
        const auto row = analysis_.input.set_a.row_of(v.get<std::string>());
        if (row < 0) throw Error("unknown_item", "unknown item id", v.get<std::string>());
        ids.push_back(static_cast<ItemIndex>(row));
      }
    } else {
      throw Error("invalid_request", "summarize needs 'items' or 'selector'");
    }
    std::vector<std::string> texts;
    for (ItemIndex i : ids) texts.push_back(meta_of(i));
    return texts;
  }

  Json projection() const {
    std::shared_lock lock(mu_);
    if (!projection_error_.is_null()) throw Error(projection_error_["code"].get<std::string>(), projection_error_["message"].get<std::string>(),
                  projection_error_["detail"].get<std::string>());
    auto side = [&](const RepresentationSet& set, const std::vector<Vec2>& pts) {
      Json points = Json::array();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        Json p = {{"id", set.items[i]}, {"x", pts[i].x}, {"y", pts[i].y}};
        if (auto it = set.labels.find(set.items[i]); it != set.labels.end()) p["label"] = it->second;
        points.push_back(std::move(p));
      }
      return points;
    };
    return {{"method", "pca"}, {"a", side(analysis_.input.set_a, projection_a_)}, {"b", side(analysis_.input.set_b, projection_b_)}};
  }

 private:
  void recompute_alignments() {
    alignments_ = compute_alignments(analysis_.joint, discovery_, tau_);
    bubbles_ = compute_bubbles(alignments_.pairs, analysis_.joint, layouts_.at(lambda_), config_.bubbles);
    std::lock_guard cache_lock(cache_mu_);
    merge_cache_.clear();
  }

  Json alignment_params_json() const {
    Json j = to_json(discovery_.weights);
    j["k"] = discovery_.k ? Json(*discovery_.k) : Json("auto");
    j["k_max"] = discovery_.k_max;
    j["seed"] = discovery_.seed;
    j["tau"] = tau_;
    return j;
  }

  Json alignments_json() const {
    Json j = to_json(alignments_);
    j["params"] = alignment_params_json();
    j["lambda"] = lambda_;
    for (std::size_t i = 0; i < alignments_.pairs.size(); ++i) j["pairs"][i]["bubbles"] = to_json(bubbles_[i]);
    j["motif_histogram"] = motif_histogram(alignments_.pairs);
    return j;
  }

  /// (shared, only_a, only_b) item index sets of a selector.
  std::array<ItemSet, 3> resolve_selector(const std::string& selector) const {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = selector.find(':', start);
      parts.push_back(selector.substr(start, colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    auto number = [&](const std::string& s) {
      int v = -1;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) throw Error("invalid_selector", "malformed selector", selector);
      return v;
    };
    const auto& ga = analysis_.joint.graph_a;
    const auto& gb = analysis_.joint.graph_b;
    auto split = [](const ItemSet& a, const ItemSet& b) {
      return std::array<ItemSet, 3>{set_intersection(a, b), set_difference(a, b), set_difference(b, a)};
    };
    if (parts.size() == 2 && parts[0] == "pair") {
      const auto& p = find_pair(alignments_.pairs, number(parts[1]));
      return split(p.items_a, p.items_b);
    }
    if (parts.size() == 3 && parts[0] == "node" && (parts[1] == "a" || parts[1] == "b")) {
      const bool side_a = parts[1] == "a";
      const int v = number(parts[2]);
      const auto& g = side_a ? ga : gb;
      if (static_cast<std::size_t>(v) >= g.size()) throw Error("unknown_selector", "no such node", selector);
      // Counterpart: every other-side node sharing an item with this node.
      ItemSet other;
      for (const auto& e : analysis_.joint.inter_edges) {
        if (side_a && e.a == v) other = set_union(other, gb.nodes[static_cast<std::size_t>(e.b)].members);
        if (!side_a && e.b == v) other = set_union(other, ga.nodes[static_cast<std::size_t>(e.a)].members);
      }
      const auto& mine = g.nodes[static_cast<std::size_t>(v)].members;
      return side_a ? split(mine, other) : split(other, mine);
    }
    if (parts.size() == 3 && parts[0] == "edge") {
      const int a = number(parts[1]);
      const int b = number(parts[2]);
      for (const auto& e : analysis_.joint.inter_edges) {
        if (e.a == a && e.b == b) return split(ga.nodes[static_cast<std::size_t>(a)].members, gb.nodes[static_cast<std::size_t>(b)].members);
      }
      throw Error("unknown_selector", "no inter-edge between these nodes", selector);
    }
    throw Error("invalid_selector", "selector must be pair:N, node:a:N, node:b:N, or edge:A:B", selector);
  }

  std::string meta_of(ItemIndex i) const {
    const auto& id = analysis_.input.shared_items[i];
    if (auto it = analysis_.input.set_a.meta.find(id); it != analysis_.input.set_a.meta.end()) return it->second;
    if (auto it = analysis_.input.set_b.meta.find(id); it != analysis_.input.set_b.meta.end()) return it->second;
    return id;
  }

  Json item_rows(const ItemSet& s) const {
    Json rows = Json::array();
    for (ItemIndex i : s) {
      const auto& id = analysis_.input.shared_items[i];
      auto label = [&](const RepresentationSet& set) {
        auto it = set.labels.find(id);
        return it == set.labels.end() ? Json(nullptr) : Json(it->second);
      };
      rows.push_back({{"id", id}, {"label_a", label(analysis_.input.set_a)}, {"label_b", label(analysis_.input.set_b)}, {"meta", meta_of(i)}});
    }
    return rows;
  }

  std::string id_;
  Json request_;
  Json history_ = Json::array();
  RunConfig config_;
  Analysis analysis_;
  std::vector<Vec2> projection_a_;
  std::vector<Vec2> projection_b_;
  Json projection_error_;
  std::map<double, LayoutResult> layouts_;
  double lambda_ = 1.0;
  DiscoveryOptions discovery_;
  double tau_ = 0.05;
  AlignmentResult alignments_;
  std::vector<BubblePair> bubbles_;
  mutable std::shared_mutex mu_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<int, MergeStrategy>, MergeSequence> merge_cache_;
};

struct ApiOptions {
  Json defaults = Json::object();  // merged under every creation request
  std::filesystem::path base_dir;  // resolves relative manifest paths
  std::optional<std::filesystem::path> persist_dir;
  std::optional<SummarizerConfig> summarizer;
};

/// Transport-independent request router over the session registry.
class Api {
 public:
  explicit Api(ApiOptions options = {}) : options_(std::move(options)) {}

  /// Rebuilds persisted sessions by replaying their creation request and history.
  std::size_t restore() {
    if (!options_.persist_dir || !std::filesystem::exists(*options_.persist_dir)) return 0;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(*options_.persist_dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::size_t restored = 0;
    for (const auto& f : files) {
      const Json doc = Json::parse(csv::read_file(f.string()));
      auto s = std::make_shared<Session>(doc.at("id").get<std::string>(), doc.at("request"), options_.base_dir);
      for (const auto& h : doc.at("history")) {
        if (h.at("op") == "lambda") s->set_lambda(h.at("lambda").get<double>());
        if (h.at("op") == "alignment-params") s->set_alignment_params(h.at("params"));
      }
      std::lock_guard lock(registry_mu_);
      const int n = std::stoi(s->id().substr(1));
      next_id_ = std::max(next_id_, n + 1);
      sessions_[s->id()] = s;
      ++restored;
    }
    return restored;
  }

  ApiResponse handle(const std::string& method, const std::string& path, const std::map<std::string, std::string>& query,
                     const std::string& body) {
    try {
      return route(method, path, query, body);
    } catch (const Error& e) {
      return error_response(e);
    } catch (const std::exception& e) {
      return error_response(Error("internal", "internal error", e.what()));
    }
  }

 private:
  static Json parse_body(const std::string& body) {
    if (body.empty()) return Json::object();
    try {
      return Json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("invalid_request", "request body is not valid JSON", e.what());
    }
  }

  static std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto slash = path.find('/', start);
      const auto part = path.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
      if (!part.empty()) out.push_back(part);
      if (slash == std::string::npos) break;
      start = slash + 1;
    }
    return out;
  }

  static double parse_double(const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error("invalid_params", std::string("malformed ") + what, s);
  }

  std::shared_ptr<Session> session(const std::string& id) const {
    std::lock_guard lock(registry_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error("unknown_session", "no session with this id", id);
    return it->second;
  }

  void persist(const Session& s) const {
    if (!options_.persist_dir) return;
    std::filesystem::create_directories(*options_.persist_dir);
    const auto path = *options_.persist_dir / (s.id() + ".json");
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << Json{{"id", s.id()}, {"request", s.request()}, {"history", s.history()}}.dump(2);
    }
    std::filesystem::rename(tmp, path);
  }

  ApiResponse route(const std::string& method, const std::string& path, const std::map<std::string, std::string>& query,
                    const std::string& body) {
    const auto seg = segments(path);
    auto q = [&](const char* key) -> std::optional<std::string> {
      auto it = query.find(key);
      return it == query.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    auto expect = [&](const char* m) {
      if (method != m) throw Error("method_not_allowed", "method not allowed", method + " " + path);
    };

    if (seg.size() == 1 && seg[0] == "health") {
      expect("GET");
      return {200, Json{{"status", "ok"}, {"version", MAPALIGN_VERSION}}};
    }
    if (seg.empty() || seg[0] != "sessions") throw Error("not_found", "no such endpoint", path);

    if (seg.size() == 1) {
      if (method == "GET") {
        std::lock_guard lock(registry_mu_);
        Json ids = Json::array();
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return {200, Json{{"sessions", std::move(ids)}}};
      }
      expect("POST");
      Json request = options_.defaults;
      request.merge_patch(parse_body(body));
      std::string id;
      {
        std::lock_guard lock(registry_mu_);
        char buf[16];
        std::snprintf(buf, sizeof buf, "s%04d", next_id_++);
        id = buf;
      }
      auto s = std::make_shared<Session>(id, std::move(request), options_.base_dir);
      {
        std::lock_guard lock(registry_mu_);
        sessions_[id] = s;
      }
      persist(*s);
      return {201, s->summary()};
    }

    auto s = session(seg[1]);
    if (seg.size() == 2) {
      expect("GET");
      return {200, s->summary()};
    }
    const std::string& what = seg[2];
    if (seg.size() == 3 && what == "mappers") {
      expect("GET");
      return {200, s->mappers()};
    }
    if (seg.size() == 3 && what == "lambda") {
      expect("PUT");
      const Json b = parse_body(body);
      if (!b.contains("lambda") || !b["lambda"].is_number()) throw Error("invalid_request", "body must be {\"lambda\": number}");
      Json out = s->set_lambda(b["lambda"].get<double>());
      persist(*s);
      return {200, std::move(out)};
    }
    if (seg.size() == 3 && what == "layout") {
      expect("GET");
      std::optional<double> lambda;
      if (auto l = q("lambda")) lambda = parse_double(*l, "lambda");
      return {200, s->layout(lambda)};
    }
    if (seg.size() == 3 && what == "alignment-params") {
      expect("PUT");
      Json out = s->set_alignment_params(parse_body(body));
      persist(*s);
      return {200, std::move(out)};
    }
    if (seg.size() == 3 && what == "alignments") {
      expect("GET");
      return {200, s->alignments()};
    }
    if (seg.size() == 5 && what == "alignments" && seg[4] == "merge") {
      expect("GET");
      int pid = -1;
      auto [ptr, ec] = std::from_chars(seg[3].data(), seg[3].data() + seg[3].size(), pid);
      if (ec != std::errc() || ptr != seg[3].data() + seg[3].size()) throw Error("unknown_pair", "no alignment pair with this id", seg[3]);
      std::optional<MergeStrategy> strategy;
      if (auto st = q("strategy")) strategy = strategy_from_string(*st);
      std::optional<std::size_t> step;
      if (auto st = q("step")) {
        std::size_t v = 0;
        auto [p2, e2] = std::from_chars(st->data(), st->data() + st->size(), v);
        if (e2 != std::errc() || p2 != st->data() + st->size()) throw Error("invalid_params", "step must be a non-negative integer", *st);
        step = v;
      }
      return {200, s->merge(pid, strategy, step)};
    }
    if (seg.size() == 3 && what == "items") {
      expect("GET");
      auto sel = q("selector");
      if (!sel) throw Error("invalid_selector", "missing selector query parameter");
      return {200, s->items(*sel)};
    }
    if (seg.size() == 3 && what == "summarize") {
      expect("POST");
      const auto texts = s->texts_for(parse_body(body));
      const auto summary = summarize(options_.summarizer, texts);
      return {200, Json{{"summary", summary.text}, {"source", summary.source}, {"items", texts.size()}}};
    }
    if (seg.size() == 3 && what == "projection") {
      expect("GET");
      return {200, s->projection()};
    }
    throw Error("not_found", "no such endpoint", path);
  }

  ApiOptions options_;
  mutable std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_id_ = 1;
};

}  // namespace mapalign
