#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "mapalign/demo.hpp"
#include "mapalign/service.hpp"

namespace fs = std::filesystem;
using namespace mapalign;

namespace {

/// Scratch directory holding small manifests: `a`, `b` (perturbed copy of a),
/// `same` (identical to a), and `other` (disjoint ids).
fs::path workspace() {
  static const fs::path dir = [] {
    const fs::path p = fs::path(MAPALIGN_SCRATCH_DIR) / "service";
    fs::remove_all(p);
    DemoOptions opt;
    opt.per_topic = 40;
    opt.dim = 4;
    auto [a, b] = make_demo_sets(opt);
    save_representation_set(a, p, "a");
    save_representation_set(b, p, "b");
    save_representation_set(a, p, "same");
    RepresentationSet other = a;
    for (auto& id : other.items) id = "x_" + id;
    other.labels.clear();
    other.meta.clear();
    other.validate();
    save_representation_set(other, p, "other");
    return p;
  }();
  return dir;
}

ApiOptions options(const std::string& b = "b.json") {
  ApiOptions opt;
  opt.base_dir = workspace();
  opt.defaults = {{"inputs", {{"a", "a.json"}, {"b", b}}}, {"seed", 3}};
  return opt;
}

ApiResponse get(Api& api, const std::string& path, std::map<std::string, std::string> query = {}) {
  return api.handle("GET", path, query, "");
}

ApiResponse send(Api& api, const std::string& method, const std::string& path, const Json& body) {
  return api.handle(method, path, {}, body.dump());
}

/// Creates s0001 and fails the test when creation does not succeed.
std::string create(Api& api, const Json& body = Json::object()) {
  const auto r = send(api, "POST", "/sessions", body);
  EXPECT_EQ(r.status, 201) << r.body.dump();
  return "/sessions/" + r.body.value("id", std::string("?"));
}

Json without_bubbles(Json alignments) {
  for (auto& p : alignments["pairs"]) p.erase("bubbles");
  alignments.erase("lambda");
  return alignments;
}

}  // namespace

TEST(Service, CreateEchoesResolvedParameters) {
  Api api(options());
  const auto r = send(api, "POST", "/sessions", Json::object());
  ASSERT_EQ(r.status, 201) << r.body.dump();
  EXPECT_EQ(r.body["id"], "s0001");
  const auto& m = r.body["params"]["mapper_a"];
  EXPECT_EQ(m["num_intervals"], 50);
  EXPECT_EQ(m["overlap"], 0.5);
  EXPECT_EQ(m["dbscan_min_pts"], 3);
  EXPECT_EQ(m["dbscan_eps"], "auto");
  EXPECT_GT(m["eps_resolved"].get<double>(), 0.0);
  EXPECT_EQ(r.body["items"], 120);
  EXPECT_EQ(r.body["seed"], 3);
  EXPECT_EQ(get(api, "/sessions").body["sessions"], Json::array({"s0001"}));
  EXPECT_EQ(get(api, "/sessions/s0001").body, r.body);
}

TEST(Service, DisjointUniversesAreRejected) {
  Api api(options("other.json"));
  const auto r = send(api, "POST", "/sessions", Json::object());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["code"], "insufficient_overlap");
  EXPECT_EQ(get(api, "/sessions").body["sessions"], Json::array());
}

TEST(Service, CreationErrors) {
  Api api(options());
  EXPECT_EQ(api.handle("POST", "/sessions", {}, "{oops").status, 400);
  auto r = send(api, "POST", "/sessions", {{"mapper", {{"num_intervals", 0}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["code"], "invalid_params");
  r = send(api, "POST", "/sessions", {{"inputs", {{"b", "missing.json"}}}});
  EXPECT_EQ(r.body["code"], "missing_file");
  EXPECT_EQ(r.status, 422);
}

TEST(Service, IdenticalSetsGiveUnitSelfMatches) {
  Api api(options("same.json"));
  const auto s = create(api);
  const auto m = get(api, s + "/mappers").body;
  ASSERT_EQ(m["a"]["nodes"].size(), m["b"]["nodes"].size());
  const auto& edges = m["joint"]["inter_edges"];
  std::size_t self = 0;
  for (const auto& e : edges) {
    if (e["a"] == e["b"]) {
      ++self;
      EXPECT_DOUBLE_EQ(e["w"].get<double>(), 1.0);
    }
  }
  EXPECT_EQ(self, m["a"]["nodes"].size());

  // A self-edge joins two identical item sets: only the shared group is filled.
  for (std::size_t i = 0; i < m["a"]["nodes"].size(); ++i) {
    const auto items = get(api, s + "/items", {{"selector", "edge:" + std::to_string(i) + ":" + std::to_string(i)}}).body;
    EXPECT_EQ(items["shared"].size(), m["a"]["nodes"][i]["size"].get<std::size_t>());
    EXPECT_TRUE(items["only_a"].empty());
    EXPECT_TRUE(items["only_b"].empty());
  }
}

TEST(Service, LambdaChangesAreCachedAndKeepAlignments) {
  Api api(options());
  const auto s = create(api);
  const auto before = get(api, s + "/alignments").body;

  const auto half = send(api, "PUT", s + "/lambda", {{"lambda", 0.5}});
  ASSERT_EQ(half.status, 200);
  EXPECT_EQ(half.body["lambda"], 0.5);
  const auto one = send(api, "PUT", s + "/lambda", {{"lambda", 1.0}});
  ASSERT_EQ(one.status, 200);
  EXPECT_EQ(get(api, s).body["cached_lambdas"], Json::array({0.5, 1.0}));

  // Both stay addressable and a repeated PUT reuses the cached layout.
  EXPECT_EQ(get(api, s + "/layout", {{"lambda", "0.5"}}).body, half.body);
  EXPECT_EQ(send(api, "PUT", s + "/lambda", {{"lambda", 0.5}}).body, half.body);
  EXPECT_EQ(get(api, s + "/layout").body, half.body);

  EXPECT_EQ(without_bubbles(get(api, s + "/alignments").body), without_bubbles(before));
  EXPECT_EQ(get(api, s + "/layout", {{"lambda", "7"}}).status, 404);
  EXPECT_EQ(send(api, "PUT", s + "/lambda", {{"lambda", -1}}).status, 400);
  EXPECT_EQ(send(api, "PUT", s + "/lambda", {{"lam", 1}}).status, 400);
}

TEST(Service, AlignmentParamsKeepLayout) {
  Api api(options());
  const auto s = create(api);
  const auto layout = get(api, s + "/layout").body;

  auto r = send(api, "PUT", s + "/alignment-params", {{"k", 4}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["k"], 4);
  EXPECT_EQ(r.body["params"]["k"], 4);
  EXPECT_EQ(get(api, s + "/layout").body, layout);

  r = send(api, "PUT", s + "/alignment-params", {{"gamma", 0.0}, {"k", "auto"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["params"]["k"], "auto");
  const auto& hist = r.body["motif_histogram"];
  EXPECT_GT(hist["vanishing_appearance"].get<int>(), 0);
  for (const auto& kind : {"one_to_one", "fan_out", "fan_in", "crossing"}) EXPECT_EQ(hist[kind], 0) << kind;
  for (const auto& p : r.body["pairs"]) {
    EXPECT_TRUE(p["nodes_a"].empty() || p["nodes_b"].empty());
    const auto items = get(api, s + "/items", {{"selector", "pair:" + std::to_string(p["id"].get<int>())}}).body;
    EXPECT_TRUE(items["shared"].empty());
  }
  EXPECT_EQ(get(api, s + "/layout").body, layout);

  EXPECT_EQ(send(api, "PUT", s + "/alignment-params", {{"alpha", 0}, {"beta", 0}, {"gamma", 0}}).body["code"], "invalid_weights");
  EXPECT_EQ(send(api, "PUT", s + "/alignment-params", {{"colour", 1}}).status, 400);
  EXPECT_EQ(send(api, "PUT", s + "/alignment-params", {{"k", 0}}).status, 400);
  // Rejected updates leave the previous parameters in force.
  EXPECT_EQ(get(api, s + "/alignments").body["params"]["gamma"], 0.0);
}

TEST(Service, MergeStepsBracketTheSequence) {
  Api api(options());
  const auto s = create(api);
  const auto pairs = get(api, s + "/alignments").body["pairs"];
  const Json* chosen = nullptr;
  for (const auto& p : pairs) {
    if (p["nodes_a"].size() + p["nodes_b"].size() >= 3) {
      chosen = &p;
      break;
    }
  }
  ASSERT_NE(chosen, nullptr);
  const std::string path = s + "/alignments/" + std::to_string((*chosen)["id"].get<int>()) + "/merge";

  const auto full = get(api, path).body;
  const auto steps = full["sequence"]["steps"].size();
  EXPECT_EQ(full["step"], steps);
  const auto first = get(api, path, {{"step", "0"}}).body;
  EXPECT_EQ(first["step"], 0);
  EXPECT_EQ(first["state"]["supernodes"].size(), (*chosen)["nodes_a"].size() + (*chosen)["nodes_b"].size());
  EXPECT_DOUBLE_EQ(first["state"]["H_conditional"].get<double>(), full["sequence"]["initial_H"].get<double>());
  const auto last = get(api, path, {{"step", std::to_string(steps)}}).body;
  EXPECT_EQ(last, full);
  EXPECT_EQ(last["state"]["supernodes"].size(), first["state"]["supernodes"].size() - steps);

  EXPECT_EQ(get(api, path, {{"step", std::to_string(steps + 1)}}).body["code"], "step_out_of_range");
  EXPECT_EQ(get(api, path, {{"step", "-1"}}).status, 400);
  EXPECT_EQ(get(api, path, {{"strategy", "raw"}}).body["sequence"]["strategy"], "raw");
  EXPECT_EQ(get(api, path, {{"strategy", "mean"}}).status, 400);
  EXPECT_EQ(get(api, s + "/alignments/999/merge").status, 404);
  EXPECT_EQ(get(api, s + "/alignments/x/merge").status, 404);
}

TEST(Service, ItemSelectors) {
  Api api(options());
  const auto s = create(api);
  const auto joint = get(api, s + "/mappers").body["joint"];
  ASSERT_FALSE(joint["inter_edges"].empty());
  const auto& e = joint["inter_edges"][0];
  const std::string sel = "edge:" + std::to_string(e["a"].get<int>()) + ":" + std::to_string(e["b"].get<int>());
  const auto items = get(api, s + "/items", {{"selector", sel}}).body;
  Json ids = Json::array();
  for (const auto& row : items["shared"]) ids.push_back(row["id"]);
  EXPECT_EQ(ids, e["shared"]);
  EXPECT_EQ(items["selector"], sel);
  ASSERT_FALSE(items["shared"].empty());
  const auto& row = items["shared"][0];
  EXPECT_TRUE(row["label_a"].is_string());
  EXPECT_TRUE(row["meta"].is_string());

  // shared plus only_b partitions the b node's members.
  const int b = e["b"].get<int>();
  const auto node = get(api, s + "/items", {{"selector", "node:b:" + std::to_string(b)}}).body;
  EXPECT_FALSE(node["shared"].empty());
  std::set<std::string> mine;
  for (const auto& key : {"shared", "only_b"}) {
    for (const auto& row : node[key]) EXPECT_TRUE(mine.insert(row["id"].get<std::string>()).second);
  }
  std::set<std::string> members;
  const auto mappers = get(api, s + "/mappers").body;
  for (const auto& id : mappers["b"]["nodes"][b]["members"]) members.insert(id.get<std::string>());
  EXPECT_EQ(mine, members);

  EXPECT_EQ(get(api, s + "/items", {{"selector", "node:c:0"}}).body["code"], "invalid_selector");
  EXPECT_EQ(get(api, s + "/items", {{"selector", "node:a:99999"}}).body["code"], "unknown_selector");
  EXPECT_EQ(get(api, s + "/items", {{"selector", "edge:0:99999"}}).status, 404);
  EXPECT_EQ(get(api, s + "/items", {{"selector", "pair:-2"}}).status, 400);
  EXPECT_EQ(get(api, s + "/items").status, 400);
}

TEST(Service, SummarizeFallsBackToExtractive) {
  Api api(options());
  const auto s = create(api);
  auto r = send(api, "POST", s + "/summarize", {{"selector", "pair:0"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["source"], "extractive");
  const auto text = r.body["summary"].get<std::string>();
  EXPECT_FALSE(text.empty());
  EXPECT_LE(std::count(text.begin(), text.end(), ','), 4);

  r = send(api, "POST", s + "/summarize", {{"items", Json::array()}});
  EXPECT_EQ(r.body["summary"], "");
  EXPECT_EQ(r.body["source"], "empty");
  EXPECT_EQ(r.body["items"], 0);

  r = send(api, "POST", s + "/summarize", {{"items", {"t0_000", "t0_001"}}});
  EXPECT_EQ(r.body["items"], 2);
  EXPECT_EQ(send(api, "POST", s + "/summarize", {{"items", {"nope"}}}).status, 404);
  EXPECT_EQ(send(api, "POST", s + "/summarize", Json::object()).status, 400);
  EXPECT_EQ(send(api, "POST", s + "/summarize", {{"items", "t0_000"}}).status, 400);
}

TEST(Service, ProjectionCoversEveryItem) {
  Api api(options());
  const auto s = create(api);
  const auto p = get(api, s + "/projection").body;
  EXPECT_EQ(p["method"], "pca");
  EXPECT_EQ(p["a"].size(), 120U);
  EXPECT_EQ(p["b"].size(), 120U);
  EXPECT_TRUE(p["a"][0].contains("label"));
}

TEST(Service, GetsAreByteIdenticalOnRepeat) {
  Api api(options());
  const auto s = create(api);
  const std::vector<std::pair<std::string, std::map<std::string, std::string>>> gets = {
      {s, {}},
      {s + "/mappers", {}},
      {s + "/layout", {}},
      {s + "/alignments", {}},
      {s + "/alignments/0/merge", {}},
      {s + "/alignments/0/merge", {{"step", "0"}}},
      {s + "/items", {{"selector", "pair:0"}}},
      {s + "/projection", {}},
  };
  for (const auto& [path, q] : gets) {
    const auto r1 = get(api, path, q);
    const auto r2 = get(api, path, q);
    EXPECT_EQ(r1.status, 200) << path;
    EXPECT_EQ(r1.body.dump(), r2.body.dump()) << path;
  }
}

TEST(Service, RoutingErrors) {
  Api api(options());
  EXPECT_EQ(get(api, "/health").body["status"], "ok");
  EXPECT_EQ(get(api, "/sessions/s0042").body["code"], "unknown_session");
  EXPECT_EQ(get(api, "/sessions/s0042").status, 404);
  EXPECT_EQ(get(api, "/elsewhere").status, 404);
  EXPECT_EQ(api.handle("DELETE", "/health", {}, "").status, 405);
  const auto s = create(api);
  EXPECT_EQ(get(api, s + "/nothing").status, 404);
  EXPECT_EQ(api.handle("POST", s + "/mappers", {}, "").status, 405);
  EXPECT_EQ(api.handle("PUT", s + "/lambda", {}, "not json").body["code"], "invalid_request");
}

TEST(Service, PersistedSessionsRestore) {
  const fs::path store = fs::path(MAPALIGN_SCRATCH_DIR) / "service_store";
  fs::remove_all(store);
  auto opt = options();
  opt.persist_dir = store;

  Json summary;
  Json alignments;
  Json layout;
  {
    Api api(opt);
    const auto s = create(api);
    send(api, "PUT", s + "/lambda", {{"lambda", 0.25}});
    send(api, "PUT", s + "/alignment-params", {{"k", 5}, {"beta", 2.0}});
    summary = get(api, s).body;
    alignments = get(api, s + "/alignments").body;
    layout = get(api, s + "/layout").body;
  }
  ASSERT_TRUE(fs::exists(store / "s0001.json"));

  Api restored(opt);
  EXPECT_EQ(restored.restore(), 1U);
  EXPECT_EQ(get(restored, "/sessions/s0001").body, summary);
  EXPECT_EQ(get(restored, "/sessions/s0001/alignments").body, alignments);
  EXPECT_EQ(get(restored, "/sessions/s0001/layout").body, layout);
  EXPECT_EQ(send(restored, "POST", "/sessions", Json::object()).body["id"], "s0002");

  Api empty(options());
  EXPECT_EQ(empty.restore(), 0U);
}
