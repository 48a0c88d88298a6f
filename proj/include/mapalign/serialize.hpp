#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapalign/align_local.hpp"
#include "mapalign/bubbles.hpp"
#include "mapalign/ingest.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/mapper.hpp"
#include "mapalign/membrane.hpp"
#include "mapalign/merge.hpp"
#include "mapalign/motif.hpp"

// JSON views of every pipeline structure. Keys keep insertion order so the
// same inputs always dump to the same bytes.

namespace mapalign {

using Json = nlohmann::ordered_json;

namespace detail {

inline const std::string& item_name(const MapperGraph& g, ItemIndex i) { return (*g.universe)[i]; }

inline Json item_names(const MapperGraph& g, const ItemSet& s) {
  Json out = Json::array();
  for (ItemIndex i : s) out.push_back(item_name(g, i));
  return out;
}

}  // namespace detail

inline Json to_json(const Vec2& p) { return Json::array({p.x, p.y}); }

inline Json to_json(const Polygon& poly) {
  Json out = Json::array();
  for (const auto& p : poly) out.push_back(to_json(p));
  return out;
}

inline Json to_json(const MapperParams& p) {
  Json j;
  j["filter"] = p.filter.describe();
  j["num_intervals"] = p.num_intervals;
  j["overlap"] = p.overlap;
  j["dbscan_min_pts"] = p.dbscan_min_pts;
  if (p.dbscan_eps) {
    j["dbscan_eps"] = *p.dbscan_eps;
  } else {
    j["dbscan_eps"] = "auto";
  }
  return j;
}

/// Mapper graph with item ids. With `set`, nodes also carry their label
/// counts and per-attribute means for node colouring.
inline Json to_json(const MapperGraph& g, const RepresentationSet* set = nullptr) {
  Json j;
  j["params"] = to_json(g.params);
  j["eps_resolved"] = g.eps;
  Json cover = Json::array();
  for (const auto& iv : g.cover) cover.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"size", iv.rows.size()}});
  j["cover"] = std::move(cover);
  Json nodes = Json::array();
  for (const auto& n : g.nodes) {
    Json node;
    node["id"] = n.id;
    node["interval"] = n.interval_index;
    node["range"] = {n.lo, n.hi};
    node["size"] = n.members.size();
    node["members"] = detail::item_names(g, n.members);
    if (set) {
      std::map<std::string, int> counts;
      for (ItemIndex m : n.members) {
        auto it = set->labels.find(detail::item_name(g, m));
        if (it != set->labels.end()) ++counts[it->second];
      }
      Json lc = Json::object();
      for (const auto& [label, c] : counts) lc[label] = c;
      node["label_counts"] = std::move(lc);
      Json means = Json::object();
      for (const auto& [attr, values] : set->numeric_attrs) {
        double sum = 0.0;
        int count = 0;
        for (ItemIndex m : n.members) {
          const double v = values[m];
          if (std::isfinite(v)) {
            sum += v;
            ++count;
          }
        }
        means[attr] = count ? Json(sum / count) : Json(nullptr);
      }
      node["attr_means"] = std::move(means);
    }
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : g.edges) edges.push_back({e.u, e.v, e.shared});
  j["edges"] = std::move(edges);
  j["uncovered"] = detail::item_names(g, g.uncovered);
  j["cycle_rank"] = cycle_rank(g.size(), g.edges);
  return j;
}

inline Json to_json(const JointGraph& joint) {
  Json edges = Json::array();
  for (const auto& e : joint.inter_edges) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"w", e.weight}, {"shared", detail::item_names(joint.graph_a, e.shared)}});
  }
  return {{"size_a", joint.size_a()}, {"size_b", joint.size_b()}, {"inter_edges", std::move(edges)}};
}

inline Json to_json(const LayoutResult& r, std::size_t size_a) {
  Json j;
  j["lambda"] = r.lambda;
  j["seed"] = r.seed;
  j["iterations"] = r.iterations;
  j["final_energy"] = r.final_energy;
  j["offsets"] = {{"a", to_json(r.offset_a)}, {"b", to_json(r.offset_b)}};
  Json a = Json::array();
  Json b = Json::array();
  for (std::size_t i = 0; i < r.positions.size(); ++i) (i < size_a ? a : b).push_back(to_json(r.positions[i]));
  j["positions"] = {{"a", std::move(a)}, {"b", std::move(b)}};
  j["energy_trace"] = r.energy_trace;
  return j;
}

inline Json to_json(const MotifLabel& m) {
  Json metas = Json::array();
  for (const auto& mc : m.meta_components) {
    metas.push_back({{"components_a", mc.components_a},
                     {"components_b", mc.components_b},
                     {"items", mc.items},
                     {"kind", std::string(to_string(mc.kind))}});
  }
  return {{"kind", std::string(to_string(m.kind))}, {"meta_components", std::move(metas)}};
}

inline Json to_json(const AlignmentPair& p) {
  Json j;
  j["id"] = p.id;
  j["nodes_a"] = p.nodes_a;
  j["nodes_b"] = p.nodes_b;
  j["items_a"] = p.items_a.size();
  j["items_b"] = p.items_b.size();
  j["content_jaccard"] = p.content_jaccard;
  j["coherence"] = p.coherence;
  j["motif"] = p.motif ? to_json(*p.motif) : Json(nullptr);
  return j;
}

inline Json to_json(const AffinityWeights& w) {
  return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"scale_inter_by_jaccard", w.scale_inter_by_jaccard}};
}

inline Json to_json(const AlignmentResult& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) pairs.push_back(to_json(p));
  return {{"seed", r.seed}, {"k", r.k}, {"weights", to_json(r.weights)}, {"eigenvalues", r.eigenvalues}, {"pairs", std::move(pairs)}};
}

/// One entry per side; an empty side appears with "absent": true.
inline Json to_json(const BubblePair& bp) {
  Json out = Json::array();
  for (const auto* g : {&bp.a, &bp.b}) {
    const Side side = g == &bp.a ? Side::a : Side::b;
    Json e;
    e["pair_id"] = bp.pair_id;
    e["side"] = std::string(to_string(side));
    if (*g) {
      e["absent"] = false;
      e["polygon"] = to_json((*g)->polygon);
      e["content_jaccard"] = (*g)->content_jaccard;
      e["coherence"] = (*g)->coherence;
      e["detoured"] = (*g)->detoured;
    } else {
      e["absent"] = true;
      e["polygon"] = Json::array();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline Json to_json(const std::vector<BubblePair>& bubbles) {
  Json out = Json::array();
  for (const auto& bp : bubbles) {
    for (auto& e : to_json(bp)) out.push_back(std::move(e));
  }
  return out;
}

inline Json to_json(const MergeState& s, const JointGraph& joint) {
  Json nodes = Json::array();
  for (const auto& [id, n] : s.nodes) {
    Json edges = Json::array();
    for (const auto& [u, v] : n.internal_edges) edges.push_back({u, v});
    const auto& g = n.side == Side::a ? joint.graph_a : joint.graph_b;
    nodes.push_back({{"id", id},
                     {"side", std::string(to_string(n.side))},
                     {"constituents", n.constituents},
                     {"internal_edges", std::move(edges)},
                     {"members", detail::item_names(g, n.members)}});
  }
  Json inter = Json::array();
  for (const auto& [ab, w] : s.weights) inter.push_back({{"a", ab.first}, {"b", ab.second}, {"w", w}});
  return {{"supernodes", std::move(nodes)},
          {"inter_edges", std::move(inter)},
          {"H_conditional", total_entropy(s.weights)},
          {"H_raw", raw_entropy(s.weights)}};
}

inline Json to_json(const MergeSequence& seq) {
  Json steps = Json::array();
  for (const auto& st : seq.steps) {
    steps.push_back({{"side", std::string(to_string(st.side))},
                     {"merged", {st.first, st.second}},
                     {"new_id", st.new_id},
                     {"H_after", st.entropy_after}});
  }
  return {{"strategy", std::string(to_string(seq.strategy))},
          {"initial_H", seq.initial_entropy},
          {"steps", std::move(steps)},
          {"final_H", seq.final_entropy}};
}

inline Json to_json(const MembraneLayout& m) {
  Json nodes = Json::array();
  for (const auto& [id, p] : m.supernode_positions) {
    Json internal = Json::array();
    for (const auto& [c, q] : m.internal_layouts.at(id)) internal.push_back({{"node", c}, {"pos", to_json(q)}});
    nodes.push_back({{"id", id},
                     {"pos", to_json(p)},
                     {"oval_center", to_json(m.oval_centers.at(id))},
                     {"oval_radius", m.oval_radii.at(id)},
                     {"internal", std::move(internal)}});
  }
  return {{"gap", m.gap}, {"supernodes", std::move(nodes)}};
}

inline Json motif_histogram(const std::vector<AlignmentPair>& pairs) {
  Json h;
  for (MotifKind k : kAllMotifs) h[std::string(to_string(k))] = 0;
  for (const auto& p : pairs) {
    if (p.motif) h[std::string(to_string(p.motif->kind))] = h[std::string(to_string(p.motif->kind))].get<int>() + 1;
  }
  return h;
}

}  // namespace mapalign
