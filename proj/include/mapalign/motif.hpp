#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "mapalign/align_local.hpp"
#include "mapalign/item_set.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/motif_types.hpp"

namespace mapalign {

/// Connected components of each side of a pair (intra-edges only) and the
/// component-level links whose item Jaccard reaches tau.
struct ComponentCorrespondence {
  struct MetaEdge {
    int comp_a = 0;
    int comp_b = 0;
    double jaccard = 0.0;
  };
  std::vector<std::vector<int>> comps_a;  // node ids, each ascending; ordered by first node
  std::vector<std::vector<int>> comps_b;
  std::vector<ItemSet> items_a;  // parallel to comps_a
  std::vector<ItemSet> items_b;
  std::vector<MetaEdge> meta_edges;
};

/// Components of the subgraph of `graph` induced by `nodes`.
inline std::vector<std::vector<int>> induced_components(const MapperGraph& graph, std::span<const int> nodes) {
  std::vector<int> local(graph.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
  std::vector<int> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (const auto& e : graph.edges) {
    const int u = local[static_cast<std::size_t>(e.u)];
    const int v = local[static_cast<std::size_t>(e.v)];
    if (u < 0 || v < 0) continue;
    const int ru = find(u);
    const int rv = find(v);
    if (ru != rv) parent[static_cast<std::size_t>(std::max(ru, rv))] = std::min(ru, rv);
  }
  std::vector<int> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<int>> comps;
  std::vector<int> comp_of_root(nodes.size(), -1);
  for (int node : sorted) {
    const int r = find(local[static_cast<std::size_t>(node)]);
    if (comp_of_root[static_cast<std::size_t>(r)] < 0) {
      comp_of_root[static_cast<std::size_t>(r)] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(comp_of_root[static_cast<std::size_t>(r)])].push_back(node);
  }
  return comps;
}

inline ComponentCorrespondence component_correspondence(const AlignmentPair& pair, const JointGraph& joint,
                                                        double tau = 0.05) {
  if (tau < 0.0) throw Error("invalid_params", "tau must be >= 0");
  ComponentCorrespondence corr;
  corr.comps_a = induced_components(joint.graph_a, pair.nodes_a);
  corr.comps_b = induced_components(joint.graph_b, pair.nodes_b);
  auto items_of = [](const MapperGraph& g, const std::vector<int>& comp) {
    ItemSet items;
    for (int v : comp) items = set_union(items, g.nodes[static_cast<std::size_t>(v)].members);
    return items;
  };
  for (const auto& c : corr.comps_a) corr.items_a.push_back(items_of(joint.graph_a, c));
  for (const auto& c : corr.comps_b) corr.items_b.push_back(items_of(joint.graph_b, c));
  for (std::size_t i = 0; i < corr.comps_a.size(); ++i) {
    for (std::size_t j = 0; j < corr.comps_b.size(); ++j) {
      const double w = jaccard(corr.items_a[i], corr.items_b[j]);
      if (w > 0.0 && w >= tau) corr.meta_edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
    }
  }
  return corr;
}

namespace detail {

inline int motif_priority(MotifKind k) {
  switch (k) {
    case MotifKind::crossing: return 4;
    case MotifKind::fan_out: return 3;
    case MotifKind::fan_in: return 2;
    case MotifKind::one_to_one: return 1;
    case MotifKind::vanishing_appearance: return 0;
  }
  return 0;
}

inline MotifKind kind_of(int a, int b) {
  if (a == 0 || b == 0) return MotifKind::vanishing_appearance;
  if (a == 1 && b == 1) return MotifKind::one_to_one;
  if (a == 1) return MotifKind::fan_out;
  if (b == 1) return MotifKind::fan_in;
  return MotifKind::crossing;
}

}  // namespace detail

/// Labels every connected meta-component by its (a, b) component counts and
/// the pair by the meta-component holding the most items. Ties go to
/// crossing > fan_out > fan_in > one_to_one > vanishing_appearance.
inline MotifLabel classify(const ComponentCorrespondence& corr) {
  const int na = static_cast<int>(corr.comps_a.size());
  const int nb = static_cast<int>(corr.comps_b.size());
  std::vector<int> parent(static_cast<std::size_t>(na + nb));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (const auto& e : corr.meta_edges) {
    const int ra = find(e.comp_a);
    const int rb = find(na + e.comp_b);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }

  MotifLabel label;
  std::vector<int> slot(parent.size(), -1);
  std::vector<ItemSet> items;
  for (int x = 0; x < na + nb; ++x) {
    const int r = find(x);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(label.meta_components.size());
      label.meta_components.emplace_back();
      items.emplace_back();
    }
    const auto s = static_cast<std::size_t>(slot[static_cast<std::size_t>(r)]);
    if (x < na) {
      ++label.meta_components[s].components_a;
      items[s] = set_union(items[s], corr.items_a[static_cast<std::size_t>(x)]);
    } else {
      ++label.meta_components[s].components_b;
      items[s] = set_union(items[s], corr.items_b[static_cast<std::size_t>(x - na)]);
    }
  }
  for (std::size_t s = 0; s < label.meta_components.size(); ++s) {
    auto& mc = label.meta_components[s];
    mc.items = items[s].size();
    mc.kind = detail::kind_of(mc.components_a, mc.components_b);
  }
  const MetaComponent* best = nullptr;
  for (const auto& mc : label.meta_components) {
    if (!best || mc.items > best->items ||
        (mc.items == best->items && detail::motif_priority(mc.kind) > detail::motif_priority(best->kind))) {
      best = &mc;
    }
  }
  label.kind = best ? best->kind : MotifKind::vanishing_appearance;
  return label;
}

/// Fills `motif` on every pair.
inline void classify_pairs(std::vector<AlignmentPair>& pairs, const JointGraph& joint, double tau = 0.05) {
  for (auto& p : pairs) p.motif = classify(component_correspondence(p, joint, tau));
}

/// Pairs whose motif is `kind`, in their original order.
inline std::vector<AlignmentPair> query_by_motif(std::span<const AlignmentPair> pairs, MotifKind kind) {
  std::vector<AlignmentPair> out;
  for (const auto& p : pairs) {
    if (p.motif && p.motif->kind == kind) out.push_back(p);
  }
  return out;
}

}  // namespace mapalign
