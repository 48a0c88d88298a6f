#pragma once

#include <map>
#include <vector>

#include "mapalign/error.hpp"
#include "mapalign/item_set.hpp"
#include "mapalign/mapper.hpp"

namespace mapalign {

struct InterEdge {
  int a = 0;  // node id in graph_a
  int b = 0;  // node id in graph_b
  double weight = 0.0;  // Jaccard of the two member sets, in (0, 1]
  ItemSet shared;
};

/// Both mapper graphs plus the inter-edges linking nodes that share items.
struct JointGraph {
  MapperGraph graph_a;
  MapperGraph graph_b;
  std::vector<InterEdge> inter_edges;  // sorted by (a, b)

  std::size_t size_a() const { return graph_a.size(); }
  std::size_t size_b() const { return graph_b.size(); }
  std::size_t size() const { return size_a() + size_b(); }
};

/// Inter-edges between every pair of nodes whose member sets intersect.
inline std::vector<InterEdge> inter_edges(const MapperGraph& a, const MapperGraph& b) {
  std::size_t universe = 0;
  for (const auto& n : a.nodes) {
    if (!n.members.empty()) universe = std::max<std::size_t>(universe, n.members.back() + 1U);
  }
  for (const auto& n : b.nodes) {
    if (!n.members.empty()) universe = std::max<std::size_t>(universe, n.members.back() + 1U);
  }
  std::vector<std::vector<int>> item_to_b(universe);
  for (const auto& node : b.nodes) {
    for (ItemIndex m : node.members) item_to_b[m].push_back(node.id);
  }
  std::vector<InterEdge> out;
  for (const auto& na : a.nodes) {
    std::map<int, ItemSet> hits;
    for (ItemIndex m : na.members) {
      for (int nb : item_to_b[m]) hits[nb].push_back(m);
    }
    for (auto& [nb, shared] : hits) {
      const auto& mb = b.nodes[static_cast<std::size_t>(nb)].members;
      const double uni = static_cast<double>(na.members.size() + mb.size() - shared.size());
      out.push_back({na.id, nb, static_cast<double>(shared.size()) / uni, std::move(shared)});
    }
  }
  return out;
}

/// Throws when the graphs were not built over the same item universe.
inline JointGraph build_joint(MapperGraph a, MapperGraph b) {
  const bool same = a.universe && b.universe && (a.universe == b.universe || *a.universe == *b.universe);
  if (!same) {
    throw Error("universe_mismatch", "mapper graphs were built over different item universes");
  }
  JointGraph joint{std::move(a), std::move(b), {}};
  joint.inter_edges = inter_edges(joint.graph_a, joint.graph_b);
  return joint;
}

}  // namespace mapalign
