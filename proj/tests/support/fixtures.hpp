#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mapalign/mapalign.hpp"

namespace fixtures {

using namespace mapalign;

/// Item universe "i0".."i{n-1}".
inline std::shared_ptr<const std::vector<std::string>> universe(std::size_t n) {
  auto u = std::make_shared<std::vector<std::string>>();
  for (std::size_t i = 0; i < n; ++i) u->push_back("i" + std::to_string(i));
  return u;
}

/// Mapper graph given explicitly by node member sets and intra-edges.
inline MapperGraph graph(std::vector<ItemSet> members, const std::vector<std::pair<int, int>>& edges,
                         std::shared_ptr<const std::vector<std::string>> items) {
  MapperGraph g;
  g.universe = std::move(items);
  for (std::size_t i = 0; i < members.size(); ++i) {
    MapperNode n;
    n.id = static_cast<int>(i);
    n.members = std::move(members[i]);
    normalize(n.members);
    g.nodes.push_back(std::move(n));
  }
  for (auto [u, v] : edges) {
    if (u > v) std::swap(u, v);
    const auto shared = intersection_size(g.nodes[static_cast<std::size_t>(u)].members, g.nodes[static_cast<std::size_t>(v)].members);
    g.edges.push_back({u, v, shared});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const MapperEdge& x, const MapperEdge& y) { return std::pair{x.u, x.v} < std::pair{y.u, y.v}; });
  return g;
}

/// Builder that hands out fresh item ids, so overlaps are exactly the ones declared.
struct JointBuilder {
  std::vector<ItemSet> a;
  std::vector<ItemSet> b;
  std::vector<std::pair<int, int>> edges_a;
  std::vector<std::pair<int, int>> edges_b;
  ItemIndex next = 0;

  JointBuilder(std::size_t na, std::size_t nb) : a(na), b(nb) {}

  /// `count` fresh items placed in every listed node.
  void share(const std::vector<int>& on_a, const std::vector<int>& on_b, int count = 1) {
    for (int c = 0; c < count; ++c) {
      const ItemIndex item = next++;
      for (int v : on_a) a[static_cast<std::size_t>(v)].push_back(item);
      for (int v : on_b) b[static_cast<std::size_t>(v)].push_back(item);
    }
  }
  void private_items(int per_node = 1) {
    for (std::size_t v = 0; v < a.size(); ++v) share({static_cast<int>(v)}, {}, per_node);
    for (std::size_t v = 0; v < b.size(); ++v) share({}, {static_cast<int>(v)}, per_node);
  }
  JointGraph build() const {
    auto u = universe(std::max<ItemIndex>(next, 1));
    return build_joint(graph(a, edges_a, u), graph(b, edges_b, u));
  }
};

inline AlignmentPair whole_pair(const JointGraph& joint) {
  AlignmentPair p;
  for (std::size_t v = 0; v < joint.size_a(); ++v) p.nodes_a.push_back(static_cast<int>(v));
  for (std::size_t v = 0; v < joint.size_b(); ++v) p.nodes_b.push_back(static_cast<int>(v));
  for (int v : p.nodes_a) p.items_a = set_union(p.items_a, joint.graph_a.nodes[static_cast<std::size_t>(v)].members);
  for (int v : p.nodes_b) p.items_b = set_union(p.items_b, joint.graph_b.nodes[static_cast<std::size_t>(v)].members);
  return p;
}

/// Swaps the roles of the two graphs.
inline JointGraph swapped(const JointGraph& j) { return build_joint(j.graph_b, j.graph_a); }

inline AlignmentPair swapped(const AlignmentPair& p) {
  AlignmentPair q = p;
  std::swap(q.nodes_a, q.nodes_b);
  std::swap(q.items_a, q.items_b);
  return q;
}

/// Letter "R" sampled at spacing h: a vertical stem, a bowl closing back onto
/// the stem, and a diagonal leg. Row i's height is filter value i.
struct RShape {
  RepresentationSet set;
  std::vector<double> height;
};

inline RShape r_shape(double h = 0.01) {
  std::vector<Vec2> pts;
  for (double y = 0.0; y <= 1.0 + 1e-9; y += h) pts.push_back({0.0, y});
  const double cx = 0.0;
  const double cy = 0.75;
  const double r = 0.25;
  const int arc = static_cast<int>(std::ceil(3.141592653589793 * r / h));
  for (int k = 1; k < arc; ++k) {
    const double t = 3.141592653589793 / 2.0 - 3.141592653589793 * k / arc;
    pts.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
  }
  const double leg = std::hypot(0.5, 0.5);
  const int steps = static_cast<int>(std::ceil(leg / h));
  for (int k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    pts.push_back({0.5 * t, 0.5 - 0.5 * t});
  }
  RShape out;
  out.set.name = "r";
  out.set.matrix.resize(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.set.items.push_back("p" + std::to_string(i));
    out.set.matrix(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    out.set.matrix(static_cast<Eigen::Index>(i), 1) = pts[i].y;
    out.height.push_back(pts[i].y);
  }
  out.set.validate();
  return out;
}

/// Two graphs with the same two planted communities of `per` nodes each.
/// Intra-edges appear with p_in inside a community and p_out across;
/// inter-edges (one fresh shared item each) only inside a community.
struct Planted {
  JointGraph joint;
  std::vector<int> community_a;  // per node of graph a
  std::vector<int> community_b;
};

inline Planted planted(std::uint64_t seed, int per = 10, double p_in = 0.9, double p_out = 0.05, double p_inter = 0.3) {
  Rng rng(seed);
  const int n = 2 * per;
  JointBuilder jb(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  Planted out;
  for (int v = 0; v < n; ++v) {
    out.community_a.push_back(v / per);
    out.community_b.push_back(v / per);
  }
  for (auto* edges : {&jb.edges_a, &jb.edges_b}) {
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        const double p = (u / per == v / per) ? p_in : p_out;
        if (rng.uniform() < p) edges->push_back({u, v});
      }
    }
  }
  jb.private_items(2);
  for (int u = 0; u < n; ++u) {
    bool any = false;
    for (int v = 0; v < n; ++v) {
      if (u / per != v / per) continue;
      if (rng.uniform() < p_inter) {
        jb.share({u}, {v});
        any = true;
      }
    }
    if (!any) jb.share({u}, {u});  // every node keeps at least one counterpart
  }
  out.joint = jb.build();
  return out;
}

/// Two 5-node paths with inter-edges i <-> i.
inline JointGraph matched_paths(int n = 5) {
  JointBuilder jb(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (int i = 0; i + 1 < n; ++i) {
    jb.edges_a.push_back({i, i + 1});
    jb.edges_b.push_back({i, i + 1});
  }
  jb.private_items(1);
  for (int i = 0; i < n; ++i) jb.share({i}, {i}, 2);
  return jb.build();
}

/// Side a: one path a0-a1-a2-a3-a4 whose ends link to two different side-b
/// components ("red" b0-b1 and "blue" b2-b3); a2 links to both.
inline JointGraph merge_example() {
  JointBuilder jb(5, 4);
  jb.edges_a = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  jb.edges_b = {{0, 1}, {2, 3}};
  jb.private_items(1);
  jb.share({0}, {0}, 3);
  jb.share({1}, {0, 1}, 3);
  jb.share({1}, {1}, 2);
  jb.share({2}, {1}, 2);
  jb.share({2}, {2}, 1);
  jb.share({3}, {2, 3}, 3);
  jb.share({3}, {3}, 2);
  jb.share({4}, {3}, 3);
  return jb.build();
}

}  // namespace fixtures
