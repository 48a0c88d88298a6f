#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mapalign/align_local.hpp"
#include "mapalign/error.hpp"
#include "mapalign/item_set.hpp"
#include "mapalign/joint_graph.hpp"

namespace mapalign {

enum class Side { a, b };

inline std::string_view to_string(Side s) { return s == Side::a ? "a" : "b"; }

enum class MergeStrategy { conditional, raw };

inline std::string_view to_string(MergeStrategy s) { return s == MergeStrategy::conditional ? "conditional" : "raw"; }

inline MergeStrategy strategy_from_string(std::string_view s) {
  if (s == "conditional") return MergeStrategy::conditional;
  if (s == "raw") return MergeStrategy::raw;
  throw Error("invalid_params", "merge strategy must be 'conditional' or 'raw'", std::string(s));
}

struct Supernode {
  int id = 0;
  Side side = Side::a;
  ItemSet members;
  std::vector<int> constituents;                   // mapper node ids, ascending
  std::vector<std::pair<int, int>> internal_edges;  // mapper node id pairs (u < v)
};

/// (a-supernode id, b-supernode id) -> Jaccard of member sets; zero entries absent.
using InterWeights = std::map<std::pair<int, int>, double>;

/// Supernodes of both sides, their intra adjacency, and inter weights.
struct MergeState {
  std::map<int, Supernode> nodes;
  std::map<int, std::set<int>> adjacency;  // same-side supernodes joined by an intra-edge
  InterWeights weights;
  int next_id = 0;

  std::vector<const Supernode*> side(Side s) const {
    std::vector<const Supernode*> out;
    for (const auto& [id, n] : nodes) {
      if (n.side == s) out.push_back(&n);
    }
    return out;
  }
};

struct MergeStep {
  Side side = Side::a;
  int first = 0;  // merged supernode ids, first < second
  int second = 0;
  int new_id = 0;
  double entropy_after = 0.0;
};

struct MergeSequence {
  MergeStrategy strategy = MergeStrategy::conditional;
  MergeState initial;
  std::vector<MergeStep> steps;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
};

/// Full recomputation of the inter weights of `state`.
inline InterWeights inter_edge_weights(const MergeState& state) {
  InterWeights w;
  for (const auto* a : state.side(Side::a)) {
    for (const auto* b : state.side(Side::b)) {
      const auto shared = intersection_size(a->members, b->members);
      if (shared == 0) continue;
      w[{a->id, b->id}] = static_cast<double>(shared) / static_cast<double>(a->members.size() + b->members.size() - shared);
    }
  }
  return w;
}

/// -Σ p log p of the normalized weights; 0 for one or no neighbour.
inline double node_entropy(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log(p);
  }
  return h;
}

/// Conditional entropy: Σ_i w_i H_i over supernodes of both sides, with
/// w_i the share of supernode i in the directed inter-weight mass.
inline double total_entropy(const InterWeights& weights) {
  if (weights.empty()) return 0.0;
  std::map<int, std::vector<double>> rows;
  double grand = 0.0;
  for (const auto& [ab, w] : weights) {
    rows[ab.first].push_back(w);
    rows[ab.second].push_back(w);
    grand += 2.0 * w;
  }
  double h = 0.0;
  for (const auto& [id, row] : rows) {
    double s = 0.0;
    for (double w : row) s += w;
    h += (s / grand) * node_entropy(row);
  }
  return h;
}

/// Entropy of the inter-edge weight distribution.
inline double raw_entropy(const InterWeights& weights) {
  std::vector<double> all;
  all.reserve(weights.size());
  for (const auto& [_, w] : weights) all.push_back(w);
  return node_entropy(all);
}

inline double entropy(const InterWeights& weights, MergeStrategy s) {
  return s == MergeStrategy::conditional ? total_entropy(weights) : raw_entropy(weights);
}

/// One supernode per node of the pair. Side a ids are 0..|a|-1 in nodes_a
/// order; side b ids continue from |a|.
inline MergeState initial_state(const AlignmentPair& pair, const JointGraph& joint) {
  MergeState state;
  auto add_side = [&](Side side, const std::vector<int>& nodes, const MapperGraph& g) {
    std::map<int, int> id_of;
    for (int v : nodes) {
      Supernode sn;
      sn.id = state.next_id++;
      sn.side = side;
      sn.members = g.nodes[static_cast<std::size_t>(v)].members;
      sn.constituents = {v};
      id_of[v] = sn.id;
      state.adjacency[sn.id];
      state.nodes.emplace(sn.id, std::move(sn));
    }
    for (const auto& e : g.edges) {
      auto iu = id_of.find(e.u);
      auto iv = id_of.find(e.v);
      if (iu == id_of.end() || iv == id_of.end()) continue;
      state.adjacency[iu->second].insert(iv->second);
      state.adjacency[iv->second].insert(iu->second);
    }
  };
  add_side(Side::a, pair.nodes_a, joint.graph_a);
  add_side(Side::b, pair.nodes_b, joint.graph_b);
  state.weights = inter_edge_weights(state);
  return state;
}

namespace detail {

/// Inter weights between `members` (on `side`) and every supernode of the other side.
inline std::vector<std::pair<int, double>> weights_against(const MergeState& state, Side side, const ItemSet& members) {
  std::vector<std::pair<int, double>> row;
  for (const auto& [id, n] : state.nodes) {
    if (n.side == side) continue;
    const auto shared = intersection_size(members, n.members);
    if (shared == 0) continue;
    row.emplace_back(id, static_cast<double>(shared) / static_cast<double>(members.size() + n.members.size() - shared));
  }
  return row;
}

inline InterWeights weights_after_merge(const MergeState& state, Side side, int u, int v, int new_id,
                                        const ItemSet& members) {
  InterWeights w;
  for (const auto& [ab, val] : state.weights) {
    const int mine = side == Side::a ? ab.first : ab.second;
    if (mine == u || mine == v) continue;
    w.emplace(ab, val);
  }
  for (const auto& [other, val] : weights_against(state, side, members)) {
    w[side == Side::a ? std::pair{new_id, other} : std::pair{other, new_id}] = val;
  }
  return w;
}

}  // namespace detail

/// Merges supernodes u and v (same side, adjacent) into `new_id`, updating
/// the inter weights incrementally.
inline void apply_merge(MergeState& state, int u, int v, int new_id, const JointGraph& joint) {
  auto iu = state.nodes.find(u);
  auto iv = state.nodes.find(v);
  if (iu == state.nodes.end() || iv == state.nodes.end()) throw Error("invalid_merge", "unknown supernode in merge");
  if (iu->second.side != iv->second.side) throw Error("invalid_merge", "cannot merge supernodes of different sides");
  const Side side = iu->second.side;
  Supernode merged;
  merged.id = new_id;
  merged.side = side;
  merged.members = set_union(iu->second.members, iv->second.members);
  std::set_union(iu->second.constituents.begin(), iu->second.constituents.end(), iv->second.constituents.begin(),
                 iv->second.constituents.end(), std::back_inserter(merged.constituents));
  merged.internal_edges = iu->second.internal_edges;
  merged.internal_edges.insert(merged.internal_edges.end(), iv->second.internal_edges.begin(), iv->second.internal_edges.end());
  const auto& g = side == Side::a ? joint.graph_a : joint.graph_b;
  const std::set<int> cu(iu->second.constituents.begin(), iu->second.constituents.end());
  const std::set<int> cv(iv->second.constituents.begin(), iv->second.constituents.end());
  for (const auto& e : g.edges) {
    if ((cu.count(e.u) && cv.count(e.v)) || (cv.count(e.u) && cu.count(e.v))) merged.internal_edges.emplace_back(e.u, e.v);
  }
  std::sort(merged.internal_edges.begin(), merged.internal_edges.end());

  state.weights = detail::weights_after_merge(state, side, u, v, new_id, merged.members);

  std::set<int> nbrs;
  for (int x : state.adjacency[u]) nbrs.insert(x);
  for (int x : state.adjacency[v]) nbrs.insert(x);
  nbrs.erase(u);
  nbrs.erase(v);
  for (int x : nbrs) {
    state.adjacency[x].erase(u);
    state.adjacency[x].erase(v);
    state.adjacency[x].insert(new_id);
  }
  state.adjacency.erase(u);
  state.adjacency.erase(v);
  state.adjacency[new_id] = std::move(nbrs);
  state.nodes.erase(u);
  state.nodes.erase(v);
  state.nodes.emplace(new_id, std::move(merged));
  state.next_id = std::max(state.next_id, new_id + 1);
}

/// Entropy after every admissible merge (adjacent supernodes, side a first,
/// then ascending id pairs).
struct MergeCandidate {
  Side side = Side::a;
  int first = 0;
  int second = 0;
  double entropy_after = 0.0;
};

inline std::vector<MergeCandidate> merge_candidates(const MergeState& state, MergeStrategy strategy) {
  std::vector<MergeCandidate> out;
  for (Side side : {Side::a, Side::b}) {
    for (const auto& [u, nbrs] : state.adjacency) {
      if (state.nodes.at(u).side != side) continue;
      for (int v : nbrs) {
        if (v <= u) continue;
        const ItemSet members = set_union(state.nodes.at(u).members, state.nodes.at(v).members);
        const auto w = detail::weights_after_merge(state, side, u, v, state.next_id, members);
        out.push_back({side, u, v, entropy(w, strategy)});
      }
    }
  }
  return out;
}

/// Greedy entropy-reducing aggregation: repeatedly applies the merge with the
/// largest strict decrease (> 1e-12) until none remains or `max_steps`.
inline MergeSequence greedy_merge(const AlignmentPair& pair, const JointGraph& joint, MergeStrategy strategy,
                                  std::optional<std::size_t> max_steps = std::nullopt) {
  MergeSequence seq;
  seq.strategy = strategy;
  seq.initial = initial_state(pair, joint);
  MergeState state = seq.initial;
  double current = entropy(state.weights, strategy);
  seq.initial_entropy = current;

  while (!max_steps || seq.steps.size() < *max_steps) {
    const auto candidates = merge_candidates(state, strategy);
    const MergeCandidate* best = nullptr;
    double best_drop = 1e-12;
    for (const auto& c : candidates) {
      const double drop = current - c.entropy_after;
      if (drop > best_drop) {
        best_drop = drop;
        best = &c;
      }
    }
    if (!best) break;
    const int new_id = state.next_id;
    const MergeStep step{best->side, best->first, best->second, new_id, 0.0};
    apply_merge(state, step.first, step.second, new_id, joint);
    current = entropy(state.weights, strategy);
    seq.steps.push_back(step);
    seq.steps.back().entropy_after = current;
  }
  seq.final_entropy = current;
  return seq;
}

/// State after the first `step` merges of `seq`.
inline MergeState replay(const MergeSequence& seq, std::size_t step, const JointGraph& joint) {
  if (step > seq.steps.size()) throw Error("step_out_of_range", "merge step out of range", std::to_string(step));
  MergeState state = seq.initial;
  for (std::size_t s = 0; s < step; ++s) apply_merge(state, seq.steps[s].first, seq.steps[s].second, seq.steps[s].new_id, joint);
  return state;
}

}  // namespace mapalign
