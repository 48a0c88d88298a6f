#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "mapalign/descent.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/merge.hpp"
#include "mapalign/random.hpp"

namespace mapalign {

struct MembraneParams {
  double gap = 1.0;
  double repulsion = 0.05;
  double radius_scale = 0.08;  // oval radius = radius_scale * gap * sqrt(|members|)
  std::uint64_t seed = 0;
  int max_iters = 500;

  void validate() const {
    if (!(gap > 0.0)) throw Error("invalid_params", "membrane gap must be > 0");
    if (!(repulsion > 0.0)) throw Error("invalid_params", "membrane repulsion must be > 0");
    if (!(radius_scale > 0.0)) throw Error("invalid_params", "radius scale must be > 0");
  }
};

struct MembraneLayout {
  double gap = 0.0;
  std::map<int, Vec2> supernode_positions;  // y is 0 (side a) or gap (side b)
  std::map<int, double> oval_radii;
  std::map<int, Vec2> oval_centers;  // offset outward from the layer
  std::map<int, std::map<int, Vec2>> internal_layouts;  // supernode -> constituent -> local (x, y)
};

/// Energy over supernode x-coordinates with y frozen per layer:
/// Σ_{same layer u<v} k/|x_u - x_v| + Σ_inter w (|p_i - p_j| - gap)^2.
/// Position vectors follow the ascending supernode id order of the state.
class MembraneModel {
 public:
  MembraneModel(const MergeState& state, double gap, double repulsion) : gap_(gap), k_(repulsion) {
    std::map<int, std::size_t> index;
    for (const auto& [id, n] : state.nodes) {
      index[id] = ids_.size();
      ids_.push_back(id);
      (n.side == Side::a ? layer_a_ : layer_b_).push_back(ids_.size() - 1);
    }
    for (const auto& [ab, w] : state.weights) ties_.push_back({index.at(ab.first), index.at(ab.second), w});
  }

  const std::vector<int>& ids() const { return ids_; }
  bool on_side_a(std::size_t i) const { return std::find(layer_a_.begin(), layer_a_.end(), i) != layer_a_.end(); }

  double energy(std::span<const Vec2> p) const {
    double e = 0.0;
    for (const auto* layer : {&layer_a_, &layer_b_}) {
      for (std::size_t x = 0; x < layer->size(); ++x) {
        for (std::size_t y = x + 1; y < layer->size(); ++y) {
          const double d = std::abs(p[(*layer)[x]].x - p[(*layer)[y]].x);
          if (d < 1e-12) return std::numeric_limits<double>::infinity();
          e += k_ / d;
        }
      }
    }
    for (const auto& t : ties_) {
      const double r = distance(p[t.i], p[t.j]) - gap_;
      e += t.w * r * r;
    }
    return e;
  }

  void gradient(std::span<const Vec2> p, std::vector<Vec2>& g) const {
    g.assign(p.size(), Vec2{});
    for (const auto* layer : {&layer_a_, &layer_b_}) {
      for (std::size_t x = 0; x < layer->size(); ++x) {
        for (std::size_t y = x + 1; y < layer->size(); ++y) {
          const std::size_t u = (*layer)[x];
          const std::size_t v = (*layer)[y];
          const double dx = p[u].x - p[v].x;
          if (dx == 0.0) continue;
          const double f = -k_ * (dx > 0.0 ? 1.0 : -1.0) / (dx * dx);
          g[u].x += f;
          g[v].x -= f;
        }
      }
    }
    for (const auto& t : ties_) {
      const double dx = p[t.i].x - p[t.j].x;
      const double len = distance(p[t.i], p[t.j]);
      if (len == 0.0) continue;
      const double f = 2.0 * t.w * (len - gap_) * dx / len;
      g[t.i].x += f;
      g[t.j].x -= f;
    }
  }

 private:
  struct Tie {
    std::size_t i;
    std::size_t j;
    double w;
  };
  double gap_;
  double k_;
  std::vector<int> ids_;
  std::vector<std::size_t> layer_a_;
  std::vector<std::size_t> layer_b_;
  std::vector<Tie> ties_;
};

/// Force-directed layout of a supernode's constituents over its internal
/// edges, centred on the origin and scaled into a circle of `radius`.
inline std::map<int, Vec2> internal_layout(const Supernode& node, double radius, std::uint64_t seed) {
  std::map<int, Vec2> out;
  if (node.constituents.size() == 1) {
    out[node.constituents.front()] = {0.0, 0.0};
    return out;
  }
  std::map<int, std::size_t> local;
  for (int c : node.constituents) local.emplace(c, local.size());
  ForceModel model(1.0, 0.1, 0.0);
  const auto group = model.add_group(0, local.size());
  for (const auto& [u, v] : node.internal_edges) model.add_spring(local.at(u), local.at(v), group);

  std::vector<Vec2> pos = initial_positions(local.size(), seed);
  DescentParams dp;
  dp.max_iters = 300;
  monotone_descent(
      pos, [&](const std::vector<Vec2>& p) { return model.energy(p); },
      [&](const std::vector<Vec2>& p, std::vector<Vec2>& g) { model.gradient(p, g); }, dp);

  Vec2 centroid;
  for (const auto& p : pos) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(pos.size()));
  double reach = 0.0;
  for (auto& p : pos) {
    p -= centroid;
    reach = std::max(reach, p.norm());
  }
  const double scale = reach > 0.0 ? 0.9 * radius / reach : 0.0;
  for (const auto& [id, i] : local) out[id] = pos[i] * scale;
  return out;
}

/// Two-layer layout of a merge state. `anchor_x` (supernode id -> x) seeds
/// the horizontal positions, e.g. from the constituents' global layout.
inline MembraneLayout membrane_layout(const MergeState& state, const MembraneParams& params,
                                      const std::map<int, double>& anchor_x = {}) {
  params.validate();
  MembraneModel model(state, params.gap, params.repulsion);
  Rng rng(params.seed);
  std::vector<Vec2> pos;
  const double spread = params.gap * std::max<double>(1.0, static_cast<double>(state.nodes.size()) / 2.0);
  std::map<int, double> x_of;
  for (std::size_t i = 0; i < model.ids().size(); ++i) {
    const int id = model.ids()[i];
    const double draw = rng.uniform(0.0, spread);
    auto it = anchor_x.find(id);
    const double x = it != anchor_x.end() ? it->second : draw;
    pos.push_back({x, model.on_side_a(i) ? 0.0 : params.gap});
    x_of[id] = x;
  }
  // Unanchored side-b supernodes start at the weighted mean x of their
  // side-a neighbours, so inter-edges begin vertical and uncrossed.
  std::map<int, std::pair<double, double>> bary;  // b id -> (sum w x, sum w)
  for (const auto& [ab, w] : state.weights) {
    auto& [sx, sw] = bary[ab.second];
    sx += w * x_of.at(ab.first);
    sw += w;
  }
  for (std::size_t i = 0; i < model.ids().size(); ++i) {
    const int id = model.ids()[i];
    if (model.on_side_a(i) || anchor_x.count(id)) continue;
    auto it = bary.find(id);
    if (it != bary.end() && it->second.second > 0.0) pos[i].x = it->second.first / it->second.second;
  }
  // Break exact ties within a layer.
  Rng jitter(derive_seed(params.seed, 7));
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (pos[i].y == pos[j].y && std::abs(pos[i].x - pos[j].x) < 1e-9) pos[i].x += jitter.uniform(1e-6, 2e-6) * params.gap;
    }
  }

  DescentParams dp;
  dp.initial_step = 0.1 * params.gap;
  dp.tolerance = 1e-6 * params.gap;
  dp.max_iters = params.max_iters;
  monotone_descent(
      pos, [&](const std::vector<Vec2>& p) { return model.energy(p); },
      [&](const std::vector<Vec2>& p, std::vector<Vec2>& g) { model.gradient(p, g); }, dp);

  MembraneLayout out;
  out.gap = params.gap;
  for (std::size_t i = 0; i < model.ids().size(); ++i) {
    const int id = model.ids()[i];
    const auto& node = state.nodes.at(id);
    const bool a = node.side == Side::a;
    // y is assigned, never integrated, so the layer constraint stays exact.
    out.supernode_positions[id] = {pos[i].x, a ? 0.0 : params.gap};
    const double r = params.radius_scale * params.gap * std::sqrt(static_cast<double>(node.members.size()));
    out.oval_radii[id] = r;
    out.oval_centers[id] = {pos[i].x, a ? -r : params.gap + r};
    out.internal_layouts[id] = internal_layout(node, r, derive_seed(params.seed, static_cast<std::uint64_t>(id) + 100));
  }
  return out;
}

/// Mean global-layout x of each supernode's constituents.
inline std::map<int, double> anchor_from_layout(const MergeState& state, const LayoutResult& layout, std::size_t size_a) {
  std::map<int, double> out;
  for (const auto& [id, n] : state.nodes) {
    double sum = 0.0;
    for (int c : n.constituents) {
      const std::size_t idx = n.side == Side::a ? static_cast<std::size_t>(c) : size_a + static_cast<std::size_t>(c);
      sum += layout.positions[idx].x - (n.side == Side::a ? layout.offset_a.x : layout.offset_b.x);
    }
    out[id] = sum / static_cast<double>(n.constituents.size());
  }
  return out;
}

}  // namespace mapalign
