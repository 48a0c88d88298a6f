#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mapalign/barnes_hut.hpp"
#include "mapalign/descent.hpp"
#include "mapalign/error.hpp"
#include "mapalign/geometry.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/random.hpp"

namespace mapalign {

struct LayoutParams {
  double lambda = 1.0;
  double edge_length = 1.0;  // preferred spring length
  double repulsion = 0.1;    // k in k/d
  int max_iters = 500;
  double initial_step = 0.1;
  double decay = 0.99;
  std::uint64_t seed = 0;
  std::optional<double> convergence_tol;  // default 1e-4 * edge_length
  std::size_t barnes_hut_threshold = 2000;
  double theta = 0.9;

  double tolerance() const { return convergence_tol.value_or(1e-4 * edge_length); }

  void validate() const {
    if (!(lambda >= 0.0)) throw Error("invalid_params", "lambda must be >= 0");
    if (!(edge_length > 0.0)) throw Error("invalid_params", "edge length must be > 0");
    if (!(repulsion > 0.0)) throw Error("invalid_params", "repulsion constant must be > 0");
    descent().validate();
  }

  DescentParams descent() const { return {initial_step, decay, max_iters, tolerance(), 20}; }
};

struct LayoutEnergy {
  double total = 0.0;
  double intra_a = 0.0;
  double intra_b = 0.0;
  double align = 0.0;
};

/// Joint-indexed positions: graph_a nodes first, then graph_b nodes.
struct LayoutResult {
  std::vector<Vec2> positions;
  double final_energy = 0.0;
  std::vector<double> energy_trace;
  Vec2 offset_a;
  Vec2 offset_b;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;

  /// Positions with the side-by-side offsets removed.
  std::vector<Vec2> raw_positions(std::size_t size_a) const {
    std::vector<Vec2> out = positions;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= i < size_a ? offset_a : offset_b;
    return out;
  }
};

/// Springs, per-group repulsion, and weighted cross-group ties over one
/// position vector. Repulsion acts only between nodes of the same group.
class ForceModel {
 public:
  struct Group {
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  struct Spring {
    std::size_t u = 0;
    std::size_t v = 0;
    std::size_t group = 0;
  };
  struct Tie {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 0.0;
  };
  enum Terms : unsigned { kIntra = 1U, kAlign = 2U, kAll = 3U };

  ForceModel(double edge_length, double repulsion, double lambda) : ell_(edge_length), k_(repulsion), lambda_(lambda) {}

  std::size_t add_group(std::size_t begin, std::size_t end) {
    groups_.push_back({begin, end});
    return groups_.size() - 1;
  }
  void add_spring(std::size_t u, std::size_t v, std::size_t group) { springs_.push_back({u, v, group}); }
  void add_tie(std::size_t i, std::size_t j, double w) { ties_.push_back({i, j, w}); }
  void use_barnes_hut(std::size_t threshold, double theta) {
    bh_threshold_ = threshold;
    theta_ = theta;
  }

  /// Per-group intra energy, then the unscaled alignment sum. Returns false
  /// when two nodes of a group (or a spring) are closer than 1e-12.
  bool terms(std::span<const Vec2> p, std::vector<double>& intra, double& align) const {
    intra.assign(groups_.size(), 0.0);
    for (const auto& s : springs_) {
      const double d = distance(p[s.u], p[s.v]);
      const double r = d - ell_;
      intra[s.group] += r * r;
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto [b, e] = groups_[g];
      if (e - b > bh_threshold_) {
        BarnesHutTree tree(p.subspan(b, e - b), theta_);
        for (std::size_t u = 0; u < e - b; ++u) {
          double value = 0.0;
          Vec2 grad;
          tree.potential(u, value, grad);
          intra[g] += k_ * value;
        }
        continue;
      }
      // Sum over ordered pairs u != v, so each unordered pair counts twice.
      for (std::size_t u = b; u < e; ++u) {
        for (std::size_t v = u + 1; v < e; ++v) {
          const double d = distance(p[u], p[v]);
          if (d < 1e-12) return false;
          intra[g] += 2.0 * k_ / d;
        }
      }
    }
    align = 0.0;
    for (const auto& t : ties_) align += t.weight * (p[t.i] - p[t.j]).squared_norm();
    return true;
  }

  double energy(std::span<const Vec2> p) const {
    std::vector<double> intra;
    double align = 0.0;
    if (!terms(p, intra, align)) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (double v : intra) total += v;
    return total + lambda_ * align;
  }

  /// Gradient of the selected terms (alignment term includes lambda).
  void gradient(std::span<const Vec2> p, std::vector<Vec2>& out, unsigned which = kAll) const {
    out.assign(p.size(), Vec2{});
    if (which & kIntra) {
      for (const auto& s : springs_) {
        const Vec2 delta = p[s.u] - p[s.v];
        const double d = delta.norm();
        if (d == 0.0) continue;
        const Vec2 g = delta * (2.0 * (d - ell_) / d);
        out[s.u] += g;
        out[s.v] -= g;
      }
      for (const auto& [b, e] : groups_) {
        if (e - b > bh_threshold_) {
          BarnesHutTree tree(p.subspan(b, e - b), theta_);
          for (std::size_t u = 0; u < e - b; ++u) {
            double value = 0.0;
            Vec2 grad;
            tree.potential(u, value, grad);
            out[b + u] += grad * (2.0 * k_);
          }
          continue;
        }
        for (std::size_t u = b; u < e; ++u) {
          for (std::size_t v = u + 1; v < e; ++v) {
            const Vec2 delta = p[u] - p[v];
            const double d = delta.norm();
            if (d == 0.0) continue;
            const Vec2 g = delta * (-2.0 * k_ / (d * d * d));
            out[u] += g;
            out[v] -= g;
          }
        }
      }
    }
    if (which & kAlign) {
      for (const auto& t : ties_) {
        const Vec2 g = (p[t.i] - p[t.j]) * (2.0 * lambda_ * t.weight);
        out[t.i] += g;
        out[t.j] -= g;
      }
    }
  }

 private:
  double ell_;
  double k_;
  double lambda_;
  std::vector<Group> groups_;
  std::vector<Spring> springs_;
  std::vector<Tie> ties_;
  std::size_t bh_threshold_ = std::numeric_limits<std::size_t>::max();
  double theta_ = 0.9;
};

namespace detail {

inline void add_graph(ForceModel& model, const MapperGraph& g, std::size_t offset) {
  const auto group = model.add_group(offset, offset + g.size());
  for (const auto& e : g.edges) {
    model.add_spring(offset + static_cast<std::size_t>(e.u), offset + static_cast<std::size_t>(e.v), group);
  }
}

inline ForceModel joint_model(const JointGraph& joint, const LayoutParams& params) {
  ForceModel model(params.edge_length, params.repulsion, params.lambda);
  add_graph(model, joint.graph_a, 0);
  add_graph(model, joint.graph_b, joint.size_a());
  for (const auto& e : joint.inter_edges) {
    model.add_tie(static_cast<std::size_t>(e.a), joint.size_a() + static_cast<std::size_t>(e.b), e.weight);
  }
  return model;
}

/// Nudges exact or near-exact coincidences apart at the 1e-6 scale.
inline void jitter_coincident(std::vector<Vec2>& pos, Rng& rng) {
  for (int pass = 0; pass < 8; ++pass) {
    std::vector<std::size_t> order(pos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pos[a].x < pos[b].x || (pos[a].x == pos[b].x && (pos[a].y < pos[b].y || (pos[a].y == pos[b].y && a < b)));
    });
    bool moved = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t j = i + 1; j < order.size() && pos[order[j]].x - pos[order[i]].x < 1e-9; ++j) {
        if (distance(pos[order[i]], pos[order[j]]) < 1e-9) {
          pos[order[j]] += Vec2{rng.uniform(-1e-6, 1e-6), rng.uniform(-1e-6, 1e-6)};
          moved = true;
        }
      }
    }
    if (!moved) return;
  }
}

}  // namespace detail

/// Energy terms at `positions` (joint-indexed). Exact O(|V|^2) repulsion.
/// Throws on coincident nodes within a graph.
inline LayoutEnergy energy(std::span<const Vec2> positions, const JointGraph& joint, const LayoutParams& params) {
  if (positions.size() != joint.size()) throw Error("dimension_mismatch", "one position per joint node required");
  ForceModel model = detail::joint_model(joint, params);
  std::vector<double> intra;
  LayoutEnergy out;
  if (!model.terms(positions, intra, out.align)) {
    throw Error("coincident_nodes", "two nodes of one graph coincide; jitter positions first");
  }
  out.intra_a = intra[0];
  out.intra_b = intra[1];
  out.total = out.intra_a + out.intra_b + params.lambda * out.align;
  return out;
}

/// Analytic gradient of the selected energy terms (see ForceModel::Terms).
inline std::vector<Vec2> energy_gradient(std::span<const Vec2> positions, const JointGraph& joint,
                                         const LayoutParams& params, unsigned which = ForceModel::kAll) {
  ForceModel model = detail::joint_model(joint, params);
  std::vector<Vec2> g;
  model.gradient(positions, g, which);
  return g;
}

/// Seeded uniform positions in the unit square, graph_a first.
inline std::vector<Vec2> initial_positions(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec2> pos(count);
  for (auto& p : pos) p = {rng.uniform(), rng.uniform()};
  Rng jitter(derive_seed(seed, 1));
  detail::jitter_coincident(pos, jitter);
  return pos;
}

/// Standalone force-directed layout of one mapper graph from `init`.
inline LayoutResult optimize_graph(const MapperGraph& graph, const LayoutParams& params, std::vector<Vec2> init) {
  params.validate();
  if (init.size() != graph.size()) throw Error("dimension_mismatch", "one initial position per node required");
  ForceModel model(params.edge_length, params.repulsion, 0.0);
  detail::add_graph(model, graph, 0);
  model.use_barnes_hut(params.barnes_hut_threshold, params.theta);
  LayoutResult result;
  auto trace = monotone_descent(
      init, [&](const std::vector<Vec2>& p) { return model.energy(p); },
      [&](const std::vector<Vec2>& p, std::vector<Vec2>& g) { model.gradient(p, g); }, params.descent());
  result.positions = std::move(init);
  result.energy_trace = std::move(trace.energy);
  result.final_energy = result.energy_trace.back();
  result.iterations = trace.iterations;
  result.seed = params.seed;
  return result;
}

/// Minimizes intra_a + intra_b + lambda * align. With lambda = 0 the energy
/// separates, so each graph is optimized on its own from the shared
/// initialization. `warm_start` (joint-indexed, without display offsets)
/// replaces the seeded initialization.
inline LayoutResult optimize_layout(const JointGraph& joint, const LayoutParams& params,
                                    std::optional<std::vector<Vec2>> warm_start = std::nullopt) {
  params.validate();
  std::vector<Vec2> pos = warm_start ? std::move(*warm_start) : initial_positions(joint.size(), params.seed);
  if (pos.size() != joint.size()) throw Error("dimension_mismatch", "warm start has the wrong node count");
  if (warm_start) {
    Rng jitter(derive_seed(params.seed, 1));
    detail::jitter_coincident(pos, jitter);
  }

  LayoutResult result;
  result.lambda = params.lambda;
  result.seed = params.seed;
  const std::size_t na = joint.size_a();

  if (params.lambda == 0.0 || joint.inter_edges.empty()) {
    std::vector<Vec2> init_a(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(na));
    std::vector<Vec2> init_b(pos.begin() + static_cast<std::ptrdiff_t>(na), pos.end());
    auto ra = optimize_graph(joint.graph_a, params, std::move(init_a));
    auto rb = optimize_graph(joint.graph_b, params, std::move(init_b));
    result.positions = std::move(ra.positions);
    result.positions.insert(result.positions.end(), rb.positions.begin(), rb.positions.end());
    const std::size_t len = std::max(ra.energy_trace.size(), rb.energy_trace.size());
    for (std::size_t t = 0; t < len; ++t) {
      const double ea = ra.energy_trace[std::min(t, ra.energy_trace.size() - 1)];
      const double eb = rb.energy_trace[std::min(t, rb.energy_trace.size() - 1)];
      result.energy_trace.push_back(ea + eb);
    }
    result.iterations = std::max(ra.iterations, rb.iterations);
    // Any alignment energy is multiplied by lambda = 0 (or absent).
    result.final_energy = result.energy_trace.back();
    return result;
  }

  ForceModel model = detail::joint_model(joint, params);
  model.use_barnes_hut(params.barnes_hut_threshold, params.theta);
  auto trace = monotone_descent(
      pos, [&](const std::vector<Vec2>& p) { return model.energy(p); },
      [&](const std::vector<Vec2>& p, std::vector<Vec2>& g) { model.gradient(p, g); }, params.descent());
  result.positions = std::move(pos);
  result.energy_trace = std::move(trace.energy);
  result.final_energy = result.energy_trace.back();
  result.iterations = trace.iterations;
  return result;
}

/// Translates graph_b horizontally so its bounding box starts `margin` to the
/// right of graph_a's. Any earlier offsets are undone first.
inline LayoutResult separate_side_by_side(LayoutResult result, std::size_t size_a, double margin) {
  result.positions = result.raw_positions(size_a);
  result.offset_a = {};
  result.offset_b = {};
  if (size_a == 0 || size_a == result.positions.size()) return result;
  double a_max = -std::numeric_limits<double>::infinity();
  double b_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.positions.size(); ++i) {
    if (i < size_a) {
      a_max = std::max(a_max, result.positions[i].x);
    } else {
      b_min = std::min(b_min, result.positions[i].x);
    }
  }
  result.offset_b = {a_max + margin - b_min, 0.0};
  for (std::size_t i = size_a; i < result.positions.size(); ++i) result.positions[i] += result.offset_b;
  return result;
}

}  // namespace mapalign
