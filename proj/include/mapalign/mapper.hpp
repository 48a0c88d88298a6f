#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mapalign/error.hpp"
#include "mapalign/ingest.hpp"
#include "mapalign/item_set.hpp"

namespace mapalign {

struct FilterSpec {
  enum class Kind { l2_norm, attribute, custom };
  Kind kind = Kind::l2_norm;
  std::string attribute;       // Kind::attribute
  std::vector<double> custom;  // Kind::custom, one value per row

  static FilterSpec l2_norm() { return {}; }
  static FilterSpec attr(std::string name) { return {Kind::attribute, std::move(name), {}}; }
  static FilterSpec values(std::vector<double> v) { return {Kind::custom, {}, std::move(v)}; }

  std::string describe() const {
    switch (kind) {
      case Kind::l2_norm: return "l2_norm";
      case Kind::attribute: return "attr:" + attribute;
      case Kind::custom: return "custom";
    }
    return "unknown";
  }
};

struct MapperParams {
  FilterSpec filter;
  int num_intervals = 50;
  double overlap = 0.5;
  int dbscan_min_pts = 3;
  std::optional<double> dbscan_eps;  // nullopt = auto (k-distance elbow)

  void validate() const {
    if (num_intervals < 1) throw Error("invalid_params", "num_intervals must be >= 1");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw Error("invalid_params", "overlap must lie in [0, 1)");
    if (dbscan_min_pts < 1) throw Error("invalid_params", "dbscan_min_pts must be >= 1");
    if (dbscan_eps && !(*dbscan_eps > 0.0)) throw Error("invalid_params", "dbscan_eps must be > 0");
  }
};

/// One element of the interval cover with the rows whose filter value lies
/// in the closed interval [lo, hi].
struct CoverInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> rows;
};

struct MapperNode {
  int id = 0;
  int interval_index = 0;
  ItemSet members;
  double lo = 0.0;
  double hi = 0.0;
};

struct MapperEdge {
  int u = 0;
  int v = 0;
  std::size_t shared = 0;
  bool operator==(const MapperEdge&) const = default;
};

struct MapperGraph {
  std::vector<MapperNode> nodes;
  std::vector<MapperEdge> edges;  // u < v, sorted
  MapperParams params;
  double eps = 0.0;  // resolved DBSCAN radius
  std::vector<CoverInterval> cover;
  ItemSet uncovered;  // DBSCAN noise in every interval it fell in
  std::shared_ptr<const std::vector<std::string>> universe;

  std::size_t size() const { return nodes.size(); }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
      adj[static_cast<std::size_t>(e.u)].push_back(e.v);
      adj[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    return adj;
  }
};

/// One scalar per row of `set`.
inline std::vector<double> compute_filter(const RepresentationSet& set, const FilterSpec& filter) {
  std::vector<double> values(set.size());
  switch (filter.kind) {
    case FilterSpec::Kind::l2_norm:
      for (std::size_t i = 0; i < set.size(); ++i) {
        double s = 0.0;  // column order, as in detail::row_distance
        for (Eigen::Index c = 0; c < set.matrix.cols(); ++c) s += set.matrix(static_cast<Eigen::Index>(i), c) * set.matrix(static_cast<Eigen::Index>(i), c);
        values[i] = std::sqrt(s);
      }
      break;
    case FilterSpec::Kind::attribute: {
      auto it = set.numeric_attrs.find(filter.attribute);
      if (it == set.numeric_attrs.end()) throw Error("missing_attribute", "filter attribute not present", filter.attribute);
      values = it->second;
      break;
    }
    case FilterSpec::Kind::custom:
      if (filter.custom.size() != set.size()) {
        throw Error("dimension_mismatch", "custom filter length differs from item count");
      }
      values = filter.custom;
      break;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error("non_finite", "filter value is not finite", set.items[i]);
  }
  return values;
}

/// Uniform-length intervals spanning [min, max]; consecutive intervals share
/// `overlap` of their length. Constant input collapses to one interval.
inline std::vector<CoverInterval> build_cover(std::span<const double> values, int num_intervals, double overlap) {
  if (values.empty()) return {};
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;

  std::vector<CoverInterval> cover;
  if (num_intervals <= 1 || hi == lo) {
    cover.push_back({lo, hi, {}});
  } else {
    const double span = hi - lo;
    const double length = span / ((num_intervals - 1) * (1.0 - overlap) + 1.0);
    const double stride = length * (1.0 - overlap);
    for (int j = 0; j < num_intervals; ++j) {
      const double a = lo + j * stride;
      cover.push_back({a, a + length, {}});
    }
    cover.back().hi = hi;
    // Rounding must never open a gap between neighbours.
    for (std::size_t j = 0; j + 1 < cover.size(); ++j) cover[j].hi = std::max(cover[j].hi, cover[j + 1].lo);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Intervals are sorted by lo; only a window of them can hold values[i].
    for (auto& iv : cover) {
      if (iv.lo > values[i]) break;
      if (values[i] <= iv.hi) iv.rows.push_back(i);
    }
  }
  return cover;
}

namespace detail {

/// Euclidean distance between two rows, summed in column order. A fixed
/// summation order keeps eps ties independent of SIMD width.
inline double row_distance(const Matrix& points, std::size_t i, std::size_t j) {
  double s = 0.0;
  const auto a = points.row(static_cast<Eigen::Index>(i));
  const auto b = points.row(static_cast<Eigen::Index>(j));
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double d = a(c) - b(c);
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::vector<std::vector<std::size_t>> neighborhoods(const Matrix& points, double eps) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (row_distance(points, i, j) <= eps) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  return nbrs;
}

}  // namespace detail

/// DBSCAN with Euclidean distance. A point is core when its eps-neighbourhood
/// (itself included) holds at least `min_pts` points. Noise is discarded.
/// Clusters are expanded from core points in row order; a border point joins
/// the first cluster that reaches it. Result ordered by lowest member row.
inline std::vector<std::vector<std::size_t>> dbscan(const Matrix& points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error("invalid_params", "dbscan eps must be > 0");
  const auto n = static_cast<std::size_t>(points.rows());
  const auto nbrs = detail::neighborhoods(points, eps);
  constexpr int kUnassigned = -1;
  std::vector<int> label(n, kUnassigned);
  std::vector<std::vector<std::size_t>> clusters;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] != kUnassigned || nbrs[seed].size() < static_cast<std::size_t>(min_pts)) continue;
    const int c = static_cast<int>(clusters.size());
    clusters.emplace_back();
    std::deque<std::size_t> frontier{seed};
    label[seed] = c;
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      clusters.back().push_back(p);
      if (nbrs[p].size() < static_cast<std::size_t>(min_pts)) continue;  // border point
      for (std::size_t q : nbrs[p]) {
        if (label[q] == kUnassigned) {
          label[q] = c;
          frontier.push_back(q);
        }
      }
    }
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

/// Knee of an ascending curve: index maximizing perpendicular distance to the
/// chord from first to last point, both axes scaled to [0, 1]. Returns
/// nullopt when the curve is a straight line.
inline std::optional<std::size_t> curve_knee(std::span<const double> curve) {
  const std::size_t m = curve.size();
  if (m < 3) return std::nullopt;
  const double y0 = curve.front();
  const double yspan = curve.back() - y0;
  const double xspan = static_cast<double>(m - 1);
  if (yspan <= 0.0) return std::nullopt;
  // Normalized chord runs (0,0) -> (1,1): distance = |x - y| / sqrt(2).
  double best = 0.0;
  std::optional<std::size_t> arg;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double x = static_cast<double>(i) / xspan;
    const double y = (curve[i] - y0) / yspan;
    const double dist = std::abs(x - y) / std::sqrt(2.0);
    if (dist > best + 1e-12) {
      best = dist;
      arg = i;
    }
  }
  return arg;
}

/// Distance from each point to its `k`-th nearest other point, sorted ascending.
inline std::vector<double> k_distances(const Matrix& points, int k) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<double> out(n);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row[w++] = detail::row_distance(points, i, j);
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    out[i] = row[static_cast<std::size_t>(k - 1)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Picks eps at the elbow of the sorted k-distance curve (k = min_pts).
/// A straight curve falls back to the median k-distance.
inline double eps_from_curve(std::span<const double> curve) {
  double eps = 0.0;
  if (auto knee = curve_knee(curve)) {
    eps = curve[*knee];
  } else {
    const std::size_t m = curve.size();
    eps = m % 2 == 1 ? curve[m / 2] : 0.5 * (curve[m / 2 - 1] + curve[m / 2]);
  }
  if (eps <= 0.0) {
    // Duplicate points can pin the knee at zero; take the smallest positive radius.
    auto pos = std::find_if(curve.begin(), curve.end(), [](double v) { return v > 0.0; });
    if (pos == curve.end()) throw Error("degenerate_eps", "all k-distances are zero; eps cannot be chosen");
    eps = *pos;
  }
  return eps;
}

inline double auto_eps(const Matrix& points, int min_pts) {
  if (points.rows() < min_pts + 1) {
    throw Error("too_few_points", "auto eps needs at least min_pts + 1 points");
  }
  const auto curve = k_distances(points, min_pts);
  return eps_from_curve(curve);
}

/// Builds the mapper graph of `set`; members index rows of `set`.
inline MapperGraph build_mapper(const RepresentationSet& set, const MapperParams& params) {
  params.validate();
  MapperGraph graph;
  graph.params = params;
  graph.universe = std::make_shared<const std::vector<std::string>>(set.items);

  const auto values = compute_filter(set, params.filter);
  graph.eps = params.dbscan_eps ? *params.dbscan_eps : auto_eps(set.matrix, params.dbscan_min_pts);
  graph.cover = build_cover(values, params.num_intervals, params.overlap);

  std::vector<char> covered(set.size(), 0);
  for (std::size_t j = 0; j < graph.cover.size(); ++j) {
    const auto& iv = graph.cover[j];
    if (iv.rows.empty()) continue;
    Matrix sub(static_cast<Eigen::Index>(iv.rows.size()), set.matrix.cols());
    for (std::size_t r = 0; r < iv.rows.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = set.matrix.row(static_cast<Eigen::Index>(iv.rows[r]));
    }
    for (const auto& cluster : dbscan(sub, graph.eps, params.dbscan_min_pts)) {
      MapperNode node;
      node.id = static_cast<int>(graph.nodes.size());
      node.interval_index = static_cast<int>(j);
      node.lo = iv.lo;
      node.hi = iv.hi;
      node.members.reserve(cluster.size());
      for (std::size_t r : cluster) {
        node.members.push_back(static_cast<ItemIndex>(iv.rows[r]));
        covered[iv.rows[r]] = 1;
      }
      normalize(node.members);
      graph.nodes.push_back(std::move(node));
    }
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) graph.uncovered.push_back(static_cast<ItemIndex>(i));
  }

  // Nerve: pairs of nodes sharing an item, via an item -> nodes index.
  std::vector<std::vector<int>> item_nodes(set.size());
  for (const auto& node : graph.nodes) {
    for (ItemIndex m : node.members) item_nodes[m].push_back(node.id);
  }
  std::map<std::pair<int, int>, std::size_t> shared;
  for (const auto& holders : item_nodes) {
    for (std::size_t x = 0; x < holders.size(); ++x) {
      for (std::size_t y = x + 1; y < holders.size(); ++y) {
        ++shared[{std::min(holders[x], holders[y]), std::max(holders[x], holders[y])}];
      }
    }
  }
  graph.edges.reserve(shared.size());
  for (const auto& [uv, count] : shared) graph.edges.push_back({uv.first, uv.second, count});
  return graph;
}

/// |E| - |V| + #components: the number of independent cycles.
inline int cycle_rank(std::size_t num_nodes, std::span<const MapperEdge> edges) {
  std::vector<int> parent(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = static_cast<int>(num_nodes);
  for (const auto& e : edges) {
    const int a = find(e.u);
    const int b = find(e.v);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return static_cast<int>(edges.size()) - static_cast<int>(num_nodes) + components;
}

}  // namespace mapalign
