#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mapalign/align_local.hpp"
#include "mapalign/error.hpp"
#include "mapalign/geometry.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/merge.hpp"

namespace mapalign {

/// Potential-field constants. Members attract with (1 - d/R1)^2 for d < R1,
/// obstacles repel with the same form over R0; the contour is the 0.5 level.
struct BubbleParams {
  double node_radius = 0.2;
  std::optional<double> grid_cell;  // default node_radius / 2
  double member_factor = 4.0;       // R1 = member_factor * radius
  double obstacle_factor = 2.0;     // R0 = obstacle_factor * radius
  double threshold = 0.5;

  double cell() const { return grid_cell.value_or(node_radius / 2.0); }
};

struct BubbleGeometry {
  int pair_id = 0;
  Side side = Side::a;
  Polygon polygon;  // implicitly closed, counter-clockwise outer ring
  double content_jaccard = 0.0;
  double coherence = 0.0;
  bool detoured = false;  // a connection corridor was routed around obstacles
};

/// Geometry per side of a pair; nullopt marks an empty side.
struct BubblePair {
  int pair_id = 0;
  std::optional<BubbleGeometry> a;
  std::optional<BubbleGeometry> b;
};

namespace detail {

inline double falloff(double d, double r) {
  if (d >= r) return 0.0;
  const double t = 1.0 - d / r;
  return t * t;
}

/// Prim's algorithm; returns index pairs of the Euclidean MST.
inline std::vector<std::pair<std::size_t, std::size_t>> euclidean_mst(std::span<const Vec2> pts) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t n = pts.size();
  if (n < 2) return edges;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::vector<char> used(n, 0);
  used[0] = 1;
  for (std::size_t j = 1; j < n; ++j) best[j] = distance(pts[0], pts[j]);
  for (std::size_t it = 1; it < n; ++it) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j] && (pick == n || best[j] < best[pick])) pick = j;
    }
    used[pick] = 1;
    edges.emplace_back(from[pick], pick);
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distance(pts[pick], pts[j]);
      if (!used[j] && d < best[j]) {
        best[j] = d;
        from[j] = pick;
      }
    }
  }
  return edges;
}

inline Polygon circle(const Vec2& c, double r, double cell) {
  const int n = std::max(16, static_cast<int>(std::ceil(2.0 * 3.141592653589793 * r / cell)));
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * 3.141592653589793 * i / n;
    p.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return p;
}

inline double signed_area(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) s += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  return 0.5 * s;
}

/// Scalar field on a regular grid with per-vertex forcing flags.
class BubbleField {
 public:
  BubbleField(Vec2 origin, double cell, int nx, int ny)
      : origin_(origin), cell_(cell), nx_(nx), ny_(ny), value_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0.0),
        forced_(value_.size(), 0) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double cell() const { return cell_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i); }
  Vec2 vertex(int i, int j) const { return {origin_.x + i * cell_, origin_.y + j * cell_}; }
  double& value(int i, int j) { return value_[index(i, j)]; }
  double value(int i, int j) const { return value_[index(i, j)]; }
  std::int8_t& forced(int i, int j) { return forced_[index(i, j)]; }
  std::int8_t forced(int i, int j) const { return forced_[index(i, j)]; }

  /// Calls fn(i, j) for grid vertices inside the axis box around [lo, hi] grown by r.
  template <class Fn>
  void for_box(Vec2 lo, Vec2 hi, double r, Fn&& fn) {
    const int i0 = std::max(0, static_cast<int>(std::floor((lo.x - r - origin_.x) / cell_)));
    const int i1 = std::min(nx_ - 1, static_cast<int>(std::ceil((hi.x + r - origin_.x) / cell_)));
    const int j0 = std::max(0, static_cast<int>(std::floor((lo.y - r - origin_.y) / cell_)));
    const int j1 = std::min(ny_ - 1, static_cast<int>(std::ceil((hi.y + r - origin_.y) / cell_)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) fn(i, j);
    }
  }

 private:
  Vec2 origin_;
  double cell_;
  int nx_;
  int ny_;
  std::vector<double> value_;
  std::vector<std::int8_t> forced_;  // +1 forced inside, -1 forced outside
};

}  // namespace detail

/// Bubble Sets contour around `members` avoiding `obstacles`. Radii spans may
/// be empty (uniform params.node_radius) or one entry per point. Member
/// centres lie strictly inside the result and obstacle centres at least one
/// grid cell outside, provided members and obstacles sit at least 1.5 node
/// radii apart. `detoured` reports whether a corridor had to be routed.
inline Polygon bubble_contour(std::span<const Vec2> members, std::span<const Vec2> obstacles, const BubbleParams& params,
                              std::span<const double> member_radii = {}, std::span<const double> obstacle_radii = {},
                              bool* detoured = nullptr) {
  if (members.empty()) throw Error("invalid_params", "a bubble needs at least one member");
  if (!(params.node_radius > 0.0) || !(params.cell() > 0.0)) throw Error("invalid_params", "bubble radius and grid cell must be > 0");
  if (detoured) *detoured = false;
  const double cell = params.cell();
  auto r_member = [&](std::size_t i) {
    return params.member_factor * (member_radii.empty() ? params.node_radius : member_radii[i]);
  };
  auto r_obstacle = [&](std::size_t i) {
    return params.obstacle_factor * (obstacle_radii.empty() ? params.node_radius : obstacle_radii[i]);
  };

  Vec2 lo = members[0];
  Vec2 hi = members[0];
  double r1_max = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    lo = {std::min(lo.x, members[i].x), std::min(lo.y, members[i].y)};
    hi = {std::max(hi.x, members[i].x), std::max(hi.y, members[i].y)};
    r1_max = std::max(r1_max, r_member(i));
  }
  if (members.size() >= 2 && hi.x - lo.x < 1e-12 && hi.y - lo.y < 1e-12) {
    return detail::circle(members[0], r1_max, cell);
  }

  const double margin = r1_max + 2.0 * cell;
  const Vec2 origin{lo.x - margin, lo.y - margin};
  const int nx = static_cast<int>(std::ceil((hi.x - lo.x + 2.0 * margin) / cell)) + 1;
  const int ny = static_cast<int>(std::ceil((hi.y - lo.y + 2.0 * margin) / cell)) + 1;
  detail::BubbleField field(origin, cell, nx, ny);

  for (std::size_t m = 0; m < members.size(); ++m) {
    const double r = r_member(m);
    field.for_box(members[m], members[m], r, [&](int i, int j) { field.value(i, j) += detail::falloff(distance(field.vertex(i, j), members[m]), r); });
  }
  for (const auto& [u, v] : detail::euclidean_mst(members)) {
    const double r = std::min(r_member(u), r_member(v));
    const Vec2 slo{std::min(members[u].x, members[v].x), std::min(members[u].y, members[v].y)};
    const Vec2 shi{std::max(members[u].x, members[v].x), std::max(members[u].y, members[v].y)};
    field.for_box(slo, shi, r, [&](int i, int j) {
      field.value(i, j) += detail::falloff(segment_distance(field.vertex(i, j), members[u], members[v]), r);
    });
  }
  const double exclusion = 1.5 * cell;
  for (std::size_t o = 0; o < obstacles.size(); ++o) {
    const double r = r_obstacle(o);
    field.for_box(obstacles[o], obstacles[o], std::max(r, exclusion), [&](int i, int j) {
      const double d = distance(field.vertex(i, j), obstacles[o]);
      field.value(i, j) -= detail::falloff(d, r);
      if (d < exclusion) field.forced(i, j) = -1;
    });
  }
  for (const auto& m : members) {
    field.for_box(m, m, exclusion, [&](int i, int j) {
      if (distance(field.vertex(i, j), m) < exclusion) field.forced(i, j) = 1;
    });
  }

  auto inside = [&](int i, int j) {
    const auto f = field.forced(i, j);
    return f > 0 || (f == 0 && field.value(i, j) >= params.threshold);
  };
  std::vector<char> in(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Border vertices stay outside so every contour ring closes.
      if (i > 0 && j > 0 && i < nx - 1 && j < ny - 1) in[field.index(i, j)] = inside(i, j) ? 1 : 0;
    }
  }

  // 4-connected labelling; consistent with separating saddles below.
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  std::vector<int> comp(in.size(), -1);
  auto label = [&]() {
    std::fill(comp.begin(), comp.end(), -1);
    int next = 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (!in[field.index(i, j)] || comp[field.index(i, j)] >= 0) continue;
        std::deque<std::pair<int, int>> q{{i, j}};
        comp[field.index(i, j)] = next;
        while (!q.empty()) {
          auto [ci, cj] = q.front();
          q.pop_front();
          for (int k = 0; k < 4; ++k) {
            const int ni = ci + di[k];
            const int nj = cj + dj[k];
            if (ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
            const auto id = field.index(ni, nj);
            if (in[id] && comp[id] < 0) {
              comp[id] = next;
              q.emplace_back(ni, nj);
            }
          }
        }
        ++next;
      }
    }
  };
  auto member_vertex = [&](const Vec2& m) {
    const int i = std::clamp(static_cast<int>(std::floor((m.x - origin.x) / cell)), 1, nx - 2);
    const int j = std::clamp(static_cast<int>(std::floor((m.y - origin.y) / cell)), 1, ny - 2);
    return field.index(i, j);
  };

  // Route corridors (BFS through non-excluded vertices near the members)
  // until every member shares the first member's component.
  const double corridor_reach = r1_max - cell;
  for (std::size_t guard = 0; guard < members.size(); ++guard) {
    label();
    const int main = comp[member_vertex(members[0])];
    std::vector<char> target_comp(in.size() + 1, 0);
    bool all = true;
    for (const auto& m : members) {
      const int c = comp[member_vertex(m)];
      if (c != main) {
        all = false;
        target_comp[static_cast<std::size_t>(c)] = 1;
      }
    }
    if (all) break;
    if (detoured) *detoured = true;
    std::vector<std::size_t> prev(in.size(), std::numeric_limits<std::size_t>::max());
    std::deque<std::pair<int, int>> q;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (comp[field.index(i, j)] == main) {
          prev[field.index(i, j)] = field.index(i, j);
          q.emplace_back(i, j);
        }
      }
    }
    std::size_t hit = std::numeric_limits<std::size_t>::max();
    while (!q.empty() && hit == std::numeric_limits<std::size_t>::max()) {
      auto [ci, cj] = q.front();
      q.pop_front();
      for (int k = 0; k < 4; ++k) {
        const int ni = ci + di[k];
        const int nj = cj + dj[k];
        if (ni < 1 || nj < 1 || ni >= nx - 1 || nj >= ny - 1) continue;
        const auto id = field.index(ni, nj);
        if (prev[id] != std::numeric_limits<std::size_t>::max() || field.forced(ni, nj) < 0) continue;
        const Vec2 p = field.vertex(ni, nj);
        if (p.x < lo.x - corridor_reach || p.x > hi.x + corridor_reach || p.y < lo.y - corridor_reach ||
            p.y > hi.y + corridor_reach) {
          continue;
        }
        prev[id] = field.index(ci, cj);
        if (comp[id] >= 0 && target_comp[static_cast<std::size_t>(comp[id])]) {
          hit = id;
          break;
        }
        q.emplace_back(ni, nj);
      }
    }
    if (hit == std::numeric_limits<std::size_t>::max()) break;  // walled in; leave as is
    for (std::size_t id = hit; prev[id] != id; id = prev[id]) in[id] = 1;
  }
  label();
  const int keep = comp[member_vertex(members[0])];
  std::vector<char> mask(in.size(), 0);
  for (std::size_t id = 0; id < in.size(); ++id) mask[id] = comp[id] == keep ? 1 : 0;

  // Marching squares. Crossing points are keyed by grid edge: 2*vertex for the
  // horizontal edge to the right, 2*vertex+1 for the vertical edge upward.
  auto crossing = [&](int i0, int j0, int i1, int j1) {
    const bool in0 = mask[field.index(i0, j0)] != 0;
    const int ii = in0 ? i0 : i1;
    const int ij = in0 ? j0 : j1;
    const int oi = in0 ? i1 : i0;
    const int oj = in0 ? j1 : j0;
    const Vec2 pin = field.vertex(ii, ij);
    const Vec2 pout = field.vertex(oi, oj);
    double t = 0.05;
    if (field.forced(oi, oj) >= 0) {
      const double vin = field.value(ii, ij);
      const double vout = field.value(oi, oj);
      t = vin != vout ? (params.threshold - vin) / (vout - vin) : 0.5;
      t = std::clamp(t, 0.05, 0.95);
    }
    return pin + (pout - pin) * t;
  };
  struct Seg {
    std::int64_t from;
    std::int64_t to;
  };
  std::unordered_map<std::int64_t, std::int64_t> next_key;
  std::unordered_map<std::int64_t, Vec2> point_of;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const bool v0 = mask[field.index(i, j)];
      const bool v1 = mask[field.index(i + 1, j)];
      const bool v2 = mask[field.index(i + 1, j + 1)];
      const bool v3 = mask[field.index(i, j + 1)];
      const int code = (v0 ? 1 : 0) | (v1 ? 2 : 0) | (v2 ? 4 : 0) | (v3 ? 8 : 0);
      if (code == 0 || code == 15) continue;
      const std::int64_t e[4] = {2 * static_cast<std::int64_t>(field.index(i, j)),
                                 2 * static_cast<std::int64_t>(field.index(i + 1, j)) + 1,
                                 2 * static_cast<std::int64_t>(field.index(i, j + 1)),
                                 2 * static_cast<std::int64_t>(field.index(i, j)) + 1};
      const Vec2 corner[4] = {field.vertex(i, j), field.vertex(i + 1, j), field.vertex(i + 1, j + 1), field.vertex(i, j + 1)};
      auto point = [&](int edge) {
        switch (edge) {
          case 0: return crossing(i, j, i + 1, j);
          case 1: return crossing(i + 1, j, i + 1, j + 1);
          case 2: return crossing(i, j + 1, i + 1, j + 1);
          default: return crossing(i, j, i, j + 1);
        }
      };
      // (edge, edge, inside corner used to orient the segment)
      std::vector<std::array<int, 3>> segs;
      switch (code) {
        case 1: segs = {{3, 0, 0}}; break;
        case 2: segs = {{0, 1, 1}}; break;
        case 3: segs = {{3, 1, 0}}; break;
        case 4: segs = {{1, 2, 2}}; break;
        case 5: segs = {{3, 0, 0}, {1, 2, 2}}; break;
        case 6: segs = {{0, 2, 1}}; break;
        case 7: segs = {{3, 2, 0}}; break;
        case 8: segs = {{2, 3, 3}}; break;
        case 9: segs = {{0, 2, 0}}; break;
        case 10: segs = {{0, 1, 1}, {2, 3, 3}}; break;
        case 11: segs = {{1, 2, 0}}; break;
        case 12: segs = {{1, 3, 2}}; break;
        case 13: segs = {{0, 1, 0}}; break;
        case 14: segs = {{3, 0, 1}}; break;
        default: break;
      }
      for (const auto& s : segs) {
        Vec2 p = point(s[0]);
        Vec2 q = point(s[1]);
        std::int64_t kp = e[s[0]];
        std::int64_t kq = e[s[1]];
        const Vec2 c = corner[s[2]];
        const double cross = (q.x - p.x) * (c.y - p.y) - (q.y - p.y) * (c.x - p.x);
        if (cross < 0.0) {
          std::swap(p, q);
          std::swap(kp, kq);
        }
        next_key[kp] = kq;
        point_of[kp] = p;
        point_of[kq] = q;
      }
    }
  }

  std::vector<Polygon> rings;
  std::vector<std::int64_t> starts;
  starts.reserve(next_key.size());
  for (const auto& [k, _] : next_key) starts.push_back(k);
  std::sort(starts.begin(), starts.end());
  std::unordered_map<std::int64_t, char> seen;
  for (std::int64_t s : starts) {
    if (seen[s]) continue;
    Polygon ring;
    std::int64_t k = s;
    while (!seen[k]) {
      seen[k] = 1;
      ring.push_back(point_of.at(k));
      auto it = next_key.find(k);
      if (it == next_key.end()) break;
      k = it->second;
    }
    if (ring.size() >= 3) rings.push_back(std::move(ring));
  }
  if (rings.empty()) return detail::circle(members[0], r1_max * 0.25, cell);

  std::size_t outer = 0;
  for (std::size_t r = 1; r < rings.size(); ++r) {
    if (detail::signed_area(rings[r]) > detail::signed_area(rings[outer])) outer = r;
  }
  Polygon result = rings[outer];
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (r == outer) continue;
    const bool holds_obstacle = std::any_of(obstacles.begin(), obstacles.end(), [&](const Vec2& o) { return point_in_polygon(rings[r], o); });
    if (!holds_obstacle) continue;  // filled holes hold no node centre
    // Keyhole: splice the hole into the outer ring through its closest vertex pair.
    std::size_t bi = 0;
    std::size_t bj = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.size(); ++i) {
      for (std::size_t j = 0; j < rings[r].size(); ++j) {
        const double d = distance(result[i], rings[r][j]);
        if (d < bd) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    }
    Polygon spliced(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(bi) + 1);
    for (std::size_t t = 0; t <= rings[r].size(); ++t) spliced.push_back(rings[r][(bj + t) % rings[r].size()]);
    spliced.insert(spliced.end(), result.begin() + static_cast<std::ptrdiff_t>(bi), result.end());
    result = std::move(spliced);
  }
  return result;
}

/// Bubbles for both sides of `pair` on the (side-by-side) global layout.
/// Obstacles are the other nodes of the same graph.
inline BubblePair bubble_set(const AlignmentPair& pair, const JointGraph& joint, const LayoutResult& layout,
                             const BubbleParams& params) {
  BubblePair out;
  out.pair_id = pair.id;
  auto side_geometry = [&](Side side, const std::vector<int>& nodes) -> std::optional<BubbleGeometry> {
    if (nodes.empty()) return std::nullopt;
    const std::size_t offset = side == Side::a ? 0 : joint.size_a();
    const std::size_t count = side == Side::a ? joint.size_a() : joint.size_b();
    std::vector<char> is_member(count, 0);
    for (int v : nodes) is_member[static_cast<std::size_t>(v)] = 1;
    std::vector<Vec2> members;
    std::vector<Vec2> obstacles;
    for (std::size_t v = 0; v < count; ++v) {
      (is_member[v] ? members : obstacles).push_back(layout.positions[offset + v]);
    }
    BubbleGeometry g;
    g.pair_id = pair.id;
    g.side = side;
    g.content_jaccard = pair.content_jaccard;
    g.coherence = pair.coherence;
    g.polygon = bubble_contour(members, obstacles, params, {}, {}, &g.detoured);
    return g;
  };
  out.a = side_geometry(Side::a, pair.nodes_a);
  out.b = side_geometry(Side::b, pair.nodes_b);
  return out;
}

}  // namespace mapalign
