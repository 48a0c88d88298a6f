#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "mapalign/geometry.hpp"

namespace mapalign {

/// Quadtree for approximate all-pairs k/d repulsion. A cell of side s seen
/// from distance d is treated as a point mass when s / d < theta.
class BarnesHutTree {
 public:
  BarnesHutTree(std::span<const Vec2> points, double theta) : points_(points), theta_(theta) {
    if (points.empty()) return;
    Vec2 lo = points[0];
    Vec2 hi = points[0];
    for (const auto& p : points) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double size = std::max({hi.x - lo.x, hi.y - lo.y, 1e-9});
    root_ = std::make_unique<Cell>();
    root_->origin = lo;
    root_->size = size;
    for (std::size_t i = 0; i < points.size(); ++i) insert(*root_, i, 0);
    summarize(*root_);
  }

  /// Σ_{v≠u} 1/|p_u − p_v| and its gradient with respect to p_u.
  void potential(std::size_t u, double& value, Vec2& grad) const {
    value = 0.0;
    grad = {};
    if (root_) visit(*root_, u, value, grad);
  }

 private:
  struct Cell {
    Vec2 origin;
    double size = 0.0;
    double mass = 0.0;
    Vec2 center;
    std::vector<std::size_t> bucket;
    std::array<std::unique_ptr<Cell>, 4> child;
    bool leaf = true;
  };

  static constexpr int kMaxDepth = 40;

  void insert(Cell& cell, std::size_t i, int depth) {
    if (cell.leaf) {
      if (cell.bucket.empty() || depth >= kMaxDepth) {
        cell.bucket.push_back(i);
        return;
      }
      cell.leaf = false;
      auto moved = std::move(cell.bucket);
      cell.bucket.clear();
      for (std::size_t j : moved) insert(cell, j, depth);
    }
    const double half = cell.size * 0.5;
    const Vec2& p = points_[i];
    const int qx = p.x >= cell.origin.x + half ? 1 : 0;
    const int qy = p.y >= cell.origin.y + half ? 1 : 0;
    auto& c = cell.child[static_cast<std::size_t>(qx + 2 * qy)];
    if (!c) {
      c = std::make_unique<Cell>();
      c->origin = {cell.origin.x + qx * half, cell.origin.y + qy * half};
      c->size = half;
    }
    insert(*c, i, depth + 1);
  }

  void summarize(Cell& cell) {
    Vec2 weighted;
    double mass = 0.0;
    if (cell.leaf) {
      for (std::size_t i : cell.bucket) {
        weighted += points_[i];
        mass += 1.0;
      }
    } else {
      for (auto& c : cell.child) {
        if (!c) continue;
        summarize(*c);
        weighted += c->center * c->mass;
        mass += c->mass;
      }
    }
    cell.mass = mass;
    cell.center = mass > 0.0 ? weighted * (1.0 / mass) : Vec2{};
  }

  void visit(const Cell& cell, std::size_t u, double& value, Vec2& grad) const {
    const Vec2& p = points_[u];
    if (cell.leaf) {
      for (std::size_t j : cell.bucket) {
        if (j == u) continue;
        add(p, points_[j], 1.0, value, grad);
      }
      return;
    }
    const Vec2 delta = p - cell.center;
    const double d = delta.norm();
    const bool contains = p.x >= cell.origin.x && p.x <= cell.origin.x + cell.size && p.y >= cell.origin.y &&
                          p.y <= cell.origin.y + cell.size;
    if (!contains && d > 0.0 && cell.size / d < theta_) {
      add(p, cell.center, cell.mass, value, grad);
      return;
    }
    for (const auto& c : cell.child) {
      if (c) visit(*c, u, value, grad);
    }
  }

  static void add(const Vec2& p, const Vec2& q, double mass, double& value, Vec2& grad) {
    const Vec2 delta = p - q;
    const double d = delta.norm();
    value += mass / d;
    grad -= delta * (mass / (d * d * d));
  }

  std::span<const Vec2> points_;
  double theta_;
  std::unique_ptr<Cell> root_;
};

}  // namespace mapalign
