#include <gtest/gtest.h>

#include <cmath>

#include "mapalign/mapper.hpp"
#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"

using namespace mapalign;

namespace {

RepresentationSet cloud(const std::vector<std::vector<double>>& pts) {
  RepresentationSet s;
  s.name = "c";
  s.matrix.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(pts[0].size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s.items.push_back("p" + std::to_string(i));
    for (std::size_t c = 0; c < pts[i].size(); ++c) s.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = pts[i][c];
  }
  s.validate();
  return s;
}

Matrix to_matrix(const oracle::Points& pts) { return cloud(pts).matrix; }

std::vector<std::set<std::size_t>> as_sets(const std::vector<std::vector<std::size_t>>& clusters) {
  std::vector<std::set<std::size_t>> out;
  for (const auto& c : clusters) out.emplace_back(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Clusters of the whole cover by the oracle, then the oracle nerve.
std::vector<oracle::NerveEdge> oracle_nerve(const MapperGraph& g, const oracle::Points& pts) {
  std::vector<std::set<std::size_t>> clusters;
  for (const auto& iv : g.cover) {
    oracle::Points sub;
    for (auto r : iv.rows) sub.push_back(pts[r]);
    auto local = oracle::dbscan(sub, g.eps, g.params.dbscan_min_pts);
    std::vector<std::set<std::size_t>> mapped;
    for (const auto& c : local) {
      std::set<std::size_t> s;
      for (auto k : c) s.insert(iv.rows[k]);
      mapped.push_back(s);
    }
    std::sort(mapped.begin(), mapped.end(), [](const auto& x, const auto& y) { return *x.begin() < *y.begin(); });
    clusters.insert(clusters.end(), mapped.begin(), mapped.end());
  }
  return oracle::nerve(clusters);
}

}  // namespace

TEST(Filter, L2Norm) {
  const auto s = cloud({{3.0, 4.0}, {0.0, 0.0}});
  const auto f = compute_filter(s, FilterSpec::l2_norm());
  EXPECT_DOUBLE_EQ(f[0], 5.0);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(Filter, AttributePassThroughAndMissing) {
  auto s = cloud({{1.0}, {2.0}, {3.0}});
  s.numeric_attrs["img_cap_dist"] = {0.25, 0.5, 0.75};
  s.validate();
  EXPECT_EQ(compute_filter(s, FilterSpec::attr("img_cap_dist")), (std::vector<double>{0.25, 0.5, 0.75}));
  EXPECT_THROW(compute_filter(s, FilterSpec::attr("nope")), Error);
}

TEST(Cover, TwoIntervalsNoOverlapShareTheBoundaryItem) {
  const std::vector<double> v{0.0, 2.0, 5.0, 7.0, 10.0};
  const auto c = build_cover(v, 2, 0.0);
  ASSERT_EQ(c.size(), 2U);
  EXPECT_DOUBLE_EQ(c[0].lo, 0.0);
  EXPECT_DOUBLE_EQ(c[0].hi, 5.0);
  EXPECT_DOUBLE_EQ(c[1].lo, 5.0);
  EXPECT_DOUBLE_EQ(c[1].hi, 10.0);
  EXPECT_EQ(c[0].rows, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(c[1].rows, (std::vector<std::size_t>{2, 3, 4}));
}

TEST(Cover, ConsecutiveIntervalsShareTheOverlapFraction) {
  const auto r = fixtures::r_shape();
  const auto c = build_cover(r.height, 6, 0.25);
  ASSERT_EQ(c.size(), 6U);
  EXPECT_DOUBLE_EQ(c.front().lo, 0.0);
  EXPECT_NEAR(c.back().hi, 1.0, 1e-12);
  for (std::size_t j = 0; j + 1 < c.size(); ++j) {
    EXPECT_NEAR((c[j].hi - c[j + 1].lo) / (c[j].hi - c[j].lo), 0.25, 1e-12);
  }
  const auto want = oracle::cover(*std::min_element(r.height.begin(), r.height.end()), *std::max_element(r.height.begin(), r.height.end()), 6, 0.25);
  for (std::size_t j = 0; j < c.size(); ++j) {
    EXPECT_NEAR(c[j].lo, want[j].first, 1e-12);
    EXPECT_NEAR(c[j].hi, want[j].second, 1e-12);
  }
}

TEST(Cover, ConstantValuesGiveOneInterval) {
  const auto c = build_cover(std::vector<double>(7, 3.0), 10, 0.5);
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0].rows.size(), 7U);
}

TEST(Dbscan, SeparatedGroupsAndSingleGroup) {
  const oracle::Points two{{0, 0}, {0.1, 0}, {0, 0.1}, {10, 10}, {10.1, 10}, {10, 10.1}};
  EXPECT_EQ(dbscan(to_matrix(two), 0.5, 3).size(), 2U);
  const oracle::Points one{{0, 0}, {0.1, 0}, {0, 0.1}, {0.1, 0.1}};
  const auto c = dbscan(to_matrix(one), 0.5, 3);
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0].size(), 4U);
}

TEST(Dbscan, NoiseIsDiscarded) {
  const oracle::Points pts{{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}};
  const auto c = dbscan(to_matrix(pts), 0.5, 3);
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0], (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Dbscan, MatchesTextbookOracle) {
  Rng rng(30);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::Points pts;
    for (int i = 0; i < 30; ++i) {
      const double cx = (i % 3) * 2.0;
      pts.push_back({cx + 0.4 * rng.normal(), 0.4 * rng.normal()});
    }
    EXPECT_EQ(as_sets(dbscan(to_matrix(pts), 0.5, 3)), [&] {
      auto o = oracle::dbscan(pts, 0.5, 3);
      std::sort(o.begin(), o.end());
      return o;
    }()) << "trial " << trial;
  }
}

TEST(Knee, LinearCurveFallsBackToMedian) {
  const std::vector<double> line{1, 2, 3, 4, 5};
  EXPECT_FALSE(curve_knee(line).has_value());
  EXPECT_DOUBLE_EQ(eps_from_curve(line), 3.0);
}

TEST(Knee, FourPointCurve) {
  const std::vector<double> curve{0.0, 0.1, 0.2, 3.0};
  ASSERT_TRUE(curve_knee(curve).has_value());
  EXPECT_EQ(*curve_knee(curve), 2U);
  EXPECT_DOUBLE_EQ(eps_from_curve(curve), 0.2);
}

TEST(Knee, AutoEpsSeparatesTwoScaleBlobs) {
  Rng rng(12);
  oracle::Points pts;
  for (int i = 0; i < 60; ++i) pts.push_back({0.05 * rng.normal(), 0.05 * rng.normal()});
  for (int i = 0; i < 60; ++i) pts.push_back({5.0 + 0.3 * rng.normal(), 0.3 * rng.normal()});
  const auto m = to_matrix(pts);
  const double eps = auto_eps(m, 3);
  EXPECT_GT(eps, 0.0);
  const auto clusters = dbscan(m, eps, 3);
  std::size_t big = 0;
  for (const auto& c : clusters) big += c.size() >= 10 ? 1 : 0;
  EXPECT_EQ(big, 2U);
}

TEST(Mapper, CircleWithHeightFilterHasOneCycle) {
  oracle::Points pts;
  std::vector<double> h;
  for (int i = 0; i < 200; ++i) {
    const double t = 2.0 * 3.141592653589793 * i / 200;
    pts.push_back({std::cos(t), std::sin(t)});
    h.push_back(std::sin(t));
  }
  MapperParams p;
  p.filter = FilterSpec::values(h);
  p.num_intervals = 4;
  p.overlap = 0.25;
  p.dbscan_eps = 0.1;
  p.dbscan_min_pts = 2;
  const auto g = build_mapper(cloud(pts), p);
  EXPECT_EQ(cycle_rank(g.size(), g.edges), 1);
  const auto want = oracle_nerve(g, pts);
  ASSERT_EQ(want.size(), g.edges.size());
  for (std::size_t e = 0; e < want.size(); ++e) {
    EXPECT_EQ(want[e].u, static_cast<std::size_t>(g.edges[e].u));
    EXPECT_EQ(want[e].v, static_cast<std::size_t>(g.edges[e].v));
    EXPECT_EQ(want[e].shared, g.edges[e].shared);
  }
}

TEST(Mapper, RShapeHasOneLoopAndTwoTails) {
  const auto r = fixtures::r_shape();
  MapperParams p;
  p.filter = FilterSpec::values(r.height);
  p.num_intervals = 6;
  p.overlap = 0.25;
  p.dbscan_eps = 0.05;
  p.dbscan_min_pts = 2;
  const auto g = build_mapper(r.set, p);
  EXPECT_EQ(cycle_rank(g.size(), g.edges), 1);
  int leaves = 0;
  for (const auto& nbrs : g.adjacency()) leaves += nbrs.size() == 1 ? 1 : 0;
  EXPECT_EQ(leaves, 2);
  EXPECT_TRUE(g.uncovered.empty());
}

TEST(Mapper, TightBlobGivesPathGraph) {
  Rng rng(5);
  oracle::Points pts;
  for (int i = 0; i < 150; ++i) pts.push_back({rng.normal(), rng.normal(), rng.normal()});
  for (int n : {3, 5, 8}) {
    MapperParams p;
    p.num_intervals = n;
    p.overlap = 0.3;
    p.dbscan_eps = 10.0;
    p.dbscan_min_pts = 1;
    const auto g = build_mapper(cloud(pts), p);
    EXPECT_EQ(g.size(), static_cast<std::size_t>(n));
    EXPECT_EQ(cycle_rank(g.size(), g.edges), 0);
    EXPECT_EQ(g.edges.size(), static_cast<std::size_t>(n - 1));
  }
}

TEST(Mapper, InvariantsOnRandomClouds) {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    oracle::Points pts;
    const int n = 30 + static_cast<int>(rng.below(100));
    for (int i = 0; i < n; ++i) pts.push_back({rng.normal(), rng.normal()});
    MapperParams p;
    p.num_intervals = 2 + static_cast<int>(rng.below(10));
    p.overlap = rng.uniform(0.0, 0.7);
    p.dbscan_min_pts = 2 + static_cast<int>(rng.below(3));
    const auto g = build_mapper(cloud(pts), p);
    EXPECT_EQ(static_cast<int>(g.cover.size()), p.num_intervals);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& node : g.nodes) {
      EXPECT_TRUE(std::is_sorted(node.members.begin(), node.members.end()));
      EXPECT_FALSE(node.members.empty());
      for (auto m : node.members) seen[m] = 1;
    }
    for (auto u : g.uncovered) EXPECT_FALSE(seen[u]);
    std::size_t covered = 0;
    for (char c : seen) covered += c ? 1 : 0;
    EXPECT_EQ(covered + g.uncovered.size(), static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      EXPECT_LT(g.edges[e].u, g.edges[e].v);
      if (e) EXPECT_LT(std::pair(g.edges[e - 1].u, g.edges[e - 1].v), std::pair(g.edges[e].u, g.edges[e].v));
      EXPECT_EQ(g.edges[e].shared, intersection_size(g.nodes[static_cast<std::size_t>(g.edges[e].u)].members,
                                                     g.nodes[static_cast<std::size_t>(g.edges[e].v)].members));
    }
  }
}

TEST(Mapper, ParameterValidation) {
  MapperParams p;
  p.num_intervals = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.overlap = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.dbscan_eps = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
