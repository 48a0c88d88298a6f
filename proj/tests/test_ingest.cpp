#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mapalign/ingest.hpp"
#include "mapalign/random.hpp"
#include "oracles/oracles.hpp"

namespace fs = std::filesystem;
using namespace mapalign;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(MAPALIGN_SCRATCH_DIR) / "ingest" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_f32(const fs::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

void write_manifest(const fs::path& dir, int n, int d) {
  std::ofstream(dir / "m.json") << R"({"name": "m", "n": )" << n << R"(, "d": )" << d
                                << R"(, "dtype": "f32", "matrix": "m.f32", "items": "m.ids"})";
  std::ofstream ids(dir / "m.ids");
  for (int i = 0; i < n; ++i) ids << "id" << i << '\n';
}

RepresentationSet make_set(std::vector<std::string> ids, int d, std::uint64_t seed) {
  RepresentationSet s;
  s.name = "s";
  s.items = std::move(ids);
  s.matrix.resize(static_cast<Eigen::Index>(s.items.size()), d);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < s.matrix.size(); ++i) s.matrix.data()[i] = static_cast<float>(rng.normal());
  s.validate();
  return s;
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

}  // namespace

TEST(Ingest, ManifestWithExactPayloadLoads) {
  const auto dir = scratch("exact");
  write_manifest(dir, 4, 3);
  write_f32(dir / "m.f32", std::vector<float>(12, 1.5f));
  const auto set = load_representation_set(dir / "m.json");
  EXPECT_EQ(set.size(), 4U);
  EXPECT_EQ(set.dim(), 3U);
  EXPECT_EQ(set.matrix(3, 2), 1.5);
}

TEST(Ingest, ShortPayloadIsDimensionMismatch) {
  const auto dir = scratch("short");
  write_manifest(dir, 4, 3);
  write_f32(dir / "m.f32", std::vector<float>(9, 0.0f));
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "m.json"); }), "dimension_mismatch");
}

TEST(Ingest, CsvVariant) {
  const auto dir = scratch("csv");
  std::ofstream(dir / "m.csv") << "id,x0,x1\na,1,2\nb,3,4\nc,5,6\nd,7,8\ne,9,10\n";
  const auto set = load_representation_set(dir / "m.csv");
  EXPECT_EQ(set.size(), 5U);
  EXPECT_EQ(set.dim(), 2U);
  EXPECT_EQ(set.matrix(4, 1), 10.0);
  EXPECT_EQ(set.row_of("c"), 2);
}

TEST(Ingest, Errors) {
  const auto dir = scratch("errors");
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "absent.json"); }), "missing_file");
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "bad.json"); }), "parse_error");
  std::ofstream(dir / "dup.csv") << "id,x0\na,1\na,2\n";
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "dup.csv"); }), "duplicate_id");
  std::ofstream(dir / "nan.csv") << "id,x0\na,1\nb,nan\n";
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "nan.csv"); }), "non_finite");
  std::ofstream(dir / "one.csv") << "id,x0\na,1\n";
  EXPECT_EQ(code_of([&] { load_representation_set(dir / "one.csv"); }), "too_few_items");
}

TEST(Ingest, BinaryRoundTripIsBitExact) {
  const auto dir = scratch("roundtrip");
  auto set = make_set({"a", "b", "c", "d", "e"}, 7, 4);
  set.labels = {{"a", "x"}, {"c", "y, with comma"}};
  set.meta = {{"b", "quoted \"text\""}};
  set.numeric_attrs["score"] = {0.1, 0.2, 0.3, 0.4, 0.5};
  set.validate();
  const auto path = save_representation_set(set, dir, "rt");
  const auto back = load_representation_set(path);
  ASSERT_EQ(back.matrix.rows(), set.matrix.rows());
  ASSERT_EQ(back.matrix.cols(), set.matrix.cols());
  EXPECT_EQ(std::memcmp(back.matrix.data(), set.matrix.data(), sizeof(double) * static_cast<std::size_t>(set.matrix.size())), 0);
  EXPECT_EQ(back.items, set.items);
  EXPECT_EQ(back.labels, set.labels);
  EXPECT_EQ(back.meta, set.meta);
  EXPECT_EQ(back.numeric_attrs.at("score"), set.numeric_attrs.at("score"));
}

TEST(Ingest, IntersectItems) {
  const auto a = make_set({"a", "b", "c"}, 2, 1);
  const auto b = make_set({"b", "c", "d"}, 2, 2);
  EXPECT_EQ(intersect_items(a, b).shared_items, (std::vector<std::string>{"b", "c"}));

  std::vector<std::string> hundred;
  for (int i = 0; i < 100; ++i) hundred.push_back("i" + std::to_string(i));
  EXPECT_EQ(intersect_items(make_set(hundred, 2, 3), make_set(hundred, 2, 4)).shared_items.size(), 100U);

  const auto c = make_set({"x", "y"}, 2, 5);
  EXPECT_EQ(code_of([&] { intersect_items(a, c); }), "insufficient_overlap");
}

TEST(Ingest, RestrictReordersRows) {
  const auto a = make_set({"a", "b", "c", "d"}, 3, 9);
  const auto r = restrict_to(a, {"d", "b"});
  EXPECT_EQ(r.items, (std::vector<std::string>{"d", "b"}));
  EXPECT_EQ(r.matrix.row(0), a.matrix.row(3));
  EXPECT_EQ(r.matrix.row(1), a.matrix.row(1));
}

TEST(Projection, AxisAlignedCenteredInputIsIdentityUpToSign) {
  RepresentationSet s;
  s.name = "p";
  s.items = {"a", "b", "c", "d"};
  s.matrix.resize(4, 2);
  s.matrix << 3, 0, -3, 0, 0, 1, 0, -1;
  s.validate();
  const auto p = project_2d(s);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(p[i].x), std::abs(s.matrix(static_cast<Eigen::Index>(i), 0)), 1e-12);
    EXPECT_NEAR(std::abs(p[i].y), std::abs(s.matrix(static_cast<Eigen::Index>(i), 1)), 1e-12);
  }
}

TEST(Projection, PlanarPointsReconstructExactly) {
  RepresentationSet s;
  s.name = "p";
  Rng rng(2);
  const int n = 20;
  s.matrix.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    s.items.push_back("i" + std::to_string(i));
    s.matrix.row(i) << rng.normal(), 2.0 * rng.normal(), 0.0;
  }
  s.validate();
  const auto p = project_2d(s);
  // Pairwise distances survive when all variance lies in two dimensions.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      EXPECT_NEAR(distance(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]), (s.matrix.row(i) - s.matrix.row(j)).norm(), 1e-10);
    }
  }
}

TEST(Projection, MatchesJacobiOracle) {
  RepresentationSet s;
  s.name = "p";
  Rng rng(8);
  const int n = 50;
  const int d = 10;
  s.matrix.resize(n, d);
  for (int i = 0; i < n; ++i) {
    s.items.push_back("i" + std::to_string(i));
    for (int c = 0; c < d; ++c) s.matrix(i, c) = rng.normal() * (1.0 + c);
  }
  s.validate();
  const auto p = project_2d(s);

  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) mean[static_cast<std::size_t>(c)] += s.matrix(i, c) / n;
  }
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
            (s.matrix(i, r) - mean[static_cast<std::size_t>(r)]) * (s.matrix(i, c) - mean[static_cast<std::size_t>(c)]) / (n - 1);
      }
    }
  }
  const auto [values, vectors] = oracle::jacobi(cov);
  for (int axis = 0; axis < 2; ++axis) {
    const auto col = static_cast<std::size_t>(d - 1 - axis);
    for (int i = 0; i < n; ++i) {
      double score = 0.0;
      for (int c = 0; c < d; ++c) score += (s.matrix(i, c) - mean[static_cast<std::size_t>(c)]) * vectors[static_cast<std::size_t>(c)][col];
      const double got = axis == 0 ? p[static_cast<std::size_t>(i)].x : p[static_cast<std::size_t>(i)].y;
      EXPECT_NEAR(std::abs(got), std::abs(score), 1e-8);
    }
  }
}
