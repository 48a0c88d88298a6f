#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mapalign/csv.hpp"
#include "mapalign/error.hpp"
#include "mapalign/geometry.hpp"

namespace mapalign {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One model's embeddings of an item collection. Row i of `matrix` belongs
/// to `items[i]`. Treat as immutable once built through `validated`.
struct RepresentationSet {
  std::string name;
  std::vector<std::string> items;
  Matrix matrix;
  std::map<std::string, std::string> labels;
  std::map<std::string, std::string> meta;
  /// attr name -> value per row (NaN where the attribute file had no entry).
  std::map<std::string, std::vector<double>> numeric_attrs;

  std::size_t size() const { return items.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }

  /// Row index of an item id, or -1.
  std::ptrdiff_t row_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Checks the invariants and builds the id index. Throws Error.
  void validate() {
    if (items.size() < 2) {
      throw Error("too_few_items", "a representation set needs at least 2 items", name);
    }
    if (matrix.cols() < 1) throw Error("dimension_mismatch", "d must be at least 1", name);
    if (static_cast<std::size_t>(matrix.rows()) != items.size()) {
      throw Error("dimension_mismatch", "matrix row count differs from item count",
                  std::to_string(matrix.rows()) + " rows vs " + std::to_string(items.size()) + " items");
    }
    index_.clear();
    index_.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!index_.emplace(items[i], i).second) {
        throw Error("duplicate_id", "duplicate item id", items[i]);
      }
    }
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        if (!std::isfinite(matrix(r, c))) {
          throw Error("non_finite", "non-finite matrix entry",
                      "row " + std::to_string(r) + ", col " + std::to_string(c));
        }
      }
    }
    for (const auto& [attr, values] : numeric_attrs) {
      if (values.size() != items.size()) {
        throw Error("dimension_mismatch", "attribute length differs from item count", attr);
      }
    }
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Both sides of a comparison plus the ids they share, in set_a's order.
struct SessionInput {
  RepresentationSet set_a;
  RepresentationSet set_b;
  std::vector<std::string> shared_items;
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(csv::read_file(path.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    // stod rejects "nan"/"inf" spellings inconsistently; accept them so the
    // finiteness check reports the position instead of a parse error.
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "nan") return std::nan("");
    if (lower == "inf" || lower == "+inf") return INFINITY;
    if (lower == "-inf") return -INFINITY;
    throw Error("parse_error", "not a number: '" + s + "'", where);
  }
}

/// Two-column id,value CSV; a first row whose id column is literally "id" is a header.
inline std::map<std::string, std::string> read_pairs(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  auto rows = csv::read(path.string());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i == 0 && !row.empty() && row[0] == "id") continue;
    if (row.size() < 2) throw Error("parse_error", "expected id,value row", path.string() + ":" + std::to_string(i + 1));
    out[row[0]] = row[1];
  }
  return out;
}

inline void read_attrs(const std::filesystem::path& path, RepresentationSet& set) {
  auto rows = csv::read(path.string());
  if (rows.empty() || rows[0].empty() || rows[0][0] != "id") {
    throw Error("parse_error", "attribute CSV needs an `id,attr...` header", path.string());
  }
  const auto& header = rows[0];
  std::unordered_map<std::string, std::size_t> row_index;
  for (std::size_t i = 0; i < set.items.size(); ++i) row_index[set.items[i]] = i;
  for (std::size_t c = 1; c < header.size(); ++c) {
    set.numeric_attrs[header[c]].assign(set.items.size(), std::nan(""));
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto it = row_index.find(row.at(0));
    if (it == row_index.end()) continue;
    for (std::size_t c = 1; c < header.size() && c < row.size(); ++c) {
      set.numeric_attrs[header[c]][it->second] =
          parse_number(row[c], path.string() + ":" + std::to_string(r + 1));
    }
  }
}

inline RepresentationSet load_csv_matrix(const std::filesystem::path& path) {
  auto rows = csv::read(path.string());
  if (rows.empty() || rows[0].empty() || rows[0][0] != "id") {
    throw Error("parse_error", "CSV representation needs an `id,x0,...` header", path.string());
  }
  const std::size_t d = rows[0].size() - 1;
  const std::size_t n = rows.size() - 1;
  RepresentationSet set;
  set.name = path.stem().string();
  set.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  set.items.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    if (row.size() != d + 1) {
      throw Error("dimension_mismatch", "CSV row width differs from header",
                  "line " + std::to_string(r + 2));
    }
    set.items.push_back(row[0]);
    for (std::size_t c = 0; c < d; ++c) {
      set.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(row[c + 1], "line " + std::to_string(r + 2));
    }
  }
  return set;
}

}  // namespace detail

/// Loads a manifest (JSON + raw float32 payload) or a single `id,x0,...` CSV.
inline RepresentationSet load_representation_set(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error("missing_file", "representation manifest not found", path.string());

  if (path.extension() == ".csv") {
    auto set = detail::load_csv_matrix(path);
    set.validate();
    return set;
  }

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(csv::read_file(path.string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("parse_error", "manifest is not valid JSON", e.what());
  }
  const fs::path base = path.parent_path();
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!manifest.contains(key)) throw Error("invalid_manifest", std::string("manifest lacks '") + key + "'", path.string());
    return manifest.at(key);
  };

  RepresentationSet set;
  set.name = manifest.value("name", path.stem().string());
  const auto n = field("n").get<std::int64_t>();
  const auto d = field("d").get<std::int64_t>();
  if (n < 2 || d < 1) throw Error("dimension_mismatch", "manifest declares n < 2 or d < 1", path.string());
  if (manifest.value("dtype", std::string("f32")) != "f32") {
    throw Error("invalid_manifest", "only dtype f32 is supported", path.string());
  }

  const fs::path matrix_path = base / field("matrix").get<std::string>();
  if (!fs::exists(matrix_path)) throw Error("missing_file", "matrix payload not found", matrix_path.string());
  const std::string payload = csv::read_file(matrix_path.string());
  const auto expected = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(d) * 4U;
  if (payload.size() != expected) {
    throw Error("dimension_mismatch", "payload size does not match n*d*4",
                "expected " + std::to_string(expected) + " bytes, got " + std::to_string(payload.size()));
  }
  set.matrix.resize(n, d);
  for (std::int64_t i = 0; i < n * d; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[static_cast<std::size_t>(i * 4 + b)])) << (8 * b);
    }
    set.matrix.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
  }

  set.items = detail::read_lines(base / field("items").get<std::string>());
  if (static_cast<std::int64_t>(set.items.size()) != n) {
    throw Error("dimension_mismatch", "item list length differs from n",
                std::to_string(set.items.size()) + " ids vs n=" + std::to_string(n));
  }
  if (manifest.contains("labels")) set.labels = detail::read_pairs(base / manifest["labels"].get<std::string>());
  if (manifest.contains("meta")) set.meta = detail::read_pairs(base / manifest["meta"].get<std::string>());
  if (manifest.contains("attrs")) detail::read_attrs(base / manifest["attrs"].get<std::string>(), set);
  set.validate();
  return set;
}

/// Writes `<dir>/<stem>.json` plus its payload files. Reloading reproduces
/// the matrix exactly when it holds float32-representable values.
inline std::filesystem::path save_representation_set(const RepresentationSet& set,
                                                     const std::filesystem::path& dir,
                                                     const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["name"] = set.name;
  manifest["n"] = set.size();
  manifest["d"] = set.dim();
  manifest["dtype"] = "f32";
  manifest["matrix"] = stem + ".f32";
  manifest["items"] = stem + ".ids";

  {
    std::ofstream out(dir / (stem + ".f32"), std::ios::binary);
    for (Eigen::Index i = 0; i < set.matrix.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(set.matrix.data()[i]));
      const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                             static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
      out.write(bytes, 4);
    }
  }
  {
    std::ofstream out(dir / (stem + ".ids"));
    for (const auto& id : set.items) out << id << '\n';
  }
  auto write_pairs = [&](const std::map<std::string, std::string>& m, const std::string& key, const std::string& col) {
    if (m.empty()) return;
    const std::string file = stem + "." + key + ".csv";
    std::ofstream out(dir / file);
    out << "id," << col << '\n';
    for (const auto& [id, v] : m) out << csv::escape(id) << ',' << csv::escape(v) << '\n';
    manifest[key] = file;
  };
  write_pairs(set.labels, "labels", "label");
  write_pairs(set.meta, "meta", "text");
  if (!set.numeric_attrs.empty()) {
    const std::string file = stem + ".attrs.csv";
    std::ofstream out(dir / file);
    out << "id";
    for (const auto& [attr, _] : set.numeric_attrs) out << ',' << csv::escape(attr);
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < set.size(); ++i) {
      out << csv::escape(set.items[i]);
      for (const auto& [_, values] : set.numeric_attrs) out << ',' << values[i];
      out << '\n';
    }
    manifest["attrs"] = file;
  }
  const fs::path manifest_path = dir / (stem + ".json");
  std::ofstream(manifest_path) << manifest.dump(2) << '\n';
  return manifest_path;
}

/// Shared ids in set_a's order. Throws when fewer than 2 are shared.
inline SessionInput intersect_items(const RepresentationSet& a, const RepresentationSet& b) {
  SessionInput input{a, b, {}};
  for (const auto& id : a.items) {
    if (b.row_of(id) >= 0) input.shared_items.push_back(id);
  }
  if (input.shared_items.size() < 2) {
    throw Error("insufficient_overlap", "the two representation sets share fewer than 2 items",
                std::to_string(input.shared_items.size()) + " shared");
  }
  return input;
}

/// Copy of `set` holding only `ids`, rows reordered to match.
inline RepresentationSet restrict_to(const RepresentationSet& set, const std::vector<std::string>& ids) {
  RepresentationSet out;
  out.name = set.name;
  out.items = ids;
  out.matrix.resize(static_cast<Eigen::Index>(ids.size()), set.matrix.cols());
  for (const auto& [attr, _] : set.numeric_attrs) out.numeric_attrs[attr].reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = set.row_of(ids[i]);
    if (row < 0) throw Error("unknown_item", "item not in representation set", ids[i]);
    out.matrix.row(static_cast<Eigen::Index>(i)) = set.matrix.row(row);
    if (auto it = set.labels.find(ids[i]); it != set.labels.end()) out.labels.insert(*it);
    if (auto it = set.meta.find(ids[i]); it != set.meta.end()) out.meta.insert(*it);
    for (const auto& [attr, values] : set.numeric_attrs) {
      out.numeric_attrs[attr].push_back(values[static_cast<std::size_t>(row)]);
    }
  }
  out.validate();
  return out;
}

/// Centered PCA scores on the two leading principal axes, one point per row.
/// Each axis is signed so its largest-magnitude loading is positive.
inline std::vector<Vec2> project_2d(const RepresentationSet& set) {
  const Eigen::Index n = set.matrix.rows();
  const Eigen::Index d = set.matrix.cols();
  if (n < 2) throw Error("too_few_items", "projection needs at least 2 items");
  const Eigen::RowVectorXd mean = set.matrix.colwise().mean();
  const Eigen::MatrixXd centered = set.matrix.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  if (cov.trace() <= 0.0) throw Error("degenerate_projection", "all rows are identical; projection undefined");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigensolver_failed", "covariance eigendecomposition failed");

  std::vector<Vec2> out(static_cast<std::size_t>(n));
  const Eigen::Index axes = std::min<Eigen::Index>(2, d);
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index a = 0; a < axes; ++a) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - a);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    scores.col(a) = centered * axis;
  }
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = {scores(i, 0), scores(i, 1)};
  return out;
}

}  // namespace mapalign
