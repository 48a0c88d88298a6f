#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mapalign/error.hpp"
#include "mapalign/item_set.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/motif_types.hpp"
#include "mapalign/random.hpp"

namespace mapalign {

/// Edge weights of the joint affinity: alpha on graph_a edges, beta on
/// graph_b edges, gamma on inter-edges (optionally times the edge's Jaccard).
struct AffinityWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  bool scale_inter_by_jaccard = false;

  void validate() const {
    if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) throw Error("invalid_weights", "affinity weights must be >= 0");
    if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) throw Error("invalid_weights", "affinity weights are all zero");
  }
};

struct AlignmentPair {
  int id = 0;
  std::vector<int> nodes_a;  // graph_a node ids, ascending
  std::vector<int> nodes_b;
  ItemSet items_a;
  ItemSet items_b;
  double content_jaccard = 0.0;
  double coherence = 0.0;
  std::optional<MotifLabel> motif;
};

/// Eigenpairs of the normalized Laplacian over the non-isolated nodes.
struct SpectralDecomposition {
  std::vector<int> nodes;  // joint indices, ascending
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column j pairs with eigenvalues(j)
};

/// Row r of `vectors` embeds joint node `nodes[r]`.
struct SpectralEmbedding {
  std::vector<int> nodes;
  Eigen::MatrixXd vectors;
  std::vector<double> eigenvalues;
};

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

struct AlignmentResult {
  std::vector<AlignmentPair> pairs;
  std::vector<double> eigenvalues;
  int k = 0;
  std::uint64_t seed = 0;
  AffinityWeights weights;
};

/// Symmetric |V|×|V| affinity over joint indices (graph_a first), zero diagonal.
inline Eigen::MatrixXd build_affinity(const JointGraph& joint, const AffinityWeights& w) {
  w.validate();
  const auto na = static_cast<Eigen::Index>(joint.size_a());
  const auto n = static_cast<Eigen::Index>(joint.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : joint.graph_a.edges) {
    W(e.u, e.v) = W(e.v, e.u) = w.alpha;
  }
  for (const auto& e : joint.graph_b.edges) {
    W(na + e.u, na + e.v) = W(na + e.v, na + e.u) = w.beta;
  }
  for (const auto& e : joint.inter_edges) {
    const double v = w.scale_inter_by_jaccard ? w.gamma * e.weight : w.gamma;
    W(e.a, na + e.b) = W(na + e.b, e.a) = v;
  }
  return W;
}

/// L = I - D^{-1/2} W D^{-1/2} over nodes with positive degree.
inline SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& W) {
  SpectralDecomposition out;
  const Eigen::VectorXd degree = W.rowwise().sum();
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    if (degree(i) > 0.0) out.nodes.push_back(static_cast<int>(i));
  }
  const auto m = static_cast<Eigen::Index>(out.nodes.size());
  out.laplacian = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const double wrc = W(out.nodes[r], out.nodes[c]);
      if (wrc != 0.0) out.laplacian(r, c) -= wrc / std::sqrt(degree(out.nodes[r]) * degree(out.nodes[c]));
    }
  }
  if (m == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.laplacian);
  if (solver.info() != Eigen::Success) throw Error("eigensolver_failed", "normalized Laplacian eigen-solve did not converge");
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  // Fix each eigenvector's sign: first entry with |v| > 1e-12 is positive.
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = out.eigenvectors(i, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) out.eigenvectors.col(j) *= -1.0;
        break;
      }
    }
  }
  return out;
}

inline SpectralEmbedding embed(const SpectralDecomposition& dec, int k) {
  const auto m = static_cast<int>(dec.nodes.size());
  k = std::clamp(k, 0, m);
  SpectralEmbedding out;
  out.nodes = dec.nodes;
  out.vectors = dec.eigenvectors.leftCols(k);
  out.eigenvalues.assign(dec.eigenvalues.data(), dec.eigenvalues.data() + dec.eigenvalues.size());
  return out;
}

/// Rows of the k smallest-eigenvalue eigenvectors of the normalized Laplacian.
inline SpectralEmbedding spectral_embed(const Eigen::MatrixXd& W, int k) { return embed(spectral_decompose(W), k); }

/// Elbow of the ascending spectrum: k = 1 + argmax_i (l[i+1] - 2 l[i] + l[i-1])
/// over the first min(k_max, n) eigenvalues, first index on ties, clamped to
/// [2, m]. `user_k` wins when given.
inline int choose_k(std::span<const double> eigenvalues, int k_max = 50, std::optional<int> user_k = std::nullopt) {
  if (user_k) return *user_k;
  const int m = std::min<int>(k_max, static_cast<int>(eigenvalues.size()));
  if (m < 3) return std::min(2, std::max(m, 1));
  int best_i = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= m - 2; ++i) {
    const double second = eigenvalues[static_cast<std::size_t>(i + 1)] - 2.0 * eigenvalues[static_cast<std::size_t>(i)] +
                          eigenvalues[static_cast<std::size_t>(i - 1)];
    if (second > best) {
      best = second;
      best_i = i;
    }
  }
  return std::clamp(best_i + 1, 2, m);
}

namespace detail {

inline KMeansResult lloyd(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int max_iters) {
  const auto n = X.rows();
  Rng rng(seed);
  Eigen::MatrixXd C(k, X.cols());

  // k-means++ seeding.
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    C.row(c) = X.row(pick);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (X.row(i) - C.row(c)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2[static_cast<std::size_t>(i)];
      if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (X.row(i) - C.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // Recompute centroids; an empty cluster takes the point farthest from its centroid.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        C.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int li = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(li)] <= 1) continue;
        const double d = (X.row(i) - C.row(li)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      C.row(c) = X.row(far);
      reseeded = true;
    }
    if (!changed && !reseeded && it > 0) break;
  }
  KMeansResult out;
  out.labels = std::move(labels);
  out.centroids = std::move(C);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.inertia += (X.row(i) - out.centroids.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return out;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations (at most 300), restarted
/// `n_init` times from seeds derived from `seed`; the lowest inertia wins.
/// Labels are renumbered in order of first appearance.
inline KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int n_init = 10) {
  const auto n = static_cast<int>(X.rows());
  if (k < 1 || k > n) throw Error("invalid_params", "k-means needs 1 <= k <= number of points");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, n_init); ++r) {
    auto run = detail::lloyd(X, k, derive_seed(seed, static_cast<std::uint64_t>(r)), 300);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int& l : best.labels) {
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
    l = remap[static_cast<std::size_t>(l)];
  }
  Eigen::MatrixXd centroids(k, X.cols());
  for (int c = 0; c < k; ++c) {
    if (remap[static_cast<std::size_t>(c)] >= 0) centroids.row(remap[static_cast<std::size_t>(c)]) = best.centroids.row(c);
  }
  best.centroids = std::move(centroids);
  return best;
}

/// Per-point silhouette (b - a) / max(a, b) with Euclidean distances.
/// Members of singleton clusters, and every point when only one cluster
/// exists, score 0.
inline std::vector<double> silhouette_samples(const Eigen::MatrixXd& X, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(X.rows());
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int li = labels[i];
    if (sizes[static_cast<std::size_t>(li)] <= 1) continue;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(labels[j])] +=
          (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).norm();
    }
    const double a = sum[static_cast<std::size_t>(li)] / (sizes[static_cast<std::size_t>(li)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == li || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sum[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

/// Content Jaccard of the pair's item unions (0 when a side is empty) and
/// mean silhouette of its embedded nodes. `silhouettes` is indexed like
/// embedding rows; `row_of_joint` maps joint index -> row or -1.
inline void score_pair(AlignmentPair& pair, const JointGraph& joint, std::span<const double> silhouettes,
                       std::span<const int> row_of_joint) {
  pair.items_a.clear();
  pair.items_b.clear();
  for (int v : pair.nodes_a) pair.items_a = set_union(pair.items_a, joint.graph_a.nodes[static_cast<std::size_t>(v)].members);
  for (int v : pair.nodes_b) pair.items_b = set_union(pair.items_b, joint.graph_b.nodes[static_cast<std::size_t>(v)].members);
  pair.content_jaccard =
      (pair.items_a.empty() || pair.items_b.empty()) ? 0.0 : jaccard(pair.items_a, pair.items_b);

  double sum = 0.0;
  std::size_t count = 0;
  auto add = [&](int joint_index) {
    const int row = row_of_joint[static_cast<std::size_t>(joint_index)];
    if (row >= 0) sum += silhouettes[static_cast<std::size_t>(row)];
    ++count;
  };
  const int na = static_cast<int>(joint.size_a());
  for (int v : pair.nodes_a) add(v);
  for (int v : pair.nodes_b) add(na + v);
  pair.coherence = count > 0 ? sum / static_cast<double>(count) : 0.0;
}

struct DiscoveryOptions {
  AffinityWeights weights;
  std::optional<int> k;
  std::uint64_t seed = 0;
  int k_max = 50;
  int kmeans_restarts = 10;
};

/// Alignment-aware spectral clustering of the joint graph. Every node lands
/// in exactly one pair; isolated nodes become singleton pairs. Pairs are
/// sorted by content Jaccard, descending.
inline AlignmentResult discover_alignments(const JointGraph& joint, const DiscoveryOptions& opt) {
  const Eigen::MatrixXd W = build_affinity(joint, opt.weights);
  const auto dec = spectral_decompose(W);
  const int embedded = static_cast<int>(dec.nodes.size());

  AlignmentResult result;
  result.seed = opt.seed;
  result.weights = opt.weights;
  result.eigenvalues.assign(dec.eigenvalues.data(), dec.eigenvalues.data() + dec.eigenvalues.size());

  std::vector<int> cluster_of(joint.size(), -1);
  std::vector<int> row_of_joint(joint.size(), -1);
  std::vector<double> silhouettes;
  int clusters = 0;
  if (embedded > 0) {
    int k = choose_k(result.eigenvalues, opt.k_max, opt.k);
    k = std::clamp(k, 1, embedded);
    result.k = k;
    const auto emb = embed(dec, k);
    const auto km = kmeans(emb.vectors, k, opt.seed, opt.kmeans_restarts);
    silhouettes = silhouette_samples(emb.vectors, km.labels);
    for (int r = 0; r < embedded; ++r) {
      cluster_of[static_cast<std::size_t>(dec.nodes[static_cast<std::size_t>(r)])] = km.labels[static_cast<std::size_t>(r)];
      row_of_joint[static_cast<std::size_t>(dec.nodes[static_cast<std::size_t>(r)])] = r;
    }
    clusters = k;
  }
  for (auto& c : cluster_of) {
    if (c < 0) c = clusters++;
  }

  const int na = static_cast<int>(joint.size_a());
  std::vector<AlignmentPair> pairs(static_cast<std::size_t>(clusters));
  for (int v = 0; v < static_cast<int>(joint.size()); ++v) {
    auto& pair = pairs[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(v)])];
    if (v < na) {
      pair.nodes_a.push_back(v);
    } else {
      pair.nodes_b.push_back(v - na);
    }
  }
  std::erase_if(pairs, [](const AlignmentPair& p) { return p.nodes_a.empty() && p.nodes_b.empty(); });
  for (auto& p : pairs) score_pair(p, joint, silhouettes, row_of_joint);

  auto first_node = [na](const AlignmentPair& p) { return p.nodes_a.empty() ? na + p.nodes_b.front() : p.nodes_a.front(); };
  std::stable_sort(pairs.begin(), pairs.end(), [&](const AlignmentPair& x, const AlignmentPair& y) {
    if (x.content_jaccard != y.content_jaccard) return x.content_jaccard > y.content_jaccard;
    return first_node(x) < first_node(y);
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].id = static_cast<int>(i);
  result.pairs = std::move(pairs);
  return result;
}

}  // namespace mapalign
