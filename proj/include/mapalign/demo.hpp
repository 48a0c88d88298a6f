#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mapalign/ingest.hpp"
#include "mapalign/random.hpp"
#include "mapalign/serialize.hpp"

namespace mapalign {

/// Synthetic "before / after fine-tuning" pair of embeddings of the same
/// labelled sentences. Each topic is a ray whose radius grows with a latent
/// intensity s, so an l2-norm filter traces one branch per topic. In set a
/// two topics share a direction below s = 0.5 (entangled); in set b every
/// topic has its own direction (separated).
struct DemoOptions {
  std::size_t per_topic = 150;
  int dim = 16;
  double noise = 0.02;
  std::uint64_t seed = 7;
};

inline std::pair<RepresentationSet, RepresentationSet> make_demo_sets(const DemoOptions& opt = {}) {
  static const std::array<const char*, 3> topics = {"sports", "science", "politics"};
  static const std::array<std::array<const char*, 8>, 3> words = {{
      {"match", "goal", "team", "season", "coach", "league", "score", "player"},
      {"experiment", "theory", "energy", "cell", "particle", "data", "climate", "research"},
      {"election", "vote", "policy", "senate", "minister", "campaign", "law", "party"},
  }};
  static const std::array<const char*, 6> filler = {"report", "today", "new", "people", "week", "story"};

  Rng rng(opt.seed);
  const auto d = static_cast<Eigen::Index>(opt.dim);
  // Orthonormal-ish topic directions: unit axes 0..2 plus a shared direction.
  auto axis = [&](Eigen::Index k) {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(d);
    v(k) = 1.0;
    return v;
  };
  const std::array<Eigen::RowVectorXd, 3> dir_b = {axis(0), axis(1), axis(2)};
  const Eigen::RowVectorXd shared = (axis(1) + axis(2)).normalized();

  RepresentationSet a;
  RepresentationSet b;
  a.name = "pretrained";
  b.name = "finetuned";
  const std::size_t n = opt.per_topic * topics.size();
  a.matrix.resize(static_cast<Eigen::Index>(n), d);
  b.matrix.resize(static_cast<Eigen::Index>(n), d);
  std::vector<double> intensity;
  std::size_t row = 0;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    for (std::size_t i = 0; i < opt.per_topic; ++i, ++row) {
      char id[16];
      std::snprintf(id, sizeof id, "t%zu_%03zu", t, i);
      const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(opt.per_topic);
      const double radius = 1.0 + 2.0 * s;
      Eigen::RowVectorXd da = dir_b[t];
      if (t > 0 && s < 0.5) da = shared;  // entangled in the pretrained space
      Eigen::RowVectorXd xa = radius * da;
      Eigen::RowVectorXd xb = radius * dir_b[t];
      for (Eigen::Index c = 0; c < d; ++c) {
        xa(c) += opt.noise * rng.normal();
        xb(c) += opt.noise * rng.normal();
      }
      // float32 round trip keeps saved and in-memory sets identical.
      for (Eigen::Index c = 0; c < d; ++c) {
        xa(c) = static_cast<double>(static_cast<float>(xa(c)));
        xb(c) = static_cast<double>(static_cast<float>(xb(c)));
      }
      a.matrix.row(static_cast<Eigen::Index>(row)) = xa;
      b.matrix.row(static_cast<Eigen::Index>(row)) = xb;

      std::string text;
      for (int w = 0; w < 6; ++w) {
        if (w) text += ' ';
        text += rng.uniform() < 0.8 ? words[t][rng.below(words[t].size())] : filler[rng.below(filler.size())];
      }
      for (auto* set : {&a, &b}) {
        set->items.push_back(id);
        set->labels[id] = topics[t];
        set->meta[id] = text;
      }
      intensity.push_back(static_cast<double>(static_cast<float>(s)));
    }
  }
  a.numeric_attrs["intensity"] = intensity;
  b.numeric_attrs["intensity"] = intensity;
  a.validate();
  b.validate();
  return {std::move(a), std::move(b)};
}

/// Writes both manifests plus matching JSON and TOML run configs into `dir`.
inline std::vector<std::filesystem::path> write_demo(const std::filesystem::path& dir, const DemoOptions& opt = {}) {
  auto [a, b] = make_demo_sets(opt);
  std::vector<std::filesystem::path> out;
  out.push_back(save_representation_set(a, dir, "pretrained"));
  out.push_back(save_representation_set(b, dir, "finetuned"));
  Json config;
  config["inputs"] = {{"a", "pretrained.json"}, {"b", "finetuned.json"}};
  config["mapper"] = {{"filter", "l2_norm"}, {"num_intervals", 50}, {"overlap", 0.5}, {"dbscan_min_pts", 3}, {"dbscan_eps", "auto"}};
  config["layout"] = {{"lambdas", {0.0, 0.5, 1.0}}};
  config["alignment"] = {{"alpha", 1.0}, {"beta", 1.0}, {"gamma", 1.0}};
  config["motif"] = {{"tau", 0.05}};
  config["merge"] = {{"strategy", "conditional"}};
  config["output"] = "out";
  config["seed"] = 42;
  const auto json_path = dir / "demo.json";
  std::ofstream(json_path) << config.dump(2) << '\n';
  out.push_back(json_path);
  const auto toml_path = dir / "demo.toml";
  std::ofstream(toml_path) << "seed = 42\noutput = \"out\"\n\n"
                              "[inputs]\na = \"pretrained.json\"\nb = \"finetuned.json\"\n\n"
                              "[mapper]\nfilter = \"l2_norm\"\nnum_intervals = 50\noverlap = 0.5\ndbscan_min_pts = 3\ndbscan_eps = \"auto\"\n\n"
                              "[layout]\nlambdas = [0.0, 0.5, 1.0]\n\n"
                              "[alignment]\nalpha = 1.0\nbeta = 1.0\ngamma = 1.0\n\n"
                              "[motif]\ntau = 0.05\n\n[merge]\nstrategy = \"conditional\"\n";
  out.push_back(toml_path);
  return out;
}

}  // namespace mapalign
