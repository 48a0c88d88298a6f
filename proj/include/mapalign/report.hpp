#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mapalign/config.hpp"
#include "mapalign/pipeline.hpp"
#include "mapalign/serialize.hpp"

namespace mapalign {

/// Compact decimal rendering of a lambda for file names: 0, 0.5, 1, 2.25.
inline std::string lambda_tag(double lambda) {
  std::ostringstream s;
  s.precision(6);
  s << lambda;
  return s.str();
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write file", path.string());
  out << j.dump(2) << '\n';
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % 10];
}

}  // namespace detail

/// Static SVG of the overview: both mapper graphs side by side, inter-edges,
/// and bubble polygons shaded by content Jaccard.
inline std::string overview_svg(const JointGraph& joint, const LayoutResult& layout, const std::vector<AlignmentPair>& pairs,
                                const std::vector<BubblePair>& bubbles, double node_radius) {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  };
  for (const auto& p : layout.positions) grow(p);
  for (const auto& bp : bubbles) {
    for (const auto* g : {&bp.a, &bp.b}) {
      if (*g) {
        for (const auto& p : (*g)->polygon) grow(p);
      }
    }
  }
  if (layout.positions.empty()) x0 = y0 = 0.0, x1 = y1 = 1.0;
  const double pad = 4.0 * node_radius;
  x0 -= pad;
  y0 -= pad;
  x1 += pad;
  y1 += pad;
  const double scale = 900.0 / std::max(x1 - x0, 1e-9);
  auto X = [&](double x) { return detail::fmt((x - x0) * scale); };
  auto Y = [&](double y) { return detail::fmt((y1 - y) * scale); };  // y up

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(900.0) << "\" height=\"" << detail::fmt((y1 - y0) * scale)
    << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<g id=\"bubbles\">\n";
  for (std::size_t i = 0; i < bubbles.size(); ++i) {
    for (const auto* g : {&bubbles[i].a, &bubbles[i].b}) {
      if (!*g) continue;
      s << "<polygon data-pair=\"" << bubbles[i].pair_id << "\" fill=\"" << detail::palette(i) << "\" fill-opacity=\""
        << detail::fmt(0.1 + 0.4 * (*g)->content_jaccard) << "\" stroke=\"" << detail::palette(i) << "\" points=\"";
      for (const auto& p : (*g)->polygon) s << X(p.x) << ',' << Y(p.y) << ' ';
      s << "\"/>\n";
    }
  }
  s << "</g>\n<g id=\"inter\" stroke=\"#999\" stroke-opacity=\"0.15\">\n";
  const std::size_t na = joint.size_a();
  for (const auto& e : joint.inter_edges) {
    const auto& p = layout.positions[static_cast<std::size_t>(e.a)];
    const auto& q = layout.positions[na + static_cast<std::size_t>(e.b)];
    s << "<line x1=\"" << X(p.x) << "\" y1=\"" << Y(p.y) << "\" x2=\"" << X(q.x) << "\" y2=\"" << Y(q.y) << "\"/>\n";
  }
  s << "</g>\n<g id=\"intra\" stroke=\"#444\">\n";
  for (const auto* g : {&joint.graph_a, &joint.graph_b}) {
    const std::size_t off = g == &joint.graph_a ? 0 : na;
    for (const auto& e : g->edges) {
      const auto& p = layout.positions[off + static_cast<std::size_t>(e.u)];
      const auto& q = layout.positions[off + static_cast<std::size_t>(e.v)];
      s << "<line x1=\"" << X(p.x) << "\" y1=\"" << Y(p.y) << "\" x2=\"" << X(q.x) << "\" y2=\"" << Y(q.y) << "\"/>\n";
    }
  }
  s << "</g>\n<g id=\"nodes\" stroke=\"#222\">\n";
  for (std::size_t i = 0; i < layout.positions.size(); ++i) {
    s << "<circle cx=\"" << X(layout.positions[i].x) << "\" cy=\"" << Y(layout.positions[i].y) << "\" r=\""
      << detail::fmt(node_radius * scale) << "\" fill=\"" << (i < na ? "#cfe0f3" : "#fbe3c9") << "\"/>\n";
  }
  s << "</g>\n</svg>\n";
  (void)pairs;
  return s.str();
}

/// Runs the whole pipeline and writes the report bundle into config.output.
/// Returns the relative paths written, in write order.
inline std::vector<std::string> run_pipeline(const RunConfig& config) {
  namespace fs = std::filesystem;
  if (config.output.empty()) throw Error("invalid_config", "an output directory is required");
  const Analysis analysis = prepare(config);
  const auto& joint = analysis.joint;
  fs::create_directories(config.output / "merges");
  std::vector<std::string> written;
  auto emit = [&](const std::string& rel, const Json& j) {
    write_json(config.output / rel, j);
    written.push_back(rel);
  };

  emit("mappers.json", Json{{"seed", config.seed},
                            {"a", to_json(joint.graph_a, &analysis.input.set_a)},
                            {"b", to_json(joint.graph_b, &analysis.input.set_b)}});
  emit("joint.json", to_json(joint));

  LayoutResult primary;
  for (double lambda : config.lambdas) {
    auto layout = display_layout(joint, config, lambda);
    emit("layout_" + lambda_tag(lambda) + ".json", to_json(layout, joint.size_a()));
    if (lambda == config.primary_lambda()) primary = std::move(layout);
  }

  const auto alignments = compute_alignments(joint, config.discovery(), config.tau);
  emit("alignments.json", to_json(alignments));
  const auto bubbles = compute_bubbles(alignments.pairs, joint, primary, config.bubbles);
  emit("bubbles.json", to_json(bubbles));
  emit("motifs.json", motif_histogram(alignments.pairs));

  for (const auto& pair : alignments.pairs) {
    const auto seq = greedy_merge(pair, joint, config.strategy);
    const auto view = merge_view(seq, std::nullopt, joint, primary, config.membrane_params());
    emit("merges/" + std::to_string(pair.id) + ".json", to_json(view, pair.id, joint));
  }

  {
    std::ofstream svg(config.output / "overview.svg", std::ios::binary);
    svg << overview_svg(joint, primary, alignments.pairs, bubbles, config.bubbles.node_radius);
    written.push_back("overview.svg");
  }
  Json summary;
  summary["params"] = to_json(config);
  summary["items"] = analysis.input.shared_items.size();
  summary["nodes"] = {{"a", joint.size_a()}, {"b", joint.size_b()}};
  summary["inter_edges"] = joint.inter_edges.size();
  summary["pairs"] = alignments.pairs.size();
  summary["warnings"] = analysis.warnings;
  summary["files"] = written;
  emit("summary.json", summary);
  return written;
}

}  // namespace mapalign
