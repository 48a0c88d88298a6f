#pragma once

#include <future>
#include <optional>
#include <string>
#include <vector>

#include "mapalign/align_local.hpp"
#include "mapalign/bubbles.hpp"
#include "mapalign/config.hpp"
#include "mapalign/ingest.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/mapper.hpp"
#include "mapalign/membrane.hpp"
#include "mapalign/merge.hpp"
#include "mapalign/motif.hpp"

namespace mapalign {

/// Inputs restricted to the shared items, both mapper graphs, and the joint graph.
struct Analysis {
  SessionInput input;
  JointGraph joint;
  std::vector<std::string> warnings;
};

inline Analysis prepare(const SessionInput& raw, const MapperParams& mapper_a, const MapperParams& mapper_b) {
  Analysis out;
  out.input = intersect_items(raw.set_a, raw.set_b);
  const std::size_t dropped_a = raw.set_a.size() - out.input.shared_items.size();
  const std::size_t dropped_b = raw.set_b.size() - out.input.shared_items.size();
  if (dropped_a || dropped_b) {
    out.warnings.push_back("dropped " + std::to_string(dropped_a) + " items only in a and " + std::to_string(dropped_b) +
                           " items only in b");
  }
  out.input.set_a = restrict_to(raw.set_a, out.input.shared_items);
  out.input.set_b = restrict_to(raw.set_b, out.input.shared_items);
  if (to_json(mapper_a) != to_json(mapper_b)) {
    out.warnings.push_back("mapper parameters differ between sides; graphs are not built under identical configurations");
  }
  auto ga = build_mapper(out.input.set_a, mapper_a);
  auto gb = build_mapper(out.input.set_b, mapper_b);
  gb.universe = ga.universe;  // identical id lists after restriction
  out.joint = build_joint(std::move(ga), std::move(gb));
  return out;
}

inline Analysis prepare(const RunConfig& c) {
  SessionInput raw;
  raw.set_a = load_representation_set(c.input_a);
  raw.set_b = load_representation_set(c.input_b);
  return prepare(raw, c.mapper_a, c.mapper_for_b());
}

/// Global layout for `lambda`, with graph b shifted to the right of graph a.
inline LayoutResult display_layout(const JointGraph& joint, const RunConfig& c, double lambda,
                                   std::optional<std::vector<Vec2>> warm_start = std::nullopt) {
  auto r = optimize_layout(joint, c.layout_for(lambda), std::move(warm_start));
  return separate_side_by_side(std::move(r), joint.size_a(), c.side_margin * c.layout.edge_length);
}

inline AlignmentResult compute_alignments(const JointGraph& joint, const DiscoveryOptions& opt, double tau) {
  auto result = discover_alignments(joint, opt);
  classify_pairs(result.pairs, joint, tau);
  return result;
}

/// Bubbles for every pair, computed concurrently and returned in pair order.
inline std::vector<BubblePair> compute_bubbles(const std::vector<AlignmentPair>& pairs, const JointGraph& joint,
                                               const LayoutResult& layout, const BubbleParams& params) {
  std::vector<std::future<BubblePair>> jobs;
  jobs.reserve(pairs.size());
  for (const auto& p : pairs) {
    jobs.push_back(std::async(std::launch::async, [&p, &joint, &layout, &params] { return bubble_set(p, joint, layout, params); }));
  }
  std::vector<BubblePair> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

/// A merge sequence replayed to `step` together with its membrane layout.
struct MergeView {
  MergeSequence sequence;
  std::size_t step = 0;
  MergeState state;
  MembraneLayout membrane;
};

inline MergeView merge_view(const MergeSequence& seq, std::optional<std::size_t> step, const JointGraph& joint,
                            const LayoutResult& layout, const MembraneParams& membrane) {
  MergeView v;
  v.sequence = seq;
  v.step = step.value_or(seq.steps.size());
  v.state = replay(seq, v.step, joint);
  v.membrane = membrane_layout(v.state, membrane, anchor_from_layout(v.state, layout, joint.size_a()));
  return v;
}

inline const AlignmentPair& find_pair(const std::vector<AlignmentPair>& pairs, int id) {
  for (const auto& p : pairs) {
    if (p.id == id) return p;
  }
  throw Error("unknown_pair", "no alignment pair with this id", std::to_string(id));
}

inline Json to_json(const MergeView& v, int pair_id, const JointGraph& joint) {
  Json j;
  j["pair_id"] = pair_id;
  j["sequence"] = to_json(v.sequence);
  j["step"] = v.step;
  j["state"] = to_json(v.state, joint);
  j["membrane"] = to_json(v.membrane);
  return j;
}

}  // namespace mapalign
