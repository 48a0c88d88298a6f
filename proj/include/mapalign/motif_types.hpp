#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mapalign/error.hpp"

namespace mapalign {

enum class MotifKind { one_to_one, fan_out, fan_in, crossing, vanishing_appearance };

inline constexpr MotifKind kAllMotifs[] = {MotifKind::one_to_one, MotifKind::fan_out, MotifKind::fan_in,
                                           MotifKind::crossing, MotifKind::vanishing_appearance};

inline std::string_view to_string(MotifKind kind) {
  switch (kind) {
    case MotifKind::one_to_one: return "one_to_one";
    case MotifKind::fan_out: return "fan_out";
    case MotifKind::fan_in: return "fan_in";
    case MotifKind::crossing: return "crossing";
    case MotifKind::vanishing_appearance: return "vanishing_appearance";
  }
  return "unknown";
}

inline MotifKind motif_from_string(std::string_view s) {
  for (auto k : kAllMotifs) {
    if (to_string(k) == s) return k;
  }
  throw Error("invalid_params", "unknown motif kind", std::string(s));
}

/// Summary of one connected component of the component-level meta graph.
struct MetaComponent {
  int components_a = 0;
  int components_b = 0;
  std::size_t items = 0;
  MotifKind kind = MotifKind::one_to_one;
};

struct MotifLabel {
  MotifKind kind = MotifKind::vanishing_appearance;
  std::vector<MetaComponent> meta_components;
};

}  // namespace mapalign
