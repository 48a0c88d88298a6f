#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

#include "mapalign/error.hpp"

namespace mapalign {

/// Index into the shared item universe of a session.
using ItemIndex = std::uint32_t;

/// Sorted, duplicate-free list of item indices.
using ItemSet = std::vector<ItemIndex>;

inline void normalize(ItemSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline std::size_t intersection_size(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

inline ItemSet set_intersection(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  ItemSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline ItemSet set_union(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  ItemSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline ItemSet set_difference(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  ItemSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// |a ∩ b| / |a ∪ b|. Throws when both sets are empty.
inline double jaccard(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  if (a.empty() && b.empty()) {
    throw Error("empty_sets", "jaccard of two empty sets is undefined");
  }
  const auto inter = intersection_size(a, b);
  const auto uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace mapalign
