#pragma once

#include <vector>

namespace wscf::mwe {

/// Ordered view pair (i, j), i != j.
struct ViewPair {
  int i = 0;
  int j = 0;
  friend bool operator==(const ViewPair&, const ViewPair&) = default;
  friend auto operator<=>(const ViewPair&, const ViewPair&) = default;
};

/// All ordered pairs of `views`, row-major in (i, j).
std::vector<ViewPair> ordered_pairs(const std::vector<int>& views);
std::vector<ViewPair> ordered_pairs(int view_count);

}  // namespace wscf::mwe
