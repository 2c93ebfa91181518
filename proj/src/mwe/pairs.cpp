#include "wscf/mwe/pairs.hpp"

#include <numeric>

namespace wscf::mwe {

std::vector<ViewPair> ordered_pairs(const std::vector<int>& views) {
  std::vector<ViewPair> out;
  for (int i : views)
    for (int j : views)
      if (i != j) out.push_back({i, j});
  return out;
}

std::vector<ViewPair> ordered_pairs(int view_count) {
  std::vector<int> views(view_count);
  std::iota(views.begin(), views.end(), 0);
  return ordered_pairs(views);
}

}  // namespace wscf::mwe
