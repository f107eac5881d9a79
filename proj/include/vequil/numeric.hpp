#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

namespace vequil {

/// Sum of a small list of doubles in an order determined only by the values
/// themselves (ascending value, ties by bit pattern). Cross-component
/// reductions all funnel through this so that relabeling the components of a
/// problem permutes intermediate terms without changing any rounding, which
/// keeps solver runs bit-identical under permutation.
inline double stable_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double a, double b) {
    if (a != b) return a < b;
    return std::bit_cast<std::uint64_t>(a) < std::bit_cast<std::uint64_t>(b);
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

inline double stable_sum(std::vector<double>&& terms) {
  std::vector<double> local(std::move(terms));
  return stable_sum(local);
}

}  // namespace vequil
