#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <vequil/interval.hpp>

namespace vequil {

/// Midpoint grid over a (truncated) interval union: cells tile each interval
/// uniformly, nodes are the cell midpoints. `interval_id` records which
/// interval of the truncated union each cell belongs to, so audits can find
/// interval endpoints again.
struct Grid {
  std::vector<double> nodes;       // strictly increasing cell midpoints
  std::vector<double> widths;      // positive cell widths
  std::vector<int> interval_id;    // parent interval index per cell
  bool left_truncated = false;     // set was clipped at -R on the left
  bool right_truncated = false;    // set was clipped at +R on the right

  int size() const { return static_cast<int>(nodes.size()); }

  double cell_left(int k) const {
    return nodes[static_cast<std::size_t>(k)] - 0.5 * widths[static_cast<std::size_t>(k)];
  }
  double cell_right(int k) const {
    return nodes[static_cast<std::size_t>(k)] + 0.5 * widths[static_cast<std::size_t>(k)];
  }
};

/// Builds the grid for one support set. Unbounded ends are clipped at +-R
/// first; N cells are then distributed over the surviving positive-length
/// intervals proportionally to length (largest-remainder rounding, at least
/// one cell each), uniform within each interval.
inline Grid build_grid(const IntervalUnion& s, int target_nodes, double truncation_radius) {
  if (target_nodes < 1) throw std::invalid_argument("build_grid: need at least one node");
  const bool clipped = !s.bounded();
  if (clipped && !(std::isfinite(truncation_radius) && truncation_radius > 0))
    throw std::invalid_argument("build_grid: unbounded set needs a finite truncation radius");

  IntervalUnion domain = clipped ? s.truncated(truncation_radius) : s;
  std::vector<Interval> segs;
  for (const auto& iv : domain.intervals())
    if (iv.length() > 0.0) segs.push_back(iv);
  if (segs.empty())
    throw std::invalid_argument("build_grid: no interval of positive length to discretize");
  if (target_nodes < static_cast<int>(segs.size()))
    throw std::invalid_argument("build_grid: fewer nodes than intervals");

  // Largest-remainder apportionment of cells, each interval keeping >= 1.
  double total_len = 0.0;
  for (const auto& iv : segs) total_len += iv.length();
  std::vector<int> counts(segs.size(), 1);
  int assigned = static_cast<int>(segs.size());
  std::vector<double> quota(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    quota[i] = target_nodes * segs[i].length() / total_len;
    int extra = static_cast<int>(std::floor(quota[i])) - 1;
    if (extra > 0) {
      counts[i] += extra;
      assigned += extra;
    }
  }
  while (assigned < target_nodes) {
    std::size_t best = 0;
    double best_rem = -1.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      double rem = quota[i] - counts[i];
      if (rem > best_rem) {
        best_rem = rem;
        best = i;
      }
    }
    counts[best]++;
    assigned++;
  }

  Grid g;
  g.left_truncated = clipped && !std::isfinite(s.intervals().front().lo) &&
                     domain.intervals().front().lo == -truncation_radius;
  g.right_truncated = clipped && !std::isfinite(s.intervals().back().hi) &&
                      domain.intervals().back().hi == truncation_radius;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const int n = counts[i];
    const double h = segs[i].length() / n;
    for (int k = 0; k < n; ++k) {
      g.nodes.push_back(segs[i].lo + (k + 0.5) * h);
      g.widths.push_back(h);
      g.interval_id.push_back(static_cast<int>(i));
    }
  }
  return g;
}

}  // namespace vequil
