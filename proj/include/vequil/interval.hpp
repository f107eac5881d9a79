#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vequil {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] on the extended real line. Endpoints may be
/// +-infinity; lo == hi is a single point.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double a, double b) : lo(a), hi(b) {}

  double length() const { return hi - lo; }
  bool degenerate() const { return lo == hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Finite union of closed intervals, sorted by left endpoint and pairwise
/// disjoint. Overlapping or touching inputs are merged on construction, so
/// the stored list is a canonical representation of the point set.
class IntervalUnion {
 public:
  /// Normalizes a raw list: sorts, merges overlapping/touching intervals.
  /// Throws std::invalid_argument on an empty list, on lo > hi, or on an
  /// interval reduced to a single infinite endpoint.
  explicit IntervalUnion(std::vector<Interval> raw) {
    if (raw.empty())
      throw std::invalid_argument("IntervalUnion: empty interval list");
    for (const auto& iv : raw) {
      if (std::isnan(iv.lo) || std::isnan(iv.hi))
        throw std::invalid_argument("IntervalUnion: NaN endpoint");
      if (!(iv.lo <= iv.hi))
        throw std::invalid_argument("IntervalUnion: interval with lo > hi");
      if (iv.lo == kInf || iv.hi == -kInf)
        throw std::invalid_argument("IntervalUnion: interval degenerated at infinity");
    }
    std::sort(raw.begin(), raw.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    intervals_.push_back(raw.front());
    for (std::size_t i = 1; i < raw.size(); ++i) {
      if (raw[i].lo <= intervals_.back().hi) {
        intervals_.back().hi = std::max(intervals_.back().hi, raw[i].hi);
      } else {
        intervals_.push_back(raw[i]);
      }
    }
  }

  const std::vector<Interval>& intervals() const { return intervals_; }

  bool bounded() const {
    return std::isfinite(intervals_.front().lo) && std::isfinite(intervals_.back().hi);
  }

  /// Positive logarithmic capacity: at least one interval of positive length.
  bool has_positive_capacity() const {
    for (const auto& iv : intervals_)
      if (iv.length() > 0.0) return true;
    return false;
  }

  /// Largest |endpoint| over all finite endpoints (0 if none is finite).
  double max_finite_endpoint() const {
    double m = 0.0;
    for (const auto& iv : intervals_) {
      if (std::isfinite(iv.lo)) m = std::max(m, std::abs(iv.lo));
      if (std::isfinite(iv.hi)) m = std::max(m, std::abs(iv.hi));
    }
    return m;
  }

  /// Intersection with [-R, R]. Throws if the clipped set is empty.
  IntervalUnion truncated(double R) const {
    std::vector<Interval> out;
    for (const auto& iv : intervals_) {
      double lo = std::max(iv.lo, -R);
      double hi = std::min(iv.hi, R);
      if (lo <= hi) out.push_back({lo, hi});
    }
    if (out.empty())
      throw std::invalid_argument("IntervalUnion: truncation left an empty set");
    return IntervalUnion(std::move(out));
  }

  bool contains(double x) const {
    for (const auto& iv : intervals_)
      if (iv.contains(x)) return true;
    return false;
  }

 private:
  std::vector<Interval> intervals_;
};

/// Euclidean distance between two closed interval unions; 0 iff they
/// intersect or touch.
inline double set_distance(const IntervalUnion& s1, const IntervalUnion& s2) {
  double best = kInf;
  for (const auto& a : s1.intervals()) {
    for (const auto& b : s2.intervals()) {
      // Gap between closed intervals; lo - hi never forms inf - inf.
      double gap = std::max({0.0, b.lo - a.hi, a.lo - b.hi});
      best = std::min(best, gap);
    }
  }
  return best;
}

/// Intersection of two sorted disjoint interval lists (possibly empty).
inline std::vector<Interval> intersect_intervals(const std::vector<Interval>& a,
                                                 const std::vector<Interval>& b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max(a[i].lo, b[j].lo);
    double hi = std::min(a[i].hi, b[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (a[i].hi < b[j].hi)
      ++i;
    else
      ++j;
  }
  return out;
}

/// True iff the common intersection of all sets contains an interval of
/// positive length (finite point sets are polar).
inline bool intersection_capacity_positive(const std::vector<const IntervalUnion*>& sets) {
  if (sets.empty()) return false;
  std::vector<Interval> acc = sets.front()->intervals();
  for (std::size_t k = 1; k < sets.size() && !acc.empty(); ++k)
    acc = intersect_intervals(acc, sets[k]->intervals());
  for (const auto& iv : acc)
    if (iv.length() > 0.0) return true;
  return false;
}

inline bool intersection_capacity_positive(const std::vector<IntervalUnion>& sets,
                                           const std::vector<int>& indices) {
  std::vector<const IntervalUnion*> ptrs;
  ptrs.reserve(indices.size());
  for (int i : indices) ptrs.push_back(&sets[static_cast<std::size_t>(i)]);
  return intersection_capacity_positive(ptrs);
}

}  // namespace vequil
