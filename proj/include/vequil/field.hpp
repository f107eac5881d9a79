#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <vequil/interval.hpp>

namespace vequil {

/// External field Q(x) = sum_k coeffs[k] x^k + log_coeff * log(1 + x^2).
/// Polynomial part is evaluated by Horner's rule; log_coeff must be >= 0 so
/// the field is bounded below on compact sets and continuous everywhere.
class ExternalField {
 public:
  ExternalField() : coeffs_{0.0}, log_coeff_(0.0) {}

  ExternalField(std::vector<double> coeffs, double log_coeff = 0.0)
      : coeffs_(std::move(coeffs)), log_coeff_(log_coeff) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
    if (!(log_coeff_ >= 0.0))
      throw std::invalid_argument("ExternalField: log coefficient must be >= 0");
    for (double c : coeffs_)
      if (std::isnan(c)) throw std::invalid_argument("ExternalField: NaN coefficient");
  }

  double operator()(double x) const {
    double p = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) p = p * x + coeffs_[k];
    if (log_coeff_ != 0.0) p += log_coeff_ * std::log1p(x * x);
    return p;
  }

  const std::vector<double>& coefficients() const { return coeffs_; }
  double log_coefficient() const { return log_coeff_; }

  bool is_zero() const {
    if (log_coeff_ != 0.0) return false;
    for (double c : coeffs_)
      if (c != 0.0) return false;
    return true;
  }

  /// Degree of the polynomial part (0 for constants, ignoring trailing zeros).
  int degree() const {
    for (std::size_t k = coeffs_.size(); k-- > 0;)
      if (coeffs_[k] != 0.0) return static_cast<int>(k);
    return 0;
  }

  double leading_coefficient() const { return coeffs_[static_cast<std::size_t>(degree())]; }

  /// Growth condition for unbounded supports: Q(x)/log|x| -> +inf as
  /// |x| -> inf along the given direction (+1 right, -1 left). True iff the
  /// polynomial part is unbounded above in that direction, since any
  /// nonconstant polynomial dominates log|x| and the log term grows like
  /// 2*log_coeff*log|x| only.
  bool dominates_log(int direction) const {
    int d = degree();
    if (d == 0) return false;
    double lead = coeffs_[static_cast<std::size_t>(d)];
    if (d % 2 == 0) return lead > 0.0;
    return direction > 0 ? lead > 0.0 : lead < 0.0;
  }

  /// Admissibility on a support set: Q is continuous (hence lower
  /// semicontinuous and finite somewhere on a set of positive capacity), and
  /// on every unbounded end of the set Q(x)/log|x| -> +inf.
  bool admissible_on(const IntervalUnion& s) const {
    if (!s.has_positive_capacity()) return false;
    if (!std::isfinite(s.intervals().front().lo) && !dominates_log(-1)) return false;
    if (!std::isfinite(s.intervals().back().hi) && !dominates_log(+1)) return false;
    return true;
  }

 private:
  std::vector<double> coeffs_;
  double log_coeff_;
};

}  // namespace vequil
