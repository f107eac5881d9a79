#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <vequil/discretize.hpp>
#include <vequil/grid.hpp>

namespace vequil {
namespace oracles {

/// Per-cell masses of the arcsine law on [a, b] scaled to `mass`: cell
/// [u, v] receives (mass/pi) * (arcsin(psi(v)) - arcsin(psi(u))) with psi
/// the affine map of [a, b] onto [-1, 1] — exact cell integrals, no density
/// sampling, so the masses telescope to `mass` exactly. A grid reaching
/// beyond [a, b] is rejected unless `allow_outside` is set, in which case
/// the clamped map assigns outside cells zero mass (used for mixtures whose
/// components live on a subinterval of the grid).
inline Eigen::VectorXd arcsine_weights(double a, double b, const Grid& g, double mass = 1.0,
                                       bool allow_outside = false) {
  if (!(b > a)) throw std::invalid_argument("arcsine_weights: need b > a");
  if (!(mass > 0.0)) throw std::invalid_argument("arcsine_weights: need mass > 0");
  if (!allow_outside) {
    double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    if (g.cell_left(0) < a - tol || g.cell_right(g.size() - 1) > b + tol)
      throw std::invalid_argument("arcsine_weights: grid extends beyond [a, b]");
  }
  auto cdf = [&](double x) {
    double t = (2.0 * x - a - b) / (b - a);
    t = std::clamp(t, -1.0, 1.0);
    return std::asin(t) / std::numbers::pi + 0.5;
  };
  Eigen::VectorXd w(g.size());
  for (int k = 0; k < g.size(); ++k)
    w(k) = mass * (cdf(g.cell_right(k)) - cdf(g.cell_left(k)));
  return w;
}

/// Robin energy of [a, b]: I(omega) = log(4/(b-a)); capacity (b-a)/4.
inline double interval_energy(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("interval_energy: need b > a");
  return std::log(4.0 / (b - a));
}

/// Complete elliptic integral of the first kind via the arithmetic-geometric
/// mean: K(k) = pi / (2 AGM(1, sqrt(1-k^2))), iterated to fixed point. The
/// iteration cap guards against stalling one ulp above the tolerance (the
/// iterates converge quadratically, so 40 rounds is far past fixed point).
inline double elliptic_K(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw std::invalid_argument("elliptic_K: need 0 <= k < 1");
  double x = 1.0, y = std::sqrt(1.0 - k * k);
  for (int it = 0; it < 40 && std::abs(x - y) > 1e-16 * x; ++it) {
    double xn = 0.5 * (x + y);
    y = std::sqrt(x * y);
    x = xn;
  }
  return std::numbers::pi / (2.0 * x);
}

/// Complementary integral K'(k) = K(sqrt(1-k^2)).
inline double elliptic_Kprime(double k) {
  if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("elliptic_Kprime: need 0 < k <= 1");
  return elliptic_K(std::sqrt(1.0 - k * k));
}

/// Minimal energy of the symmetric condenser with plates [-1/2, -1/n] and
/// [1/n, 1/2] at unit opposite charges: 2 pi K(2/n) / K'(2/n).
inline double condenser_energy(double n) {
  if (!(n > 2.0)) throw std::invalid_argument("condenser_energy: need n > 2");
  double k = 2.0 / n;
  return 2.0 * std::numbers::pi * elliptic_K(k) / elliptic_Kprime(k);
}

/// Potential of the uniform unit measure on the circle of radius e^{-N}:
/// U(x) = min(N, log(1/|x|)).
inline double circle_potential(double N, double x_modulus) {
  if (!(x_modulus >= 0.0)) throw std::invalid_argument("circle_potential: need |x| >= 0");
  if (x_modulus == 0.0) return N;
  return std::min(N, std::log(1.0 / x_modulus));
}

/// The closed-form minimizer of the overlapping two-component problem with
/// C = [[2,-1],[-1,2]], Delta2 = [a2_lo, a2_hi] inside Delta1, and fixed
/// masses (m1, m2):
///   mu_1 = (m1 - m2/2) omega_{Delta1} + (m2/2) omega_{Delta2},
///   mu_2 = m2 omega_{Delta2};
/// valid while m2 <= 2 m1. Returned as per-cell masses on the given grids.
inline MeasureTuple condenser2_solution(double m1, double m2, double d1_lo, double d1_hi,
                                        double d2_lo, double d2_hi, const Grid& g1,
                                        const Grid& g2) {
  if (m2 > 2.0 * m1) throw std::invalid_argument("condenser2_solution: requires m2 <= 2 m1");
  if (!(d1_lo <= d2_lo && d2_hi <= d1_hi))
    throw std::invalid_argument("condenser2_solution: Delta2 must sit inside Delta1");
  MeasureTuple m;
  m.grids = {g1, g2};
  m.weights.resize(g1.size() + g2.size());
  Eigen::VectorXd w1 = Eigen::VectorXd::Zero(g1.size());
  if (m1 - 0.5 * m2 > 0.0) w1 += arcsine_weights(d1_lo, d1_hi, g1, m1 - 0.5 * m2);
  if (m2 > 0.0) w1 += arcsine_weights(d2_lo, d2_hi, g1, 0.5 * m2, /*allow_outside=*/true);
  m.weights.head(g1.size()) = w1;
  if (m2 > 0.0)
    m.weights.tail(g2.size()) = arcsine_weights(d2_lo, d2_hi, g2, m2);
  else
    m.weights.tail(g2.size()).setZero();
  return m;
}

}  // namespace oracles
}  // namespace vequil
