#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "relaygame/channel.hpp"
#include "relaygame/game.hpp"

namespace relaygame::testing {

/// Single-relay channel with real-valued gains of the given squared magnitudes.
inline ChannelState single_link(double h_sk_power, double h_kd_power) {
  ChannelState s;
  s.h_sk = {ComplexGain{std::sqrt(h_sk_power), 0.0}};
  s.h_kd = {ComplexGain{std::sqrt(h_kd_power), 0.0}};
  return s;
}

/// Capacity written out independently of the library.
inline double capacity_oracle(double p, double gamma, double g) {
  return 0.5 * std::log2(1.0 + p * gamma / (p + g));
}

inline double source_utility_oracle(double p, double c, double gamma, double g, double alpha) {
  return capacity_oracle(p, gamma, g) - alpha * c * p;
}

/// d/dp of the source utility at p, analytic.
inline double source_marginal(double p, double c, double gamma, double g, double alpha) {
  // I = 0.5 log2((p(1+gamma) + g) / (p + g))
  const double num = (1.0 + gamma) / (p * (1.0 + gamma) + g) - 1.0 / (p + g);
  return 0.5 * num / std::log(2.0) - alpha * c;
}

/// Golden-section maximiser on [lo, hi] for a unimodal function.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

/// Bisection root of a decreasing function on [lo, hi].
inline double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline LinkQuantities random_link(Rng& rng) {
  std::uniform_real_distribution<double> gamma(0.5, 40.0);
  std::uniform_real_distribution<double> g(0.05, 5.0);
  return {gamma(rng), g(rng)};
}

}  // namespace relaygame::testing
