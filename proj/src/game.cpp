#include "relaygame/game.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

namespace relaygame {

namespace {

constexpr double kLn2 = std::numbers::ln2;

bool usable(const LinkQuantities& lq) { return lq.gamma_sk > 0.0 && lq.g_k > 0.0; }

// Uniform grid over [lo, hi] with spacing no larger than step, endpoints included.
std::vector<double> uniform_grid(double lo, double hi, double step) {
  const double span = hi - lo;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / step - 1e-9)));
  std::vector<double> grid(n + 1);
  for (std::size_t j = 0; j <= n; ++j) grid[j] = lo + span * static_cast<double>(j) / n;
  grid.back() = hi;
  return grid;
}

}  // namespace

void GameConfig::validate() const {
  if (!(p_s > 0.0) || !std::isfinite(p_s)) throw ConfigError("p_s must be finite and > 0");
  if (!(p_min >= 0.0 && p_min < p_max)) throw ConfigError("require 0 <= p_min < p_max");
  if (!(c_min >= 0.0 && c_min < c_max)) throw ConfigError("require 0 <= c_min < c_max");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (!(epsilon_price > 0.0 && epsilon_price < 1e-2 * (c_max - c_min))) {
    throw ConfigError("epsilon_price must be > 0 and much smaller than c_max - c_min");
  }
}

std::string_view to_string(GameMode mode) {
  return mode == GameMode::alliance ? "alliance" : "competitive";
}

double relay_utility(double p_k, double c_k) { return c_k * p_k; }

double source_utility(double p_k, double c_k, const LinkQuantities& lq, double alpha) {
  return channel_capacity(p_k, lq) - alpha * c_k * p_k;
}

double BestResponseCurve::interior_power(double price) const {
  return std::sqrt(co1 + co2 / price) - co3;
}

BestResponseCurve best_response_curve(const LinkQuantities& lq, const GameConfig& cfg) {
  if (!usable(lq)) throw std::invalid_argument("best_response_curve: need gamma_sk > 0, G_k > 0");
  const double g = lq.gamma_sk;
  const double gk = lq.g_k;
  BestResponseCurve curve;
  // Roots of the stationarity condition
  //   g*G / (2 ln2 (P+G)((g+1)P+G)) = alpha*c
  // written as P = sqrt(co1 + co2/c) - co3.
  curve.co1 = (g * g * gk * gk) / (4.0 * (g + 1.0) * (g + 1.0));
  curve.co2 = (g * gk) / (2.0 * kLn2 * (g + 1.0) * cfg.alpha);
  curve.co3 = ((g + 2.0) * gk) / (2.0 * (g + 1.0));

  const double hi = (cfg.p_max + curve.co3) * (cfg.p_max + curve.co3) - curve.co1;
  const double lo = (cfg.p_min + curve.co3) * (cfg.p_min + curve.co3) - curve.co1;
  // co3^2 > co1 for every g > 0, so both are positive for p_min >= 0.
  assert(lo > 0.0 && hi > 0.0);
  curve.c0 = curve.co2 / hi;
  curve.c1 = curve.co2 / lo;
  return curve;
}

FollowerDecision best_response_power(double c_k, const BestResponseCurve& curve,
                                     const GameConfig& cfg) {
  if (c_k < kZeroPriceGuard || c_k < curve.c0) return {cfg.p_max};
  if (c_k > curve.c1) return {cfg.p_min};
  return {std::clamp(curve.interior_power(c_k), cfg.p_min, cfg.p_max)};
}

FollowerDecision best_response_power(double c_k, const LinkQuantities& lq, const GameConfig& cfg) {
  if (!usable(lq)) {
    // No capacity to buy: only the cost term remains.
    return {c_k < kZeroPriceGuard ? cfg.p_max : cfg.p_min};
  }
  return best_response_power(c_k, best_response_curve(lq, cfg), cfg);
}

double interior_optimal_price(const LinkQuantities& lq, const GameConfig& cfg) {
  if (!usable(lq)) throw SingularPriceError("interior_optimal_price: degenerate link");
  const double g = lq.gamma_sk;
  const double gk = lq.g_k;
  const double a = kLn2 * cfg.alpha * cfg.alpha * g * g * gk * gk;
  const double b = 2.0 * cfg.alpha * (g * g + g) * gk;
  const double d = cfg.alpha * (kLn2 * g + 2.0 * kLn2) * gk;
  // |(B D r - B D^2 + ln2 A B) / (2 A D^2 - 2 ln2 A^2)| with r = sqrt(D^2 - ln2 A).
  // Since D^2 - ln2 A = r^2 the numerator factors as ln2 A B r / (r + D), which
  // reduces the ratio to ln2 B / (2 r (r + D)) without the cancellation.
  const double r = std::sqrt(d * d - kLn2 * a);
  const double denom = 2.0 * r * (r + d);
  if (!(std::abs(denom) >= 1e-15)) throw SingularPriceError("interior_optimal_price: singular");
  return std::abs(kLn2 * b / denom);
}

std::vector<double> alliance_price_candidates(const LinkQuantities& lq, const GameConfig& cfg,
                                              double lo, double hi) {
  std::vector<double> raw{cfg.c_min, cfg.c_max};
  if (usable(lq)) {
    raw.push_back(best_response_curve(lq, cfg).c0);
    try {
      raw.push_back(interior_optimal_price(lq, cfg));
    } catch (const SingularPriceError&) {
    }
  }
  std::vector<double> out;
  for (double c : raw) {
    if (std::isfinite(c) && c >= lo && c <= hi) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EquilibriumSolution evaluate_decision(const LinkQuantities& lq, int k, double price,
                                      const GameConfig& cfg, GameMode mode) {
  EquilibriumSolution sol;
  sol.mode = mode;
  sol.leader = {k, price};
  sol.follower = best_response_power(price, lq, cfg);
  const double p = sol.follower.power;
  sol.capacity = channel_capacity(p, lq);
  sol.u_relay = relay_utility(p, price);
  sol.u_source = sol.capacity - cfg.alpha * price * p;
  return sol;
}

EquilibriumSolution alliance_equilibrium(const ChannelState& state, const GameConfig& cfg,
                                         const ChannelParams& params) {
  std::optional<EquilibriumSolution> best;
  for (int k = 0; k < state.num_relays(); ++k) {
    LinkQuantities lq;
    if (!try_link_quantities(state, k, cfg.p_s, params, lq)) continue;
    for (double c : alliance_price_candidates(lq, cfg, cfg.c_min, cfg.c_max)) {
      EquilibriumSolution sol = evaluate_decision(lq, k, c, cfg, GameMode::alliance);
      // Strict improvement keeps the smallest relay index, then smallest price.
      if (!best || sol.u_relay > best->u_relay) best = sol;
    }
  }
  if (!best) throw NoEquilibriumError("alliance_equilibrium: every relay link is degenerate");
  return *best;
}

EquilibriumSolution competitive_equilibrium(const ChannelState& state, const GameConfig& cfg,
                                            const ChannelParams& params,
                                            const std::optional<PriceBounds>& bounds) {
  const int num = state.num_relays();
  if (num < 2) return alliance_equilibrium(state, cfg, params);

  auto floor_of = [&](int k) { return bounds ? bounds->c_min.at(k) : cfg.c_min; };
  auto ceil_of = [&](int k) { return bounds ? bounds->c_max.at(k) : cfg.c_max; };

  std::vector<LinkQuantities> lqs(num);
  std::vector<bool> ok(num, false);
  std::vector<double> floor_utility(num, -std::numeric_limits<double>::infinity());
  int winner = -1;
  for (int k = 0; k < num; ++k) {
    ok[k] = try_link_quantities(state, k, cfg.p_s, params, lqs[k]);
    if (!ok[k]) continue;
    const double c = floor_of(k);
    floor_utility[k] = source_utility(best_response_power(c, lqs[k], cfg).power, c, lqs[k],
                                      cfg.alpha);
    if (winner < 0 || floor_utility[k] > floor_utility[winner]) winner = k;
  }
  if (winner < 0) throw NoEquilibriumError("competitive_equilibrium: every relay is degenerate");

  double runner_up = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < num; ++k) {
    if (k != winner) runner_up = std::max(runner_up, floor_utility[k]);
  }

  const LinkQuantities& lq = lqs[winner];
  const double lo_bound = floor_of(winner);
  const double hi_bound = ceil_of(winner);
  auto surplus = [&](double c) {
    return source_utility(best_response_power(c, lq, cfg).power, c, lq, cfg.alpha) - runner_up;
  };

  bool fallback = false;
  bool cap_binds = true;
  double cap = hi_bound;
  if (!(surplus(lo_bound) >= 0.0) || surplus(hi_bound) >= 0.0) {
    // Either the runner-up is never beaten or it is beaten at every price:
    // no root in the bracket, so the relay's own ceiling applies.
    fallback = true;
    cap_binds = false;
  } else {
    double lo = lo_bound;  // surplus(lo) >= 0
    double hi = hi_bound;  // surplus(hi) < 0
    for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
      const double mid = 0.5 * (lo + hi);
      (surplus(mid) >= 0.0 ? lo : hi) = mid;
    }
    cap = lo;
  }

  std::vector<double> candidates = alliance_price_candidates(lq, cfg, lo_bound, hi_bound);
  for (double c : {lo_bound, hi_bound}) candidates.push_back(c);
  if (cap_binds) candidates.push_back(cap - cfg.epsilon_price);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::optional<EquilibriumSolution> best;
  for (double c : candidates) {
    if (c < lo_bound || c > hi_bound) continue;
    if (cap_binds && !(c < cap)) continue;
    EquilibriumSolution sol = evaluate_decision(lq, winner, c, cfg, GameMode::competitive);
    if (!best || sol.u_relay > best->u_relay) best = sol;
  }
  if (!best) {
    // The cap coincides with the floor price; the floor is the only option.
    best = evaluate_decision(lq, winner, lo_bound, cfg, GameMode::competitive);
  }
  best->price_cap_fallback = fallback;
  best->price_cap = cap;
  return *best;
}

EquilibriumSolution grid_oracle(const ChannelState& state, const GameConfig& cfg,
                                const ChannelParams& params, double c_step, double p_step) {
  if (!(c_step > 0.0) || !(p_step > 0.0)) throw std::invalid_argument("grid_oracle: steps must be > 0");
  const std::vector<double> prices = uniform_grid(cfg.c_min, cfg.c_max, c_step);
  const std::vector<double> powers = uniform_grid(cfg.p_min, cfg.p_max, p_step);
  const bool exhaustive = prices.size() * powers.size() <= 2'000'000;

  std::optional<EquilibriumSolution> best;
  for (int k = 0; k < state.num_relays(); ++k) {
    LinkQuantities lq;
    if (!try_link_quantities(state, k, cfg.p_s, params, lq)) continue;
    std::vector<double> capacity(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) capacity[i] = channel_capacity(powers[i], lq);

    std::size_t idx = powers.size() - 1;
    for (double c : prices) {
      auto us = [&](std::size_t i) { return capacity[i] - cfg.alpha * c * powers[i]; };
      if (exhaustive) {
        idx = 0;
        for (std::size_t i = 1; i < powers.size(); ++i) {
          if (us(i) > us(idx)) idx = i;
        }
      } else {
        // Source utility is concave in power and the grid argmax is
        // non-increasing in price, so walk down from the previous argmax.
        while (idx > 0 && us(idx - 1) >= us(idx)) --idx;
      }
      const double p = powers[idx];
      const double u_relay = c * p;
      if (!best || u_relay > best->u_relay) {
        EquilibriumSolution sol;
        sol.mode = GameMode::alliance;
        sol.leader = {k, c};
        sol.follower = {p};
        sol.capacity = capacity[idx];
        sol.u_relay = u_relay;
        sol.u_source = capacity[idx] - cfg.alpha * c * p;
        best = sol;
      }
    }
  }
  if (!best) throw NoEquilibriumError("grid_oracle: every relay link is degenerate");
  return *best;
}

double grid_oracle_bound(const GameConfig& cfg, double c_step, double p_step) {
  // Price rounding costs at most slope * c_step where the slope of c*P(c) on
  // its rising part is bounded by p_max; the follower's grid response is
  // within p_step of the exact one, worth at most c_max * p_step.
  return cfg.p_max * c_step + cfg.c_max * p_step;
}

}  // namespace relaygame
