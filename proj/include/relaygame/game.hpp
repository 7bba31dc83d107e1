#pragma once

// Stackelberg pricing game between a relay alliance (leader) and the
// source (follower), plus the competitive-relay variant and a brute-force
// grid oracle used for verification.

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "relaygame/channel.hpp"

namespace relaygame {

class NoEquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularPriceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GameConfig {
  double p_s = 1.0;
  double p_min = 0.0;
  double p_max = 2.0;
  double c_min = 0.0;
  double c_max = 10.0;
  double alpha = 0.1;
  double beta = 0.1;
  double epsilon_price = 1e-5;  // 1e-6 * (c_max - c_min) for the defaults

  void validate() const;
};

struct BestResponseCurve {
  double co1 = 0.0;
  double co2 = 0.0;
  double co3 = 0.0;
  double c0 = 0.0;  // below: follower buys p_max
  double c1 = 0.0;  // above: follower buys p_min

  /// Unclamped stationary power sqrt(co1 + co2/c) - co3.
  double interior_power(double price) const;
};

struct LeaderDecision {
  int relay_index = 0;  // zero-based
  double price = 0.0;
};

struct FollowerDecision {
  double power = 0.0;
};

enum class GameMode { alliance, competitive };

std::string_view to_string(GameMode mode);

struct EquilibriumSolution {
  LeaderDecision leader;
  FollowerDecision follower;
  double u_relay = 0.0;
  double u_source = 0.0;
  double capacity = 0.0;
  GameMode mode = GameMode::alliance;
  // Competitive mode only: true when the bisection could not bracket the
  // price cap and the relay's own upper bound was used instead.
  bool price_cap_fallback = false;
  double price_cap = 0.0;
};

/// Prices below this take the p_max branch of the follower's response.
inline constexpr double kZeroPriceGuard = 1e-12;

double relay_utility(double p_k, double c_k);
double source_utility(double p_k, double c_k, const LinkQuantities& lq, double alpha);

BestResponseCurve best_response_curve(const LinkQuantities& lq, const GameConfig& cfg);
FollowerDecision best_response_power(double c_k, const LinkQuantities& lq, const GameConfig& cfg);
FollowerDecision best_response_power(double c_k, const BestResponseCurve& curve,
                                     const GameConfig& cfg);

/// Unconstrained maximiser of c * P*(c). Throws SingularPriceError.
double interior_optimal_price(const LinkQuantities& lq, const GameConfig& cfg);

/// Candidate prices {c_min, c_max, C*, C0} restricted to [lo, hi]; singular
/// C* is dropped. Sorted ascending, duplicates removed.
std::vector<double> alliance_price_candidates(const LinkQuantities& lq, const GameConfig& cfg,
                                              double lo, double hi);

/// Builds the full solution record for relay k at price c.
EquilibriumSolution evaluate_decision(const LinkQuantities& lq, int k, double price,
                                      const GameConfig& cfg, GameMode mode);

EquilibriumSolution alliance_equilibrium(const ChannelState& state, const GameConfig& cfg,
                                         const ChannelParams& params);

struct PriceBounds {
  std::vector<double> c_min;
  std::vector<double> c_max;
};

/// Per-relay price bounds; defaults to the global [c_min, c_max] for every relay.
EquilibriumSolution competitive_equilibrium(const ChannelState& state, const GameConfig& cfg,
                                            const ChannelParams& params,
                                            const std::optional<PriceBounds>& bounds = {});

/// Brute-force verification oracle: relay x price grid, follower best
/// response searched on a power grid. Test use only.
EquilibriumSolution grid_oracle(const ChannelState& state, const GameConfig& cfg,
                                const ChannelParams& params, double c_step, double p_step);

/// Worst-case |U^r(oracle) - U^r(closed form)| for the given grid steps.
double grid_oracle_bound(const GameConfig& cfg, double c_step, double p_step);

}  // namespace relaygame
