#pragma once

// Scenario configuration read from an INI-style file:
//
//   [channel]   num_relays rho var_sk var_kd noise_relay noise_dest
//   [game]      p_s p_min p_max c_min c_max alpha beta epsilon_price
//               relay_c_min relay_c_max          (competitive mode only)
//   [agent]     actor_lr critic_lr tau discount batch_size buffer_capacity
//               noise_start noise_end kappa priority_epsilon hidden
//               rms_decay rms_floor
//   [schedule]  episodes slots warmup_episodes test_episodes test_slots
//   [baseline]  price_bins power_bins epsilon_start epsilon_end
//   [scenario]  id policy mode seeds sweep sweep_values
//   [oracle]    draws c_step p_step
//
// Per-relay keys take one value (broadcast) or a comma list of length K.
// Seeds are a comma list and/or ranges "a..b". Unknown sections or keys are
// rejected.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaygame/agents.hpp"
#include "relaygame/baselines.hpp"
#include "relaygame/game.hpp"
#include "relaygame/training.hpp"

namespace relaygame {

enum class PolicyKind { proposed, gbs, lgms, dqn, random };
enum class SweepAxis { none, p_s, alpha };

std::string_view to_string(PolicyKind p);
PolicyKind policy_from_string(std::string_view name);
std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view name);
GameMode mode_from_string(std::string_view name);

struct OracleSettings {
  int draws = 100;
  double c_step = 1e-3;
  double p_step = 1e-3;
};

struct ScenarioConfig {
  std::string id = "reference";
  EnvConfig env;
  AgentConfig agent;
  Schedule schedule;
  DiscretizationSpec discretization;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  PolicyKind policy = PolicyKind::proposed;
  GameMode mode = GameMode::alliance;
  std::optional<PriceBounds> relay_bounds;
  std::vector<std::uint64_t> seeds = {1};
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> sweep_values;
  OracleSettings oracle;

  /// Throws ConfigError.
  void validate() const;
};

/// "1..3,7" -> {1,2,3,7}. Throws ConfigError on malformed input.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);

/// Applies a sweep value to a copy of the scenario (alpha sets beta too).
ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, SweepAxis axis, double value);

}  // namespace relaygame
