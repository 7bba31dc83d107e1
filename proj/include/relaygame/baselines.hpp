#pragma once

// Reference policies: the game solution on instantaneous CSI (GBS), a DDPG
// leader with an analytic follower (LGMS), discretised two-agent DQN, and
// uniform random play.

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "relaygame/agents.hpp"
#include "relaygame/game.hpp"
#include "relaygame/mlp.hpp"
#include "relaygame/replay.hpp"
#include "relaygame/training.hpp"

namespace relaygame {

struct DiscretizationSpec {
  int price_bins = 20;
  int power_bins = 20;

  void validate() const;
};

/// Uniform grid over [lo, hi] with both endpoints; bins >= 2.
double grid_value(int index, int bins, double lo, double hi);

/// Solver on the current channel. Falls back to relay 0 at the floor price
/// with minimum power if every link is degenerate.
JointAction gbs_policy(const ChannelState& current, const GameConfig& cfg,
                       const ChannelParams& params, GameMode mode = GameMode::alliance);

JointAction random_policy(const GameConfig& cfg, int num_relays, Rng& rng);

/// Follower's analytic response to the announced price on the given channel.
FollowerAction analytic_follower(const ChannelState& channel, const LeaderAction& leader,
                                 const GameConfig& cfg, const ChannelParams& params);

class GbsPolicy : public Policy {
 public:
  GbsPolicy(const EnvConfig& env, GameMode mode = GameMode::alliance) : env_(env), mode_(mode) {}
  std::string_view name() const override { return "gbs"; }
  JointAction act(const ChannelState& observed, const ChannelState& current,
                  const SlotContext& ctx, Rng& rng) override;

 private:
  EnvConfig env_;
  GameMode mode_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(const EnvConfig& env) : env_(env) {}
  std::string_view name() const override { return "random"; }
  JointAction act(const ChannelState& observed, const ChannelState& current,
                  const SlotContext& ctx, Rng& rng) override;

 private:
  EnvConfig env_;
};

class LgmsPolicy : public Policy {
 public:
  LgmsPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, std::uint64_t seed);
  std::string_view name() const override { return "lgms"; }
  bool learns() const override { return true; }
  JointAction act(const ChannelState& observed, const ChannelState& current,
                  const SlotContext& ctx, Rng& rng) override;
  void learn(const ChannelState& observed, const JointAction& action, const StepOutcome& outcome,
             const ChannelState& next_observed, const SlotContext& ctx, Rng& rng) override;
  double exploration(int episode, const Schedule& schedule) const override;

  const DdpgAgent& leader() const { return leader_; }

 private:
  EnvConfig env_;
  AgentConfig agent_cfg_;
  Rng init_rng_;
  DdpgAgent leader_;
};

/// Q-network over a finite action set with a soft-updated target copy and
/// uniform replay. Greedy ties go to the lowest action index.
class QAgent {
 public:
  QAgent(std::size_t state_dim, std::size_t num_actions, const AgentConfig& cfg, Rng& init_rng);

  std::vector<double> q_values(std::span<const double> state) const;
  std::size_t greedy(std::span<const double> state) const;
  std::size_t act(std::span<const double> state, double epsilon, Rng& rng) const;

  void remember(std::span<const double> state, std::size_t action, double reward,
                std::span<const double> next_state);

  /// One step on 0.5 * mean (r + discount * max_a' Q'(s', a') - Q(s, a))^2.
  /// No-op until a full batch is stored. Returns mean |delta|.
  double train_step(Rng& rng);

  const Mlp& network() const { return q_; }
  const Mlp& target_network() const { return target_; }
  Mlp& mutable_network() { return q_; }
  std::size_t num_actions() const { return num_actions_; }
  const PrioritizedBuffer& buffer() const { return buffer_; }

 private:
  AgentConfig cfg_;
  std::size_t state_dim_;
  std::size_t num_actions_;
  Mlp q_;
  Mlp target_;
  RmsPropState opt_;
  PrioritizedBuffer buffer_;
  ForwardCache cache_;
  MlpGradients grads_;
};

class DqnPolicy : public Policy {
 public:
  DqnPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, DiscretizationSpec spec,
            std::uint64_t seed, double epsilon_start = 1.0, double epsilon_end = 0.05);
  std::string_view name() const override { return "dqn"; }
  bool learns() const override { return true; }
  JointAction act(const ChannelState& observed, const ChannelState& current,
                  const SlotContext& ctx, Rng& rng) override;
  void learn(const ChannelState& observed, const JointAction& action, const StepOutcome& outcome,
             const ChannelState& next_observed, const SlotContext& ctx, Rng& rng) override;
  double exploration(int episode, const Schedule& schedule) const override;

  /// Leader index = relay * price_bins + price bin.
  LeaderAction leader_from_index(std::size_t index) const;
  FollowerAction follower_from_index(std::size_t index) const;
  std::size_t leader_index(const LeaderAction& a) const;
  std::size_t follower_index(const FollowerAction& a) const;

  const QAgent& leader() const { return leader_; }
  const QAgent& follower() const { return follower_; }

 private:
  EnvConfig env_;
  DiscretizationSpec spec_;
  double epsilon_start_;
  double epsilon_end_;
  Rng init_rng_;
  QAgent leader_;
  QAgent follower_;
};

}  // namespace relaygame
