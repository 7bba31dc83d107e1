#pragma once

// Two-agent DDPG for the relay pricing game. The relay alliance (leader)
// picks a relay and a unit price, the source (follower) picks the power to
// buy; both observe only the previous slot's channel.
//
// Actions are kept in a normalised box [0,1]^d inside the agents; the
// environment maps them to physical units.

#include <cstddef>
#include <span>
#include <vector>

#include "relaygame/channel.hpp"
#include "relaygame/game.hpp"
#include "relaygame/mlp.hpp"
#include "relaygame/replay.hpp"

namespace relaygame {

struct AgentConfig {
  double actor_lr = 1e-3;
  double critic_lr = 5e-3;
  double tau = 1e-3;
  double discount = 0.0;
  std::size_t batch_size = 128;
  std::size_t buffer_capacity = 10000;
  double noise_start = 0.3;  // fraction of the action box width
  double noise_end = 0.01;
  double kappa = 0.6;
  double priority_epsilon = 1e-3;
  std::vector<std::size_t> hidden = {64, 64};
  double rms_decay = 0.99;
  double rms_floor = 1e-8;

  void validate() const;
};

struct LeaderAction {
  int relay_index = 0;             // zero-based
  double price = 0.0;              // per W, in [c_min, c_max]
  std::vector<double> raw_scores;  // K relay scores, normalised box
  double raw_price = 0.0;          // normalised price in [0, 1]

  /// Critic-facing encoding: scores followed by the normalised price.
  std::vector<double> encoded() const;
  static LeaderAction decode(std::span<const double> raw, const GameConfig& cfg);
};

struct FollowerAction {
  double power = 0.0;      // W, in [p_min, p_max]
  double raw_power = 0.0;  // normalised in [0, 1]

  static FollowerAction decode(double raw, const GameConfig& cfg);
};

struct StepOutcome {
  double r_leader = 0.0;
  double r_follower = 0.0;
  double capacity = 0.0;
  double u_relay = 0.0;
  double u_source = 0.0;
};

/// 2K features |h_sk|^2 / var_sk then |h_kd|^2 / var_kd.
std::vector<double> build_leader_state(const ChannelState& prev_channel, const ChannelParams& params);

/// Leader state, one-hot of the executed relay, normalised executed price.
std::vector<double> build_follower_state(std::span<const double> leader_state,
                                         const LeaderAction& action, const GameConfig& cfg);

std::size_t leader_state_dim(int num_relays);
std::size_t follower_state_dim(int num_relays);

/// Rewards on the slot's true channel. A degenerate selected link yields
/// zero capacity and a pure cost for the source.
StepOutcome env_step(const ChannelState& current_channel, const LeaderAction& leader,
                     const FollowerAction& follower, const GameConfig& cfg,
                     const ChannelParams& params);

/// Actor/critic pair with target copies, RMSProp states and its own PER buffer.
class DdpgAgent {
 public:
  DdpgAgent(std::size_t state_dim, std::size_t action_dim, const AgentConfig& cfg, Rng& init_rng);

  /// Deterministic actor output plus N(0, noise_scale^2) per component,
  /// clamped to [0,1].
  std::vector<double> act(std::span<const double> state, double noise_scale, Rng& rng) const;
  std::vector<double> act(std::span<const double> state) const;

  void remember(std::span<const double> state, std::span<const double> action, double reward,
                std::span<const double> next_state);

  /// TD errors delta_i = r_i + discount * Q'(s', mu'(s')) - Q(s, a).
  std::vector<double> td_errors(const ReplayBatch& batch);

  /// One RMSProp step on 0.5 * mean_i w_i delta_i^2. Returns the TD errors
  /// used for the step.
  std::vector<double> critic_train_step(const ReplayBatch& batch);

  /// One ascent step on mean_i Q(s_i, mu(s_i)) via critic input gradients.
  /// Returns the objective before the step.
  double actor_train_step(const ReplayBatch& batch);

  /// Gradient of mean_i Q(s_i, mu(s_i)) w.r.t. the actor parameters.
  MlpGradients actor_objective_gradient(const Matrix& states);

  void soft_update_targets();

  /// Sample, critic step, priority refresh, actor step, target update.
  /// No-op until the buffer holds a full batch. Returns mean |delta|.
  double train_step(Rng& rng);

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic() { return critic_; }
  Mlp& mutable_target_actor() { return target_actor_; }
  Mlp& mutable_target_critic() { return target_critic_; }
  const PrioritizedBuffer& buffer() const { return buffer_; }
  const AgentConfig& config() const { return cfg_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }

 private:
  Matrix critic_input(const Matrix& states, const Matrix& actions) const;

  AgentConfig cfg_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  RmsPropState actor_opt_;
  RmsPropState critic_opt_;
  PrioritizedBuffer buffer_;
  // Scratch storage reused across steps.
  ForwardCache actor_cache_;
  ForwardCache critic_cache_;
  MlpGradients actor_grads_;
  MlpGradients critic_grads_;
};

/// Leader policy: K scores then price, all noised and clamped; the relay is
/// the argmax of the noised scores (first index on ties).
LeaderAction leader_act(const DdpgAgent& agent, std::span<const double> state, double noise_scale,
                        const GameConfig& cfg, Rng& rng);
FollowerAction follower_act(const DdpgAgent& agent, std::span<const double> state,
                            double noise_scale, const GameConfig& cfg, Rng& rng);

}  // namespace relaygame
