#pragma once

// Slot-by-slot interaction loop shared by the proposed method and every
// baseline. Each slot the channel advances, the policy acts on the previous
// slot's channel, and rewards are computed on the current one.

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "relaygame/agents.hpp"
#include "relaygame/channel.hpp"
#include "relaygame/game.hpp"

namespace relaygame {

struct Schedule {
  int episodes = 100;
  int slots = 1000;
  int warmup_episodes = 10;
  int test_episodes = 10;
  int test_slots = 1000;

  void validate() const;
};

struct EnvConfig {
  ChannelParams channel = ChannelParams::reference();
  GameConfig game;

  void validate() const;
};

struct JointAction {
  LeaderAction leader;
  FollowerAction follower;
};

struct SlotContext {
  int episode = 0;
  bool training = false;
  bool warmup = false;
  double noise_scale = 0.0;  // also the epsilon of epsilon-greedy policies
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual bool learns() const { return false; }

  /// `observed` is the previous slot's channel. `current` is only for
  /// policies granted instantaneous CSI.
  virtual JointAction act(const ChannelState& observed, const ChannelState& current,
                          const SlotContext& ctx, Rng& rng) = 0;

  /// Called after every training slot with the transition just played.
  virtual void learn(const ChannelState& /*observed*/, const JointAction& /*action*/,
                     const StepOutcome& /*outcome*/, const ChannelState& /*next_observed*/,
                     const SlotContext& /*ctx*/, Rng& /*rng*/) {}

  /// Exploration schedule for a training episode (noise sigma or epsilon).
  virtual double exploration(int /*episode*/, const Schedule& /*schedule*/) const { return 0.0; }
};

struct EpisodeStats {
  int episode = 0;
  double mean_u_source = 0.0;
  double mean_u_relay = 0.0;
  double mean_capacity = 0.0;
  double noise_scale = 0.0;
};

struct SlotRecord {
  int episode = 0;
  ChannelState observed;
  ChannelState current;
  JointAction action;
  StepOutcome outcome;
};

struct TrainingLog {
  std::vector<EpisodeStats> episodes;
  std::vector<SlotRecord> trace;  // filled only when requested
};

/// Independent RNG stream per (seed, purpose).
enum class Stream : std::uint64_t { init = 0, train_channel = 1, train_policy = 2, test_channel = 3, test_policy = 4 };
Rng make_stream(std::uint64_t seed, Stream stream);

/// Linear decay from `start` at the first post-warmup episode to `end` at
/// the last training episode; `start` during warmup.
double linear_schedule(int episode, const Schedule& schedule, double start, double end);

TrainingLog run_training(Policy& policy, const EnvConfig& env, const Schedule& schedule,
                         std::uint64_t seed, bool record_trace = false);

/// Exploration disabled, no learning; channel stream independent of training.
TrainingLog run_test(Policy& policy, const EnvConfig& env, const Schedule& schedule,
                     std::uint64_t seed, bool record_trace = false);

/// The proposed method: DDPG leader and DDPG follower, each with PER.
class MarlPolicy : public Policy {
 public:
  MarlPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, std::uint64_t seed);

  std::string_view name() const override { return "proposed"; }
  bool learns() const override { return true; }
  JointAction act(const ChannelState& observed, const ChannelState& current,
                  const SlotContext& ctx, Rng& rng) override;
  void learn(const ChannelState& observed, const JointAction& action, const StepOutcome& outcome,
             const ChannelState& next_observed, const SlotContext& ctx, Rng& rng) override;
  double exploration(int episode, const Schedule& schedule) const override;

  const DdpgAgent& leader() const { return leader_; }
  const DdpgAgent& follower() const { return follower_; }
  DdpgAgent& mutable_leader() { return leader_; }
  DdpgAgent& mutable_follower() { return follower_; }

 private:
  EnvConfig env_;
  AgentConfig agent_cfg_;
  Rng init_rng_;
  DdpgAgent leader_;
  DdpgAgent follower_;
};

/// Builds the proposed policy and runs the training schedule.
struct TrainResult {
  std::unique_ptr<MarlPolicy> policy;
  TrainingLog log;
};
TrainResult train(const EnvConfig& env, const AgentConfig& agent_cfg, const Schedule& schedule,
                  std::uint64_t seed, bool record_trace = false);

}  // namespace relaygame
