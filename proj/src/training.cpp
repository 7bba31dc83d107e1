#include "relaygame/training.hpp"

#include <algorithm>
#include <random>

namespace relaygame {

void Schedule::validate() const {
  if (episodes < 0 || slots < 1) throw ConfigError("schedule: episodes >= 0 and slots >= 1 required");
  if (warmup_episodes < 0) throw ConfigError("schedule: warmup_episodes must be >= 0");
  if (test_episodes < 1 || test_slots < 1) throw ConfigError("schedule: test horizon must be >= 1");
}

void EnvConfig::validate() const {
  channel.validate();
  game.validate();
}

Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x5eedu};
  return Rng(seq);
}

double linear_schedule(int episode, const Schedule& schedule, double start, double end) {
  const int first = schedule.warmup_episodes;
  const int last = schedule.episodes - 1;
  if (episode <= first || last <= first) return episode <= first ? start : end;
  const double frac = std::min(1.0, static_cast<double>(episode - first) / (last - first));
  return start + (end - start) * frac;
}

namespace {

TrainingLog run_episodes(Policy& policy, const EnvConfig& env, int episodes, int slots,
                         bool training, const Schedule& schedule, Rng& channel_rng,
                         Rng& policy_rng, bool record_trace) {
  TrainingLog log;
  log.episodes.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    SlotContext ctx;
    ctx.episode = e;
    ctx.training = training;
    ctx.warmup = training && e < schedule.warmup_episodes;
    ctx.noise_scale = training ? policy.exploration(e, schedule) : 0.0;

    ChannelState observed = init_channels(env.channel, channel_rng);
    double sum_us = 0.0, sum_ur = 0.0, sum_cap = 0.0;
    for (int t = 0; t < slots; ++t) {
      ChannelState current = step_channels(observed, env.channel, channel_rng);
      const JointAction action = policy.act(observed, current, ctx, policy_rng);
      const StepOutcome outcome = env_step(current, action.leader, action.follower, env.game, env.channel);
      if (training) policy.learn(observed, action, outcome, current, ctx, policy_rng);
      sum_us += outcome.u_source;
      sum_ur += outcome.u_relay;
      sum_cap += outcome.capacity;
      if (record_trace) log.trace.push_back(SlotRecord{e, observed, current, action, outcome});
      observed = std::move(current);
    }
    const double n = static_cast<double>(slots);
    log.episodes.push_back(EpisodeStats{e, sum_us / n, sum_ur / n, sum_cap / n, ctx.noise_scale});
  }
  return log;
}

}  // namespace

TrainingLog run_training(Policy& policy, const EnvConfig& env, const Schedule& schedule,
                         std::uint64_t seed, bool record_trace) {
  env.validate();
  schedule.validate();
  Rng channel_rng = make_stream(seed, Stream::train_channel);
  Rng policy_rng = make_stream(seed, Stream::train_policy);
  return run_episodes(policy, env, schedule.episodes, schedule.slots, true, schedule, channel_rng,
                      policy_rng, record_trace);
}

TrainingLog run_test(Policy& policy, const EnvConfig& env, const Schedule& schedule,
                     std::uint64_t seed, bool record_trace) {
  env.validate();
  schedule.validate();
  Rng channel_rng = make_stream(seed, Stream::test_channel);
  Rng policy_rng = make_stream(seed, Stream::test_policy);
  return run_episodes(policy, env, schedule.test_episodes, schedule.test_slots, false, schedule,
                      channel_rng, policy_rng, record_trace);
}

MarlPolicy::MarlPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, std::uint64_t seed)
    : env_(env),
      agent_cfg_(agent_cfg),
      init_rng_(make_stream(seed, Stream::init)),
      leader_(leader_state_dim(env.channel.num_relays),
              static_cast<std::size_t>(env.channel.num_relays) + 1, agent_cfg, init_rng_),
      follower_(follower_state_dim(env.channel.num_relays), 1, agent_cfg, init_rng_) {}

double MarlPolicy::exploration(int episode, const Schedule& schedule) const {
  return linear_schedule(episode, schedule, agent_cfg_.noise_start, agent_cfg_.noise_end);
}

JointAction MarlPolicy::act(const ChannelState& observed, const ChannelState& /*current*/,
                            const SlotContext& ctx, Rng& rng) {
  const std::vector<double> s_leader = build_leader_state(observed, env_.channel);
  JointAction a;
  if (ctx.warmup) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> raw(leader_.action_dim());
    for (double& v : raw) v = unit(rng);
    a.leader = LeaderAction::decode(raw, env_.game);
    a.follower = FollowerAction::decode(unit(rng), env_.game);
    return a;
  }
  a.leader = leader_act(leader_, s_leader, ctx.noise_scale, env_.game, rng);
  const std::vector<double> s_follower = build_follower_state(s_leader, a.leader, env_.game);
  a.follower = follower_act(follower_, s_follower, ctx.noise_scale, env_.game, rng);
  return a;
}

void MarlPolicy::learn(const ChannelState& observed, const JointAction& action,
                       const StepOutcome& outcome, const ChannelState& next_observed,
                       const SlotContext& /*ctx*/, Rng& rng) {
  const std::vector<double> s_leader = build_leader_state(observed, env_.channel);
  const std::vector<double> s_leader_next = build_leader_state(next_observed, env_.channel);
  const std::vector<double> s_follower = build_follower_state(s_leader, action.leader, env_.game);
  // The follower's next state needs the leader's next move; use its greedy action.
  const LeaderAction next_leader = LeaderAction::decode(leader_.act(s_leader_next), env_.game);
  const std::vector<double> s_follower_next =
      build_follower_state(s_leader_next, next_leader, env_.game);

  leader_.remember(s_leader, action.leader.encoded(), outcome.r_leader, s_leader_next);
  const double raw_power[] = {action.follower.raw_power};
  follower_.remember(s_follower, raw_power, outcome.r_follower, s_follower_next);

  leader_.train_step(rng);
  follower_.train_step(rng);
}

TrainResult train(const EnvConfig& env, const AgentConfig& agent_cfg, const Schedule& schedule,
                  std::uint64_t seed, bool record_trace) {
  TrainResult result;
  result.policy = std::make_unique<MarlPolicy>(env, agent_cfg, seed);
  result.log = run_training(*result.policy, env, schedule, seed, record_trace);
  return result;
}

}  // namespace relaygame
