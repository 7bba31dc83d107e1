#include "relaygame/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace relaygame {

void DiscretizationSpec::validate() const {
  if (price_bins < 2 || power_bins < 2) throw ConfigError("discretisation needs at least 2 bins per axis");
}

double grid_value(int index, int bins, double lo, double hi) {
  if (bins < 2 || index < 0 || index >= bins) throw std::out_of_range("grid_value: index outside grid");
  if (index == bins - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(index) / static_cast<double>(bins - 1);
}

namespace {

LeaderAction make_leader(int relay, double price, int num_relays, const GameConfig& cfg) {
  LeaderAction a;
  a.relay_index = relay;
  a.price = std::clamp(price, cfg.c_min, cfg.c_max);
  a.raw_scores.assign(static_cast<std::size_t>(num_relays), 0.0);
  a.raw_scores[static_cast<std::size_t>(relay)] = 1.0;
  a.raw_price = (a.price - cfg.c_min) / (cfg.c_max - cfg.c_min);
  return a;
}

FollowerAction make_follower(double power, const GameConfig& cfg) {
  FollowerAction a;
  a.power = std::clamp(power, cfg.p_min, cfg.p_max);
  a.raw_power = (a.power - cfg.p_min) / (cfg.p_max - cfg.p_min);
  return a;
}

JointAction random_raw_leader(const EnvConfig& env, std::size_t dims, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> raw(dims);
  for (double& v : raw) v = unit(rng);
  JointAction a;
  a.leader = LeaderAction::decode(raw, env.game);
  return a;
}

}  // namespace

JointAction gbs_policy(const ChannelState& current, const GameConfig& cfg,
                       const ChannelParams& params, GameMode mode) {
  const int k = current.num_relays();
  try {
    const EquilibriumSolution sol = mode == GameMode::alliance
                                        ? alliance_equilibrium(current, cfg, params)
                                        : competitive_equilibrium(current, cfg, params);
    return {make_leader(sol.leader.relay_index, sol.leader.price, k, cfg),
            make_follower(sol.follower.power, cfg)};
  } catch (const NoEquilibriumError&) {
    return {make_leader(0, cfg.c_min, k, cfg), make_follower(cfg.p_min, cfg)};
  }
}

JointAction random_policy(const GameConfig& cfg, int num_relays, Rng& rng) {
  if (num_relays < 1) throw std::invalid_argument("random_policy: need at least one relay");
  std::uniform_int_distribution<int> relay(0, num_relays - 1);
  std::uniform_real_distribution<double> price(cfg.c_min, cfg.c_max);
  std::uniform_real_distribution<double> power(cfg.p_min, cfg.p_max);
  const int k = relay(rng);
  const double c = price(rng);
  const double p = power(rng);
  return {make_leader(k, c, num_relays, cfg), make_follower(p, cfg)};
}

FollowerAction analytic_follower(const ChannelState& channel, const LeaderAction& leader,
                                 const GameConfig& cfg, const ChannelParams& params) {
  LinkQuantities lq;
  if (!try_link_quantities(channel, leader.relay_index, cfg.p_s, params, lq)) {
    return make_follower(cfg.p_min, cfg);
  }
  return make_follower(best_response_power(leader.price, lq, cfg).power, cfg);
}

JointAction GbsPolicy::act(const ChannelState& /*observed*/, const ChannelState& current,
                           const SlotContext& /*ctx*/, Rng& /*rng*/) {
  return gbs_policy(current, env_.game, env_.channel, mode_);
}

JointAction RandomPolicy::act(const ChannelState& /*observed*/, const ChannelState& /*current*/,
                              const SlotContext& /*ctx*/, Rng& rng) {
  return random_policy(env_.game, env_.channel.num_relays, rng);
}

LgmsPolicy::LgmsPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, std::uint64_t seed)
    : env_(env),
      agent_cfg_(agent_cfg),
      init_rng_(make_stream(seed, Stream::init)),
      leader_(leader_state_dim(env.channel.num_relays),
              static_cast<std::size_t>(env.channel.num_relays) + 1, agent_cfg, init_rng_) {}

double LgmsPolicy::exploration(int episode, const Schedule& schedule) const {
  return linear_schedule(episode, schedule, agent_cfg_.noise_start, agent_cfg_.noise_end);
}

JointAction LgmsPolicy::act(const ChannelState& observed, const ChannelState& /*current*/,
                            const SlotContext& ctx, Rng& rng) {
  JointAction a;
  if (ctx.warmup) {
    a = random_raw_leader(env_, leader_.action_dim(), rng);
  } else {
    a.leader = leader_act(leader_, build_leader_state(observed, env_.channel), ctx.noise_scale,
                          env_.game, rng);
  }
  a.follower = analytic_follower(observed, a.leader, env_.game, env_.channel);
  return a;
}

void LgmsPolicy::learn(const ChannelState& observed, const JointAction& action,
                       const StepOutcome& outcome, const ChannelState& next_observed,
                       const SlotContext& /*ctx*/, Rng& rng) {
  leader_.remember(build_leader_state(observed, env_.channel), action.leader.encoded(),
                   outcome.r_leader, build_leader_state(next_observed, env_.channel));
  leader_.train_step(rng);
}

QAgent::QAgent(std::size_t state_dim, std::size_t num_actions, const AgentConfig& cfg,
               Rng& init_rng)
    : cfg_(cfg),
      state_dim_(state_dim),
      num_actions_(num_actions),
      buffer_(cfg.buffer_capacity, state_dim, 1, 0.0, cfg.priority_epsilon) {
  cfg_.validate();
  if (num_actions == 0) throw ConfigError("QAgent: need at least one action");
  q_ = Mlp::random(Mlp::chain(state_dim, cfg.hidden, Activation::relu,
                              LayerSpec{0, num_actions, Activation::identity}),
                   init_rng);
  target_ = q_;
  opt_ = RmsPropState(q_, {cfg.critic_lr, cfg.rms_decay, cfg.rms_floor});
  grads_ = MlpGradients(q_);
}

std::vector<double> QAgent::q_values(std::span<const double> state) const {
  return predict(q_, state);
}

std::size_t QAgent::greedy(std::span<const double> state) const {
  const std::vector<double> q = q_values(state);
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::size_t QAgent::act(std::span<const double> state, double epsilon, Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (epsilon > 0.0 && unit(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, num_actions_ - 1);
    return pick(rng);
  }
  return greedy(state);
}

void QAgent::remember(std::span<const double> state, std::size_t action, double reward,
                      std::span<const double> next_state) {
  const double a[] = {static_cast<double>(action)};
  buffer_.add(state, a, reward, next_state);
}

double QAgent::train_step(Rng& rng) {
  if (buffer_.size() < cfg_.batch_size) return 0.0;
  // Priorities are never refreshed, so every stored item keeps priority 1
  // and sampling is uniform.
  const ReplayBatch batch = buffer_.sample(cfg_.batch_size, rng);
  const std::size_t n = batch.rewards.size();
  std::vector<double> target(batch.rewards);
  if (cfg_.discount > 0.0) {
    const ForwardCache next = forward(target_, batch.next_states);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = next.output().row(i);
      target[i] += cfg_.discount * *std::max_element(row.begin(), row.end());
    }
  }
  forward(q_, batch.states, cache_);
  const Matrix& q = cache_.output();
  Matrix grad(n, num_actions_);
  double mean_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(batch.actions(i, 0));
    const double delta = target[i] - q(i, a);
    grad(i, a) = -delta / static_cast<double>(n);
    mean_abs += std::abs(delta);
  }
  grads_.zero();
  backward(q_, cache_, grad, &grads_, nullptr);
  opt_.step(q_, grads_);
  soft_update(target_, q_, cfg_.tau);
  return mean_abs / static_cast<double>(n);
}

DqnPolicy::DqnPolicy(const EnvConfig& env, const AgentConfig& agent_cfg, DiscretizationSpec spec,
                     std::uint64_t seed, double epsilon_start, double epsilon_end)
    : env_(env),
      spec_((spec.validate(), spec)),
      epsilon_start_(epsilon_start),
      epsilon_end_(epsilon_end),
      init_rng_(make_stream(seed, Stream::init)),
      leader_(leader_state_dim(env.channel.num_relays),
              static_cast<std::size_t>(env.channel.num_relays) * static_cast<std::size_t>(spec.price_bins),
              agent_cfg, init_rng_),
      follower_(follower_state_dim(env.channel.num_relays),
                static_cast<std::size_t>(spec.power_bins), agent_cfg, init_rng_) {}

double DqnPolicy::exploration(int episode, const Schedule& schedule) const {
  return linear_schedule(episode, schedule, epsilon_start_, epsilon_end_);
}

LeaderAction DqnPolicy::leader_from_index(std::size_t index) const {
  const auto bins = static_cast<std::size_t>(spec_.price_bins);
  const int relay = static_cast<int>(index / bins);
  const int bin = static_cast<int>(index % bins);
  return make_leader(relay, grid_value(bin, spec_.price_bins, env_.game.c_min, env_.game.c_max),
                     env_.channel.num_relays, env_.game);
}

FollowerAction DqnPolicy::follower_from_index(std::size_t index) const {
  return make_follower(grid_value(static_cast<int>(index), spec_.power_bins, env_.game.p_min,
                                  env_.game.p_max),
                       env_.game);
}

std::size_t DqnPolicy::leader_index(const LeaderAction& a) const {
  const long bin = std::lround(a.raw_price * (spec_.price_bins - 1));
  return static_cast<std::size_t>(a.relay_index) * static_cast<std::size_t>(spec_.price_bins) +
         static_cast<std::size_t>(bin);
}

std::size_t DqnPolicy::follower_index(const FollowerAction& a) const {
  return static_cast<std::size_t>(std::lround(a.raw_power * (spec_.power_bins - 1)));
}

JointAction DqnPolicy::act(const ChannelState& observed, const ChannelState& /*current*/,
                           const SlotContext& ctx, Rng& rng) {
  const std::vector<double> s_leader = build_leader_state(observed, env_.channel);
  JointAction a;
  a.leader = leader_from_index(leader_.act(s_leader, ctx.noise_scale, rng));
  const std::vector<double> s_follower = build_follower_state(s_leader, a.leader, env_.game);
  a.follower = follower_from_index(follower_.act(s_follower, ctx.noise_scale, rng));
  return a;
}

void DqnPolicy::learn(const ChannelState& observed, const JointAction& action,
                      const StepOutcome& outcome, const ChannelState& next_observed,
                      const SlotContext& /*ctx*/, Rng& rng) {
  const std::vector<double> s_leader = build_leader_state(observed, env_.channel);
  const std::vector<double> s_leader_next = build_leader_state(next_observed, env_.channel);
  const std::vector<double> s_follower = build_follower_state(s_leader, action.leader, env_.game);
  const std::vector<double> s_follower_next = build_follower_state(
      s_leader_next, leader_from_index(leader_.greedy(s_leader_next)), env_.game);
  leader_.remember(s_leader, leader_index(action.leader), outcome.r_leader, s_leader_next);
  follower_.remember(s_follower, follower_index(action.follower), outcome.r_follower,
                     s_follower_next);
  leader_.train_step(rng);
  follower_.train_step(rng);
}

}  // namespace relaygame
