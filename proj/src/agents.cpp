#include "relaygame/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relaygame {

void AgentConfig::validate() const {
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (buffer_capacity < batch_size) throw ConfigError("buffer_capacity must be >= batch_size");
  if (!(noise_start >= 0.0 && noise_end >= 0.0)) throw ConfigError("noise scales must be >= 0");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in [0, 1]");
  if (!(priority_epsilon > 0.0)) throw ConfigError("priority_epsilon must be > 0");
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("hidden widths must be >= 1");
  }
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in (0, 1)");
  if (!(rms_floor > 0.0)) throw ConfigError("rms_floor must be > 0");
}

std::vector<double> LeaderAction::encoded() const {
  std::vector<double> out(raw_scores);
  out.push_back(raw_price);
  return out;
}

LeaderAction LeaderAction::decode(std::span<const double> raw, const GameConfig& cfg) {
  if (raw.size() < 2) throw std::invalid_argument("LeaderAction::decode: need K scores and a price");
  LeaderAction a;
  const std::size_t k = raw.size() - 1;
  a.raw_scores.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(k));
  a.raw_price = std::clamp(raw[k], 0.0, 1.0);
  a.relay_index = static_cast<int>(std::max_element(a.raw_scores.begin(), a.raw_scores.end()) -
                                   a.raw_scores.begin());
  a.price = std::clamp(cfg.c_min + (cfg.c_max - cfg.c_min) * a.raw_price, cfg.c_min, cfg.c_max);
  return a;
}

FollowerAction FollowerAction::decode(double raw, const GameConfig& cfg) {
  FollowerAction a;
  a.raw_power = std::clamp(raw, 0.0, 1.0);
  a.power = std::clamp(cfg.p_min + (cfg.p_max - cfg.p_min) * a.raw_power, cfg.p_min, cfg.p_max);
  return a;
}

std::size_t leader_state_dim(int num_relays) { return 2 * static_cast<std::size_t>(num_relays); }
std::size_t follower_state_dim(int num_relays) { return 3 * static_cast<std::size_t>(num_relays) + 1; }

std::vector<double> build_leader_state(const ChannelState& prev_channel, const ChannelParams& params) {
  const int k = prev_channel.num_relays();
  std::vector<double> s(leader_state_dim(k));
  for (int i = 0; i < k; ++i) {
    s[i] = prev_channel.h_sk[i].power() / params.var_sk[i];
    s[k + i] = prev_channel.h_kd[i].power() / params.var_kd[i];
  }
  return s;
}

std::vector<double> build_follower_state(std::span<const double> leader_state,
                                         const LeaderAction& action, const GameConfig& cfg) {
  const std::size_t k = leader_state.size() / 2;
  std::vector<double> s(leader_state.begin(), leader_state.end());
  s.resize(3 * k + 1, 0.0);
  s[2 * k + static_cast<std::size_t>(action.relay_index)] = 1.0;
  s[3 * k] = (action.price - cfg.c_min) / (cfg.c_max - cfg.c_min);
  return s;
}

StepOutcome env_step(const ChannelState& current_channel, const LeaderAction& leader,
                     const FollowerAction& follower, const GameConfig& cfg,
                     const ChannelParams& params) {
  StepOutcome out;
  LinkQuantities lq;
  if (try_link_quantities(current_channel, leader.relay_index, cfg.p_s, params, lq)) {
    out.capacity = channel_capacity(follower.power, lq);
  }
  out.u_relay = relay_utility(follower.power, leader.price);
  out.u_source = out.capacity - cfg.alpha * leader.price * follower.power;
  out.r_leader = cfg.beta * out.u_relay;
  out.r_follower = out.u_source;
  return out;
}

DdpgAgent::DdpgAgent(std::size_t state_dim, std::size_t action_dim, const AgentConfig& cfg,
                     Rng& init_rng)
    : cfg_(cfg),
      state_dim_(state_dim),
      action_dim_(action_dim),
      buffer_(cfg.buffer_capacity, state_dim, action_dim, cfg.kappa, cfg.priority_epsilon) {
  cfg_.validate();
  actor_ = Mlp::random(Mlp::chain(state_dim, cfg.hidden, Activation::relu,
                                  LayerSpec{0, action_dim, Activation::sigmoid_scaled, 0.0, 1.0}),
                       init_rng);
  critic_ = Mlp::random(Mlp::chain(state_dim + action_dim, cfg.hidden, Activation::relu,
                                   LayerSpec{0, 1, Activation::identity}),
                        init_rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = RmsPropState(actor_, {cfg.actor_lr, cfg.rms_decay, cfg.rms_floor});
  critic_opt_ = RmsPropState(critic_, {cfg.critic_lr, cfg.rms_decay, cfg.rms_floor});
  actor_grads_ = MlpGradients(actor_);
  critic_grads_ = MlpGradients(critic_);
}

std::vector<double> DdpgAgent::act(std::span<const double> state) const {
  return predict(actor_, state);
}

std::vector<double> DdpgAgent::act(std::span<const double> state, double noise_scale,
                                   Rng& rng) const {
  std::vector<double> a = predict(actor_, state);
  if (noise_scale > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_scale);
    for (double& v : a) v += noise(rng);
  }
  for (double& v : a) v = std::clamp(v, 0.0, 1.0);
  return a;
}

void DdpgAgent::remember(std::span<const double> state, std::span<const double> action,
                         double reward, std::span<const double> next_state) {
  buffer_.add(state, action, reward, next_state);
}

Matrix DdpgAgent::critic_input(const Matrix& states, const Matrix& actions) const {
  Matrix x(states.rows, state_dim_ + action_dim_);
  for (std::size_t i = 0; i < states.rows; ++i) {
    auto row = x.row(i);
    std::copy(states.row(i).begin(), states.row(i).end(), row.begin());
    std::copy(actions.row(i).begin(), actions.row(i).end(), row.begin() + state_dim_);
  }
  return x;
}

std::vector<double> DdpgAgent::td_errors(const ReplayBatch& batch) {
  forward(critic_, critic_input(batch.states, batch.actions), critic_cache_);
  const Matrix& q = critic_cache_.output();
  std::vector<double> delta(batch.rewards);
  if (cfg_.discount > 0.0) {
    // DDPG target: the target actor's action stands in for the max over a'.
    const ForwardCache next_actions = forward(target_actor_, batch.next_states);
    const ForwardCache next_q =
        forward(target_critic_, critic_input(batch.next_states, next_actions.output()));
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += cfg_.discount * next_q.output()(i, 0);
  }
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= q(i, 0);
  return delta;
}

std::vector<double> DdpgAgent::critic_train_step(const ReplayBatch& batch) {
  if (batch.rewards.empty()) throw std::invalid_argument("critic_train_step: empty batch");
  std::vector<double> delta = td_errors(batch);  // leaves the online forward in critic_cache_
  const std::size_t n = delta.size();
  Matrix grad(n, 1);
  for (std::size_t i = 0; i < n; ++i) grad(i, 0) = -batch.weights[i] * delta[i] / static_cast<double>(n);
  critic_grads_.zero();
  backward(critic_, critic_cache_, grad, &critic_grads_, nullptr);
  critic_opt_.step(critic_, critic_grads_);
  return delta;
}

MlpGradients DdpgAgent::actor_objective_gradient(const Matrix& states) {
  forward(actor_, states, actor_cache_);
  forward(critic_, critic_input(states, actor_cache_.output()), critic_cache_);
  const std::size_t n = states.rows;
  const Matrix dq(n, 1, 1.0 / static_cast<double>(n));
  Matrix dinput;
  backward(critic_, critic_cache_, dq, nullptr, &dinput);
  Matrix daction(n, action_dim_);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < action_dim_; ++j) daction(i, j) = dinput(i, state_dim_ + j);
  }
  MlpGradients grads(actor_);
  backward(actor_, actor_cache_, daction, &grads, nullptr);
  return grads;
}

double DdpgAgent::actor_train_step(const ReplayBatch& batch) {
  MlpGradients grads = actor_objective_gradient(batch.states);
  double objective = 0.0;
  for (double q : critic_cache_.output().data) objective += q;
  objective /= static_cast<double>(batch.states.rows);
  grads.scale(-1.0);  // ascend J by descending -J
  actor_opt_.step(actor_, grads);
  return objective;
}

void DdpgAgent::soft_update_targets() {
  soft_update(target_actor_, actor_, cfg_.tau);
  soft_update(target_critic_, critic_, cfg_.tau);
}

double DdpgAgent::train_step(Rng& rng) {
  if (buffer_.size() < cfg_.batch_size) return 0.0;
  const ReplayBatch batch = buffer_.sample(cfg_.batch_size, rng);
  const std::vector<double> delta = critic_train_step(batch);
  buffer_.update_priorities(batch.indices, delta);
  actor_train_step(batch);
  soft_update_targets();
  double mean_abs = 0.0;
  for (double d : delta) mean_abs += std::abs(d);
  return mean_abs / static_cast<double>(delta.size());
}

LeaderAction leader_act(const DdpgAgent& agent, std::span<const double> state, double noise_scale,
                        const GameConfig& cfg, Rng& rng) {
  return LeaderAction::decode(agent.act(state, noise_scale, rng), cfg);
}

FollowerAction follower_act(const DdpgAgent& agent, std::span<const double> state,
                            double noise_scale, const GameConfig& cfg, Rng& rng) {
  return FollowerAction::decode(agent.act(state, noise_scale, rng).at(0), cfg);
}

}  // namespace relaygame
