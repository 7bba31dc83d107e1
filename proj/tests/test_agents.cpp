#include <doctest.h>

#include <cmath>
#include <random>

#include "relaygame/agents.hpp"
#include "relaygame/training.hpp"
#include "support.hpp"

using namespace relaygame;
using relaygame::testing::single_link;

namespace {

AgentConfig small_agent() {
  AgentConfig cfg;
  cfg.hidden = {16, 16};
  cfg.batch_size = 32;
  cfg.buffer_capacity = 256;
  return cfg;
}

Schedule tiny_schedule() {
  Schedule s;
  s.episodes = 3;
  s.slots = 60;
  s.warmup_episodes = 1;
  s.test_episodes = 1;
  s.test_slots = 40;
  return s;
}

}  // namespace

TEST_CASE("leader state features") {
  const ChannelParams p = ChannelParams::uniform(3, 0.8, 2.0, 0.1);
  Rng rng(1);
  const ChannelState s = init_channels(p, rng);
  const std::vector<double> f = build_leader_state(s, p);
  REQUIRE(f.size() == 6);
  for (int k = 0; k < 3; ++k) {
    CHECK(f[k] == doctest::Approx(s.h_sk[k].power() / 2.0));
    CHECK(f[3 + k] == doctest::Approx(s.h_kd[k].power() / 2.0));
  }
  CHECK(build_leader_state(s, p) == f);

  ChannelState zero = s;
  for (auto& h : zero.h_sk) h = {};
  for (auto& h : zero.h_kd) h = {};
  for (double v : build_leader_state(zero, p)) CHECK(v == 0.0);
  CHECK(leader_state_dim(4) == 8);
  CHECK(follower_state_dim(4) == 13);
}

TEST_CASE("follower state appends the executed leader action") {
  const GameConfig cfg;
  const std::vector<double> leader_state{0.1, 0.2, 0.3, 0.4};
  const LeaderAction a = LeaderAction::decode(std::vector<double>{0.2, 0.9, 0.25}, cfg);
  const std::vector<double> s = build_follower_state(leader_state, a, cfg);
  CHECK(s == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.0, 1.0, 0.25});
}

TEST_CASE("action decoding") {
  const GameConfig cfg;
  const LeaderAction a = LeaderAction::decode(std::vector<double>{0.3, 0.7, 0.7, 0.5}, cfg);
  CHECK(a.relay_index == 1);  // first index on ties
  CHECK(a.price == doctest::Approx(5.0));
  CHECK(a.encoded() == std::vector<double>{0.3, 0.7, 0.7, 0.5});
  CHECK(LeaderAction::decode(std::vector<double>{0.0, 1.7}, cfg).price == cfg.c_max);
  CHECK(FollowerAction::decode(-0.2, cfg).power == cfg.p_min);
  CHECK(FollowerAction::decode(0.25, cfg).power == doctest::Approx(0.5));
}

TEST_CASE("noisy actions always respect the boxes; zero noise is deterministic") {
  Rng init(2);
  const GameConfig cfg;
  DdpgAgent leader(8, 5, small_agent(), init);
  DdpgAgent follower(13, 1, small_agent(), init);
  Rng rng(3);
  const std::vector<double> s(8, 0.5);
  std::vector<double> fs(13, 0.5);
  for (int i = 0; i < 10000; ++i) {
    const LeaderAction a = leader_act(leader, s, 0.3, cfg, rng);
    REQUIRE(a.price >= cfg.c_min);
    REQUIRE(a.price <= cfg.c_max);
    REQUIRE(a.relay_index >= 0);
    REQUIRE(a.relay_index < 4);
    const FollowerAction f = follower_act(follower, fs, 0.3, cfg, rng);
    REQUIRE(f.power >= cfg.p_min);
    REQUIRE(f.power <= cfg.p_max);
  }
  const LeaderAction a1 = leader_act(leader, s, 0.0, cfg, rng);
  const LeaderAction a2 = leader_act(leader, s, 0.0, cfg, rng);
  CHECK(a1.relay_index == a2.relay_index);
  CHECK(a1.price == a2.price);
  CHECK(follower_act(follower, fs, 0.0, cfg, rng).power == follower_act(follower, fs, 0.0, cfg, rng).power);
}

TEST_CASE("a dominant score always selects its relay") {
  Rng init(4);
  const GameConfig cfg;
  DdpgAgent leader(8, 5, small_agent(), init);
  Mlp& actor = leader.mutable_actor();
  Layer& head = actor.mutable_layer(actor.num_layers() - 1);
  for (std::size_t i = 0; i < head.weights.size(); ++i) head.weights[i] = 0.0;
  for (double& b : head.bias) b = -50.0;
  head.bias[2] = 50.0;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(leader_act(leader, std::vector<double>(8, 0.3), 0.0, cfg, rng).relay_index == 2);
  }
}

TEST_CASE("environment rewards") {
  const ChannelParams p = ChannelParams::uniform(1, 1.0, 1.0, 0.1);
  const GameConfig cfg;
  const ChannelState s = single_link(1.0, 1.0);
  LeaderAction leader = LeaderAction::decode(std::vector<double>{1.0, 1.0}, cfg);  // price 10
  FollowerAction zero = FollowerAction::decode(0.0, cfg);
  StepOutcome o = env_step(s, leader, zero, cfg, p);
  CHECK(o.r_leader == 0.0);
  CHECK(o.r_follower == 0.0);

  const FollowerAction full = FollowerAction::decode(1.0, cfg);  // power 2
  o = env_step(s, leader, full, cfg, p);
  CHECK(o.r_leader == doctest::Approx(2.0));
  const LinkQuantities lq = link_quantities(s, 0, cfg.p_s, p);
  CHECK(o.r_follower == source_utility(2.0, 10.0, lq, cfg.alpha));
  CHECK(o.u_relay == relay_utility(2.0, 10.0));
  CHECK(o.capacity == channel_capacity(2.0, lq));

  o = env_step(single_link(1.0, 1e-15), leader, full, cfg, p);
  CHECK(o.capacity == 0.0);
  CHECK(o.r_follower == doctest::Approx(-cfg.alpha * 10.0 * 2.0));
}

TEST_CASE("critic regresses a constant reward") {
  Rng init(6);
  AgentConfig cfg = small_agent();
  DdpgAgent agent(3, 2, cfg, init);
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    const std::vector<double> s{u(rng), u(rng), u(rng)};
    agent.remember(s, std::vector<double>{u(rng), u(rng)}, 0.7, s);
  }
  const ReplayBatch batch = agent.buffer().sample(32, rng);
  for (int step = 0; step < 2000; ++step) agent.critic_train_step(batch);
  for (double d : agent.td_errors(batch)) CHECK(std::abs(d) <= 0.05);
}

TEST_CASE("zero importance weights leave the critic unchanged") {
  Rng init(8);
  DdpgAgent agent(3, 1, small_agent(), init);
  Rng rng(9);
  for (int i = 0; i < 40; ++i) agent.remember(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.5}, 1.0,
                                              std::vector<double>{0.1, 0.2, 0.3});
  ReplayBatch batch = agent.buffer().sample(8, rng);
  for (double& w : batch.weights) w = 0.0;
  const Mlp before = agent.critic();
  agent.critic_train_step(batch);
  for (std::size_t l = 0; l < before.num_layers(); ++l) {
    CHECK(agent.critic().layer(l).weights == before.layer(l).weights);
  }
}

TEST_CASE("a small critic step lowers the weighted TD loss") {
  Rng init(10);
  AgentConfig cfg = small_agent();
  cfg.critic_lr = 1e-5;
  DdpgAgent agent(3, 2, cfg, init);
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 16; ++i) {
    const std::vector<double> s{u(rng), u(rng), u(rng)};
    agent.remember(s, std::vector<double>{u(rng), u(rng)}, u(rng), s);
  }
  ReplayBatch batch = agent.buffer().sample(8, rng);
  for (std::size_t i = 0; i < batch.weights.size(); ++i) batch.weights[i] = 0.3 + 0.1 * static_cast<double>(i);
  auto loss = [&](const std::vector<double>& td) {
    double l = 0.0;
    for (std::size_t i = 0; i < td.size(); ++i) l += 0.5 * batch.weights[i] * td[i] * td[i];
    return l;
  };
  const double before = loss(agent.td_errors(batch));
  const std::vector<double> used = agent.critic_train_step(batch);
  CHECK(loss(used) == doctest::Approx(before));
  CHECK(loss(agent.td_errors(batch)) < before);
}

TEST_CASE("actor ascends a fitted quadratic critic to its peak") {
  Rng init(12);
  AgentConfig cfg = small_agent();
  cfg.hidden = {32, 32};
  cfg.critic_lr = 3e-4;
  DdpgAgent agent(2, 1, cfg, init);
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Critic learns Q(s, a) = -(a - 0.5)^2, then is held fixed.
  for (int i = 0; i < 256; ++i) {
    const double a = u(rng);
    const std::vector<double> s{u(rng), u(rng)};
    agent.remember(s, std::vector<double>{a}, -(a - 0.5) * (a - 0.5), s);
  }
  for (int step = 0; step < 30000; ++step) agent.critic_train_step(agent.buffer().sample(256, rng));
  double peak = 0.0, peak_q = -1e300;
  for (int i = 0; i <= 100; ++i) {
    const double q = predict(agent.critic(), std::vector<double>{0.5, 0.5, i / 100.0})[0];
    if (q > peak_q) {
      peak_q = q;
      peak = i / 100.0;
    }
  }
  REQUIRE(std::abs(peak - 0.5) <= 0.04);
  const Mlp frozen = agent.critic();
  for (int step = 0; step < 2000; ++step) agent.actor_train_step(agent.buffer().sample(64, rng));
  for (std::size_t l = 0; l < frozen.num_layers(); ++l) {
    REQUIRE(agent.critic().layer(l).weights == frozen.layer(l).weights);
  }
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> s{u(rng), u(rng)};
    CHECK(std::abs(agent.act(s)[0] - 0.5) <= 0.05);
  }
}

TEST_CASE("actor gradient through the critic matches finite differences") {
  Rng init(14);
  AgentConfig cfg = small_agent();
  cfg.hidden = {6, 5};
  DdpgAgent agent(3, 2, cfg, init);
  Rng rng(15);
  const Matrix states = [&] {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(6, 3);
    for (double& v : m.data) v = u(rng);
    return m;
  }();
  const MlpGradients g = agent.actor_objective_gradient(states);

  auto objective = [&](const Mlp& actor) {
    double j = 0.0;
    for (std::size_t i = 0; i < states.rows; ++i) {
      std::vector<double> x(states.row(i).begin(), states.row(i).end());
      const std::vector<double> a = predict(actor, x);
      x.insert(x.end(), a.begin(), a.end());
      j += predict(agent.critic(), x)[0];
    }
    return j / static_cast<double>(states.rows);
  };
  Mlp actor = agent.actor();
  const double h = 1e-6;
  double diff = 0.0, norm = 0.0;
  for (std::size_t l = 0; l < actor.num_layers(); ++l) {
    for (std::size_t i = 0; i < actor.layer(l).weights.size(); ++i) {
      const double keep = actor.layer(l).weights[i];
      actor.mutable_layer(l).weights[i] = keep + h;
      const double up = objective(actor);
      actor.mutable_layer(l).weights[i] = keep - h;
      const double down = objective(actor);
      actor.mutable_layer(l).weights[i] = keep;
      const double fd = (up - down) / (2 * h);
      diff += (fd - g.weights[l][i]) * (fd - g.weights[l][i]);
      norm += fd * fd;
    }
  }
  CHECK(std::sqrt(diff / norm) <= 1e-4);
}

TEST_CASE("a flat critic leaves the actor unchanged") {
  Rng init(16);
  DdpgAgent agent(2, 1, small_agent(), init);
  Mlp& critic = agent.mutable_critic();
  for (std::size_t l = 0; l < critic.num_layers(); ++l) {
    for (double& w : critic.mutable_layer(l).weights) w = 0.0;
  }
  Rng rng(17);
  for (int i = 0; i < 40; ++i) agent.remember(std::vector<double>{0.1, 0.2}, std::vector<double>{0.5}, 0.0,
                                              std::vector<double>{0.1, 0.2});
  const Mlp before = agent.actor();
  agent.actor_train_step(agent.buffer().sample(16, rng));
  for (std::size_t l = 0; l < before.num_layers(); ++l) {
    CHECK(agent.actor().layer(l).weights == before.layer(l).weights);
  }
}

TEST_CASE("training is deterministic and logs consistent rewards") {
  EnvConfig env;
  const Schedule sched = tiny_schedule();
  TrainResult a = train(env, small_agent(), sched, 5, true);
  TrainResult b = train(env, small_agent(), sched, 5, true);
  REQUIRE(a.log.episodes.size() == 3);
  for (std::size_t e = 0; e < a.log.episodes.size(); ++e) {
    CHECK(a.log.episodes[e].mean_u_source == b.log.episodes[e].mean_u_source);
    CHECK(a.log.episodes[e].mean_capacity == b.log.episodes[e].mean_capacity);
  }
  REQUIRE(a.log.trace.size() == 180);
  for (const SlotRecord& r : a.log.trace) {
    REQUIRE(r.action.leader.price >= env.game.c_min);
    REQUIRE(r.action.leader.price <= env.game.c_max);
    REQUIRE(r.action.follower.power >= env.game.p_min);
    REQUIRE(r.action.follower.power <= env.game.p_max);
    REQUIRE(r.current.slot_index == r.observed.slot_index + 1);
    LinkQuantities lq;
    double cap = 0.0;
    if (try_link_quantities(r.current, r.action.leader.relay_index, env.game.p_s, env.channel, lq)) {
      cap = channel_capacity(r.action.follower.power, lq);
    }
    const double us = cap - env.game.alpha * r.action.leader.price * r.action.follower.power;
    REQUIRE(std::abs(r.outcome.u_source - us) <= 1e-9);
    REQUIRE(std::abs(r.outcome.r_leader -
                     env.game.beta * r.action.leader.price * r.action.follower.power) <= 1e-9);
  }
  CHECK(a.policy->leader().buffer().size() <= small_agent().buffer_capacity);
}

TEST_CASE("exploration schedule decays linearly after warmup") {
  Schedule s;
  s.episodes = 11;
  s.warmup_episodes = 1;
  CHECK(linear_schedule(0, s, 0.3, 0.01) == 0.3);
  CHECK(linear_schedule(1, s, 0.3, 0.01) == 0.3);
  CHECK(linear_schedule(6, s, 0.3, 0.01) == doctest::Approx(0.3 - 0.29 * 5.0 / 9.0));
  CHECK(linear_schedule(10, s, 0.3, 0.01) == doctest::Approx(0.01));
}

TEST_CASE("random streams are independent per purpose and reproducible per seed") {
  Rng a = make_stream(3, Stream::train_channel);
  Rng b = make_stream(3, Stream::train_channel);
  Rng c = make_stream(3, Stream::test_channel);
  Rng d = make_stream(4, Stream::train_channel);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}
