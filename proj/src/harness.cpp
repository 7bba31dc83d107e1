#include "relaygame/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "relaygame/baselines.hpp"
#include "relaygame/mlp.hpp"

namespace relaygame {

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string metrics_header() {
  return "scenario,seed,sweep_value,episode,mean_u_source,mean_u_relay,mean_capacity";
}

std::string format_metrics_row(const MetricsRow& row) {
  std::string s = row.scenario + "," + std::to_string(row.seed) + ",";
  if (row.sweep_value) s += format_number(*row.sweep_value);
  s += "," + row.episode + "," + format_number(row.mean_u_source) + "," +
       format_number(row.mean_u_relay) + "," + format_number(row.mean_capacity);
  return s;
}

MetricsRow parse_metrics_row(std::string_view line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    f.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (f.size() != 7) throw std::invalid_argument("metrics row: expected 7 fields");
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("metrics row: bad number '" + s + "'");
    return v;
  };
  MetricsRow r;
  r.scenario = f[0];
  std::size_t used = 0;
  r.seed = std::stoull(f[1], &used);
  if (used != f[1].size()) throw std::invalid_argument("metrics row: bad seed");
  if (!f[2].empty()) r.sweep_value = number(f[2]);
  if (f[3] != "test") {
    std::size_t u = 0;
    (void)std::stoi(f[3], &u);
    if (u != f[3].size()) throw std::invalid_argument("metrics row: bad episode");
  }
  r.episode = f[3];
  r.mean_u_source = number(f[4]);
  r.mean_u_relay = number(f[5]);
  r.mean_capacity = number(f[6]);
  return r;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_header() << '\n';
  for (const MetricsRow& r : rows) out << format_metrics_row(r) << '\n';
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: no values");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

SeedSummary summarize(const std::vector<double>& values) {
  SeedSummary s;
  s.median = lower_median(values);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

std::unique_ptr<Policy> make_policy(const ScenarioConfig& cfg, std::uint64_t seed) {
  switch (cfg.policy) {
    case PolicyKind::proposed: return std::make_unique<MarlPolicy>(cfg.env, cfg.agent, seed);
    case PolicyKind::gbs: return std::make_unique<GbsPolicy>(cfg.env, cfg.mode);
    case PolicyKind::lgms: return std::make_unique<LgmsPolicy>(cfg.env, cfg.agent, seed);
    case PolicyKind::dqn:
      return std::make_unique<DqnPolicy>(cfg.env, cfg.agent, cfg.discretization, seed,
                                         cfg.epsilon_start, cfg.epsilon_end);
    case PolicyKind::random: return std::make_unique<RandomPolicy>(cfg.env);
  }
  throw ConfigError("unknown policy");
}

SeedRun run_seed(const ScenarioConfig& cfg, std::uint64_t seed) {
  SeedRun run;
  run.policy = make_policy(cfg, seed);
  if (run.policy->learns()) run.train = run_training(*run.policy, cfg.env, cfg.schedule, seed);
  run.test = run_test(*run.policy, cfg.env, cfg.schedule, seed);
  return run;
}

EpisodeStats test_means(const TrainingLog& test) {
  EpisodeStats m;
  if (test.episodes.empty()) return m;
  for (const EpisodeStats& e : test.episodes) {
    m.mean_u_source += e.mean_u_source;
    m.mean_u_relay += e.mean_u_relay;
    m.mean_capacity += e.mean_capacity;
  }
  const double n = static_cast<double>(test.episodes.size());
  m.mean_u_source /= n;
  m.mean_u_relay /= n;
  m.mean_capacity /= n;
  m.episode = -1;
  return m;
}

namespace {

void append_rows(const ScenarioConfig& cfg, std::optional<double> sweep_value, ScenarioRows& out) {
  for (std::uint64_t seed : cfg.seeds) {
    const SeedRun run = run_seed(cfg, seed);
    for (const EpisodeStats& e : run.train.episodes) {
      out.train.push_back({cfg.id, seed, sweep_value, std::to_string(e.episode), e.mean_u_source,
                           e.mean_u_relay, e.mean_capacity});
    }
    const EpisodeStats t = test_means(run.test);
    out.test.push_back({cfg.id, seed, sweep_value, "test", t.mean_u_source, t.mean_u_relay, t.mean_capacity});
  }
}

ScenarioRows sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values) {
  base.validate();
  std::vector<ScenarioConfig> cfgs;
  for (double v : values) {
    ScenarioConfig c = with_sweep_value(base, axis, v);
    c.validate();  // every value checked before any run starts
    cfgs.push_back(std::move(c));
  }
  ScenarioRows rows;
  for (std::size_t i = 0; i < cfgs.size(); ++i) append_rows(cfgs[i], values[i], rows);
  return rows;
}

SolveRow to_solve_row(std::uint64_t seed, const EquilibriumSolution& s) {
  return {seed, s.mode, s.leader.relay_index, s.leader.price, s.follower.power, s.u_source, s.u_relay, s.capacity};
}

EquilibriumSolution solve_mode(const ChannelState& state, const ScenarioConfig& cfg, GameMode mode) {
  if (mode == GameMode::alliance) return alliance_equilibrium(state, cfg.env.game, cfg.env.channel);
  return competitive_equilibrium(state, cfg.env.game, cfg.env.channel, cfg.relay_bounds);
}

}  // namespace

ScenarioRows run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioRows rows;
  append_rows(cfg, std::nullopt, rows);
  return rows;
}

ScenarioRows sweep_source_power(const ScenarioConfig& base, const std::vector<double>& values) {
  return sweep(base, SweepAxis::p_s, values);
}

ScenarioRows sweep_alpha(const ScenarioConfig& base, const std::vector<double>& values) {
  return sweep(base, SweepAxis::alpha, values);
}

std::string solve_header() { return "seed,mode,k,c_k,p_k,u_source,u_relay,capacity"; }

std::string format_solve_row(const SolveRow& r) {
  return std::to_string(r.seed) + "," + std::string(to_string(r.mode)) + "," + std::to_string(r.relay) +
         "," + format_number(r.price) + "," + format_number(r.power) + "," + format_number(r.u_source) +
         "," + format_number(r.u_relay) + "," + format_number(r.capacity);
}

std::vector<SolveRow> solve_draws(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<SolveRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    Rng rng = make_stream(seed, Stream::test_channel);
    const ChannelState state = init_channels(cfg.env.channel, rng);
    rows.push_back(to_solve_row(seed, solve_mode(state, cfg, cfg.mode)));
  }
  return rows;
}

std::string serialize_channel(const ChannelState& state) {
  std::string s = "h_sk=[";
  for (std::size_t i = 0; i < state.h_sk.size(); ++i) {
    if (i) s += ";";
    s += format_number(state.h_sk[i].re) + "," + format_number(state.h_sk[i].im);
  }
  s += "] h_kd=[";
  for (std::size_t i = 0; i < state.h_kd.size(); ++i) {
    if (i) s += ";";
    s += format_number(state.h_kd[i].re) + "," + format_number(state.h_kd[i].im);
  }
  return s + "]";
}

std::string compare_header() {
  return "p_s,draw,mode,k,c_k,p_k,u_source,u_relay,capacity";
}

std::string format_compare_row(const CompareRow& r) {
  auto line = [&](const SolveRow& s) {
    return format_number(r.p_s) + "," + std::to_string(r.draw) + "," + std::string(to_string(s.mode)) +
           "," + std::to_string(s.relay) + "," + format_number(s.price) + "," + format_number(s.power) +
           "," + format_number(s.u_source) + "," + format_number(s.u_relay) + "," +
           format_number(s.capacity);
  };
  return line(r.alliance) + "\n" + line(r.competitive);
}

std::vector<CompareRow> compare_settings(const ScenarioConfig& cfg, const std::vector<double>& p_s_values,
                                         int draws, std::uint64_t seed, double tolerance) {
  cfg.validate();
  if (cfg.env.channel.num_relays < 2) throw ConfigError("compare needs at least two relays");
  if (draws < 1) throw ConfigError("compare needs at least one draw");
  std::vector<CompareRow> rows;
  for (double p_s : p_s_values) {
    ScenarioConfig c = with_sweep_value(cfg, SweepAxis::p_s, p_s);
    c.validate();
    Rng rng = make_stream(seed, Stream::test_channel);
    for (int d = 0; d < draws; ++d) {
      const ChannelState state = init_channels(c.env.channel, rng);
      CompareRow row{p_s, d, to_solve_row(seed, solve_mode(state, c, GameMode::alliance)),
                     to_solve_row(seed, solve_mode(state, c, GameMode::competitive))};
      if (row.alliance.u_relay < row.competitive.u_relay - tolerance) {
        throw OrderingViolation("alliance revenue below competitive revenue at p_s=" + format_number(p_s) +
                                " draw=" + std::to_string(d) + " " + serialize_channel(state) +
                                " alliance=" + format_number(row.alliance.u_relay) +
                                " competitive=" + format_number(row.competitive.u_relay));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

OracleReport oracle_check(const ScenarioConfig& cfg, int draws, double c_step, double p_step,
                          std::uint64_t seed) {
  cfg.validate();
  if (draws < 1) throw ConfigError("oracle-check needs at least one draw");
  if (!(c_step > 0.0 && p_step > 0.0)) throw ConfigError("oracle-check steps must be > 0");
  OracleReport r;
  r.draws = draws;
  r.c_step = c_step;
  r.p_step = p_step;
  r.bound = grid_oracle_bound(cfg.env.game, c_step, p_step);
  Rng rng = make_stream(seed, Stream::test_channel);
  for (int d = 0; d < draws; ++d) {
    const ChannelState state = init_channels(cfg.env.channel, rng);
    const EquilibriumSolution grid = grid_oracle(state, cfg.env.game, cfg.env.channel, c_step, p_step);
    const EquilibriumSolution closed = alliance_equilibrium(state, cfg.env.game, cfg.env.channel);
    const double gap = std::abs(grid.u_relay - closed.u_relay);
    if (gap > r.max_gap || r.worst_draw < 0) {
      r.max_gap = gap;
      r.worst_draw = d;
      r.worst_payload = serialize_channel(state);
    }
    if (cfg.env.channel.num_relays >= 2) {
      const EquilibriumSolution comp =
          competitive_equilibrium(state, cfg.env.game, cfg.env.channel, cfg.relay_bounds);
      r.max_competitive_excess = std::max(r.max_competitive_excess, comp.u_relay - grid.u_relay);
    }
  }
  r.passed = r.max_gap <= r.bound && r.max_competitive_excess <= r.bound;
  return r;
}

std::string format_oracle_report(const OracleReport& r) {
  std::ostringstream out;
  out << "draws=" << r.draws << "\n"
      << "c_step=" << format_number(r.c_step) << "\n"
      << "p_step=" << format_number(r.p_step) << "\n"
      << "bound=" << format_number(r.bound) << "\n"
      << "max_gap=" << format_number(r.max_gap) << "\n"
      << "max_competitive_excess=" << format_number(r.max_competitive_excess) << "\n"
      << "worst_draw=" << r.worst_draw << "\n"
      << "worst_channel=" << r.worst_payload << "\n"
      << "result=" << (r.passed ? "pass" : "fail") << "\n";
  return out.str();
}

namespace {

struct NetRef {
  const char* name;
  Mlp& (DdpgAgent::*get)();
};

const NetRef kNets[] = {{"actor", &DdpgAgent::mutable_actor},
                        {"critic", &DdpgAgent::mutable_critic},
                        {"target_actor", &DdpgAgent::mutable_target_actor},
                        {"target_critic", &DdpgAgent::mutable_target_critic}};

}  // namespace

void save_policy_checkpoints(const MarlPolicy& policy, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto& p = const_cast<MarlPolicy&>(policy);  // accessors only; nothing is modified
  for (auto [role, agent] : {std::pair<const char*, DdpgAgent*>{"leader", &p.mutable_leader()},
                             {"follower", &p.mutable_follower()}}) {
    for (const NetRef& n : kNets) {
      const auto path = dir / (std::string(role) + "_" + n.name + ".ckpt");
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      save_checkpoint((agent->*n.get)(), out);
    }
  }
}

void load_policy_checkpoints(MarlPolicy& policy, const std::filesystem::path& dir) {
  for (auto [role, agent] : {std::pair<const char*, DdpgAgent*>{"leader", &policy.mutable_leader()},
                             {"follower", &policy.mutable_follower()}}) {
    for (const NetRef& n : kNets) {
      const auto path = dir / (std::string(role) + "_" + n.name + ".ckpt");
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read checkpoint " + path.string());
      Mlp loaded = load_checkpoint(in);
      Mlp& slot = (agent->*n.get)();
      if (!loaded.same_shape(slot)) throw ConfigError("checkpoint shape mismatch: " + path.string());
      slot = std::move(loaded);
      slot.touch();
    }
  }
}

void write_episode_csv(std::ostream& out, const TrainingLog& log) {
  out << "episode,mean_u_source,mean_u_relay,mean_capacity,noise_scale\n";
  for (const EpisodeStats& e : log.episodes) {
    out << e.episode << "," << format_number(e.mean_u_source) << "," << format_number(e.mean_u_relay)
        << "," << format_number(e.mean_capacity) << "," << format_number(e.noise_scale) << "\n";
  }
}

}  // namespace relaygame
