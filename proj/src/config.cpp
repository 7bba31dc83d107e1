#include "relaygame/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace relaygame {

namespace pt = boost::property_tree;

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::proposed: return "proposed";
    case PolicyKind::gbs: return "gbs";
    case PolicyKind::lgms: return "lgms";
    case PolicyKind::dqn: return "dqn";
    case PolicyKind::random: return "random";
  }
  return "?";
}

PolicyKind policy_from_string(std::string_view name) {
  for (PolicyKind p : {PolicyKind::proposed, PolicyKind::gbs, PolicyKind::lgms, PolicyKind::dqn,
                       PolicyKind::random}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "' (gbs|lgms|dqn|random|proposed)");
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::p_s: return "p_s";
    case SweepAxis::alpha: return "alpha";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  for (SweepAxis a : {SweepAxis::none, SweepAxis::p_s, SweepAxis::alpha}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(name) + "' (none|p_s|alpha)");
}

GameMode mode_from_string(std::string_view name) {
  if (name == "alliance") return GameMode::alliance;
  if (name == "competitive") return GameMode::competitive;
  throw ConfigError("unknown mode '" + std::string(name) + "' (alliance|competitive)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (!in || !(in >> std::ws).eof() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(to_double(key, item));
  return out;
}

std::vector<double> per_relay(const std::string& key, const std::vector<double>& values, int k) {
  if (values.size() == 1) return std::vector<double>(static_cast<std::size_t>(k), values[0]);
  if (values.size() != static_cast<std::size_t>(k)) {
    throw ConfigError("key '" + key + "': expected 1 or " + std::to_string(k) + " values");
  }
  return values;
}

// Section -> allowed keys.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"channel", {"num_relays", "rho", "var_sk", "var_kd", "noise_relay", "noise_dest"}},
      {"game",
       {"p_s", "p_min", "p_max", "c_min", "c_max", "alpha", "beta", "epsilon_price", "relay_c_min",
        "relay_c_max"}},
      {"agent",
       {"actor_lr", "critic_lr", "tau", "discount", "batch_size", "buffer_capacity", "noise_start",
        "noise_end", "kappa", "priority_epsilon", "hidden", "rms_decay", "rms_floor"}},
      {"schedule", {"episodes", "slots", "warmup_episodes", "test_episodes", "test_slots"}},
      {"baseline", {"price_bins", "power_bins", "epsilon_start", "epsilon_end"}},
      {"scenario", {"id", "policy", "mode", "seeds", "sweep", "sweep_values"}},
      {"oracle", {"draws", "c_step", "p_step"}},
  };
  return s;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split_list(text)) {
    if (item.empty()) throw ConfigError("seeds: empty entry in '" + std::string(text) + "'");
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      const long long v = to_integer("seeds", item);
      if (v < 0) throw ConfigError("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(v));
      continue;
    }
    const long long lo = to_integer("seeds", trim(item.substr(0, dots)));
    const long long hi = to_integer("seeds", trim(item.substr(dots + 2)));
    if (lo < 0 || hi < lo) throw ConfigError("seeds: bad range '" + item + "'");
    for (long long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  return seeds;
}

void ScenarioConfig::validate() const {
  if (id.empty()) throw ConfigError("scenario id must not be empty");
  env.validate();
  agent.validate();
  schedule.validate();
  discretization.validate();
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw ConfigError("epsilon schedule must lie in [0, 1]");
  }
  if (seeds.empty()) throw ConfigError("seed list must not be empty");
  if (relay_bounds) {
    const auto k = static_cast<std::size_t>(env.channel.num_relays);
    if (relay_bounds->c_min.size() != k || relay_bounds->c_max.size() != k) {
      throw ConfigError("relay price bounds need one entry per relay");
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (!(relay_bounds->c_min[i] >= 0.0 && relay_bounds->c_min[i] < relay_bounds->c_max[i])) {
        throw ConfigError("relay price bounds must satisfy 0 <= c_min < c_max");
      }
    }
  }
  if (sweep != SweepAxis::none && sweep_values.empty()) {
    throw ConfigError("a sweep needs at least one value");
  }
  for (double v : sweep_values) with_sweep_value(*this, sweep, v).env.validate();
  if (oracle.draws < 1) throw ConfigError("oracle draws must be >= 1");
  if (!(oracle.c_step > 0.0 && oracle.p_step > 0.0)) throw ConfigError("oracle steps must be > 0");
}

ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, SweepAxis axis, double value) {
  ScenarioConfig out = cfg;
  switch (axis) {
    case SweepAxis::none: break;
    case SweepAxis::p_s: out.env.game.p_s = value; break;
    case SweepAxis::alpha:
      out.env.game.alpha = value;
      out.env.game.beta = value;
      break;
  }
  return out;
}

ScenarioConfig parse_scenario(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end() || !body.data().empty()) {
      throw ConfigError("config: unknown section or top-level key '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("config: unknown key '" + section + "." + key + "'");
    }
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double& target) {
    if (auto v = get(path)) target = to_double(path, *v);
  };
  auto integer = [&](const std::string& path, auto& target) {
    if (auto v = get(path)) {
      const long long x = to_integer(path, *v);
      if (x < 0) throw ConfigError("key '" + path + "' must be non-negative");
      target = static_cast<std::remove_reference_t<decltype(target)>>(x);
    }
  };

  ScenarioConfig cfg;
  ChannelParams& ch = cfg.env.channel;
  integer("channel.num_relays", ch.num_relays);
  double rho = ch.rho;
  num("channel.rho", rho);
  ch = ChannelParams::uniform(ch.num_relays, rho, 1.0, 0.1);
  num("channel.noise_dest", ch.noise_dest);
  if (auto v = get("channel.var_sk")) ch.var_sk = per_relay("channel.var_sk", to_doubles("channel.var_sk", *v), ch.num_relays);
  if (auto v = get("channel.var_kd")) ch.var_kd = per_relay("channel.var_kd", to_doubles("channel.var_kd", *v), ch.num_relays);
  if (auto v = get("channel.noise_relay")) {
    ch.noise_relay = per_relay("channel.noise_relay", to_doubles("channel.noise_relay", *v), ch.num_relays);
  }

  GameConfig& g = cfg.env.game;
  num("game.p_s", g.p_s);
  num("game.p_min", g.p_min);
  num("game.p_max", g.p_max);
  num("game.c_min", g.c_min);
  num("game.c_max", g.c_max);
  num("game.alpha", g.alpha);
  num("game.beta", g.beta);
  num("game.epsilon_price", g.epsilon_price);
  const auto rmin = get("game.relay_c_min");
  const auto rmax = get("game.relay_c_max");
  if (rmin || rmax) {
    PriceBounds b;
    b.c_min = rmin ? per_relay("game.relay_c_min", to_doubles("game.relay_c_min", *rmin), ch.num_relays)
                   : std::vector<double>(static_cast<std::size_t>(ch.num_relays), g.c_min);
    b.c_max = rmax ? per_relay("game.relay_c_max", to_doubles("game.relay_c_max", *rmax), ch.num_relays)
                   : std::vector<double>(static_cast<std::size_t>(ch.num_relays), g.c_max);
    cfg.relay_bounds = b;
  }

  AgentConfig& a = cfg.agent;
  num("agent.actor_lr", a.actor_lr);
  num("agent.critic_lr", a.critic_lr);
  num("agent.tau", a.tau);
  num("agent.discount", a.discount);
  integer("agent.batch_size", a.batch_size);
  integer("agent.buffer_capacity", a.buffer_capacity);
  num("agent.noise_start", a.noise_start);
  num("agent.noise_end", a.noise_end);
  num("agent.kappa", a.kappa);
  num("agent.priority_epsilon", a.priority_epsilon);
  num("agent.rms_decay", a.rms_decay);
  num("agent.rms_floor", a.rms_floor);
  if (auto v = get("agent.hidden")) {
    a.hidden.clear();
    for (const std::string& item : split_list(*v)) {
      const long long w = to_integer("agent.hidden", item);
      if (w < 1) throw ConfigError("agent.hidden widths must be >= 1");
      a.hidden.push_back(static_cast<std::size_t>(w));
    }
  }

  integer("schedule.episodes", cfg.schedule.episodes);
  integer("schedule.slots", cfg.schedule.slots);
  integer("schedule.warmup_episodes", cfg.schedule.warmup_episodes);
  integer("schedule.test_episodes", cfg.schedule.test_episodes);
  integer("schedule.test_slots", cfg.schedule.test_slots);

  integer("baseline.price_bins", cfg.discretization.price_bins);
  integer("baseline.power_bins", cfg.discretization.power_bins);
  num("baseline.epsilon_start", cfg.epsilon_start);
  num("baseline.epsilon_end", cfg.epsilon_end);

  if (auto v = get("scenario.id")) cfg.id = *v;
  if (auto v = get("scenario.policy")) cfg.policy = policy_from_string(*v);
  if (auto v = get("scenario.mode")) cfg.mode = mode_from_string(*v);
  if (auto v = get("scenario.seeds")) cfg.seeds = parse_seed_list(*v);
  if (auto v = get("scenario.sweep")) cfg.sweep = sweep_axis_from_string(*v);
  if (auto v = get("scenario.sweep_values")) cfg.sweep_values = to_doubles("scenario.sweep_values", *v);

  integer("oracle.draws", cfg.oracle.draws);
  num("oracle.c_step", cfg.oracle.c_step);
  num("oracle.p_step", cfg.oracle.p_step);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_scenario(in);
}

}  // namespace relaygame
