// relaygame: solve, train, evaluate, sweep, compare and oracle-check.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "relaygame/config.hpp"
#include "relaygame/harness.hpp"

namespace fs = std::filesystem;
using namespace relaygame;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::string policy;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Scenario config file (defaults are used when omitted)");
  cmd->add_option("--seed", o.seed, "Single seed");
  cmd->add_option("--seeds", o.seeds, "Seed list, e.g. 1..10 or 1,4,9");
  cmd->add_option("--out", o.out, "Output directory (stdout when omitted, where allowed)");
  cmd->add_option("--policy", o.policy, "gbs|lgms|dqn|random|proposed");
}

ScenarioConfig resolve(const CommonOptions& o) {
  ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_scenario(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.seeds.empty()) cfg.seeds = parse_seed_list(o.seeds);
  if (!o.policy.empty()) cfg.policy = policy_from_string(o.policy);
  cfg.validate();
  return cfg;
}

// Writes to DIR/name, or stdout when no directory was given.
template <class Fn>
void emit(const std::string& dir, const std::string& name, Fn&& write) {
  if (dir.empty()) {
    write(std::cout);
    return;
  }
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out);
  std::cerr << "wrote " << path.string() << "\n";
}

void write_rows(std::ostream& out, const std::vector<MetricsRow>& rows) { write_metrics_csv(out, rows); }

int cmd_solve(const CommonOptions& o) {
  const ScenarioConfig cfg = resolve(o);
  const auto rows = solve_draws(cfg);
  emit(o.out, cfg.id + "_solve.csv", [&](std::ostream& out) {
    out << solve_header() << "\n";
    for (const SolveRow& r : rows) out << format_solve_row(r) << "\n";
  });
  return 0;
}

int cmd_train(const CommonOptions& o) {
  const ScenarioConfig cfg = resolve(o);
  if (o.out.empty()) throw ConfigError("train needs --out DIR");
  std::vector<MetricsRow> train_rows;
  std::vector<MetricsRow> test_rows;
  for (std::uint64_t seed : cfg.seeds) {
    SeedRun run = run_seed(cfg, seed);
    const std::string tag = cfg.id + "_seed" + std::to_string(seed);
    if (run.policy->learns()) {
      emit(o.out, tag + "_episodes.csv", [&](std::ostream& out) { write_episode_csv(out, run.train); });
    }
    if (auto* marl = dynamic_cast<MarlPolicy*>(run.policy.get())) {
      save_policy_checkpoints(*marl, fs::path(o.out) / (tag + "_checkpoints"));
    }
    for (const EpisodeStats& e : run.train.episodes) {
      train_rows.push_back({cfg.id, seed, std::nullopt, std::to_string(e.episode), e.mean_u_source,
                            e.mean_u_relay, e.mean_capacity});
    }
    const EpisodeStats t = test_means(run.test);
    test_rows.push_back({cfg.id, seed, std::nullopt, "test", t.mean_u_source, t.mean_u_relay, t.mean_capacity});
  }
  emit(o.out, cfg.id + "_train.csv", [&](std::ostream& out) { write_rows(out, train_rows); });
  emit(o.out, cfg.id + "_test.csv", [&](std::ostream& out) { write_rows(out, test_rows); });
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoints) {
  const ScenarioConfig cfg = resolve(o);
  std::vector<MetricsRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    TrainingLog test;
    if (cfg.policy == PolicyKind::proposed) {
      if (checkpoints.empty()) throw ConfigError("evaluate --policy proposed needs --checkpoints DIR");
      const fs::path dir = fs::path(checkpoints) / (cfg.id + "_seed" + std::to_string(seed) + "_checkpoints");
      MarlPolicy policy(cfg.env, cfg.agent, seed);
      load_policy_checkpoints(policy, fs::is_directory(dir) ? dir : fs::path(checkpoints));
      test = run_test(policy, cfg.env, cfg.schedule, seed);
    } else {
      test = run_seed(cfg, seed).test;
    }
    const EpisodeStats t = test_means(test);
    rows.push_back({cfg.id, seed, std::nullopt, "test", t.mean_u_source, t.mean_u_relay, t.mean_capacity});
  }
  emit(o.out, cfg.id + "_test.csv", [&](std::ostream& out) { write_rows(out, rows); });
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const ScenarioConfig cfg = resolve(o);
  ScenarioRows rows;
  switch (cfg.sweep) {
    case SweepAxis::none: rows = run_scenario(cfg); break;
    case SweepAxis::p_s: rows = sweep_source_power(cfg, cfg.sweep_values); break;
    case SweepAxis::alpha: rows = sweep_alpha(cfg, cfg.sweep_values); break;
  }
  if (!rows.train.empty()) {
    emit(o.out, cfg.id + "_train.csv", [&](std::ostream& out) { write_rows(out, rows.train); });
  }
  emit(o.out, cfg.id + "_test.csv", [&](std::ostream& out) { write_rows(out, rows.test); });
  return 0;
}

int cmd_compare(const CommonOptions& o) {
  const ScenarioConfig cfg = resolve(o);
  const std::vector<double> values =
      cfg.sweep == SweepAxis::p_s && !cfg.sweep_values.empty() ? cfg.sweep_values
                                                                : std::vector<double>{0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15};
  std::vector<CompareRow> rows;
  try {
    rows = compare_settings(cfg, values, cfg.oracle.draws, cfg.seeds.front());
  } catch (const OrderingViolation& e) {
    std::cerr << "ordering violation: " << e.what() << "\n";
    return 1;
  }
  emit(o.out, cfg.id + "_compare.csv", [&](std::ostream& out) {
    out << compare_header() << "\n";
    for (const CompareRow& r : rows) out << format_compare_row(r) << "\n";
  });
  return 0;
}

int cmd_oracle(const CommonOptions& o, std::optional<int> draws) {
  const ScenarioConfig cfg = resolve(o);
  const OracleReport r = oracle_check(cfg, draws.value_or(cfg.oracle.draws), cfg.oracle.c_step,
                                      cfg.oracle.p_step, cfg.seeds.front());
  emit(o.out, cfg.id + "_oracle.txt", [&](std::ostream& out) { out << format_oracle_report(r); });
  return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relay pricing game: solver, multi-agent training and baselines"};
  app.require_subcommand(1);

  CommonOptions solve_o, train_o, eval_o, sweep_o, compare_o, oracle_o;
  std::string checkpoints;
  std::optional<int> draws;

  auto* solve = app.add_subcommand("solve", "Solve the game on one channel draw per seed");
  add_common(solve, solve_o);
  auto* train = app.add_subcommand("train", "Train and test a policy; write curves and checkpoints");
  add_common(train, train_o);
  auto* evaluate = app.add_subcommand("evaluate", "Test a policy with exploration disabled");
  add_common(evaluate, eval_o);
  evaluate->add_option("--checkpoints", checkpoints, "Directory written by 'train' (proposed policy)");
  auto* sweep = app.add_subcommand("sweep", "Run the scenario over its sweep axis");
  add_common(sweep, sweep_o);
  auto* compare = app.add_subcommand("compare", "Alliance vs competitive relays per source power");
  add_common(compare, compare_o);
  auto* oracle = app.add_subcommand("oracle-check", "Closed-form solver vs brute-force grid");
  add_common(oracle, oracle_o);
  oracle->add_option("--draws", draws, "Number of channel draws (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_o);
    if (*train) return cmd_train(train_o);
    if (*evaluate) return cmd_evaluate(eval_o, checkpoints);
    if (*sweep) return cmd_sweep(sweep_o);
    if (*compare) return cmd_compare(compare_o);
    if (*oracle) return cmd_oracle(oracle_o, draws);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
