#pragma once

// Seeded multi-run execution, sweeps, relay-setting comparison, oracle
// checks and CSV emission. All numeric output uses a fixed "%.10g" format
// so identical runs produce identical bytes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relaygame/config.hpp"
#include "relaygame/training.hpp"

namespace relaygame {

/// Column order: scenario,seed,sweep_value,episode,mean_u_source,mean_u_relay,mean_capacity.
/// `episode` is the zero-based training episode or "test"; an empty
/// sweep_value means no sweep.
struct MetricsRow {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<double> sweep_value;
  std::string episode;
  double mean_u_source = 0.0;
  double mean_u_relay = 0.0;
  double mean_capacity = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

std::string format_number(double v);
std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
/// Throws std::invalid_argument on a malformed line.
MetricsRow parse_metrics_row(std::string_view line);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Lower median for even counts.
struct SeedSummary {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};
double lower_median(std::vector<double> values);
SeedSummary summarize(const std::vector<double>& values);

std::unique_ptr<Policy> make_policy(const ScenarioConfig& cfg, std::uint64_t seed);

struct SeedRun {
  std::unique_ptr<Policy> policy;
  TrainingLog train;  // empty for non-learning policies
  TrainingLog test;
};

/// Trains (learning policies only) then tests with exploration disabled.
SeedRun run_seed(const ScenarioConfig& cfg, std::uint64_t seed);

/// Test-horizon means of a log: mean over episodes of the per-episode means.
EpisodeStats test_means(const TrainingLog& test);

struct ScenarioRows {
  std::vector<MetricsRow> train;
  std::vector<MetricsRow> test;
};

ScenarioRows run_scenario(const ScenarioConfig& cfg);
ScenarioRows sweep_source_power(const ScenarioConfig& base, const std::vector<double>& values);
/// Sets beta = alpha for every value.
ScenarioRows sweep_alpha(const ScenarioConfig& base, const std::vector<double>& values);

class OrderingViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One solver outcome on one channel draw.
struct SolveRow {
  std::uint64_t seed = 0;
  GameMode mode = GameMode::alliance;
  int relay = 0;  // zero-based
  double price = 0.0;
  double power = 0.0;
  double u_source = 0.0;
  double u_relay = 0.0;
  double capacity = 0.0;
};

std::string solve_header();
std::string format_solve_row(const SolveRow& row);

/// One draw per seed from the seed's test channel stream, solved in cfg.mode.
std::vector<SolveRow> solve_draws(const ScenarioConfig& cfg);

struct CompareRow {
  double p_s = 0.0;
  int draw = 0;
  SolveRow alliance;
  SolveRow competitive;
};

std::string compare_header();
std::string format_compare_row(const CompareRow& row);

/// Alliance vs competitive solutions on `draws` channel draws per P_s value.
/// Throws ConfigError for fewer than two relays and OrderingViolation
/// (message carries the offending draw) if the alliance revenue falls below
/// the competitive one by more than `tolerance`.
std::vector<CompareRow> compare_settings(const ScenarioConfig& cfg, const std::vector<double>& p_s_values,
                                         int draws, std::uint64_t seed, double tolerance = 1e-9);

struct OracleReport {
  int draws = 0;
  double c_step = 0.0;
  double p_step = 0.0;
  double bound = 0.0;
  double max_gap = 0.0;           // |U^r(oracle) - U^r(alliance)|
  double max_competitive_excess = 0.0;  // max(U^r(competitive) - U^r(oracle), 0)
  int worst_draw = -1;
  std::string worst_payload;
  bool passed = false;
};

/// Throws ConfigError if draws < 1.
OracleReport oracle_check(const ScenarioConfig& cfg, int draws, double c_step, double p_step,
                          std::uint64_t seed);
std::string format_oracle_report(const OracleReport& r);

/// Compact text form of a channel realisation for failure reports.
std::string serialize_channel(const ChannelState& state);

/// Eight files: {leader,follower}_{actor,critic,target_actor,target_critic}.ckpt.
void save_policy_checkpoints(const MarlPolicy& policy, const std::filesystem::path& dir);
void load_policy_checkpoints(MarlPolicy& policy, const std::filesystem::path& dir);

/// Per-episode CSV: episode,mean_u_source,mean_u_relay,mean_capacity,noise_scale.
void write_episode_csv(std::ostream& out, const TrainingLog& log);

}  // namespace relaygame
