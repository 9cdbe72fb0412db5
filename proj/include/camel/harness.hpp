#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camel/agent.hpp"
#include "camel/env.hpp"
#include "camel/masking.hpp"
#include "camel/priors.hpp"

namespace camel {

struct RunConfig {
  std::string env = "pendulum";
  AgentConfig agent;
  std::string prior = "none";
  std::uint64_t seed = 1;
  std::int64_t total_steps = 30000;
  std::int64_t eval_interval = 1000;
  int eval_episodes = 3;
  std::string out_dir;  // empty: nothing is written
  std::string name = "run";
  bool save_checkpoint = false;

  void validate() const;
};

enum class RecordKind { kTrain, kEval };

struct RecordRow {
  std::int64_t t = 0;
  RecordKind kind = RecordKind::kTrain;
  double episodic_return = 0.0;
  double epsilon = 0.0;
  double masked = 0.0;  // fraction of masked steps in the episode (0 for eval rows)

  bool operator==(const RecordRow&) const = default;
};

struct RunRecord {
  std::vector<RecordRow> rows;
  std::int64_t steps = 0;
  std::int64_t masked_steps = 0;

  double masked_fraction() const {
    return steps == 0 ? 0.0 : static_cast<double>(masked_steps) / static_cast<double>(steps);
  }
  std::vector<RecordRow> of_kind(RecordKind kind) const;
};

/// One environment step as seen by the training loop.
struct StepTrace {
  std::int64_t t = 0;
  Vector obs;
  MaskDecision decision;
  Vector action;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

struct RunHooks {
  std::function<void(const StepTrace&)> on_step;
  /// Replaces make_prior(); lets tests inject a prior instance.
  std::function<std::unique_ptr<PriorPolicy>(const Environment&)> prior_factory;
};

struct RunResult {
  RunRecord record;
  std::unique_ptr<Agent> agent;
};

/// Trains one agent for total_steps environment steps, evaluating every
/// eval_interval steps, and writes <out_dir>/<name>.jsonl when out_dir is set.
RunResult run(const RunConfig& config, const RunHooks& hooks = {});

/// Mean return of greedy, unmasked rollouts; episode k starts from reset(seed + k).
double eval(const Agent& agent, Environment& env, int episodes, std::uint64_t seed);
/// Same, with one explicit reset seed per episode.
std::vector<double> eval_returns(const Agent& agent, Environment& env,
                                 std::span<const std::uint64_t> seeds);

// --- records -----------------------------------------------------------------

std::string to_string(RecordKind kind);
void write_record(std::ostream& out, const RunRecord& record);
void write_record_file(const std::string& path, const RunRecord& record);
RunRecord read_record(std::istream& in, const std::string& source);
RunRecord read_record_file(const std::string& path);

/// First eval step whose return reaches `threshold`, if any.
std::optional<std::int64_t> steps_to_threshold(const RunRecord& record, double threshold);
/// Return of the last eval row.
double final_eval_return(const RunRecord& record);

// --- aggregation ---------------------------------------------------------------

/// Trailing rolling mean; the first window-1 entries average the available prefix.
std::vector<double> rolling_mean(std::span<const double> values, std::size_t window);

struct AggregateCurve {
  std::vector<std::int64_t> t;
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation across records
};

/// Eval rows must share one t grid and are not smoothed. Train rows are smoothed
/// per record, then each record contributes its latest smoothed value at or
/// before every t of the first record's grid.
AggregateCurve aggregate(std::span<const RunRecord> records, RecordKind kind, std::size_t window);

void write_curve_csv(std::ostream& out, const AggregateCurve& curve);

// --- ablation arms -------------------------------------------------------------

struct ArmSpec {
  std::string name;
  std::string prior;  // prior spec string, "none" for the baseline
  bool masking_aware = false;
  bool epsilon_masking = false;
};

/// Recognised arms:
///   baseline           no prior, bounds always full
///   camel-P            prior P, masking-aware actor, epsilon masking
///   P-no-ma-em         prior P always applied (epsilon = 1), bounds-blind actor
///   P-no-ma, P-no-em   single-switch ablations
/// P is "expert", "random", or "prior"; each maps through `prior_for`.
ArmSpec parse_arm(const std::string& arm, const std::function<std::string(const std::string&)>& prior_for);

/// Applies an arm's switches to a base config and names the run "<arm>__seed<seed>".
RunConfig configure_arm(RunConfig base, const ArmSpec& arm, std::uint64_t seed);

}  // namespace camel
