// Command-line front end: train, sweep, eval, score-candidates, aggregate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "camel/harness.hpp"
#include "camel/settings.hpp"

namespace fs = std::filesystem;
using namespace camel;

namespace {

struct CommonOptions {
  std::string config_file;
  std::string env;
  std::string prior;
  std::string expert;
  std::int64_t total_steps = -1;
  std::int64_t eval_interval = -1;
  int eval_episodes = -1;
  std::string out;
  std::vector<std::string> overrides;
  bool checkpoint = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--env", o.env, "pendulum or reacher");
  cmd->add_option("--prior", o.prior,
                  "none|expert|random|constant:v,..|checkpoint:<dir>|bridge:<command>");
  cmd->add_option("--expert", o.expert, "prior spec used for the 'expert' arm token");
  cmd->add_option("--total-steps", o.total_steps, "training steps T");
  cmd->add_option("--eval-interval", o.eval_interval, "steps between evaluations");
  cmd->add_option("--eval-episodes", o.eval_episodes, "episodes per evaluation");
  cmd->add_option("--out", o.out, "output directory (overrides CAMEL_OUT)");
  cmd->add_option("--set", o.overrides, "agent setting override, key=value (repeatable)");
  cmd->add_flag("--checkpoint", o.checkpoint, "save network checkpoints next to the record");
}

/// Layering: defaults < config file < CAMEL_OUT < command-line flags.
RunConfig build_config(const CommonOptions& o, std::string* expert_out, std::string* arm_out,
                       std::string* seeds_out) {
  RunConfig c;
  c.out_dir = "out";
  std::string expert = "expert";
  auto apply = [&](const std::string& key, const std::string& value, const std::string& where) {
    if (key == "env") {
      c.env = value;
    } else if (key == "prior") {
      c.prior = value;
    } else if (key == "expert") {
      expert = value;
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "total_steps") {
      c.total_steps = parse_int(key, value);
    } else if (key == "eval_interval") {
      c.eval_interval = parse_int(key, value);
    } else if (key == "eval_episodes") {
      c.eval_episodes = static_cast<int>(parse_int(key, value));
    } else if (key == "out") {
      c.out_dir = value;
    } else if (key == "name") {
      c.name = value;
    } else if (key == "arm" && arm_out != nullptr) {
      *arm_out = value;
    } else if (key == "seeds" && seeds_out != nullptr) {
      *seeds_out = value;
    } else if (key == "checkpoint") {
      c.save_checkpoint = parse_bool(key, value);
    } else if (!apply_agent_setting(c.agent, key, value)) {
      throw std::invalid_argument(where + ": unknown setting '" + key + "'");
    }
  };

  if (!o.config_file.empty()) {
    std::ifstream f(o.config_file);
    if (!f) throw std::runtime_error("cannot read " + o.config_file);
    for (const auto& [k, v] : read_settings(f, o.config_file)) apply(k, v, o.config_file);
  }
  if (const char* env_out = std::getenv("CAMEL_OUT"); env_out != nullptr && *env_out != '\0') {
    c.out_dir = env_out;
  }
  if (!o.env.empty()) c.env = o.env;
  if (!o.prior.empty()) c.prior = o.prior;
  if (!o.expert.empty()) expert = o.expert;
  if (o.total_steps >= 0) c.total_steps = o.total_steps;
  if (o.eval_interval >= 0) c.eval_interval = o.eval_interval;
  if (o.eval_episodes >= 0) c.eval_episodes = o.eval_episodes;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.checkpoint) c.save_checkpoint = true;
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (!apply_agent_setting(c.agent, key, kv.substr(eq + 1))) {
      throw std::invalid_argument("--set: unknown agent setting '" + key + "'");
    }
  }
  if (expert_out != nullptr) *expert_out = expert;
  return c;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_int("seeds", part.substr(0, dots));
      const auto hi = parse_int("seeds", part.substr(dots + 2));
      if (lo < 0 || hi < lo) throw std::invalid_argument("bad seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      const auto s = parse_int("seeds", part);
      if (s < 0) throw std::invalid_argument("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

std::function<std::string(const std::string&)> prior_resolver(const RunConfig& base,
                                                               const std::string& expert) {
  return [base, expert](const std::string& token) -> std::string {
    if (token == "expert") return expert;
    if (token == "random") return "random";
    if (base.prior == "none") throw UsageError("arm uses 'prior' but --prior is none");
    return base.prior;
  };
}

void print_summary(const std::string& label, const RunRecord& rec, const std::string& path) {
  std::cout << label << ": steps=" << rec.steps << " masked_fraction=" << rec.masked_fraction();
  for (auto it = rec.rows.rbegin(); it != rec.rows.rend(); ++it) {
    if (it->kind == RecordKind::kEval) {
      std::cout << " final_eval=" << it->episodic_return;
      break;
    }
  }
  if (!path.empty()) std::cout << " record=" << path;
  std::cout << '\n';
}

std::string record_path(const RunConfig& c) {
  if (c.out_dir.empty()) return {};
  return (fs::path(c.out_dir) / (c.name + ".jsonl")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masking-aware TD3 with prior-policy action masking"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::uint64_t train_seed = 0;
  bool seed_given = false;
  std::string train_name, train_arm;
  auto* train = app.add_subcommand("train", "one training run");
  add_common(train, train_opts);
  train->add_option("--seed", train_seed, "run seed")->each([&](const std::string&) { seed_given = true; });
  train->add_option("--name", train_name, "record file stem");
  train->add_option("--arm", train_arm, "ablation arm (overrides --prior and masking switches)");

  CommonOptions sweep_opts;
  std::string sweep_arms = "baseline,camel-expert,camel-random,expert-no-ma-em";
  std::string sweep_seeds;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "seed list x ablation arms");
  add_common(sweep, sweep_opts);
  sweep->add_option("--arms", sweep_arms, "comma-separated arm names");
  sweep->add_option("--seeds", sweep_seeds, "seed list, e.g. 1..5 or 1,3,7");
  sweep->add_option("--jobs", jobs, "runs executed concurrently")->check(CLI::PositiveNumber);

  std::string ckpt_dir, eval_env_name = "pendulum";
  int eval_episodes = 3;
  std::uint64_t eval_seed = 0;
  auto* evalc = app.add_subcommand("eval", "greedy unmasked rollout of a checkpoint");
  evalc->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  evalc->add_option("--env", eval_env_name, "pendulum or reacher");
  evalc->add_option("--episodes", eval_episodes, "episodes")->check(CLI::PositiveNumber);
  evalc->add_option("--seed", eval_seed, "first reset seed");

  std::string score_env = "pendulum";
  std::uint64_t score_seed = 0;
  std::vector<std::string> candidates;
  auto* score = app.add_subcommand("score-candidates", "single-episode evaluation of candidate priors");
  score->add_option("--env", score_env, "pendulum or reacher");
  score->add_option("--seed", score_seed, "shared reset seed");
  score->add_option("candidates", candidates, "prior specs, e.g. expert 'bridge:python3 p.py'")->required();

  std::vector<std::string> record_files;
  std::size_t window = 100;
  std::string agg_out = ".";
  auto* agg = app.add_subcommand("aggregate", "mean/std curves per arm as CSV");
  agg->add_option("records", record_files, "record files (<arm>__seed<k>.jsonl)")->required()->check(CLI::ExistingFile);
  agg->add_option("--window", window, "rolling window for train curves")->check(CLI::PositiveNumber);
  agg->add_option("--out", agg_out, "directory for <arm>_train.csv and <arm>_eval.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::string expert, arm, unused_seeds;
      RunConfig c = build_config(train_opts, &expert, &arm, &unused_seeds);
      if (seed_given) c.seed = train_seed;
      if (!train_arm.empty()) arm = train_arm;
      if (!arm.empty()) c = configure_arm(c, parse_arm(arm, prior_resolver(c, expert)), c.seed);
      if (!train_name.empty()) c.name = train_name;
      const RunResult r = run(c);
      print_summary(c.name, r.record, record_path(c));
      return 0;
    }

    if (*sweep) {
      std::string expert, unused_arm, seeds_text;
      RunConfig base = build_config(sweep_opts, &expert, &unused_arm, &seeds_text);
      if (!sweep_seeds.empty()) seeds_text = sweep_seeds;
      if (seeds_text.empty()) seeds_text = "1..5";
      const auto seeds = parse_seeds(seeds_text);
      std::vector<RunConfig> configs;
      std::stringstream ss(sweep_arms);
      std::string arm;
      while (std::getline(ss, arm, ',')) {
        const ArmSpec spec = parse_arm(arm, prior_resolver(base, expert));
        for (auto s : seeds) configs.push_back(configure_arm(base, spec, s));
      }
      for (const RunConfig& c : configs) c.validate();

      std::mutex out_mutex;
      std::atomic<std::size_t> next{0};
      std::atomic<int> failures{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          try {
            const RunResult r = run(configs[i]);
            std::lock_guard lock(out_mutex);
            print_summary(configs[i].name, r.record, record_path(configs[i]));
          } catch (const std::exception& e) {
            ++failures;
            std::lock_guard lock(out_mutex);
            std::cerr << configs[i].name << ": " << e.what() << '\n';
          }
        }
      };
      std::vector<std::thread> pool;
      for (int j = 0; j < std::min<int>(jobs, static_cast<int>(configs.size())); ++j) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      return failures == 0 ? 0 : 1;
    }

    if (*evalc) {
      const Agent agent = Agent::load(ckpt_dir);
      auto env = make_env(eval_env_name);
      if (agent.obs_dim() != env->spec().obs_dim || agent.act_dim() != env->spec().act_dim) {
        throw UsageError("checkpoint does not match environment " + eval_env_name);
      }
      std::vector<std::uint64_t> seeds;
      for (int k = 0; k < eval_episodes; ++k) seeds.push_back(eval_seed + static_cast<std::uint64_t>(k));
      const std::vector<double> returns = eval_returns(agent, *env, seeds);
      double sum = 0.0;
      for (std::size_t k = 0; k < returns.size(); ++k) {
        std::cout << "episode " << k << " seed " << seeds[k] << " return " << returns[k] << '\n';
        sum += returns[k];
      }
      std::cout << "mean return " << sum / static_cast<double>(returns.size()) << '\n';
      return 0;
    }

    if (*score) {
      auto env = make_env(score_env);
      std::vector<std::unique_ptr<PriorPolicy>> owned;
      std::vector<PriorPolicy*> ptrs;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto p = make_prior(candidates[i], *env, stream_seed(score_seed, "candidate-" + std::to_string(i)));
        if (!p) throw UsageError("'none' is not a candidate policy");
        ptrs.push_back(p.get());
        owned.push_back(std::move(p));
      }
      const CandidateReport report = evaluate_candidates(*env, ptrs, score_seed);
      nlohmann::json out;
      out["selected"] = report.selected;
      for (const CandidateScore& c : report.candidates) {
        nlohmann::json j{{"label", c.label},
                         {"length", c.episode_length},
                         {"mean_abs_action", c.mean_abs_action},
                         {"mean_action_change", c.mean_action_change}};
        j["return"] = std::isfinite(c.episode_return) ? nlohmann::json(c.episode_return) : nlohmann::json("-inf");
        if (c.error) j["error"] = *c.error;
        out["candidates"].push_back(j);
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (*agg) {
      std::map<std::string, std::vector<RunRecord>> by_arm;
      for (const std::string& f : record_files) {
        std::string stem = fs::path(f).stem().string();
        const auto cut = stem.rfind("__seed");
        by_arm[cut == std::string::npos ? stem : stem.substr(0, cut)].push_back(read_record_file(f));
      }
      fs::create_directories(agg_out);
      for (const auto& [arm, records] : by_arm) {
        for (RecordKind kind : {RecordKind::kTrain, RecordKind::kEval}) {
          const AggregateCurve curve = aggregate(records, kind, window);
          const fs::path path = fs::path(agg_out) / (arm + "_" + to_string(kind) + ".csv");
          std::ofstream f(path);
          if (!f) throw std::runtime_error("cannot write " + path.string());
          write_curve_csv(f, curve);
          std::cout << path.string() << '\n';
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
