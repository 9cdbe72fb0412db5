#include "camel/harness.hpp"

#include <algorithm>
#include <filesystem>

namespace camel {

void RunConfig::validate() const {
  if (total_steps <= 0) throw UsageError("total steps must be positive");
  if (eval_interval < 1) throw UsageError("eval interval must be at least 1");
  if (eval_episodes < 1) throw UsageError("eval episodes must be at least 1");
  if (total_steps < agent.learning_starts) throw UsageError("total steps must be at least learning starts");
  if (name.empty()) throw UsageError("run name must not be empty");
  agent.validate();
}

std::vector<RecordRow> RunRecord::of_kind(RecordKind kind) const {
  std::vector<RecordRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [kind](const RecordRow& r) { return r.kind == kind; });
  return out;
}

std::vector<double> eval_returns(const Agent& agent, Environment& env,
                                 std::span<const std::uint64_t> seeds) {
  const ActionBounds full = ActionBounds::full(env.spec());
  std::vector<double> returns;
  returns.reserve(seeds.size());
  for (const std::uint64_t seed : seeds) {
    Vector obs = env.reset(seed);
    double total = 0.0;
    while (true) {
      const StepResult r = env.step(agent.greedy_action(obs, full));
      total += r.reward;
      obs = r.next_obs;
      if (r.terminated || r.truncated) break;
    }
    returns.push_back(total);
  }
  return returns;
}

double eval(const Agent& agent, Environment& env, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw UsageError("eval: need at least one episode");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(episodes));
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = seed + k;
  const auto returns = eval_returns(agent, env, seeds);
  double sum = 0.0;
  for (double r : returns) sum += r;
  return sum / static_cast<double>(returns.size());
}

RunResult run(const RunConfig& input, const RunHooks& hooks) {
  RunConfig config = input;
  config.agent.schedule.total_steps = config.total_steps;
  config.validate();

  auto env = make_env(config.env);
  auto eval_env = make_env(config.env);
  const EnvSpec spec = env->spec();
  const ActionBounds full = ActionBounds::full(spec);

  std::unique_ptr<PriorPolicy> prior;
  if (hooks.prior_factory) {
    prior = hooks.prior_factory(*env);
  } else {
    BridgeOptions bridge;
    if (!config.out_dir.empty()) {
      std::filesystem::create_directories(config.out_dir);
      bridge.stderr_path = (std::filesystem::path(config.out_dir) / (config.name + ".log")).string();
    }
    prior = make_prior(config.prior, *env, stream_seed(config.seed, "prior"), bridge);
  }

  RunResult result;
  result.agent = std::make_unique<Agent>(spec.obs_dim, spec.act_dim, config.agent,
                                         stream_seed(config.seed, "init"));
  Agent& agent = *result.agent;
  ReplayBuffer buffer(config.agent.buffer_capacity, spec.obs_dim, spec.act_dim);

  Rng env_rng = make_stream(config.seed, "env");
  Rng noise_rng = make_stream(config.seed, "actor-noise");
  Rng coin_rng = make_stream(config.seed, "mask-coin");
  Rng warmup_rng = make_stream(config.seed, "warmup");
  Rng replay_rng = make_stream(config.seed, "replay");
  const std::uint64_t eval_seed = stream_seed(config.seed, "eval");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> symmetric(-1.0, 1.0);

  auto query_prior = [&](const Vector& obs) -> std::optional<Vector> {
    if (!prior) return std::nullopt;
    return prior_act(*prior, obs, spec);
  };

  RunRecord& record = result.record;
  Vector obs = env->reset(env_rng());
  std::optional<Vector> prior_action = query_prior(obs);
  double episode_return = 0.0;
  std::int64_t episode_steps = 0;
  std::int64_t episode_masked = 0;

  for (std::int64_t t = 1; t <= config.total_steps; ++t) {
    const double epsilon =
        !prior ? 0.0 : (config.agent.epsilon_masking ? epsilon_at(config.agent.schedule, t) : 1.0);

    MaskDecision decision{false, full};
    if (prior) {
      const ActionBounds window = compute_bounds(*prior_action, config.agent.half_window, spec);
      decision = apply_epsilon_masking(window, epsilon, unit(coin_rng), spec);
    }

    Vector action;
    if (t <= config.agent.learning_starts) {
      Vector x(spec.act_dim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = symmetric(warmup_rng);
      action = action_mapping(x, decision.bounds);
    } else {
      action = agent.select_action(obs, decision, noise_rng).action;
    }

    const StepResult step = env->step(action);
    const bool done = step.terminated || step.truncated;

    std::optional<Vector> next_prior;
    if (prior && (!done || decision.masked)) next_prior = query_prior(step.next_obs);

    Transition tr;
    tr.obs = obs;
    tr.bounds = decision.bounds;
    tr.action = action;
    tr.reward = step.reward;
    tr.next_obs = step.next_obs;
    tr.next_bounds = decision.masked ? compute_bounds(*next_prior, config.agent.half_window, spec) : full;
    tr.terminal = step.terminated;
    buffer.store(tr);

    if (hooks.on_step) {
      hooks.on_step({t, obs, decision, action, step.reward, step.terminated, step.truncated});
    }

    ++record.steps;
    ++episode_steps;
    episode_return += step.reward;
    if (decision.masked) {
      ++record.masked_steps;
      ++episode_masked;
    }

    if (done) {
      record.rows.push_back({t, RecordKind::kTrain, episode_return, epsilon,
                             static_cast<double>(episode_masked) / static_cast<double>(episode_steps)});
      episode_return = 0.0;
      episode_steps = 0;
      episode_masked = 0;
      obs = env->reset(env_rng());
      prior_action = query_prior(obs);
    } else {
      obs = step.next_obs;
      prior_action = std::move(next_prior);
    }

    if (t > config.agent.learning_starts && buffer.size() >= config.agent.batch_size) {
      agent.train_step(buffer, replay_rng);
    }

    if (t % config.eval_interval == 0) {
      record.rows.push_back({t, RecordKind::kEval,
                             eval(agent, *eval_env, config.eval_episodes, eval_seed), epsilon, 0.0});
    }
  }

  if (!config.out_dir.empty()) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    write_record_file((dir / (config.name + ".jsonl")).string(), record);
    if (config.save_checkpoint) agent.save((dir / (config.name + ".ckpt")).string());
  }
  return result;
}

// ---------------------------------------------------------------------------

ArmSpec parse_arm(const std::string& arm,
                  const std::function<std::string(const std::string&)>& prior_for) {
  auto resolve = [&](const std::string& token) {
    if (token != "expert" && token != "random" && token != "prior") {
      throw UsageError("arm '" + arm + "': unknown prior token '" + token + "'");
    }
    return prior_for(token);
  };
  auto ends_with = [&](const std::string& suffix) {
    return arm.size() > suffix.size() && arm.compare(arm.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  auto stem = [&](const std::string& suffix) { return arm.substr(0, arm.size() - suffix.size()); };

  if (arm == "baseline") return {arm, "none", false, false};
  if (arm == "camel") return {arm, resolve("prior"), true, true};
  if (arm.rfind("camel-", 0) == 0) return {arm, resolve(arm.substr(6)), true, true};
  if (ends_with("-no-ma-em")) return {arm, resolve(stem("-no-ma-em")), false, false};
  if (ends_with("-no-ma")) return {arm, resolve(stem("-no-ma")), false, true};
  if (ends_with("-no-em")) return {arm, resolve(stem("-no-em")), true, false};
  throw UsageError("unknown arm '" + arm + "'");
}

RunConfig configure_arm(RunConfig base, const ArmSpec& arm, std::uint64_t seed) {
  base.prior = arm.prior;
  base.agent.masking_aware = arm.masking_aware;
  base.agent.epsilon_masking = arm.epsilon_masking;
  base.seed = seed;
  base.name = arm.name + "__seed" + std::to_string(seed);
  return base;
}

}  // namespace camel
