#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "camel/harness.hpp"
#include "camel/settings.hpp"
#include "reference_td3.hpp"

using namespace camel;

namespace {

RunConfig quick(std::int64_t steps = 1500) {
  RunConfig c;
  c.total_steps = steps;
  c.eval_interval = 500;
  c.eval_episodes = 2;
  c.agent.hidden = {16, 16};
  c.agent.learning_starts = 300;
  c.agent.batch_size = 32;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunRecord constant_record(double v, std::vector<std::int64_t> ts) {
  RunRecord r;
  for (auto t : ts) r.rows.push_back({t, RecordKind::kEval, v, 0.0, 0.0});
  return r;
}

std::string arm_prior(const std::string& token) { return token == "expert" ? "pendulum-energy" : token; }

}  // namespace

TEST_CASE("rolling mean uses partial prefix windows") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(rolling_mean(v, 3) == std::vector<double>{1, 1.5, 2, 3});
  CHECK(rolling_mean(v, 1) == v);
  CHECK(rolling_mean(std::vector<double>{}, 3).empty());
  CHECK_THROWS_AS(rolling_mean(v, 0), UsageError);
}

TEST_CASE("aggregate mean and population std") {
  const std::vector<RunRecord> one{constant_record(-3.0, {1000, 2000})};
  const AggregateCurve single = aggregate(one, RecordKind::kEval, 100);
  CHECK(single.stddev == std::vector<double>{0.0, 0.0});

  const std::vector<RunRecord> two{constant_record(100, {1000, 2000}), constant_record(200, {1000, 2000})};
  const AggregateCurve c = aggregate(two, RecordKind::kEval, 100);
  CHECK(c.t == std::vector<std::int64_t>{1000, 2000});
  CHECK(c.mean == std::vector<double>{150, 150});
  CHECK(c.stddev == std::vector<double>{50, 50});

  const std::vector<RunRecord> misaligned{constant_record(1, {1000, 2000}), constant_record(1, {1000, 3000})};
  CHECK_THROWS_AS(aggregate(misaligned, RecordKind::kEval, 1), UsageError);
  CHECK_THROWS_AS(aggregate(std::vector<RunRecord>{}, RecordKind::kEval, 1), UsageError);

  std::ostringstream csv;
  write_curve_csv(csv, c);
  CHECK(csv.str() == "t,mean,std\n1000,150,50\n2000,150,50\n");
}

TEST_CASE("train curves are smoothed and held onto the first grid") {
  RunRecord a, b;
  for (int k = 1; k <= 4; ++k) a.rows.push_back({200 * k, RecordKind::kTrain, static_cast<double>(k), 0, 0});
  b.rows.push_back({150, RecordKind::kTrain, 10.0, 0, 0});
  b.rows.push_back({500, RecordKind::kTrain, 20.0, 0, 0});
  const std::vector<RunRecord> recs{a, b};
  const AggregateCurve c = aggregate(recs, RecordKind::kTrain, 2);
  CHECK(c.t == std::vector<std::int64_t>{200, 400, 600, 800});
  // a smoothed: 1, 1.5, 2.5, 3.5; b smoothed: 10, 15, held at 10, 10, 15, 15
  CHECK(c.mean == std::vector<double>{5.5, 5.75, 8.75, 9.25});
}

TEST_CASE("records round-trip and report thresholds") {
  RunRecord r;
  r.rows = {{200, RecordKind::kTrain, -1234.5, 0.9, 1.0},
            {1000, RecordKind::kEval, -400.25, 0.8, 0.0},
            {2000, RecordKind::kEval, -240.0, 0.6, 0.0},
            {3000, RecordKind::kEval, -260.0, 0.4, 0.0}};
  std::stringstream ss;
  write_record(ss, r);
  const RunRecord back = read_record(ss, "memory");
  CHECK(back.rows == r.rows);
  CHECK(steps_to_threshold(r, -250.0) == 2000);
  CHECK_FALSE(steps_to_threshold(r, -100.0).has_value());
  CHECK(final_eval_return(r) == -260.0);
  CHECK_THROWS_AS(final_eval_return(RunRecord{}), UsageError);

  std::stringstream bad("{\"t\": 1, \"kind\": \"train\"}\n");
  CHECK_THROWS_WITH(read_record(bad, "x.jsonl"), doctest::Contains("x.jsonl:1"));
}

TEST_CASE("settings parsing") {
  std::stringstream in("# comment\n gamma = 0.98 \n\nhidden=32,32\n");
  const auto kv = read_settings(in, "cfg");
  CHECK(kv.at("gamma") == "0.98");
  AgentConfig cfg;
  for (const auto& [k, v] : kv) CHECK(apply_agent_setting(cfg, k, v));
  CHECK(cfg.gamma == 0.98);
  CHECK(cfg.hidden == std::vector<int>{32, 32});
  CHECK_FALSE(apply_agent_setting(cfg, "env", "pendulum"));
  CHECK_THROWS(apply_agent_setting(cfg, "gamma", "high"));
  std::stringstream dup("a=1\na=2\n");
  CHECK_THROWS(read_settings(dup, "cfg"));

  AgentConfig round;
  round.tau = 0.1 + 0.2;
  AgentConfig copy;
  for (const auto& [k, v] : agent_settings(round)) apply_agent_setting(copy, k, v);
  CHECK(copy.tau == round.tau);
}

TEST_CASE("arm parsing") {
  const ArmSpec base = parse_arm("baseline", arm_prior);
  CHECK(base.prior == "none");
  const ArmSpec camel = parse_arm("camel-random", arm_prior);
  CHECK(camel.prior == "random");
  CHECK(camel.masking_aware);
  CHECK(camel.epsilon_masking);
  const ArmSpec ablated = parse_arm("expert-no-ma-em", arm_prior);
  CHECK(ablated.prior == "pendulum-energy");
  CHECK_FALSE(ablated.masking_aware);
  CHECK_FALSE(ablated.epsilon_masking);
  CHECK(parse_arm("random-no-ma", arm_prior).epsilon_masking);
  CHECK_FALSE(parse_arm("random-no-em", arm_prior).epsilon_masking);
  CHECK_THROWS_AS(parse_arm("camel-oracle", arm_prior), UsageError);
  CHECK_THROWS_AS(parse_arm("fancy", arm_prior), UsageError);

  const RunConfig rc = configure_arm(quick(), camel, 3);
  CHECK(rc.name == "camel-random__seed3");
  CHECK(rc.seed == 3);
  CHECK(rc.prior == "random");
}

TEST_CASE("eval rollouts") {
  AgentConfig cfg;
  Agent agent(3, 1, cfg, 1);
  agent.mutable_actor().mutable_layers().back().weight.setZero();
  agent.mutable_actor().mutable_layers().back().bias.setZero();
  Pendulum env;
  const std::vector<std::uint64_t> seeds{5, 5, 5};
  const auto returns = eval_returns(agent, env, seeds);
  CHECK(returns[0] == returns[1]);
  CHECK(returns[1] == returns[2]);

  // zeroed final layer: every action is the midpoint of the full window
  for (std::uint64_t s : {0ull, 9ull}) {
    Pendulum direct;
    direct.reset(s);
    double expected = 0.0;
    for (int i = 0; i < 200; ++i) expected += direct.step(Vector::Zero(1)).reward;
    CHECK(eval(agent, env, 1, s) == expected);
  }
}

TEST_CASE("every executed action lies inside the active window") {
  RunConfig c = quick(2000);
  c.prior = "pendulum-energy";
  int violations = 0, masked = 0;
  RunHooks hooks;
  hooks.on_step = [&](const StepTrace& s) {
    if (!s.decision.bounds.contains(s.action)) ++violations;
    if (s.decision.masked) ++masked;
  };
  run(c, hooks);
  CHECK(violations == 0);
  CHECK(masked > 0);
}

TEST_CASE("masked fraction follows the schedule integral") {
  RunConfig c = quick(3000);
  c.prior = "random";
  c.agent.learning_starts = 3000;
  const RunResult r = run(c);
  CHECK(std::abs(r.record.masked_fraction() - 0.1) < 0.03);

  c.agent.epsilon_masking = false;
  CHECK(run(c).record.masked_fraction() == 1.0);
}

TEST_CASE("evaluation does not perturb training") {
  RunConfig with_eval = quick(1500);
  with_eval.prior = "pendulum-energy";
  RunConfig without = with_eval;
  without.eval_interval = 1'000'000;
  std::vector<Vector> a, b;
  RunHooks ha, hb;
  ha.on_step = [&](const StepTrace& s) { a.push_back(s.action); };
  hb.on_step = [&](const StepTrace& s) { b.push_back(s.action); };
  const RunResult ra = run(with_eval, ha);
  const RunResult rb = run(without, hb);
  CHECK(a == b);
  CHECK(ra.record.of_kind(RecordKind::kTrain) == rb.record.of_kind(RecordKind::kTrain));
  CHECK(ra.record.of_kind(RecordKind::kEval).size() == 3);
  CHECK(rb.record.of_kind(RecordKind::kEval).empty());
  CHECK(ra.agent->actor() == rb.agent->actor());
}

TEST_CASE("runs write identical record files") {
  const auto dir = std::filesystem::temp_directory_path() / "camel_harness_determinism";
  std::filesystem::remove_all(dir);
  RunConfig c = quick(1200);
  c.prior = "random";
  c.out_dir = (dir / "a").string();
  c.save_checkpoint = true;
  run(c);
  c.out_dir = (dir / "b").string();
  run(c);
  const std::string first = slurp(dir / "a" / "run.jsonl");
  CHECK_FALSE(first.empty());
  CHECK(first == slurp(dir / "b" / "run.jsonl"));
  CHECK(std::filesystem::exists(dir / "a" / "run.ckpt" / "manifest.txt"));
  const Agent restored = Agent::load((dir / "a" / "run.ckpt").string());
  CHECK(restored.config().hidden == std::vector<int>{16, 16});
  std::filesystem::remove_all(dir);
}

TEST_CASE("prior-free masking-free run matches plain TD3") {
  RunConfig c = quick(1500);
  c.agent.masking_aware = false;
  c.agent.epsilon_masking = false;
  std::vector<Vector> lib, ref;
  RunHooks hooks;
  hooks.on_step = [&](const StepTrace& s) { lib.push_back(s.action); };
  const RunResult r = run(c, hooks);
  const reference::Td3Result plain = reference::run_td3(
      c.env, c.agent, c.seed, c.total_steps, c.eval_interval, c.eval_episodes,
      [&](const reference::Td3Step& s) { ref.push_back(s.action); });
  CHECK(lib == ref);
  CHECK(r.record.rows == plain.record.rows);
  CHECK(r.agent->actor() == plain.actor);
}

TEST_CASE("run configuration errors") {
  RunConfig c = quick();
  c.env = "hopper";
  CHECK_THROWS_AS(run(c), UsageError);
  c = quick();
  c.prior = "mystery";
  CHECK_THROWS_AS(run(c), UsageError);
  c = quick();
  c.total_steps = 100;
  CHECK_THROWS_AS(run(c), UsageError);
  c = quick();
  c.eval_episodes = 0;
  CHECK_THROWS_AS(run(c), UsageError);
}

TEST_CASE("a bridged prior drives a run") {
  const auto dir = std::filesystem::temp_directory_path() / "camel_harness_bridge";
  std::filesystem::remove_all(dir);
  RunConfig c = quick(600);
  c.agent.learning_starts = 600;
  c.prior = "bridge:python3 " CAMEL_FIXTURES "/stub_policy.py zeros";
  c.out_dir = dir.string();
  int masked = 0;
  RunHooks hooks;
  hooks.on_step = [&](const StepTrace& s) {
    if (s.decision.masked) {
      ++masked;
      CHECK(s.decision.bounds.lower[0] == doctest::Approx(-0.3));
      CHECK(s.decision.bounds.upper[0] == doctest::Approx(0.3));
    }
  };
  run(c, hooks);
  CHECK(masked > 0);
  CHECK_FALSE(read_record_file((dir / "run.jsonl").string()).rows.empty());

  c.prior = "bridge:python3 " CAMEL_FIXTURES "/stub_policy.py crash 50";
  CHECK_THROWS_AS(run(c), ProtocolError);
  std::filesystem::remove_all(dir);
}
