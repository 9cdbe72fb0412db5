#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <doctest.h>

#include "camel/priors.hpp"

using namespace camel;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string stub(const std::string& args) {
  return "python3 " CAMEL_FIXTURES "/stub_policy.py " + args;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Vector pendulum_obs(double theta, double theta_dot) {
  return vec({std::cos(theta), std::sin(theta), theta_dot});
}

}  // namespace

TEST_CASE("constant and random priors") {
  Pendulum env;
  ConstantPrior c(vec({0.2}));
  for (int i = 0; i < 5; ++i) CHECK(prior_act(c, pendulum_obs(i, 0.0), env.spec()) == vec({0.2}));
  ConstantPrior too_big(vec({3.0}));
  CHECK(prior_act(too_big, pendulum_obs(0, 0), env.spec()) == vec({1.0}));
  ConstantPrior wrong(vec({0.1, 0.2}));
  CHECK_THROWS_AS(prior_act(wrong, pendulum_obs(0, 0), env.spec()), ProtocolError);
  ConstantPrior nan(vec({std::nan("")}));
  CHECK_THROWS_AS(prior_act(nan, pendulum_obs(0, 0), env.spec()), ProtocolError);

  Reacher reacher;
  RandomPrior r(reacher.spec(), 5);
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < 10000; ++i) {
    const Vector a = prior_act(r, Vector::Zero(6), reacher.spec());
    CHECK(reacher.spec().action_low.cwiseMax(a) == a);
    CHECK(reacher.spec().action_high.cwiseMin(a) == a);
    sum += a;
  }
  CHECK((sum / 10000.0).cwiseAbs().maxCoeff() < 0.05);
  RandomPrior r1(reacher.spec(), 5), r2(reacher.spec(), 5);
  CHECK(r1.act(Vector::Zero(6)) == r2.act(Vector::Zero(6)));
}

TEST_CASE("pendulum energy prior fixed points") {
  PendulumEnergyPrior p;
  CHECK(p.act(vec({1.0, 0.0, 0.0}))[0] == 0.0);
  CHECK(p.act(pendulum_obs(std::numbers::pi, 0.0))[0] == 0.0);
  // catch region: PD on the wrapped angle
  CHECK(p.act(pendulum_obs(0.1, 0.0))[0] == doctest::Approx(-0.2).epsilon(1e-12));
  // swing region pumps energy in the direction of motion
  CHECK(p.act(pendulum_obs(std::numbers::pi, 0.5))[0] > 0.0);
  CHECK(p.act(pendulum_obs(std::numbers::pi, -0.5))[0] < 0.0);
  CHECK_THROWS_AS(p.act(Vector::Zero(6)), ShapeError);
}

TEST_CASE("pendulum energy prior episode return") {
  Pendulum env;
  PendulumEnergyPrior p;
  Vector obs = env.set_state(std::numbers::pi, 0.1);
  double ret = 0.0;
  for (int i = 0; i < 200; ++i) {
    const StepResult r = env.step(prior_act(p, obs, env.spec()));
    ret += r.reward;
    obs = r.next_obs;
  }
  CHECK(ret == doctest::Approx(-620.120987131557).epsilon(1e-9));
}

TEST_CASE("reacher pd prior") {
  ReacherPdPrior p;
  CHECK(p.act(vec({0.3, 0.4, 0.0, 0.0, 0.3, 0.4})) == vec({0.0, 0.0}));
  CHECK(p.act(vec({0.0, 0.0, 0.0, 0.0, 1.0, 0.0})) == vec({1.0, 0.0}));

  Reacher env;
  Vector obs = env.reset(0);
  CHECK(obs[4] == doctest::Approx(0.65885856512190211).epsilon(1e-15));
  CHECK(obs[5] == doctest::Approx(-0.032543141300491615).epsilon(1e-15));
  double ret = 0.0;
  int steps = 0;
  while (true) {
    const StepResult r = env.step(prior_act(p, obs, env.spec()));
    ret += r.reward;
    ++steps;
    obs = r.next_obs;
    if (r.terminated || r.truncated) break;
  }
  CHECK(steps == 18);
  CHECK(ret == doctest::Approx(2.788802639459).epsilon(1e-9));
}

TEST_CASE("scripted priors stay in range and are pure") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  PendulumEnergyPrior pend;
  ReacherPdPrior reach;
  Pendulum pe;
  Reacher re;
  for (int i = 0; i < 10000; ++i) {
    const Vector po = pendulum_obs(u(rng), 3.0 * u(rng));
    const Vector pa = pend.act(po);
    CHECK(std::abs(pa[0]) <= 1.0);
    CHECK(pend.act(po) == pa);
    Vector ro(6);
    for (auto& v : ro) v = u(rng);
    const Vector ra = reach.act(ro);
    CHECK(ra.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(reach.act(ro) == ra);
  }
  (void)pe;
  (void)re;
}

TEST_CASE("make_prior specs") {
  Pendulum pend;
  Reacher reach;
  CHECK(make_prior("none", pend, 1) == nullptr);
  CHECK(make_prior("expert", pend, 1)->describe() == "pendulum-energy");
  CHECK(make_prior("expert", reach, 1)->describe() == "reacher-pd");
  CHECK(make_prior("random", reach, 1)->describe() == "random");
  const auto c = make_prior("constant:0.5,-0.25", reach, 1);
  CHECK(c->act(Vector::Zero(6)) == vec({0.5, -0.25}));
  CHECK(make_prior("constant:0.5", reach, 1)->act(Vector::Zero(6)) == vec({0.5, 0.5}));
  CHECK_THROWS_AS(make_prior("constant:0.5,0.1,0.2", reach, 1), UsageError);
  CHECK_THROWS_AS(make_prior("oracle", pend, 1), UsageError);
  CHECK_THROWS_AS(make_prior("checkpoint:", pend, 1), UsageError);
  CHECK_THROWS_AS(make_prior("bridge:", pend, 1), UsageError);
}

TEST_CASE("bridge round trip") {
  BridgePrior zeros(stub("zeros"), 6, 2);
  for (int i = 0; i < 100; ++i) CHECK(zeros.act(Vector::Constant(6, 0.1 * i)) == vec({0.0, 0.0}));
  zeros.close();
  zeros.close();
  CHECK_THROWS_AS(zeros.act(Vector::Zero(6)), ProtocolError);

  BridgePrior echo(stub("echo"), 3, 1);
  CHECK(echo.act(vec({0.25, 0.0, 0.0})) == vec({0.25}));
  CHECK(echo.act(vec({7.0, 0.0, 0.0})) == vec({1.0}));
  CHECK_THROWS_AS(echo.act(Vector::Zero(2)), ShapeError);
}

TEST_CASE("bridge protocol errors") {
  BridgeOptions fast;
  fast.timeout_seconds = 0.5;
  CHECK_THROWS_AS(BridgePrior(stub("advertise 1"), 6, 2), ProtocolError);
  CHECK_THROWS_AS(BridgePrior(stub("sleep 3"), 3, 1, fast), ProtocolError);
  CHECK_THROWS_AS(BridgePrior("exit 0", 3, 1, fast), ProtocolError);

  auto fails_with = [&](const std::string& mode, const std::string& fragment) {
    BridgePrior b(stub(mode), 3, 1, fast);
    try {
      b.act(Vector::Zero(3));
    } catch (const ProtocolError& e) {
      return std::string(e.what()).find(fragment) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_with("garbage", "this is not json"));
  CHECK(fails_with("short", "expected 1 action entries"));
  CHECK(fails_with("nan", "NaN"));

  BridgePrior crash(stub("crash 5"), 3, 1, fast);
  for (int i = 0; i < 4; ++i) CHECK(crash.act(Vector::Zero(3)) == vec({0.0}));
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(crash.act(Vector::Zero(3)), ProtocolError);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(2));
}

TEST_CASE("bridge stderr goes to the log") {
  const auto log = std::filesystem::temp_directory_path() / "camel_bridge_stderr_test.log";
  std::filesystem::remove(log);
  BridgeOptions opts;
  opts.stderr_path = log.string();
  {
    BridgePrior b(stub("stderr"), 3, 1, opts);
    b.act(Vector::Zero(3));
    b.act(Vector::Zero(3));
  }
  const std::string text = read_file(log);
  CHECK(text.find("step 1") != std::string::npos);
  CHECK(text.find("step 2") != std::string::npos);
  std::filesystem::remove(log);
}

TEST_CASE("bridge round-trip latency") {
  BridgePrior b(stub("zeros"), 3, 1);
  std::vector<double> ms;
  for (int i = 0; i < 1000; ++i) {
    const auto start = std::chrono::steady_clock::now();
    b.act(Vector::Zero(3));
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::nth_element(ms.begin(), ms.begin() + 500, ms.end());
  MESSAGE("median round trip " << ms[500] << " ms");
  CHECK(ms[500] < 2.0);
}

TEST_CASE("candidate evaluation") {
  Pendulum env;
  ConstantPrior zero(vec({0.0}));
  PendulumEnergyPrior expert;
  CandidateReport one = evaluate_candidates(env, {&zero}, 0);
  CHECK(one.selected == 0);

  CandidateReport two = evaluate_candidates(env, {&zero, &expert}, 0);
  CHECK(two.selected == 1);
  CHECK(two.candidates[1].episode_return > two.candidates[0].episode_return);
  CHECK(two.candidates[0].episode_length == 200);

  ConstantPrior same_a(vec({0.3})), same_b(vec({0.3}));
  CandidateReport tie = evaluate_candidates(env, {&same_a, &same_b}, 4);
  CHECK(tie.candidates[0].episode_return == tie.candidates[1].episode_return);
  CHECK(tie.selected == 0);

  BridgePrior crashing(stub("crash 3"), 3, 1);
  CandidateReport crashed = evaluate_candidates(env, {&crashing, &zero}, 0);
  CHECK(std::isinf(crashed.candidates[0].episode_return));
  CHECK(crashed.candidates[0].error.has_value());
  CHECK(crashed.selected == 1);
  CHECK_THROWS_AS(evaluate_candidates(env, {}, 0), UsageError);
}
