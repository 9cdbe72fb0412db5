#include <cmath>
#include <numbers>

#include <doctest.h>

#include "camel/env.hpp"

using namespace camel;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

// Mechanical energy of the unforced pendulum plus the first-order correction
// that semi-implicit Euler conserves. The uncorrected energy oscillates by
// O(dt) within an orbit, the corrected one drifts by O(dt^2) per step.
double pendulum_energy(double theta, double theta_dot) {
  const double g = 1.5 * Pendulum::kGravity / Pendulum::kLength;
  return 0.5 * theta_dot * theta_dot + g * std::cos(theta) +
         0.5 * Pendulum::kDt * theta_dot * g * std::sin(theta);
}

}  // namespace

TEST_CASE("spec constants") {
  Pendulum p;
  CHECK(p.spec().obs_dim == 3);
  CHECK(p.spec().act_dim == 1);
  CHECK(p.spec().max_episode_steps == 200);
  Reacher r;
  CHECK(r.spec().obs_dim == 6);
  CHECK(r.spec().act_dim == 2);
  CHECK(r.spec().max_episode_steps == 300);
  for (const EnvSpec* s : {&p.spec(), &r.spec()}) {
    CHECK((s->action_low.array() == -1.0).all());
    CHECK((s->action_high.array() == 1.0).all());
  }
  CHECK_THROWS_AS(make_env("hopper"), UsageError);
}

TEST_CASE("reset is a function of the seed") {
  Pendulum a, b;
  const Observation o1 = a.reset(7);
  const Observation o2 = b.reset(7);
  CHECK(o1 == o2);

  int differ = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    if (a.reset(2 * s) != b.reset(2 * s + 1)) ++differ;
  }
  CHECK(differ >= 99);
}

TEST_CASE("reacher goals start outside the success zone") {
  Reacher r;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const Observation o = r.reset(s);
    const double d = o.segment(4, 2).norm();
    CHECK(d >= 0.3);
    CHECK(d <= 1.5 + 1e-12);
    CHECK(o.head(4).isZero());
  }
}

TEST_CASE("pendulum hanging at rest stays at rest") {
  Pendulum p;
  p.set_state(std::numbers::pi, 0.0);
  const StepResult r = p.step(scalar(0.0));
  CHECK(std::abs(p.theta_dot()) < 1e-12);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("pendulum single step matches a hand integration") {
  // theta = pi/2, theta_dot = 0, a = 1 -> u = 2
  // theta_ddot = 15 sin(pi/2) + 3 * 2 = 21; theta_dot = 21 * 0.05 = 1.05;
  // theta = pi/2 + 1.05 * 0.05; reward = -((pi/2)^2 + 0 + 0.001 * 4)
  Pendulum p;
  p.set_state(std::numbers::pi / 2, 0.0);
  const StepResult r = p.step(scalar(1.0));
  CHECK(p.theta_dot() == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(p.theta() == doctest::Approx(std::numbers::pi / 2 + 0.0525).epsilon(1e-12));
  CHECK(r.reward == doctest::Approx(-(std::numbers::pi * std::numbers::pi / 4 + 0.004)).epsilon(1e-12));
  CHECK(r.next_obs[0] == doctest::Approx(std::cos(std::numbers::pi / 2 + 0.0525)));
  CHECK(r.next_obs[1] == doctest::Approx(std::sin(std::numbers::pi / 2 + 0.0525)));
  CHECK(r.next_obs[2] == doctest::Approx(1.05));
}

TEST_CASE("pendulum speed is clipped") {
  Pendulum p;
  p.set_state(0.5, 7.9);
  p.step(scalar(1.0));
  CHECK(p.theta_dot() == 8.0);
}

TEST_CASE("angle wrapping lands in (-pi, pi]") {
  constexpr double pi = std::numbers::pi;
  CHECK(Pendulum::wrap_angle(pi) == doctest::Approx(pi));
  CHECK(Pendulum::wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(Pendulum::wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(Pendulum::wrap_angle(0.0) == 0.0);
}

TEST_CASE("reacher terminates inside the goal radius") {
  Reacher r;
  r.set_state({0.0, 0.0}, {0.0, 0.0}, {0.05, 0.0});
  const StepResult s = r.step(Vector::Zero(2));
  CHECK(s.terminated);
  CHECK_FALSE(s.truncated);
  CHECK(s.reward == doctest::Approx(-0.05 + 10.0).epsilon(1e-12));
  CHECK_THROWS_AS(r.step(Vector::Zero(2)), UsageError);
}

TEST_CASE("reacher kinematics") {
  Reacher r;
  r.set_state({0.0, 0.0}, {1.95, 0.0}, {1.0, 1.0});
  const StepResult s = r.step((Vector(2) << 1.0, -1.0).finished());
  // v = clip((1.95 + 0.1, -0.1), -2, 2) = (2, -0.1); p = (0.2, -0.01)
  CHECK(s.next_obs[2] == 2.0);
  CHECK(s.next_obs[3] == doctest::Approx(-0.1));
  CHECK(s.next_obs[0] == doctest::Approx(0.2));
  CHECK(s.next_obs[1] == doctest::Approx(-0.01));
  const double dist = std::hypot(1.0 - 0.2, 1.0 + 0.01);
  CHECK(s.reward == doctest::Approx(-dist - 0.01 * 2.0));
}

TEST_CASE("usage errors") {
  Pendulum p;
  CHECK_THROWS_AS(p.step(scalar(0.0)), UsageError);
  p.reset(0);
  CHECK_THROWS_AS(p.step(Vector::Zero(2)), ShapeError);
  CHECK_THROWS_AS(p.step(scalar(1.5)), UsageError);
  CHECK_THROWS_AS(p.step(scalar(std::nan(""))), UsageError);
}

TEST_CASE("pendulum truncates at 200 steps and never terminates") {
  Pendulum p;
  p.reset(3);
  StepResult r;
  for (int i = 0; i < 200; ++i) {
    CHECK_FALSE(p.episode_over());
    r = p.step(scalar(0.3));
    CHECK_FALSE(r.terminated);
  }
  CHECK(r.truncated);
  CHECK_THROWS_AS(p.step(scalar(0.0)), UsageError);
  p.reset(4);
  CHECK(p.elapsed_steps() == 0);
}

TEST_CASE("trajectories are reproducible and rewards bounded") {
  const double pendulum_floor = -(std::numbers::pi * std::numbers::pi + 0.1 * 64 + 0.001 * 4);
  for (const char* name : {"pendulum", "reacher"}) {
    auto run = [&](std::uint64_t seed) {
      auto env = make_env(name);
      Rng rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> trace;
      env->reset(seed);
      for (int i = 0; i < 2000; ++i) {
        Vector a(env->spec().act_dim);
        for (auto& v : a) v = u(rng);
        StepResult r = env->step(a);
        trace.push_back(r.reward);
        trace.insert(trace.end(), r.next_obs.data(), r.next_obs.data() + r.next_obs.size());
        if (std::string(name) == "pendulum") {
          CHECK(r.reward <= 0.0);
          CHECK(r.reward >= pendulum_floor);
        } else {
          CHECK(r.reward <= 10.0);
        }
        if (r.terminated || r.truncated) env->reset(seed + static_cast<std::uint64_t>(i));
      }
      return trace;
    };
    CHECK(run(11) == run(11));
  }
}

TEST_CASE("unforced pendulum energy drift is small per step") {
  Rng rng(5);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  Pendulum p;
  for (int trial = 0; trial < 20; ++trial) {
    p.set_state(angle(rng), speed(rng));
    for (int i = 0; i < 100; ++i) {
      const double before = pendulum_energy(p.theta(), p.theta_dot());
      p.step(scalar(0.0));
      const double after = pendulum_energy(p.theta(), p.theta_dot());
      CHECK(std::abs(after - before) < 0.05);
    }
  }
}

TEST_CASE("observations stay finite over a million random steps") {
  for (const char* name : {"pendulum", "reacher"}) {
    auto env = make_env(name);
    Rng rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    env->reset(0);
    bool finite = true;
    std::uint64_t episode = 0;
    for (int i = 0; i < 1'000'000; ++i) {
      Vector a(env->spec().act_dim);
      for (auto& v : a) v = u(rng);
      const StepResult r = env->step(a);
      finite = finite && r.next_obs.allFinite() && std::isfinite(r.reward);
      if (r.terminated || r.truncated) env->reset(++episode);
    }
    CHECK(finite);
  }
}
