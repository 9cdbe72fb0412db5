#include "camel/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace camel {

namespace {

EnvSpec box_spec(int obs_dim, int act_dim, int max_steps) {
  EnvSpec s;
  s.obs_dim = obs_dim;
  s.act_dim = act_dim;
  s.action_low = Vector::Constant(act_dim, -1.0);
  s.action_high = Vector::Constant(act_dim, 1.0);
  s.max_episode_steps = max_steps;
  return s;
}

}  // namespace

Observation Environment::reset(std::uint64_t seed) {
  Rng rng{seed};
  begin_episode();
  return reset_state(rng);
}

StepResult Environment::step(const Vector& action) {
  if (!active_) throw UsageError(name() + ": step() before reset()");
  if (done_) throw UsageError(name() + ": step() after episode end without reset()");
  const EnvSpec& s = spec();
  if (action.size() != s.act_dim) {
    throw ShapeError(name() + ": action has " + std::to_string(action.size()) +
                     " entries, expected " + std::to_string(s.act_dim));
  }
  if (!action.allFinite() || (action.array() < s.action_low.array()).any() ||
      (action.array() > s.action_high.array()).any()) {
    throw UsageError(name() + ": action outside the action space");
  }
  StepResult r = advance(action);
  ++steps_;
  if (!r.terminated && steps_ >= s.max_episode_steps) r.truncated = true;
  done_ = r.terminated || r.truncated;
  return r;
}

// ---------------------------------------------------------------------------

Pendulum::Pendulum() : spec_(box_spec(3, 1, kMaxSteps)) {}

double Pendulum::wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double w = std::fmod(theta + pi, 2.0 * pi);
  if (w <= 0.0) w += 2.0 * pi;
  return w - pi;
}

Observation Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  begin_episode();
  return observe();
}

Observation Pendulum::reset_state(Rng& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  theta_ = angle(rng);
  theta_dot_ = speed(rng);
  return observe();
}

StepResult Pendulum::advance(const Vector& action) {
  const double u = kMaxTorque * action[0];
  const double w = wrap_angle(theta_);
  StepResult r;
  r.reward = -(w * w + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);

  // semi-implicit Euler: velocity first, then position with the new velocity
  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                       3.0 * u / (kMass * kLength * kLength);
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ += theta_dot_ * kDt;

  r.next_obs = observe();
  return r;
}

Observation Pendulum::observe() const {
  Observation o(3);
  o << std::cos(theta_), std::sin(theta_), theta_dot_;
  return o;
}

// ---------------------------------------------------------------------------

Reacher::Reacher() : spec_(box_spec(6, 2, kMaxSteps)) {}

Observation Reacher::set_state(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                               const Eigen::Vector2d& goal) {
  position_ = position;
  velocity_ = velocity;
  goal_ = goal;
  begin_episode();
  return observe();
}

Observation Reacher::reset_state(Rng& rng) {
  position_.setZero();
  velocity_.setZero();
  // uniform by area on the annulus
  std::uniform_real_distribution<double> r2(kMinGoalDistance * kMinGoalDistance,
                                            kMaxGoalDistance * kMaxGoalDistance);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double radius = std::sqrt(r2(rng));
  const double phi = angle(rng);
  goal_ << radius * std::cos(phi), radius * std::sin(phi);
  return observe();
}

StepResult Reacher::advance(const Vector& action) {
  const Eigen::Vector2d a = action.head<2>();
  velocity_ = (velocity_ + a * kDt).cwiseMax(-kMaxSpeed).cwiseMin(kMaxSpeed);
  position_ += velocity_ * kDt;

  const double distance = (position_ - goal_).norm();
  StepResult r;
  r.reward = -distance - 0.01 * a.squaredNorm();
  if (distance < kGoalRadius) {
    r.terminated = true;
    r.reward += kGoalBonus;
  }
  r.next_obs = observe();
  return r;
}

Observation Reacher::observe() const {
  Observation o(6);
  o << position_, velocity_, goal_;
  return o;
}

std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "reacher") return std::make_unique<Reacher>();
  throw UsageError("unknown environment '" + name + "' (expected pendulum or reacher)");
}

}  // namespace camel
