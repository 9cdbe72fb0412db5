#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "camel/common.hpp"

namespace camel {

struct EnvSpec {
  int obs_dim = 0;
  int act_dim = 0;
  Vector action_low;
  Vector action_high;
  int max_episode_steps = 0;
};

using Observation = Vector;

struct StepResult {
  Observation next_obs;
  double reward = 0.0;
  bool terminated = false;  // MDP-terminal: do not bootstrap
  bool truncated = false;   // time limit reached
};

/// A seedable continuous-control environment. Instances are single-threaded
/// state machines; `step` is only valid between a `reset` and the end of the
/// episode.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::string name() const = 0;

  /// Starts a new episode. The initial state depends on `seed` only.
  Observation reset(std::uint64_t seed);

  /// Advances exactly one control interval.
  StepResult step(const Vector& action);

  int elapsed_steps() const { return steps_; }
  bool episode_over() const { return done_; }

 protected:
  virtual Observation reset_state(Rng& rng) = 0;
  virtual StepResult advance(const Vector& action) = 0;
  virtual Observation observe() const = 0;

  /// For subclasses that let callers place the state directly.
  void begin_episode() {
    steps_ = 0;
    done_ = false;
    active_ = true;
  }

 private:
  int steps_ = 0;
  bool done_ = false;
  bool active_ = false;
};

/// Torque-limited pendulum swing-up. theta = 0 is upright.
/// Observation (cos theta, sin theta, theta_dot); action in [-1, 1] scales a torque of 2.
class Pendulum final : public Environment {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr int kMaxSteps = 200;

  Pendulum();

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "pendulum"; }

  /// Places the pendulum at (theta, theta_dot) and starts a fresh episode there.
  Observation set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

  /// Maps an angle into (-pi, pi].
  static double wrap_angle(double theta);

 protected:
  Observation reset_state(Rng& rng) override;
  StepResult advance(const Vector& action) override;
  Observation observe() const override;

 private:
  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// Point-mass reacher in the plane. Acceleration control, goal on an annulus.
/// Observation (p, v, goal), each two-dimensional.
class Reacher final : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kMaxSpeed = 2.0;
  static constexpr double kGoalRadius = 0.1;
  static constexpr double kGoalBonus = 10.0;
  static constexpr double kMinGoalDistance = 0.3;
  static constexpr double kMaxGoalDistance = 1.5;
  static constexpr int kMaxSteps = 300;

  Reacher();

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "reacher"; }

  Observation set_state(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                        const Eigen::Vector2d& goal);

 protected:
  Observation reset_state(Rng& rng) override;
  StepResult advance(const Vector& action) override;
  Observation observe() const override;

 private:
  EnvSpec spec_;
  Eigen::Vector2d position_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
};

/// "pendulum" or "reacher"; throws UsageError otherwise.
std::unique_ptr<Environment> make_env(const std::string& name);

}  // namespace camel
