#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camel/agent.hpp"
#include "camel/common.hpp"
#include "camel/env.hpp"

namespace camel {

/// Raised when an external policy process misbehaves: spawn failure, timeout,
/// malformed or wrong-length reply, or a handshake that disagrees with the env.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hard-coded, non-learning policy that supplies the mask centre.
class PriorPolicy {
 public:
  virtual ~PriorPolicy() = default;
  /// Raw action for `obs`. Use prior_act() to get the validated, clipped action.
  virtual Vector act(const Vector& obs) = 0;
  virtual std::string describe() const = 0;
};

/// Calls `policy`, rejects non-finite or wrong-length output, and clips into the action space.
Vector prior_act(PriorPolicy& policy, const Vector& obs, const EnvSpec& spec);

class ConstantPrior final : public PriorPolicy {
 public:
  explicit ConstantPrior(Vector action) : action_(std::move(action)) {}
  Vector act(const Vector&) override { return action_; }
  std::string describe() const override;

 private:
  Vector action_;
};

/// Uniform draws over the action space from a private seeded stream.
class RandomPrior final : public PriorPolicy {
 public:
  RandomPrior(const EnvSpec& spec, std::uint64_t seed);
  Vector act(const Vector& obs) override;
  std::string describe() const override { return "random"; }

 private:
  Vector low_, high_;
  Rng rng_;
};

/// Energy-shaping swing-up with a PD catch near upright.
class PendulumEnergyPrior final : public PriorPolicy {
 public:
  struct Gains {
    double energy = 1.0;
    double kp = 4.0;
    double kd = 1.0;
    double catch_cos = 0.95;
  };
  PendulumEnergyPrior() = default;
  explicit PendulumEnergyPrior(Gains g) : gains_(g) {}
  Vector act(const Vector& obs) override;
  std::string describe() const override { return "pendulum-energy"; }

 private:
  Gains gains_;
};

/// a = clip(kp (goal - p) - kd v, -1, 1)
class ReacherPdPrior final : public PriorPolicy {
 public:
  ReacherPdPrior(double kp = 1.0, double kd = 0.8) : kp_(kp), kd_(kd) {}
  Vector act(const Vector& obs) override;
  std::string describe() const override { return "reacher-pd"; }

 private:
  double kp_, kd_;
};

/// Greedy, unmasked policy of a trained agent, used as an expert mask centre.
class ActorPrior final : public PriorPolicy {
 public:
  ActorPrior(Agent agent, const EnvSpec& spec, std::string label);
  Vector act(const Vector& obs) override;
  std::string describe() const override { return label_; }

 private:
  Agent agent_;
  ActionBounds full_;
  std::string label_;
};

struct BridgeOptions {
  double timeout_seconds = 2.0;
  /// Child stderr is appended here; empty inherits the parent's stderr.
  std::string stderr_path;
};

/// Policy hosted by an external process over line-delimited JSON on its
/// stdin/stdout. One request is outstanding at a time.
class BridgePrior final : public PriorPolicy {
 public:
  /// Spawns `command` through /bin/sh and performs the hello/ready handshake.
  BridgePrior(const std::string& command, int obs_dim, int act_dim, BridgeOptions options = {});
  ~BridgePrior() override;
  BridgePrior(const BridgePrior&) = delete;
  BridgePrior& operator=(const BridgePrior&) = delete;

  Vector act(const Vector& obs) override;
  std::string describe() const override { return "bridge:" + command_; }

  /// Sends the shutdown message and reaps the child. Safe to call twice.
  void close();

 private:
  void send_line(const std::string& line);
  std::string read_line();
  void kill_child();

  std::string command_;
  int obs_dim_;
  int act_dim_;
  BridgeOptions options_;
  int fd_ = -1;
  int pid_ = -1;
  std::string pending_;
};

/// Builds a prior from its textual spec:
///   none | expert | pendulum-energy | reacher-pd | random | constant:v1,v2,...
///   | checkpoint:<dir> | bridge:<shell command>
/// Returns nullptr for "none". `seed` feeds the random prior's stream.
std::unique_ptr<PriorPolicy> make_prior(const std::string& spec, const Environment& env,
                                        std::uint64_t seed, const BridgeOptions& bridge = {});

struct CandidateScore {
  std::string label;
  double episode_return = -std::numeric_limits<double>::infinity();
  int episode_length = 0;
  double mean_abs_action = 0.0;
  double mean_action_change = 0.0;
  std::optional<std::string> error;
};

struct CandidateReport {
  std::vector<CandidateScore> candidates;
  std::size_t selected = 0;
};

/// Runs every candidate for one episode from the shared seed and selects the
/// highest return, breaking ties by smoother actions and then by index.
/// A candidate that throws is scored -inf and the remaining ones still run.
CandidateReport evaluate_candidates(Environment& env, const std::vector<PriorPolicy*>& candidates,
                                    std::uint64_t seed);

}  // namespace camel
