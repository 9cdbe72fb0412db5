#include "camel/priors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "camel/settings.hpp"

namespace camel {

Vector prior_act(PriorPolicy& policy, const Vector& obs, const EnvSpec& spec) {
  const Vector a = policy.act(obs);
  if (a.size() != spec.act_dim) {
    throw ProtocolError(policy.describe() + ": returned " + std::to_string(a.size()) +
                        " action entries, expected " + std::to_string(spec.act_dim));
  }
  if (!a.allFinite()) throw ProtocolError(policy.describe() + ": returned a non-finite action");
  return a.cwiseMax(spec.action_low).cwiseMin(spec.action_high);
}

std::string ConstantPrior::describe() const {
  std::string s = "constant:";
  for (Eigen::Index i = 0; i < action_.size(); ++i) s += (i ? "," : "") + format_double(action_[i]);
  return s;
}

RandomPrior::RandomPrior(const EnvSpec& spec, std::uint64_t seed)
    : low_(spec.action_low), high_(spec.action_high), rng_(seed) {}

Vector RandomPrior::act(const Vector&) {
  Vector a(low_.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    std::uniform_real_distribution<double> d(low_[i], high_[i]);
    a[i] = d(rng_);
  }
  return a;
}

Vector PendulumEnergyPrior::act(const Vector& obs) {
  if (obs.size() != 3) throw ShapeError("pendulum prior expects a 3-entry observation");
  const double c = obs[0];
  const double theta = std::atan2(obs[1], obs[0]);
  const double theta_dot = obs[2];
  // potential coefficient of the pendulum dynamics (theta_ddot = 3g/(2l) sin theta + ...)
  constexpr double kPotential = 3.0 * Pendulum::kGravity / (2.0 * Pendulum::kLength);

  double torque = 0.0;
  if (c < gains_.catch_cos) {
    const double energy = 0.5 * theta_dot * theta_dot + kPotential * c;
    torque = gains_.energy * theta_dot * (kPotential - energy);
  } else {
    torque = -gains_.kp * theta - gains_.kd * theta_dot;
  }
  Vector a(1);
  a[0] = std::clamp(torque / Pendulum::kMaxTorque, -1.0, 1.0);
  return a;
}

Vector ReacherPdPrior::act(const Vector& obs) {
  if (obs.size() != 6) throw ShapeError("reacher prior expects a 6-entry observation");
  const Vector p = obs.segment(0, 2);
  const Vector v = obs.segment(2, 2);
  const Vector goal = obs.segment(4, 2);
  return (kp_ * (goal - p) - kd_ * v).cwiseMax(-1.0).cwiseMin(1.0);
}

ActorPrior::ActorPrior(Agent agent, const EnvSpec& spec, std::string label)
    : agent_(std::move(agent)), full_(ActionBounds::full(spec)), label_(std::move(label)) {
  if (agent_.obs_dim() != spec.obs_dim || agent_.act_dim() != spec.act_dim) {
    throw UsageError("checkpoint prior: agent dimensions do not match the environment");
  }
}

Vector ActorPrior::act(const Vector& obs) { return agent_.greedy_action(obs, full_); }

std::unique_ptr<PriorPolicy> make_prior(const std::string& spec, const Environment& env,
                                        std::uint64_t seed, const BridgeOptions& bridge) {
  const EnvSpec& es = env.spec();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);

  if (kind == "none") return nullptr;
  if (kind == "expert") {
    if (env.name() == "pendulum") return std::make_unique<PendulumEnergyPrior>();
    if (env.name() == "reacher") return std::make_unique<ReacherPdPrior>();
    throw UsageError("no scripted expert for " + env.name());
  }
  if (kind == "pendulum-energy") return std::make_unique<PendulumEnergyPrior>();
  if (kind == "reacher-pd") return std::make_unique<ReacherPdPrior>();
  if (kind == "random") return std::make_unique<RandomPrior>(es, seed);
  if (kind == "constant") {
    std::vector<double> values;
    std::stringstream ss(arg);
    std::string part;
    while (std::getline(ss, part, ',')) values.push_back(parse_double("constant prior", part));
    if (values.size() == 1 && es.act_dim > 1) values.resize(static_cast<std::size_t>(es.act_dim), values[0]);
    if (static_cast<int>(values.size()) != es.act_dim) {
      throw UsageError("constant prior needs " + std::to_string(es.act_dim) + " values");
    }
    return std::make_unique<ConstantPrior>(Eigen::Map<Vector>(values.data(), es.act_dim));
  }
  if (kind == "checkpoint") {
    if (arg.empty()) throw UsageError("checkpoint prior needs a directory");
    return std::make_unique<ActorPrior>(Agent::load(arg), es, spec);
  }
  if (kind == "bridge") {
    if (arg.empty()) throw UsageError("bridge prior needs a command");
    return std::make_unique<BridgePrior>(arg, es.obs_dim, es.act_dim, bridge);
  }
  throw UsageError("unknown prior '" + spec + "'");
}

CandidateReport evaluate_candidates(Environment& env, const std::vector<PriorPolicy*>& candidates,
                                    std::uint64_t seed) {
  if (candidates.empty()) throw UsageError("evaluate_candidates: no candidates");
  const EnvSpec& spec = env.spec();
  CandidateReport report;
  for (PriorPolicy* policy : candidates) {
    CandidateScore score;
    score.label = policy->describe();
    try {
      Vector obs = env.reset(seed);
      double ret = 0.0, abs_sum = 0.0, change_sum = 0.0;
      Vector previous;
      int steps = 0;
      while (true) {
        const Vector a = prior_act(*policy, obs, spec);
        abs_sum += a.cwiseAbs().mean();
        if (steps > 0) change_sum += (a - previous).cwiseAbs().mean();
        previous = a;
        const StepResult r = env.step(a);
        ret += r.reward;
        ++steps;
        obs = r.next_obs;
        if (r.terminated || r.truncated) break;
      }
      score.episode_return = ret;
      score.episode_length = steps;
      score.mean_abs_action = abs_sum / steps;
      score.mean_action_change = steps > 1 ? change_sum / (steps - 1) : 0.0;
    } catch (const std::exception& e) {
      score.episode_return = -std::numeric_limits<double>::infinity();
      score.error = e.what();
    }
    report.candidates.push_back(std::move(score));
  }

  for (std::size_t i = 1; i < report.candidates.size(); ++i) {
    const CandidateScore& c = report.candidates[i];
    const CandidateScore& best = report.candidates[report.selected];
    if (c.episode_return > best.episode_return ||
        (c.episode_return == best.episode_return && c.mean_action_change < best.mean_action_change)) {
      report.selected = i;
    }
  }
  return report;
}

}  // namespace camel
