#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "camel/common.hpp"
#include "camel/masking.hpp"
#include "camel/nn.hpp"
#include "camel/replay.hpp"

namespace camel {

/// TD3 hyperparameters plus the masking switches that select an ablation arm.
struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double explore_sigma = 0.1;  // action units, added after mapping
  double target_sigma = 0.2;
  double noise_clip = 0.5;
  std::size_t batch_size = 128;
  std::size_t buffer_capacity = 100000;
  std::int64_t learning_starts = 1000;
  double half_window = 0.3;
  EpsilonSchedule schedule{0.2, 30000};
  bool masking_aware = true;
  bool epsilon_masking = true;
  std::vector<int> hidden = {64, 64};
  double learning_rate = 3e-4;
  double actor_final_scale = 0.1;
  /// Windows fed to the target actor in td_target: the stored next-state
  /// windows, or always the full action space.
  bool full_target_bounds = false;

  void validate() const;
};

/// Actor input: (s, lower, upper) when masking-aware, otherwise s alone.
Vector actor_input(const Vector& obs, const ActionBounds& bounds, bool masking_aware);
Matrix actor_input(const Matrix& obs, const Matrix& lower, const Matrix& upper, bool masking_aware);

struct ActionChoice {
  Vector x;       // raw actor output in [-1, 1]
  Vector action;  // mapped, noised, and clipped into the active window
};

struct CriticLosses {
  double first = 0.0;
  double second = 0.0;
};

struct TrainMetrics {
  CriticLosses critic;
  std::optional<double> actor_loss;  // set on policy-update steps only
};

/// CAMEL-TD3 learner: actor pi(s, lb, ub) -> x, twin critics Q(s, a), and
/// their Polyak-averaged targets.
class Agent {
 public:
  Agent(int obs_dim, int act_dim, AgentConfig config, std::uint64_t init_seed);

  const AgentConfig& config() const { return config_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  /// Behavior action for one state. `sigma` is the Gaussian exploration scale;
  /// 0 gives the greedy action and draws nothing from `rng`.
  ActionChoice select_action(const Vector& obs, const MaskDecision& decision, Rng& rng,
                             double sigma) const;
  ActionChoice select_action(const Vector& obs, const MaskDecision& decision, Rng& rng) const {
    return select_action(obs, decision, rng, config_.explore_sigma);
  }
  /// Greedy action under the given window.
  Vector greedy_action(const Vector& obs, const ActionBounds& bounds) const;

  /// y = r + gamma * (1 - terminal) * min_i Q'_i(s', a~).
  Vector td_target(const Batch& batch, Rng& rng) const;

  /// Gradients of the mean squared TD error of each critic, without applying them.
  std::pair<LayerGrads, LayerGrads> critic_gradients(const Batch& batch, const Vector& y,
                                                     CriticLosses* losses = nullptr) const;
  CriticLosses update_critics(const Batch& batch, const Vector& y);

  /// d(-mean Q1)/dx at the actor's output, shape act_dim x N.
  Matrix actor_output_gradient(const Batch& batch) const;
  /// Gradient of -mean Q1(s, map(pi(s, lb, ub), lb, ub)) with respect to the actor parameters.
  LayerGrads actor_gradients(const Batch& batch, double* loss = nullptr) const;
  double update_actor(const Batch& batch);

  /// Minibatch sample, critic step, and on every policy_delay-th call an actor
  /// step followed by the target update.
  TrainMetrics train_step(const ReplayBuffer& buffer, Rng& rng);

  std::int64_t train_steps() const { return train_steps_; }

  const Mlp& actor() const { return actor_; }
  const Mlp& critic1() const { return critic1_; }
  const Mlp& critic2() const { return critic2_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic1() const { return target_critic1_; }
  const Mlp& target_critic2() const { return target_critic2_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic1() { return critic1_; }
  Mlp& mutable_critic2() { return critic2_; }
  Mlp& mutable_target_actor() { return target_actor_; }
  Mlp& mutable_target_critic1() { return target_critic1_; }
  Mlp& mutable_target_critic2() { return target_critic2_; }

  void update_targets();

  /// Writes one checkpoint per network plus manifest.txt into `dir`.
  void save(const std::string& dir) const;
  /// Restores networks and step counter saved by save(); optimizer moments restart.
  static Agent load(const std::string& dir);

 private:
  Matrix critic_input(const Matrix& obs, const Matrix& action) const;
  Matrix actor_pass(const Batch& batch, ForwardCache& actor_cache, double* loss) const;

  AgentConfig config_;
  int obs_dim_;
  int act_dim_;
  Mlp actor_, critic1_, critic2_;
  Mlp target_actor_, target_critic1_, target_critic2_;
  Adam actor_opt_, critic1_opt_, critic2_opt_;
  std::int64_t train_steps_ = 0;
};

}  // namespace camel
