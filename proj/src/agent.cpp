#include "camel/agent.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "camel/settings.hpp"

namespace camel {

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw UsageError("tau must lie in (0, 1]");
  if (policy_delay < 1) throw UsageError("policy delay must be at least 1");
  if (!(noise_clip > 0.0)) throw UsageError("noise clip must be positive");
  if (!(target_sigma >= 0.0)) throw UsageError("target sigma must be non-negative");
  if (explore_sigma < 0.0) throw UsageError("exploration sigma must be non-negative");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (buffer_capacity == 0) throw UsageError("buffer capacity must be positive");
  if (learning_starts < 0) throw UsageError("learning starts must be non-negative");
  if (!(half_window > 0.0)) throw UsageError("half window must be positive");
  if (hidden.empty()) throw UsageError("at least one hidden layer is required");
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  schedule.validate();
}

Vector actor_input(const Vector& obs, const ActionBounds& bounds, bool masking_aware) {
  if (!masking_aware) return obs;
  Vector in(obs.size() + bounds.lower.size() + bounds.upper.size());
  in << obs, bounds.lower, bounds.upper;
  return in;
}

Matrix actor_input(const Matrix& obs, const Matrix& lower, const Matrix& upper, bool masking_aware) {
  if (!masking_aware) return obs;
  Matrix in(obs.rows() + lower.rows() + upper.rows(), obs.cols());
  in << obs, lower, upper;
  return in;
}

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Agent::Agent(int obs_dim, int act_dim, AgentConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), obs_dim_(obs_dim), act_dim_(act_dim) {
  config_.validate();
  if (obs_dim <= 0 || act_dim <= 0) throw UsageError("agent dimensions must be positive");
  Rng rng{init_seed};
  const int actor_in = obs_dim + (config_.masking_aware ? 2 * act_dim : 0);
  actor_ = Mlp::create(layer_sizes(actor_in, config_.hidden, act_dim), Activation::kTanh, rng,
                       config_.actor_final_scale);
  critic1_ = Mlp::create(layer_sizes(obs_dim + act_dim, config_.hidden, 1), Activation::kIdentity, rng);
  critic2_ = Mlp::create(layer_sizes(obs_dim + act_dim, config_.hidden, 1), Activation::kIdentity, rng);
  target_actor_ = actor_;
  target_critic1_ = critic1_;
  target_critic2_ = critic2_;
  const AdamConfig adam{config_.learning_rate};
  actor_opt_ = Adam(actor_, adam);
  critic1_opt_ = Adam(critic1_, adam);
  critic2_opt_ = Adam(critic2_, adam);
}

Matrix Agent::critic_input(const Matrix& obs, const Matrix& action) const {
  Matrix in(obs.rows() + action.rows(), obs.cols());
  in << obs, action;
  return in;
}

ActionChoice Agent::select_action(const Vector& obs, const MaskDecision& decision, Rng& rng,
                                  double sigma) const {
  const ActionBounds& b = decision.bounds;
  ActionChoice c;
  c.x = actor_.forward(actor_input(obs, b, config_.masking_aware));
  c.action = action_mapping(c.x, b);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < c.action.size(); ++i) c.action[i] += noise(rng);
    c.action = c.action.cwiseMax(b.lower).cwiseMin(b.upper);
  }
  return c;
}

Vector Agent::greedy_action(const Vector& obs, const ActionBounds& bounds) const {
  return action_mapping(actor_.forward(actor_input(obs, bounds, config_.masking_aware)), bounds);
}

Vector Agent::td_target(const Batch& batch, Rng& rng) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw UsageError("td_target: empty batch");
  Matrix lower = batch.next_lower;
  Matrix upper = batch.next_upper;
  if (config_.full_target_bounds) {
    lower.colwise() = -Vector::Ones(act_dim_);
    upper.colwise() = Vector::Ones(act_dim_);
  }
  const Matrix x = target_actor_.forward(actor_input(batch.next_obs, lower, upper, config_.masking_aware));
  Matrix a = action_mapping(x, lower, upper);

  if (config_.target_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, config_.target_sigma);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < act_dim_; ++i) {
        a(i, j) += std::clamp(noise(rng), -config_.noise_clip, config_.noise_clip);
      }
    }
    a = a.cwiseMax(lower).cwiseMin(upper);
  }

  const Matrix in = critic_input(batch.next_obs, a);
  const Matrix q1 = target_critic1_.forward(in);
  const Matrix q2 = target_critic2_.forward(in);
  const Vector q_min = q1.row(0).cwiseMin(q2.row(0)).transpose();
  return batch.reward.array() + config_.gamma * (1.0 - batch.terminal.array()) * q_min.array();
}

std::pair<LayerGrads, LayerGrads> Agent::critic_gradients(const Batch& batch, const Vector& y,
                                                          CriticLosses* losses) const {
  const Eigen::Index n = batch.size();
  if (y.size() != n) throw ShapeError("critic update: target count does not match batch size");
  const Matrix in = critic_input(batch.obs, batch.action);
  auto grads_for = [&](const Mlp& critic, double* loss) {
    ForwardCache cache;
    const Matrix q = critic.forward(in, cache);
    const Matrix err = q - y.transpose();
    if (loss != nullptr) *loss = err.squaredNorm() / static_cast<double>(n);
    return critic.backward(cache, (2.0 / static_cast<double>(n)) * err);
  };
  CriticLosses l;
  auto g1 = grads_for(critic1_, &l.first);
  auto g2 = grads_for(critic2_, &l.second);
  if (losses != nullptr) *losses = l;
  return {std::move(g1), std::move(g2)};
}

CriticLosses Agent::update_critics(const Batch& batch, const Vector& y) {
  CriticLosses l;
  auto [g1, g2] = critic_gradients(batch, y, &l);
  critic1_opt_.step(critic1_, g1);
  critic2_opt_.step(critic2_, g2);
  return l;
}

Matrix Agent::actor_pass(const Batch& batch, ForwardCache& actor_cache, double* loss) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw UsageError("actor update: empty batch");
  const Matrix x = actor_.forward(
      actor_input(batch.obs, batch.lower, batch.upper, config_.masking_aware), actor_cache);
  const Matrix a = action_mapping(x, batch.lower, batch.upper);

  ForwardCache critic_cache;
  const Matrix q = critic1_.forward(critic_input(batch.obs, a), critic_cache);
  if (loss != nullptr) *loss = -q.mean();

  // chain rule: dQ/da from the critic's input gradient, times the mapping's diagonal jacobian
  Matrix in_grad;
  critic1_.backward(critic_cache, Matrix::Constant(1, n, -1.0 / static_cast<double>(n)), &in_grad);
  return in_grad.bottomRows(act_dim_).cwiseProduct(action_mapping_jacobian(batch.lower, batch.upper));
}

Matrix Agent::actor_output_gradient(const Batch& batch) const {
  ForwardCache cache;
  return actor_pass(batch, cache, nullptr);
}

LayerGrads Agent::actor_gradients(const Batch& batch, double* loss) const {
  ForwardCache cache;
  const Matrix dx = actor_pass(batch, cache, loss);
  return actor_.backward(cache, dx);
}

double Agent::update_actor(const Batch& batch) {
  double loss = 0.0;
  const LayerGrads g = actor_gradients(batch, &loss);
  actor_opt_.step(actor_, g);
  return loss;
}

void Agent::update_targets() {
  polyak_update(target_actor_, actor_, config_.tau);
  polyak_update(target_critic1_, critic1_, config_.tau);
  polyak_update(target_critic2_, critic2_, config_.tau);
}

TrainMetrics Agent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const auto needed = std::max<std::size_t>(config_.batch_size,
                                            static_cast<std::size_t>(config_.learning_starts));
  if (buffer.size() < needed) {
    throw UsageError("train_step: replay buffer holds " + std::to_string(buffer.size()) +
                     " transitions, need " + std::to_string(needed));
  }
  const Batch batch = buffer.sample(config_.batch_size, rng);
  TrainMetrics m;
  const Vector y = td_target(batch, rng);
  m.critic = update_critics(batch, y);
  ++train_steps_;
  if (train_steps_ % config_.policy_delay == 0) {
    m.actor_loss = update_actor(batch);
    update_targets();
  }
  return m;
}

void Agent::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p(dir);
  actor_.save_file((p / "actor.txt").string());
  critic1_.save_file((p / "critic1.txt").string());
  critic2_.save_file((p / "critic2.txt").string());
  target_actor_.save_file((p / "target_actor.txt").string());
  target_critic1_.save_file((p / "target_critic1.txt").string());
  target_critic2_.save_file((p / "target_critic2.txt").string());

  std::ofstream manifest(p / "manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
  manifest << "obs_dim=" << obs_dim_ << '\n';
  manifest << "act_dim=" << act_dim_ << '\n';
  manifest << "train_steps=" << train_steps_ << '\n';
  for (const auto& [k, v] : agent_settings(config_)) manifest << k << '=' << v << '\n';
}

Agent Agent::load(const std::string& dir) {
  const std::filesystem::path p(dir);
  std::ifstream manifest(p / "manifest.txt");
  if (!manifest) throw std::runtime_error("no manifest.txt in " + dir);
  auto kv = read_settings(manifest, (p / "manifest.txt").string());

  auto take_int = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("manifest lacks " + key);
    const long long v = std::stoll(it->second);
    kv.erase(it);
    return v;
  };
  const int obs_dim = static_cast<int>(take_int("obs_dim"));
  const int act_dim = static_cast<int>(take_int("act_dim"));
  const auto steps = take_int("train_steps");
  AgentConfig config;
  for (const auto& [k, v] : kv) {
    if (!apply_agent_setting(config, k, v)) throw std::runtime_error("manifest: unknown key " + k);
  }

  Agent agent(obs_dim, act_dim, config, 0);
  agent.actor_ = Mlp::load_file((p / "actor.txt").string());
  agent.critic1_ = Mlp::load_file((p / "critic1.txt").string());
  agent.critic2_ = Mlp::load_file((p / "critic2.txt").string());
  agent.target_actor_ = Mlp::load_file((p / "target_actor.txt").string());
  agent.target_critic1_ = Mlp::load_file((p / "target_critic1.txt").string());
  agent.target_critic2_ = Mlp::load_file((p / "target_critic2.txt").string());
  if (agent.actor_.input_size() != agent.target_actor_.input_size() ||
      agent.actor_.output_size() != act_dim) {
    throw std::runtime_error("checkpoint networks do not match the manifest dimensions");
  }
  agent.train_steps_ = steps;
  return agent;
}

}  // namespace camel
