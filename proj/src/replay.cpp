#include "camel/replay.hpp"

#include <string>

namespace camel {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) throw UsageError("replay buffer capacity must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  obs_.resize(obs_dim, cap);
  next_obs_.resize(obs_dim, cap);
  lower_.resize(act_dim, cap);
  upper_.resize(act_dim, cap);
  action_.resize(act_dim, cap);
  next_lower_.resize(act_dim, cap);
  next_upper_.resize(act_dim, cap);
  reward_.resize(cap);
  terminal_.resize(cap);
}

void ReplayBuffer::store(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ || t.action.size() != act_dim_ ||
      t.bounds.size() != act_dim_ || t.next_bounds.size() != act_dim_) {
    throw ShapeError("replay: transition dimensions do not match the buffer");
  }
  if (!t.bounds.contains(t.action)) {
    throw UsageError("replay: executed action lies outside its recorded bounds");
  }
  const auto j = static_cast<Eigen::Index>(cursor_);
  obs_.col(j) = t.obs;
  lower_.col(j) = t.bounds.lower;
  upper_.col(j) = t.bounds.upper;
  action_.col(j) = t.action;
  reward_[j] = t.reward;
  next_obs_.col(j) = t.next_obs;
  next_lower_.col(j) = t.next_bounds.lower;
  next_upper_.col(j) = t.next_bounds.upper;
  terminal_[j] = t.terminal ? 1.0 : 0.0;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw UsageError("replay: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return gather(idx);
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.obs.resize(obs_dim_, n);
  b.next_obs.resize(obs_dim_, n);
  b.lower.resize(act_dim_, n);
  b.upper.resize(act_dim_, n);
  b.action.resize(act_dim_, n);
  b.next_lower.resize(act_dim_, n);
  b.next_upper.resize(act_dim_, n);
  b.reward.resize(n);
  b.terminal.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::size_t slot = indices[static_cast<std::size_t>(k)];
    if (slot >= size_) throw UsageError("replay: slot " + std::to_string(slot) + " is not filled");
    const auto j = static_cast<Eigen::Index>(slot);
    b.obs.col(k) = obs_.col(j);
    b.lower.col(k) = lower_.col(j);
    b.upper.col(k) = upper_.col(j);
    b.action.col(k) = action_.col(j);
    b.reward[k] = reward_[j];
    b.next_obs.col(k) = next_obs_.col(j);
    b.next_lower.col(k) = next_lower_.col(j);
    b.next_upper.col(k) = next_upper_.col(j);
    b.terminal[k] = terminal_[j];
  }
  b.indices = indices;
  return b;
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw UsageError("replay: slot " + std::to_string(slot) + " is not filled");
  const auto j = static_cast<Eigen::Index>(slot);
  Transition t;
  t.obs = obs_.col(j);
  t.bounds = {lower_.col(j), upper_.col(j)};
  t.action = action_.col(j);
  t.reward = reward_[j];
  t.next_obs = next_obs_.col(j);
  t.next_bounds = {next_lower_.col(j), next_upper_.col(j)};
  t.terminal = terminal_[j] != 0.0;
  return t;
}

}  // namespace camel
