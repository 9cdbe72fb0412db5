#pragma once

#include <cstddef>
#include <vector>

#include "camel/common.hpp"
#include "camel/masking.hpp"

namespace camel {

/// (s, a_lb, a_ub, a, r, s') plus the window that was active for s' and an
/// MDP-termination flag. Truncation is not termination.
struct Transition {
  Vector obs;
  ActionBounds bounds;
  Vector action;
  double reward = 0.0;
  Vector next_obs;
  ActionBounds next_bounds;
  bool terminal = false;
};

/// Column-major minibatch: column j of every matrix belongs to sample j.
struct Batch {
  Matrix obs;
  Matrix lower;
  Matrix upper;
  Matrix action;
  Vector reward;
  Matrix next_obs;
  Matrix next_lower;
  Matrix next_upper;
  Vector terminal;  // 1.0 for MDP-terminal transitions
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return reward.size(); }
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  /// Overwrites the oldest entry once full. Rejects actions outside their window.
  void store(const Transition& t);

  Batch sample(std::size_t n, Rng& rng) const;
  /// Gathers the given slots; used by sample() and by tests.
  Batch gather(const std::vector<std::size_t>& indices) const;

  Transition at(std::size_t slot) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Slot the next store() writes to.
  std::size_t cursor() const { return cursor_; }

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;

  Matrix obs_, lower_, upper_, action_, next_obs_, next_lower_, next_upper_;
  Vector reward_, terminal_;
};

}  // namespace camel
