#pragma once

#include <cstdint>

#include "camel/common.hpp"
#include "camel/env.hpp"

namespace camel {

/// Per-dimension action window [lower, upper].
struct ActionBounds {
  Vector lower;
  Vector upper;

  static ActionBounds full(const EnvSpec& spec) { return {spec.action_low, spec.action_high}; }

  int size() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& action) const;
  bool operator==(const ActionBounds& o) const { return lower == o.lower && upper == o.upper; }
};

/// Windows narrower than this collapse to their midpoint.
inline constexpr double kDegenerateWidth = 1e-6;

/// Linear decay of the masking probability over the first f_m * T steps.
struct EpsilonSchedule {
  double masking_fraction = 0.2;
  std::int64_t total_steps = 1;

  void validate() const;
  /// Step index at which epsilon first reaches zero.
  double horizon() const { return masking_fraction * static_cast<double>(total_steps); }
};

/// max(1 - t / (f_m * T), 0)
double epsilon_at(const EpsilonSchedule& schedule, std::int64_t t);

struct MaskDecision {
  bool masked = false;
  ActionBounds bounds;
};

/// Window of half-width `half_window` around the prior's action, clipped to the action space.
ActionBounds compute_bounds(const Vector& prior_action, double half_window, const EnvSpec& spec);

/// Keeps `bounds` when `uniform_draw < epsilon`, otherwise falls back to the full space.
/// One draw decides the whole action vector.
MaskDecision apply_epsilon_masking(const ActionBounds& bounds, double epsilon, double uniform_draw,
                                   const EnvSpec& spec);

/// Affine map of x in [-1, 1] onto [lower, upper] (x = -1 -> lower, x = +1 -> upper).
Vector action_mapping(const Vector& x, const ActionBounds& bounds);

/// d action / d x per dimension: (upper - lower) / 2, or 0 for degenerate windows.
Vector action_mapping_jacobian(const ActionBounds& bounds);

/// Column-wise versions for minibatches; each column of the bound matrices is one window.
Matrix action_mapping(const Matrix& x, const Matrix& lower, const Matrix& upper);
Matrix action_mapping_jacobian(const Matrix& lower, const Matrix& upper);

}  // namespace camel
