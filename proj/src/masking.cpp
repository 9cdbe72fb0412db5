#include "camel/masking.hpp"

#include <algorithm>
#include <string>

namespace camel {

bool ActionBounds::contains(const Vector& action) const {
  return action.size() == lower.size() && (action.array() >= lower.array()).all() &&
         (action.array() <= upper.array()).all();
}

void EpsilonSchedule::validate() const {
  if (!(masking_fraction > 0.0 && masking_fraction <= 1.0)) {
    throw UsageError("masking fraction must lie in (0, 1]");
  }
  if (total_steps <= 0) throw UsageError("total steps must be positive");
  if (horizon() < 1.0) throw UsageError("masking fraction * total steps must be at least 1");
}

double epsilon_at(const EpsilonSchedule& schedule, std::int64_t t) {
  if (t < 0) throw UsageError("epsilon_at: negative step index");
  return std::max(1.0 - static_cast<double>(t) / schedule.horizon(), 0.0);
}

ActionBounds compute_bounds(const Vector& prior_action, double half_window, const EnvSpec& spec) {
  if (prior_action.size() != spec.act_dim) {
    throw ShapeError("compute_bounds: prior action has " + std::to_string(prior_action.size()) +
                     " entries, expected " + std::to_string(spec.act_dim));
  }
  if (!prior_action.allFinite()) throw std::invalid_argument("compute_bounds: non-finite prior action");
  if (!(half_window > 0.0)) throw UsageError("compute_bounds: half window must be positive");
  ActionBounds b;
  b.lower = (prior_action.array() - half_window).max(spec.action_low.array()).min(spec.action_high.array());
  b.upper = (prior_action.array() + half_window).max(spec.action_low.array()).min(spec.action_high.array());
  return b;
}

MaskDecision apply_epsilon_masking(const ActionBounds& bounds, double epsilon, double uniform_draw,
                                   const EnvSpec& spec) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
  if (uniform_draw < epsilon) return {true, bounds};
  return {false, ActionBounds::full(spec)};
}

Vector action_mapping(const Vector& x, const ActionBounds& bounds) {
  if (x.size() != bounds.size()) throw ShapeError("action_mapping: size mismatch");
  Vector a(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double lo = bounds.lower[i];
    const double hi = bounds.upper[i];
    const double offset = 0.5 * (hi + lo);
    if (hi - lo < kDegenerateWidth) {
      a[i] = offset;
      continue;
    }
    const double scale = 0.5 * (hi - lo);
    // the endpoints are returned verbatim; clamp absorbs rounding elsewhere
    if (x[i] <= -1.0) {
      a[i] = lo;
    } else if (x[i] >= 1.0) {
      a[i] = hi;
    } else {
      a[i] = std::clamp(x[i] * scale + offset, lo, hi);
    }
  }
  return a;
}

Vector action_mapping_jacobian(const ActionBounds& bounds) {
  const Vector width = bounds.upper - bounds.lower;
  return (width.array() < kDegenerateWidth).select(0.0, 0.5 * width);
}

Matrix action_mapping(const Matrix& x, const Matrix& lower, const Matrix& upper) {
  if (x.rows() != lower.rows() || x.cols() != lower.cols() || lower.rows() != upper.rows() ||
      lower.cols() != upper.cols()) {
    throw ShapeError("action_mapping: batch shape mismatch");
  }
  const auto width = (upper - lower).array();
  const auto offset = 0.5 * (upper + lower).array();
  Matrix a = (width < kDegenerateWidth).select(offset, x.array() * 0.5 * width + offset);
  a = a.cwiseMax(lower).cwiseMin(upper);
  a = (x.array() <= -1.0 && width >= kDegenerateWidth).select(lower, a);
  a = (x.array() >= 1.0 && width >= kDegenerateWidth).select(upper, a);
  return a;
}

Matrix action_mapping_jacobian(const Matrix& lower, const Matrix& upper) {
  const auto width = (upper - lower).array();
  return (width < kDegenerateWidth).select(0.0, 0.5 * width);
}

}  // namespace camel
