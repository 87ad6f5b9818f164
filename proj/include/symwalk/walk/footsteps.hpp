#pragma once

#include <stdexcept>

#include "symwalk/walk/types.hpp"

namespace symwalk::walk {

// Where planning starts: centerline pose of the walker plus the side that
// steps next.
struct PlanSeed {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  Side next_swing = Side::Left;
};

// Computes n_steps footsteps from the stride command and the current feet
// configuration. Heading accumulates w_theta per stride; the centerline
// advances by (w_x, w_y) rotated into the new heading; feet alternate at
// +/- hip_width/2 about the centerline.
inline FootstepPlan plan_footsteps(const WalkCommand& cmd, const PlanSeed& seed,
                                   int n_steps, double hip_width = 0.10,
                                   const StrideLimits& limits = {}) {
  if (n_steps < 1)
    throw std::invalid_argument("plan_footsteps: n_steps must be >= 1");
  if (!limits.contains(cmd))
    throw std::invalid_argument("plan_footsteps: command exceeds stride limits");

  FootstepPlan plan;
  plan.steps.reserve(static_cast<std::size_t>(n_steps));

  double cx = seed.x, cy = seed.y, heading = seed.heading;
  Side swing = seed.next_swing;
  for (int i = 0; i < n_steps; ++i) {
    heading = wrap_angle(heading + cmd.w_theta);
    const double ch = std::cos(heading), sh = std::sin(heading);
    cx += ch * cmd.w_x - sh * cmd.w_y;
    cy += sh * cmd.w_x + ch * cmd.w_y;

    const double lat = (swing == Side::Left ? 1.0 : -1.0) * 0.5 * hip_width;
    Footstep step;
    step.f_x = cx - sh * lat;
    step.f_y = cy + ch * lat;
    step.f_theta = heading;
    // the placed foot becomes the next support
    step.support_side = swing;
    plan.steps.push_back(step);
    swing = other(swing);
  }
  return plan;
}

}  // namespace symwalk::walk
