#pragma once

#include <stdexcept>

#include "symwalk/walk/types.hpp"

namespace symwalk::walk {

inline double phase_duration(GaitPhase p, const PhaseDurations& pd,
                             double w_t) {
  switch (p) {
    case GaitPhase::InitSingleSupport: return pd.init_ss * w_t;
    case GaitPhase::SingleSupport: return pd.ss * w_t;
    case GaitPhase::InitDoubleSupport: return pd.init_ds * w_t;
    case GaitPhase::DoubleSupport: return pd.ds * w_t;
    case GaitPhase::Idle: return 0.0;
  }
  return 0.0;
}

// Advances the five-state gait machine by dt. Transitions fire when the
// phase timer expires; early_transition expires it immediately. A stride is
// InitSS -> SS -> InitDS -> DS; at the end of DS the machine starts the next
// stride (toggling support) if a step is pending, and returns to Idle
// otherwise. cycle_phase covers two strides per revolution: the stride with
// right support runs [0, pi), the stride with left support [pi, 2*pi).
inline GaitState step_state_machine(GaitState s, double dt, bool step_pending,
                                    bool early_transition,
                                    const WalkCommand& cmd,
                                    const PhaseDurations& pd = {}) {
  if (dt <= 0.0) throw std::invalid_argument("step_state_machine: dt <= 0");

  auto enter = [&](GaitPhase p) {
    s.phase = p;
    s.timer = phase_duration(p, pd, cmd.w_t);
    if (p == GaitPhase::InitSingleSupport)
      s.cycle_phase = (s.support_side == Side::Right) ? 0.0 : kPi;
  };

  if (early_transition) s.timer = 0.0;

  double remaining = dt;
  while (remaining > 1e-15) {
    if (s.phase == GaitPhase::Idle) {
      if (!step_pending) return s;  // absorbing without a command
      enter(GaitPhase::InitSingleSupport);
    }
    const double adv = std::min(remaining, s.timer);
    s.timer -= adv;
    s.cycle_phase = wrap_phase(s.cycle_phase + kPi * adv / cmd.w_t);
    remaining -= adv;

    if (s.timer <= 1e-12) {
      switch (s.phase) {
        case GaitPhase::InitSingleSupport:
          enter(GaitPhase::SingleSupport);
          break;
        case GaitPhase::SingleSupport:
          enter(GaitPhase::InitDoubleSupport);
          break;
        case GaitPhase::InitDoubleSupport:
          enter(GaitPhase::DoubleSupport);
          break;
        case GaitPhase::DoubleSupport:
          if (step_pending) {
            s.support_side = other(s.support_side);
            enter(GaitPhase::InitSingleSupport);
          } else {
            s.phase = GaitPhase::Idle;
            s.timer = 0.0;
          }
          break;
        case GaitPhase::Idle:
          break;
      }
    }
  }
  return s;
}

// True while the swing foot of the current stride is airborne.
inline bool in_swing(const GaitState& s) {
  return s.phase == GaitPhase::SingleSupport;
}

// Side of the foot that moves during the current stride.
inline Side swing_side(const GaitState& s) { return other(s.support_side); }

}  // namespace symwalk::walk
