#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "symwalk/walk/fit.hpp"
#include "symwalk/walk/footsteps.hpp"
#include "symwalk/walk/state_machine.hpp"
#include "symwalk/walk/types.hpp"

namespace symwalk::walk {

// First-order lag toward the raw command; applied once per stride at the
// InitSingleSupport entry.
inline WalkCommand filter_command(const WalkCommand& raw,
                                  const WalkCommand& prev, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0)
    throw std::invalid_argument("filter_command: alpha must be in (0,1]");
  WalkCommand out;
  out.w_x = prev.w_x + alpha * (raw.w_x - prev.w_x);
  out.w_y = prev.w_y + alpha * (raw.w_y - prev.w_y);
  out.w_z = prev.w_z + alpha * (raw.w_z - prev.w_z);
  out.w_theta = prev.w_theta + alpha * (raw.w_theta - prev.w_theta);
  out.w_t = prev.w_t + alpha * (raw.w_t - prev.w_t);
  return out;
}

struct EngineConfig {
  LipmParams lipm = LipmParams::make(9.81, 0.26);
  StrideLimits limits;
  PhaseDurations durations;
  double hip_width = 0.10;
  double lag_alpha = 0.25;
  double arm_swing_gain = 0.3;
  double thigh_len = 0.16;
  double shank_len = 0.16;
  // term counts per channel, indexed by Channel
  std::array<int, kNumChannels> term_counts = {2, 2, 2, 1, 1, 3, 3};
};

namespace detail {

// Swing channels describe the left foot in the body frame over one cycle.
// Position/velocity knots pin lift-off (phase 0), apex or mid-swing (pi/2)
// and touch-down (pi); the interpolating solution is smooth everywhere else.
inline std::vector<FitConstraint> swing_xy_constraints(double stride,
                                                       double w_t) {
  const double v = stride / w_t;
  return {
      {ConstraintKind::Position, 0.0, -0.5 * stride, 10.0},
      {ConstraintKind::Velocity, 0.0, -v, 10.0},
      {ConstraintKind::Position, 0.5 * w_t, 0.0, 5.0},
      {ConstraintKind::Position, w_t, 0.5 * stride, 10.0},
      {ConstraintKind::Velocity, w_t, -v, 10.0},
  };
}

inline std::vector<FitConstraint> swing_z_constraints(double w_z, double w_t) {
  return {
      {ConstraintKind::Position, 0.0, 0.0, 10.0},
      {ConstraintKind::Velocity, 0.0, 0.0, 10.0},
      {ConstraintKind::Position, 0.5 * w_t, w_z, 20.0},
      {ConstraintKind::Position, w_t, 0.0, 10.0},
      {ConstraintKind::Velocity, w_t, 0.0, 10.0},
  };
}

inline std::vector<FitConstraint> ramp_constraints(double amplitude,
                                                   double w_t,
                                                   double sign = 1.0) {
  return {
      {ConstraintKind::Position, 0.0, -sign * 0.5 * amplitude, 10.0},
      {ConstraintKind::Position, w_t, sign * 0.5 * amplitude, 10.0},
      {ConstraintKind::Position, 1.5 * w_t, 0.0, 10.0},
  };
}

}  // namespace detail

inline double derive_hip_width(const FootstepPlan& plan,
                               const WalkCommand& cmd) {
  double acc = 0.0;
  int count = 0;
  for (std::size_t i = 0; i + 1 < plan.steps.size(); ++i) {
    const auto& a = plan.steps[i];
    const auto& b = plan.steps[i + 1];
    const double ch = std::cos(b.f_theta), sh = std::sin(b.f_theta);
    const double perp = -sh * (b.f_x - a.f_x) + ch * (b.f_y - a.f_y);
    const double lat_sign = (b.support_side == Side::Left) ? 1.0 : -1.0;
    acc += lat_sign * (perp - cmd.w_y);
    ++count;
  }
  if (count == 0) return 0.10;
  return std::abs(acc / count);
}

// Fits the whole oscillator bank for one filtered command. Foot channels are
// interpolated from lift-off / apex / touch-down knots; the COM channels are
// constrained through the ZMP equation so that the implied ZMP tracks the
// support foot at mid-stride and the support midpoint at stride boundaries.
inline OscillatorBank fit_oscillators(
    const FootstepPlan& plan, const WalkCommand& cmd, const LipmParams& lipm,
    const std::array<int, kNumChannels>& term_counts,
    double arm_swing_gain = 0.3, const FitOptions& opt = {}) {
  if (plan.steps.size() < 2)
    throw std::invalid_argument("fit_oscillators: plan needs >= 2 steps");
  for (int i = 0; i < kNumChannels; ++i) {
    const int min_terms = (static_cast<Channel>(i) == Channel::Z) ? 2 : 1;
    if (term_counts[i] < min_terms)
      throw std::invalid_argument("fit_oscillators: too few terms for channel");
  }
  if (cmd.w_t <= 0.0)
    throw std::invalid_argument("fit_oscillators: w_t must be positive");

  const double hip_width = derive_hip_width(plan, cmd);
  const double w_t = cmd.w_t;
  const double beta = kPi / w_t;  // full cycle spans two strides

  OscillatorBank bank;
  bank.lipm = lipm;
  bank.cmd = cmd;

  double sq_sum = 0.0;
  int n_cons = 0;
  auto fit_into = [&](Channel ch, const std::vector<FitConstraint>& cons) {
    FitResult res = fit_pfs(cons, term_counts[static_cast<int>(ch)], beta,
                            lipm, opt);
    bank.at(ch) = res.osc;
    sq_sum += res.residual_rms * res.residual_rms * cons.size();
    n_cons += static_cast<int>(cons.size());
  };

  fit_into(Channel::X, detail::swing_xy_constraints(cmd.w_x, w_t));
  fit_into(Channel::Y, detail::swing_xy_constraints(cmd.w_y, w_t));
  fit_into(Channel::Z, detail::swing_z_constraints(cmd.w_z, w_t));
  fit_into(Channel::Theta, detail::ramp_constraints(cmd.w_theta, w_t));
  fit_into(Channel::Arm,
           detail::ramp_constraints(arm_swing_gain * cmd.w_x, w_t, -1.0));

  // Support-foot body-frame positions implied by the fitted swing channels.
  // Both feet share the oscillators at a half-period shift; only the hip
  // offset flips side.
  auto support_x = [&](double phase) {
    const double t = phase / beta;
    if (phase < kPi)  // right foot supports while the left swings
      return eval_pfs(bank.at(Channel::X), t + w_t);
    return eval_pfs(bank.at(Channel::X), t);
  };
  auto support_y = [&](double phase) {
    const double t = phase / beta;
    if (phase < kPi)
      return -0.5 * hip_width + eval_pfs(bank.at(Channel::Y), t + w_t);
    return 0.5 * hip_width + eval_pfs(bank.at(Channel::Y), t);
  };
  auto feet_mid = [&](double phase, bool y_axis) {
    const double t = phase / beta;
    const double left_x = eval_pfs(bank.at(Channel::X), t);
    const double right_x = eval_pfs(bank.at(Channel::X), t + w_t);
    const double left_y = 0.5 * hip_width + eval_pfs(bank.at(Channel::Y), t);
    const double right_y =
        -0.5 * hip_width + eval_pfs(bank.at(Channel::Y), t + w_t);
    return y_axis ? 0.5 * (left_y + right_y) : 0.5 * (left_x + right_x);
  };

  const std::array<double, 6> support_phases = {0.25 * kPi, 0.5 * kPi,
                                                0.75 * kPi, 1.25 * kPi,
                                                1.5 * kPi,  1.75 * kPi};
  std::vector<FitConstraint> com_x_cons, com_y_cons;
  for (double ph : {0.0, kPi}) {
    com_x_cons.push_back({ConstraintKind::Zmp, ph / beta, feet_mid(ph, false), 5.0});
    com_y_cons.push_back({ConstraintKind::Zmp, ph / beta, feet_mid(ph, true), 5.0});
  }
  for (double ph : support_phases) {
    com_x_cons.push_back({ConstraintKind::Zmp, ph / beta, support_x(ph), 10.0});
    com_y_cons.push_back({ConstraintKind::Zmp, ph / beta, support_y(ph), 10.0});
  }
  fit_into(Channel::ComX, com_x_cons);
  fit_into(Channel::ComY, com_y_cons);

  bank.fit_residual_rms = std::sqrt(sq_sum / n_cons);
  return bank;
}

struct FootTarget {
  double x = 0.0, y = 0.0, z = 0.0, theta = 0.0;
};

// Body-frame reference targets for both feet, the arm and the COM offset.
// Both feet evaluate the same oscillators half a period apart; the hip
// offset flips side. For a sagittal command this makes the right foot the
// exact lateral mirror of the left half a period earlier.
struct ReferenceTargets {
  FootTarget left, right;
  double arm_left = 0.0, arm_right = 0.0;
  double com_x = 0.0, com_y = 0.0;
};

inline ReferenceTargets reference_targets(const OscillatorBank& bank,
                                          const GaitState& state, double t,
                                          double hip_width) {
  ReferenceTargets out;
  if (state.phase == GaitPhase::Idle) {
    out.left.y = 0.5 * hip_width;
    out.right.y = -0.5 * hip_width;
    return out;
  }
  const double half_period = kPi / bank.beta();
  const double tl = t;
  const double tr = t + half_period;

  out.left.x = eval_pfs(bank.at(Channel::X), tl);
  out.left.y = 0.5 * hip_width + eval_pfs(bank.at(Channel::Y), tl);
  out.left.z = eval_pfs(bank.at(Channel::Z), tl);
  out.left.theta = eval_pfs(bank.at(Channel::Theta), tl);

  out.right.x = eval_pfs(bank.at(Channel::X), tr);
  out.right.y = -0.5 * hip_width + eval_pfs(bank.at(Channel::Y), tr);
  out.right.z = eval_pfs(bank.at(Channel::Z), tr);
  out.right.theta = eval_pfs(bank.at(Channel::Theta), tr);

  out.arm_left = eval_pfs(bank.at(Channel::Arm), tl);
  out.arm_right = eval_pfs(bank.at(Channel::Arm), tr);
  out.com_x = eval_pfs(bank.at(Channel::ComX), tl);
  out.com_y = eval_pfs(bank.at(Channel::ComY), tl);
  return out;
}

struct LegAngles {
  double hip_pitch = 0.0;
  double knee = 0.0;  // bend angle; 0 at full extension
};

struct IkUnreachable : std::runtime_error {
  LegAngles clamped;
  IkUnreachable(const std::string& msg, LegAngles c)
      : std::runtime_error(msg), clamped(c) {}
};

// Forward kinematics of the planar 2-link leg; x forward, z up, hip at the
// origin. Targets below the hip have negative z.
inline std::pair<double, double> leg_fk(const LegAngles& q, double thigh,
                                        double shank) {
  const double x = thigh * std::sin(q.hip_pitch) +
                   shank * std::sin(q.hip_pitch - q.knee);
  const double z_down = thigh * std::cos(q.hip_pitch) +
                        shank * std::cos(q.hip_pitch - q.knee);
  return {x, -z_down};
}

namespace detail {
inline LegAngles ik_at_distance(double x, double z_down, double d,
                                double thigh, double shank) {
  const double cos_inner =
      clamp((thigh * thigh + shank * shank - d * d) / (2.0 * thigh * shank),
            -1.0, 1.0);
  LegAngles q;
  q.knee = kPi - std::acos(cos_inner);
  const double cos_beta =
      clamp((thigh * thigh + d * d - shank * shank) / (2.0 * thigh * d), -1.0,
            1.0);
  q.hip_pitch = std::atan2(x, z_down) + std::acos(cos_beta);
  return q;
}
}  // namespace detail

// Closed-form planar 2-link inverse kinematics with the knee bending
// forward. Unreachable targets raise IkUnreachable carrying the solution at
// the nearest reachable distance.
inline LegAngles leg_ik(double x, double z, double thigh, double shank) {
  if (thigh <= 0.0 || shank <= 0.0)
    throw std::invalid_argument("leg_ik: link lengths must be positive");
  const double z_down = -z;
  const double d = std::hypot(x, z_down);
  const double d_min = std::abs(thigh - shank);
  const double d_max = thigh + shank;
  if (d < d_min - 1e-12 || d > d_max + 1e-12) {
    const double d_clamped = clamp(d, d_min, d_max);
    LegAngles clamped =
        detail::ik_at_distance(x, z_down, d_clamped, thigh, shank);
    throw IkUnreachable("leg_ik: target outside reachable annulus", clamped);
  }
  return detail::ik_at_distance(x, z_down, clamp(d, d_min, d_max), thigh,
                                shank);
}

// Events produced by one engine tick. The swing trajectory spans the whole
// stride, so the landing event coincides with the stride boundary.
struct TickEvents {
  bool stride_started = false;   // entered InitSingleSupport
  bool touchdown = false;        // last stride's swing foot landed
  Side touchdown_side = Side::Left;
};

// Open-loop reference generator: filters stride commands per stride, refits
// the oscillator bank, runs the gait machine and integrates the body frame.
class WalkEngine {
 public:
  explicit WalkEngine(const EngineConfig& cfg = {})
      : cfg_(cfg), pending_c_z_(cfg.lipm.c_z) {
    filtered_ = WalkCommand{};
    filtered_.w_x = 0.0;
    filtered_.w_y = 0.0;
    filtered_.w_theta = 0.0;
    refit();
  }

  void set_command(const WalkCommand& raw) {
    pending_ = cfg_.limits.clamp(raw);
    has_pending_ = true;
  }

  // New COM height takes effect at the next stride boundary, alongside the
  // command filter.
  void set_com_height(double c_z) { pending_c_z_ = clamp(c_z, 0.05, 1.0); }

  TickEvents tick(double dt, bool step_pending, bool early_transition = false) {
    TickEvents ev;
    const GaitPhase before = gait_.phase;
    GaitState next = step_state_machine(gait_, dt, step_pending && has_pending_,
                                        early_transition, filtered_,
                                        cfg_.durations);
    // a stride boundary inside this tick applies the pending command
    const bool entered_init_ss =
        next.phase == GaitPhase::InitSingleSupport &&
        (before != GaitPhase::InitSingleSupport ||
         next.support_side != gait_.support_side);
    if (entered_init_ss && before != GaitPhase::Idle) {
      // the foot that swung last stride is the new support
      ev.touchdown = true;
      ev.touchdown_side = next.support_side;
    }
    if (entered_init_ss) {
      ev.stride_started = true;
      filtered_ = filter_command(pending_, filtered_, cfg_.lag_alpha);
      cfg_.lipm = LipmParams::make(cfg_.lipm.g, pending_c_z_);
      refit();
      next.timer = phase_duration(GaitPhase::InitSingleSupport, cfg_.durations,
                                  filtered_.w_t);
    }
    if (next.phase != GaitPhase::Idle) {
      heading_ = wrap_angle(heading_ + filtered_.w_theta * dt / filtered_.w_t);
      const double vx = filtered_.w_x / filtered_.w_t;
      const double vy = filtered_.w_y / filtered_.w_t;
      x_ += (std::cos(heading_) * vx - std::sin(heading_) * vy) * dt;
      y_ += (std::sin(heading_) * vx + std::cos(heading_) * vy) * dt;
    }
    gait_ = next;
    return ev;
  }

  ReferenceTargets targets() const {
    return reference_targets(bank_, gait_, oscillator_time(), cfg_.hip_width);
  }

  double oscillator_time() const { return gait_.cycle_phase / bank_.beta(); }

  const WalkCommand& filtered_command() const { return filtered_; }
  const GaitState& gait() const { return gait_; }
  const OscillatorBank& bank() const { return bank_; }
  const EngineConfig& config() const { return cfg_; }
  double heading() const { return heading_; }
  double body_x() const { return x_; }
  double body_y() const { return y_; }

  void reset_pose(double x, double y, double heading) {
    x_ = x;
    y_ = y;
    heading_ = heading;
    gait_ = GaitState{};
    has_pending_ = false;
  }

  // Complete mutable state; the oscillator bank is derived and refitted on
  // restore.
  struct State {
    WalkCommand filtered, pending;
    bool has_pending = false;
    GaitState gait;
    double x = 0.0, y = 0.0, heading = 0.0;
    double c_z = 0.26;          // applied at the last refit
    double pending_c_z = 0.26;  // applied at the next stride boundary
  };

  State state() const {
    State s;
    s.filtered = filtered_;
    s.pending = pending_;
    s.has_pending = has_pending_;
    s.gait = gait_;
    s.x = x_;
    s.y = y_;
    s.heading = heading_;
    s.c_z = cfg_.lipm.c_z;
    s.pending_c_z = pending_c_z_;
    return s;
  }

  void set_state(const State& s) {
    filtered_ = s.filtered;
    pending_ = s.pending;
    has_pending_ = s.has_pending;
    gait_ = s.gait;
    x_ = s.x;
    y_ = s.y;
    heading_ = s.heading;
    cfg_.lipm = LipmParams::make(cfg_.lipm.g, s.c_z);
    pending_c_z_ = s.pending_c_z;
    refit();
  }

 private:
  void refit() {
    PlanSeed seed;
    seed.next_swing = swing_side(gait_);
    FootstepPlan plan =
        plan_footsteps(filtered_, seed, 2, cfg_.hip_width, cfg_.limits);
    bank_ = fit_oscillators(plan, filtered_, cfg_.lipm, cfg_.term_counts,
                            cfg_.arm_swing_gain);
  }

  EngineConfig cfg_;
  WalkCommand filtered_{}, pending_{};
  bool has_pending_ = false;
  GaitState gait_{};
  OscillatorBank bank_{};
  double x_ = 0.0, y_ = 0.0, heading_ = 0.0;
  double pending_c_z_ = 0.26;
};

// Long-format trajectory export: one row per (t, channel) sample.
inline void export_trajectory(WalkEngine& engine, const WalkCommand& cmd,
                              double seconds, double rate, std::ostream& os) {
  os << "t,channel,value\n";
  engine.set_command(cmd);
  const double dt = 1.0 / rate;
  char buf[160];
  for (double t = 0.0; t <= seconds + 1e-12; t += dt) {
    const ReferenceTargets ref = engine.targets();
    const auto& bank = engine.bank();
    const double ot = engine.oscillator_time();
    const std::pair<const char*, double> rows[] = {
        {"footL_x", ref.left.x},       {"footL_y", ref.left.y},
        {"footL_z", ref.left.z},       {"footL_theta", ref.left.theta},
        {"footR_x", ref.right.x},      {"footR_y", ref.right.y},
        {"footR_z", ref.right.z},      {"footR_theta", ref.right.theta},
        {"arm_x", ref.arm_left},       {"com_x", ref.com_x},
        {"com_y", ref.com_y},
        {"zmp_x", zmp_from_com(bank.at(Channel::ComX), bank.lipm, ot)},
        {"zmp_y", zmp_from_com(bank.at(Channel::ComY), bank.lipm, ot)},
        {"body_x", engine.body_x()},   {"body_y", engine.body_y()},
        {"heading", engine.heading()},
    };
    for (const auto& [name, value] : rows) {
      std::snprintf(buf, sizeof(buf), "%.6f,%s,%.9f\n", t, name, value);
      os << buf;
    }
    engine.tick(dt, true);
  }
}

}  // namespace symwalk::walk
