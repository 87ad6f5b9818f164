#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "symwalk/core/math.hpp"

namespace symwalk::walk {

// Stride vector driving the gait: length, width, swing height, rotation and
// duration of the next stride.
struct WalkCommand {
  double w_x = 0.0;      // stride length [m]
  double w_y = 0.0;      // stride width [m]
  double w_z = 0.04;     // swing apex height [m]
  double w_theta = 0.0;  // stride rotation [rad]
  double w_t = 0.5;      // stride duration [s]
};

struct StrideLimits {
  double max_w_x = 0.25;
  double max_w_y = 0.10;
  double max_w_z = 0.08;
  double max_w_theta = 0.5;
  double min_w_t = 0.25;
  double max_w_t = 1.2;

  WalkCommand clamp(const WalkCommand& c) const {
    WalkCommand out = c;
    out.w_x = symwalk::clamp(c.w_x, -max_w_x, max_w_x);
    out.w_y = symwalk::clamp(c.w_y, -max_w_y, max_w_y);
    out.w_z = symwalk::clamp(c.w_z, 0.0, max_w_z);
    out.w_theta = symwalk::clamp(c.w_theta, -max_w_theta, max_w_theta);
    out.w_t = symwalk::clamp(c.w_t, min_w_t, max_w_t);
    return out;
  }
  bool contains(const WalkCommand& c) const {
    return std::abs(c.w_x) <= max_w_x && std::abs(c.w_y) <= max_w_y &&
           c.w_z >= 0.0 && c.w_z <= max_w_z &&
           std::abs(c.w_theta) <= max_w_theta && c.w_t >= min_w_t &&
           c.w_t <= max_w_t;
  }
};

// Pendulum constants. omega0 is derived, never set independently.
struct LipmParams {
  double g = 9.81;
  double c_z = 0.26;
  double omega0 = std::sqrt(9.81 / 0.26);

  static LipmParams make(double g, double c_z) {
    if (g <= 0.0 || c_z <= 0.0)
      throw std::invalid_argument("LipmParams: g and c_z must be positive");
    LipmParams p;
    p.g = g;
    p.c_z = c_z;
    p.omega0 = std::sqrt(g / c_z);
    return p;
  }
};

// Truncated sum of sinusoids: f(t) = sum_{n=0..N} A_n * sin(n*beta*t + phi_n).
// The n = 0 term is a constant offset.
struct PfsOscillator {
  std::vector<double> amp;    // length N+1
  std::vector<double> phase;  // length N+1
  double beta = kTwoPi;       // angular velocity [rad/s]

  int terms() const { return static_cast<int>(amp.size()) - 1; }

  void validate() const {
    if (amp.size() != phase.size() || amp.empty())
      throw std::invalid_argument("PfsOscillator: amp/phase length mismatch");
    if (beta <= 0.0) throw std::invalid_argument("PfsOscillator: beta <= 0");
  }
};

inline double eval_pfs(const PfsOscillator& o, double t) {
  double s = 0.0;
  for (std::size_t n = 0; n < o.amp.size(); ++n)
    s += o.amp[n] * std::sin(static_cast<double>(n) * o.beta * t + o.phase[n]);
  return s;
}

inline double eval_pfs_vel(const PfsOscillator& o, double t) {
  double s = 0.0;
  for (std::size_t n = 0; n < o.amp.size(); ++n) {
    const double nb = static_cast<double>(n) * o.beta;
    s += o.amp[n] * nb * std::cos(nb * t + o.phase[n]);
  }
  return s;
}

inline double eval_pfs_acc(const PfsOscillator& o, double t) {
  double s = 0.0;
  for (std::size_t n = 0; n < o.amp.size(); ++n) {
    const double nb = static_cast<double>(n) * o.beta;
    s -= o.amp[n] * nb * nb * std::sin(nb * t + o.phase[n]);
  }
  return s;
}

// ZMP implied by a COM oscillator under the pendulum model: same frequencies
// and phases, amplitudes scaled by 1 + (n*beta/omega0)^2.
inline double zmp_from_com(const PfsOscillator& com, const LipmParams& lipm,
                           double t) {
  if (lipm.omega0 <= 0.0)
    throw std::invalid_argument("zmp_from_com: omega0 must be positive");
  double s = 0.0;
  for (std::size_t n = 0; n < com.amp.size(); ++n) {
    const double nb = static_cast<double>(n) * com.beta;
    const double ratio = nb / lipm.omega0;
    s += com.amp[n] * (1.0 + ratio * ratio) *
         std::sin(nb * t + com.phase[n]);
  }
  return s;
}

enum class Channel { X = 0, Y, Z, Theta, Arm, ComX, ComY };
constexpr int kNumChannels = 7;

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::X: return "X";
    case Channel::Y: return "Y";
    case Channel::Z: return "Z";
    case Channel::Theta: return "Theta";
    case Channel::Arm: return "Arm";
    case Channel::ComX: return "COMx";
    case Channel::ComY: return "COMy";
  }
  return "?";
}

// Fitted oscillators for every trajectory channel. All channels share beta;
// a full gait cycle spans two strides, so beta = 2*pi / (2*w_t).
struct OscillatorBank {
  std::array<PfsOscillator, kNumChannels> channels;
  LipmParams lipm;
  WalkCommand cmd;        // command the bank was fitted for
  double fit_residual_rms = 0.0;

  const PfsOscillator& at(Channel c) const {
    return channels[static_cast<int>(c)];
  }
  PfsOscillator& at(Channel c) { return channels[static_cast<int>(c)]; }
  double beta() const { return channels[0].beta; }
};

enum class Side { Left = 0, Right = 1 };
inline Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

struct Footstep {
  double f_x = 0.0;
  double f_y = 0.0;
  double f_theta = 0.0;
  Side support_side = Side::Left;
};

struct FootstepPlan {
  std::vector<Footstep> steps;
};

enum class GaitPhase {
  Idle = 0,
  InitSingleSupport,
  SingleSupport,
  InitDoubleSupport,
  DoubleSupport
};

inline const char* phase_name(GaitPhase p) {
  switch (p) {
    case GaitPhase::Idle: return "Idle";
    case GaitPhase::InitSingleSupport: return "InitSingleSupport";
    case GaitPhase::SingleSupport: return "SingleSupport";
    case GaitPhase::InitDoubleSupport: return "InitDoubleSupport";
    case GaitPhase::DoubleSupport: return "DoubleSupport";
  }
  return "?";
}

struct GaitState {
  GaitPhase phase = GaitPhase::Idle;
  double timer = 0.0;        // remaining time in phase [s]
  double cycle_phase = 0.0;  // [0, 2*pi)
  Side support_side = Side::Right;
};

// Fractions of the stride duration spent in each non-idle phase.
struct PhaseDurations {
  double init_ss = 0.15;
  double ss = 0.35;
  double init_ds = 0.15;
  double ds = 0.35;
};

struct TorsoState {
  double roll = 0.0;
  double pitch = 0.0;
  double roll_rate = 0.0;
  double pitch_rate = 0.0;
};

// PD gains plus the split of the computed correction across actuation targets.
struct StabilizerGains {
  double k_phi_roll = 6.0;    // [1/s]
  double k_phi_pitch = 6.0;
  double k_phidot_roll = 1.2;
  double k_phidot_pitch = 1.2;
  double ankle_share = 0.5;
  double hip_share = 0.3;
  double torso_share = 0.2;
  double arm_pitch_gain = 0.5;  // arm swing per pitch-error unit

  void validate() const {
    if (k_phi_roll < 0 || k_phi_pitch < 0 || k_phidot_roll < 0 ||
        k_phidot_pitch < 0 || ankle_share < 0 || hip_share < 0 ||
        torso_share < 0 || arm_pitch_gain < 0)
      throw std::invalid_argument("StabilizerGains: gains must be >= 0");
  }
};

}  // namespace symwalk::walk
