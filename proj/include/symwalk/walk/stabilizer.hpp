#pragma once

#include "symwalk/walk/types.hpp"

namespace symwalk::walk {

// Additive target offsets produced by the torso PD law, split across the
// actuation targets.
struct StabilizerCorrection {
  double torso_roll = 0.0, torso_pitch = 0.0;
  double ankle_roll = 0.0, ankle_pitch = 0.0;
  double hip_roll = 0.0, hip_pitch = 0.0;
  double arm_x = 0.0;
  double total_roll = 0.0, total_pitch = 0.0;
};

// offset = -K_phi*(Phi - Phi_d) - K_phidot*(Phidot - Phidot_d), per axis,
// distributed over ankle/hip/torso with the configured shares.
inline StabilizerCorrection stabilizer_correction(const TorsoState& torso,
                                                  const TorsoState& desired,
                                                  const StabilizerGains& gains) {
  gains.validate();
  const double roll_off = -gains.k_phi_roll * (torso.roll - desired.roll) -
                          gains.k_phidot_roll * (torso.roll_rate - desired.roll_rate);
  const double pitch_off = -gains.k_phi_pitch * (torso.pitch - desired.pitch) -
                           gains.k_phidot_pitch * (torso.pitch_rate - desired.pitch_rate);

  StabilizerCorrection c;
  c.total_roll = roll_off;
  c.total_pitch = pitch_off;
  c.ankle_roll = gains.ankle_share * roll_off;
  c.ankle_pitch = gains.ankle_share * pitch_off;
  c.hip_roll = gains.hip_share * roll_off;
  c.hip_pitch = gains.hip_share * pitch_off;
  c.torso_roll = gains.torso_share * roll_off;
  c.torso_pitch = gains.torso_share * pitch_off;
  c.arm_x = gains.arm_pitch_gain * pitch_off;
  return c;
}

}  // namespace symwalk::walk
