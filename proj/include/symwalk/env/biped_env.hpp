#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "symwalk/core/math.hpp"
#include "symwalk/core/rng.hpp"
#include "symwalk/mdp/mirror.hpp"
#include "symwalk/walk/engine.hpp"
#include "symwalk/walk/stabilizer.hpp"

namespace symwalk::env {

enum class Terrain { Flat, Uneven };

struct ScenarioConfig {
  Terrain terrain = Terrain::Flat;
  double terrain_amplitude = 0.02;  // per-footfall height offset bound [m]
  bool push_enabled = false;
  double push_magnitude = 300.0;  // N
  double push_period = 4.0;       // s
  double push_duration = 0.025;   // s
  double mass = 30.0;             // kg, for impulse conversion
  double noise_amplitude = 0.0;   // relative observation noise, in [0,1)
  double episode_cap = 40.0;      // s
  double conquer_radius = 0.15;   // m
  double conquer_time = 1.5;      // s
  double objective_range = 2.0;   // m

  void validate() const {
    if (terrain_amplitude < 0.0 || noise_amplitude < 0.0 ||
        noise_amplitude >= 1.0)
      throw std::invalid_argument("ScenarioConfig: bad amplitude");
    if (push_enabled && push_period <= push_duration)
      throw std::invalid_argument("ScenarioConfig: push period must exceed duration");
    if (episode_cap <= 0.0 || conquer_radius < 0.0 || conquer_time < 0.0 ||
        objective_range < 0.0 || mass <= 0.0)
      throw std::invalid_argument("ScenarioConfig: bad scalar field");
  }
};

// Walk-parameter deltas plus per-foot Cartesian residuals, in physical
// units. Policies act in normalized [-1,1] coordinates; scaling and
// clamping happen in from_normalized.
struct ResidualAction {
  double d_wx = 0.0, d_wy = 0.0, d_wtheta = 0.0;
  double d_comz = 0.0, d_wt = 0.0;
  double d_gain_p = 0.0, d_gain_d = 0.0;  // fractional PD-gain deltas
  std::array<double, 3> foot_left{0, 0, 0};
  std::array<double, 3> foot_right{0, 0, 0};

  static constexpr int kDim = 13;
  static constexpr std::array<double, kDim> kBounds = {
      0.10, 0.05, 0.25, 0.03, 0.15, 0.5, 0.5,
      0.03, 0.03, 0.03, 0.03, 0.03, 0.03};

  static ResidualAction from_normalized(const Vec& a) {
    if (a.size() != kDim)
      throw std::invalid_argument("ResidualAction: wrong action dimension");
    auto sc = [&](int i) { return clamp(a(i), -1.0, 1.0) * kBounds[i]; };
    ResidualAction r;
    r.d_wx = sc(0);
    r.d_wy = sc(1);
    r.d_wtheta = sc(2);
    r.d_comz = sc(3);
    r.d_wt = sc(4);
    r.d_gain_p = sc(5);
    r.d_gain_d = sc(6);
    for (int i = 0; i < 3; ++i) {
      r.foot_left[i] = sc(7 + i);
      r.foot_right[i] = sc(10 + i);
    }
    return r;
  }
};

constexpr int kObsDim = 24;
constexpr int kActDim = ResidualAction::kDim;

// Canonical sagittal-mirror tables for this observation/action layout. The
// gait phase is encoded as (sin, cos), so the half-cycle shift of the mirror
// is a sign flip on both components.
inline mdp::MirrorTransform canonical_mirror() {
  mdp::MirrorTransform tr;
  tr.state.src = {0, 1, 2, 3, 4, 5, 6, 7,
                  12, 13, 14, 15,  // right foot block -> left slots
                  8, 9, 10, 11,    // left foot block -> right slots
                  16, 17, 18, 19, 20, 21, 22, 23};
  tr.state.sign = {-1, -1, -1, 1, -1, 1, 1, -1,
                   1, -1, 1, -1,
                   1, -1, 1, -1,
                   1, -1, 1, -1, 1, 1, -1, -1};
  tr.action.src = {0, 1, 2, 3, 4, 5, 6, 10, 11, 12, 7, 8, 9};
  tr.action.sign = {1, -1, -1, 1, 1, 1, 1, 1, -1, 1, 1, -1, 1};
  tr.validate();
  return tr;
}

inline Vec mirror_state(const Vec& s) {
  static const mdp::MirrorTransform tr = canonical_mirror();
  return mdp::mirror_state(tr, s);
}

inline Vec mirror_action(const Vec& s, const Vec& a) {
  static const mdp::MirrorTransform tr = canonical_mirror();
  return mdp::mirror_action(tr, s, a);
}

// R_t = k1 (d_{t-1} - d_t) + k2 (alpha_{t-1} - alpha_t); d in meters, alpha
// in radians.
constexpr double kRewardK1 = 2.0;
constexpr double kRewardK2 = 3.5;

inline double compute_reward(double d_prev, double alpha_prev, double d_cur,
                             double alpha_cur) {
  return kRewardK1 * (d_prev - d_cur) + kRewardK2 * (alpha_prev - alpha_cur);
}

// Componentwise obs_i *= U(1 - amplitude, 1 + amplitude), independent per
// component per step.
inline Vec add_observation_noise(const Vec& obs, double amplitude, Rng& rng) {
  if (amplitude < 0.0 || amplitude >= 1.0)
    throw std::invalid_argument("add_observation_noise: amplitude outside [0,1)");
  if (amplitude == 0.0) return obs;
  Vec out(obs.size());
  for (int i = 0; i < obs.size(); ++i)
    out(i) = obs(i) * rng.uniform(1.0 - amplitude, 1.0 + amplitude);
  return out;
}

struct FootPose {
  double x = 0.0, y = 0.0, z = 0.0, theta = 0.0;
};

// Everything mutable about one episode; restorable and mirrorable, which is
// how the environment's mirror-equivariance is tested.
struct EnvState {
  walk::WalkEngine::State engine;
  walk::TorsoState torso;
  double drift_x = 0.0, drift_y = 0.0;      // push-induced COM displacement
  double drift_vx = 0.0, drift_vy = 0.0;
  FootPose anchor_left, anchor_right;        // world support anchors
  double terrain_left = 0.0, terrain_right = 0.0;
  double obj_x = 0.0, obj_y = 0.0, obj_theta = 0.0;
  double prev_d = 0.0, prev_alpha = 0.0;
  double conquer_dwell = 0.0;
  double time = 0.0;
  bool done = false;
  bool fell = false;
  Vec residual_filter = Vec::Zero(kActDim);  // low-passed normalized action
  double push_dir = 0.0;                     // active push direction [rad]
  double prev_com_x = 0.0, prev_com_y = 0.0;
};

struct StepInfo {
  double distance = 0.0;
  double angular_distance = 0.0;
  bool conquered = false;
  bool fell = false;
  bool timeout = false;
  walk::WalkCommand applied_command;
};

struct StepResult {
  Vec obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EnvParams {
  walk::EngineConfig engine;
  walk::StabilizerGains gains;
  double control_dt = 0.02;          // 50 Hz
  double residual_lp = 0.2;          // residual low-pass coefficient per step
  double tilt_authority = 25.0;      // correction-to-angular-accel gain [1/s^2]
  double tilt_sat = 6.0;             // restoring acceleration cap [rad/s^2]
  double drift_recovery = 3.0;       // base drift decay rate [1/s]
  double terrain_tilt_gain = 25.0;   // tilt-rate impulse per landing offset
  double fall_tilt = 0.6;            // hard tilt limit [rad]
  double zmp_margin_x = 0.08;        // support half-length + margin [m]
  double zmp_margin_y = 0.06;        // support half-width + margin [m]
  // nominal steering law
  double steer_kx = 0.7, steer_ky = 0.7, steer_ktheta = 0.6;
  double steer_caps = 0.6;           // fraction of stride limits for nominal
  double steer_blend_dist = 0.5;     // bearing->heading blend distance [m]
  double steer_slow_dist = 0.3;      // walk-in-place radius [m]
};

class BipedEnv {
 public:
  BipedEnv(const ScenarioConfig& scenario, const EnvParams& params = {})
      : scenario_(scenario), params_(params), engine_(params.engine) {
    scenario_.validate();
  }

  const ScenarioConfig& scenario() const { return scenario_; }
  const EnvParams& params() const { return params_; }

  Vec reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    engine_ = walk::WalkEngine(params_.engine);
    state_ = EnvState{};
    state_.anchor_left = {0.0, 0.5 * params_.engine.hip_width, 0.0, 0.0};
    state_.anchor_right = {0.0, -0.5 * params_.engine.hip_width, 0.0, 0.0};
    generate_objective();
    const auto [d, alpha] = objective_distance();
    state_.prev_d = d;
    state_.prev_alpha = alpha;
    return observe_noisy();
  }

  // Places a new objective uniformly within objective_range of the robot,
  // with a uniform heading; the distribution is mirror-invariant.
  void generate_objective() {
    const double ang = rng_.uniform(-kPi, kPi);
    const double r = scenario_.objective_range * std::sqrt(rng_.uniform(0.0, 1.0));
    const auto [cx, cy] = com_world();
    state_.obj_x = cx + r * std::cos(ang);
    state_.obj_y = cy + r * std::sin(ang);
    state_.obj_theta = rng_.uniform(-kPi, kPi);
  }

  StepResult step(const Vec& action, double dt = -1.0) {
    if (state_.done)
      throw std::runtime_error("BipedEnv::step: episode already finished");
    if (dt <= 0.0) dt = params_.control_dt;
    if (!action.allFinite())
      throw std::invalid_argument("BipedEnv::step: non-finite action");

    // residual low-pass in normalized coordinates
    for (int i = 0; i < kActDim; ++i) {
      const double a = clamp(action(i), -1.0, 1.0);
      state_.residual_filter(i) += params_.residual_lp * (a - state_.residual_filter(i));
    }
    const ResidualAction res = ResidualAction::from_normalized(state_.residual_filter);

    // steering nominal plus residual deltas, clamped to stride limits
    walk::WalkCommand cmd = nominal_command();
    cmd.w_x += res.d_wx;
    cmd.w_y += res.d_wy;
    cmd.w_theta += res.d_wtheta;
    cmd.w_t += res.d_wt;
    cmd = params_.engine.limits.clamp(cmd);
    engine_.set_command(cmd);
    engine_.set_com_height(params_.engine.lipm.c_z + res.d_comz);

    const auto [pcx, pcy] = com_world();
    state_.prev_com_x = pcx;
    state_.prev_com_y = pcy;

    const walk::TickEvents ev = engine_.tick(dt, true, false);
    if (ev.touchdown) handle_touchdown(ev.touchdown_side, res);

    apply_push(dt);
    advance_tilt(dt, res);

    state_.time += dt;

    // falls: hard tilt limit or the ZMP-proxy leaving the expanded support
    const double cz = engine_.state().c_z;
    const double zmp_off_y = cz * std::tan(state_.torso.roll);
    const double zmp_off_x = cz * std::tan(state_.torso.pitch);
    if (std::abs(state_.torso.roll) > params_.fall_tilt ||
        std::abs(state_.torso.pitch) > params_.fall_tilt ||
        std::abs(zmp_off_y) > params_.zmp_margin_y ||
        std::abs(zmp_off_x) > params_.zmp_margin_x) {
      state_.fell = true;
      state_.done = true;
    }
    const bool timeout = state_.time >= scenario_.episode_cap;
    if (timeout) state_.done = true;

    StepResult out;
    const auto [d, alpha] = objective_distance();
    out.reward = compute_reward(state_.prev_d, state_.prev_alpha, d, alpha);
    state_.prev_d = d;
    state_.prev_alpha = alpha;

    out.info.distance = d;
    out.info.angular_distance = alpha;
    out.info.fell = state_.fell;
    out.info.timeout = timeout && !state_.fell;
    out.info.applied_command = engine_.filtered_command();

    // conquer protocol: dwell continuously inside the radius
    if (d <= scenario_.conquer_radius) {
      state_.conquer_dwell += dt;
      if (state_.conquer_dwell >= scenario_.conquer_time && !state_.done) {
        out.info.conquered = true;
        generate_objective();
        state_.conquer_dwell = 0.0;
        const auto [nd, nalpha] = objective_distance();
        state_.prev_d = nd;
        state_.prev_alpha = nalpha;
      }
    } else {
      state_.conquer_dwell = 0.0;
    }

    out.done = state_.done;
    out.obs = observe_noisy();
    return out;
  }

  // Noiseless observation of the current state.
  Vec observe() const {
    Vec obs(kObsDim);
    const auto& gait = engine_.gait();
    obs(0) = std::sin(gait.cycle_phase);
    obs(1) = std::cos(gait.cycle_phase);
    obs(2) = state_.torso.roll;
    obs(3) = state_.torso.pitch;
    obs(4) = state_.torso.roll_rate;
    obs(5) = state_.torso.pitch_rate;

    const auto [cx, cy] = com_world();
    const double h = engine_.heading();
    const double wx = (cx - state_.prev_com_x) / params_.control_dt;
    const double wy = (cy - state_.prev_com_y) / params_.control_dt;
    obs(6) = std::cos(h) * wx + std::sin(h) * wy;
    obs(7) = -std::sin(h) * wx + std::cos(h) * wy;

    const auto [left, right] = feet_world();
    write_foot_obs(obs, 8, left, cx, cy, h);
    write_foot_obs(obs, 12, right, cx, cy, h);

    const auto& cmd = engine_.filtered_command();
    obs(16) = cmd.w_x;
    obs(17) = cmd.w_y;
    obs(18) = cmd.w_z;
    obs(19) = cmd.w_theta;
    obs(20) = cmd.w_t;

    const auto [qx, qy, qtheta] = objective_in_robot_frame();
    obs(21) = qx;
    obs(22) = qy;
    obs(23) = qtheta;
    return obs;
  }

  // World poses of both feet: support feet sit on their anchors, the swing
  // foot follows the oscillator references plus the foot residuals.
  std::pair<FootPose, FootPose> feet_world() const {
    const walk::ReferenceTargets ref = engine_.targets();
    const ResidualAction res =
        ResidualAction::from_normalized(state_.residual_filter);
    const auto& gait = engine_.gait();
    FootPose left = state_.anchor_left;
    FootPose right = state_.anchor_right;
    if (gait.phase != walk::GaitPhase::Idle) {
      const bool left_swings = walk::swing_side(gait) == walk::Side::Left;
      if (left_swings) {
        left = compose_world(ref.left, res.foot_left);
        left.z = std::max(left.z, state_.terrain_left);
      } else {
        right = compose_world(ref.right, res.foot_right);
        right.z = std::max(right.z, state_.terrain_right);
      }
    }
    return {left, right};
  }

  std::pair<double, double> com_world() const {
    const walk::ReferenceTargets ref = engine_.targets();
    const double h = engine_.heading();
    const double cz = engine_.state().c_z;
    const double lean_x = cz * std::tan(state_.torso.pitch);
    const double lean_y = cz * std::tan(state_.torso.roll);
    const double bx = ref.com_x + lean_x;
    const double by = ref.com_y + lean_y;
    return {engine_.body_x() + std::cos(h) * bx - std::sin(h) * by + state_.drift_x,
            engine_.body_y() + std::sin(h) * bx + std::cos(h) * by + state_.drift_y};
  }

  std::tuple<double, double, double> objective_in_robot_frame() const {
    const auto [cx, cy] = com_world();
    const double h = engine_.heading();
    const double dx = state_.obj_x - cx;
    const double dy = state_.obj_y - cy;
    return {std::cos(h) * dx + std::sin(h) * dy,
            -std::sin(h) * dx + std::cos(h) * dy,
            wrap_angle(state_.obj_theta - h)};
  }

  std::pair<double, double> objective_distance() const {
    const auto [qx, qy, qtheta] = objective_in_robot_frame();
    return {std::hypot(qx, qy), std::abs(qtheta)};
  }

  bool check_conquer() const {
    return state_.conquer_dwell >= scenario_.conquer_time;
  }

  const EnvState& state() const { return state_; }
  EnvState full_state() const {
    EnvState s = state_;
    s.engine = engine_.state();
    return s;
  }
  void set_full_state(const EnvState& s) {
    state_ = s;
    engine_.set_state(s.engine);
  }
  Rng& rng() { return rng_; }
  const walk::WalkEngine& engine() const { return engine_; }
  double time() const { return state_.time; }
  bool done() const { return state_.done; }

 private:
  static void write_foot_obs(Vec& obs, int base, const FootPose& foot,
                             double cx, double cy, double h) {
    const double dx = foot.x - cx;
    const double dy = foot.y - cy;
    obs(base + 0) = std::cos(h) * dx + std::sin(h) * dy;
    obs(base + 1) = -std::sin(h) * dx + std::cos(h) * dy;
    obs(base + 2) = foot.z;
    obs(base + 3) = wrap_angle(foot.theta - h);
  }

  FootPose compose_world(const walk::FootTarget& rel,
                         const std::array<double, 3>& residual) const {
    const double h = engine_.heading();
    const double bx = rel.x + residual[0];
    const double by = rel.y + residual[1];
    FootPose out;
    out.x = engine_.body_x() + std::cos(h) * bx - std::sin(h) * by;
    out.y = engine_.body_y() + std::sin(h) * bx + std::cos(h) * by;
    out.z = rel.z + residual[2];
    out.theta = wrap_angle(h + rel.theta);
    return out;
  }

  walk::WalkCommand nominal_command() const {
    const auto [qx, qy, qtheta] = objective_in_robot_frame();
    const double dist = std::hypot(qx, qy);
    const double bearing = std::atan2(qy, qx);
    const double blend = clamp(dist / params_.steer_blend_dist, 0.0, 1.0);
    const double turn_err = blend * bearing + (1.0 - blend) * qtheta;
    const double slow = clamp(dist / params_.steer_slow_dist, 0.0, 1.0);

    const auto& lim = params_.engine.limits;
    walk::WalkCommand cmd;  // defaults carry w_z and w_t
    cmd.w_x = clamp(params_.steer_kx * qx, -lim.max_w_x, lim.max_w_x) *
              params_.steer_caps * slow;
    cmd.w_y = clamp(params_.steer_ky * qy, -lim.max_w_y, lim.max_w_y) *
              params_.steer_caps * slow;
    cmd.w_theta = clamp(params_.steer_ktheta * turn_err, -lim.max_w_theta,
                        lim.max_w_theta) *
                  params_.steer_caps;
    return cmd;
  }

  void handle_touchdown(walk::Side side, const ResidualAction& res) {
    // the landed foot becomes the new anchor
    const walk::ReferenceTargets ref = engine_.targets();
    double terrain = 0.0;
    if (scenario_.terrain == Terrain::Uneven) {
      terrain = rng_.uniform(-scenario_.terrain_amplitude,
                             scenario_.terrain_amplitude);
      const double side_sign = (side == walk::Side::Left) ? 1.0 : -1.0;
      state_.torso.roll_rate += params_.terrain_tilt_gain * terrain * side_sign;
      state_.torso.pitch_rate += params_.terrain_tilt_gain * terrain * 0.5;
    }
    if (side == walk::Side::Left) {
      FootPose p = compose_world(ref.left, res.foot_left);
      p.z = terrain;
      state_.anchor_left = p;
      state_.terrain_left = terrain;
    } else {
      FootPose p = compose_world(ref.right, res.foot_right);
      p.z = terrain;
      state_.anchor_right = p;
      state_.terrain_right = terrain;
    }
  }

  void apply_push(double dt) {
    if (!scenario_.push_enabled) return;
    const double t0 = state_.time;
    const double t1 = state_.time + dt;
    const double cycle_start =
        std::floor(t1 / scenario_.push_period) * scenario_.push_period;
    // window [cycle_start, cycle_start + duration); direction drawn at entry
    const double win_a = cycle_start;
    const double win_b = cycle_start + scenario_.push_duration;
    const double overlap = std::max(0.0, std::min(t1, win_b) - std::max(t0, win_a));
    if (overlap <= 0.0) return;
    if (t0 <= win_a) state_.push_dir = rng_.uniform(0.0, kTwoPi);
    const double accel = scenario_.push_magnitude / scenario_.mass;
    const double ax = accel * std::cos(state_.push_dir);
    const double ay = accel * std::sin(state_.push_dir);
    state_.drift_vx += ax * overlap;
    state_.drift_vy += ay * overlap;
    // horizontal shove at COM height also tips the torso
    const double h = engine_.heading();
    const double cz = engine_.state().c_z;
    const double body_ax = std::cos(h) * ax + std::sin(h) * ay;
    const double body_ay = -std::sin(h) * ax + std::cos(h) * ay;
    state_.torso.pitch_rate += body_ax * overlap / cz;
    state_.torso.roll_rate += body_ay * overlap / cz;
  }

  void advance_tilt(double dt, const ResidualAction& res) {
    const double mult_p = clamp(1.0 + res.d_gain_p, 0.2, 3.0);
    const double mult_d = clamp(1.0 + res.d_gain_d, 0.2, 3.0);
    walk::StabilizerGains g = params_.gains;
    g.k_phi_roll *= mult_p;
    g.k_phi_pitch *= mult_p;
    g.k_phidot_roll *= mult_d;
    g.k_phidot_pitch *= mult_d;
    const walk::StabilizerCorrection corr =
        walk::stabilizer_correction(state_.torso, walk::TorsoState{}, g);

    const double w2 = params_.engine.lipm.omega0 * params_.engine.lipm.omega0;
    const double roll_acc =
        w2 * state_.torso.roll +
        clamp(params_.tilt_authority * corr.total_roll, -params_.tilt_sat,
              params_.tilt_sat);
    const double pitch_acc =
        w2 * state_.torso.pitch +
        clamp(params_.tilt_authority * corr.total_pitch, -params_.tilt_sat,
              params_.tilt_sat);
    state_.torso.roll_rate += roll_acc * dt;
    state_.torso.pitch_rate += pitch_acc * dt;
    state_.torso.roll += state_.torso.roll_rate * dt;
    state_.torso.pitch += state_.torso.pitch_rate * dt;

    // push drift bleeds off at a rate set by the damping gain
    const double decay = std::exp(-params_.drift_recovery * mult_d * dt);
    state_.drift_vx *= decay;
    state_.drift_vy *= decay;
    state_.drift_x += state_.drift_vx * dt;
    state_.drift_y += state_.drift_vy * dt;
  }

  Vec observe_noisy() {
    Vec obs = observe();
    if (scenario_.noise_amplitude > 0.0)
      obs = add_observation_noise(obs, scenario_.noise_amplitude, rng_);
    return obs;
  }

  ScenarioConfig scenario_;
  EnvParams params_;
  walk::WalkEngine engine_;
  EnvState state_;
  Rng rng_;
};

// Mirrors a full environment state about the sagittal plane, objective
// included. Stepping from here with the mirrored action must reproduce the
// mirrored successor and the same reward.
inline EnvState mirror_env_state(const EnvState& s) {
  EnvState m = s;
  m.engine.filtered.w_y = -s.engine.filtered.w_y;
  m.engine.filtered.w_theta = -s.engine.filtered.w_theta;
  m.engine.pending.w_y = -s.engine.pending.w_y;
  m.engine.pending.w_theta = -s.engine.pending.w_theta;
  m.engine.gait.support_side = walk::other(s.engine.gait.support_side);
  m.engine.gait.cycle_phase = wrap_phase(s.engine.gait.cycle_phase + kPi);
  m.engine.y = -s.engine.y;
  m.engine.heading = -s.engine.heading;
  m.torso.roll = -s.torso.roll;
  m.torso.roll_rate = -s.torso.roll_rate;
  m.drift_y = -s.drift_y;
  m.drift_vy = -s.drift_vy;
  m.anchor_left = {s.anchor_right.x, -s.anchor_right.y, s.anchor_right.z,
                   -s.anchor_right.theta};
  m.anchor_right = {s.anchor_left.x, -s.anchor_left.y, s.anchor_left.z,
                    -s.anchor_left.theta};
  m.terrain_left = s.terrain_right;
  m.terrain_right = s.terrain_left;
  m.obj_y = -s.obj_y;
  m.obj_theta = -s.obj_theta;
  m.push_dir = wrap_phase(-s.push_dir);
  m.prev_com_y = -s.prev_com_y;
  static const mdp::MirrorTransform tr = canonical_mirror();
  m.residual_filter = tr.action.apply(s.residual_filter);
  return m;
}

}  // namespace symwalk::env
