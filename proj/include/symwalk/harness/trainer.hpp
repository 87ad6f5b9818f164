#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>
#include <vector>

#include "symwalk/env/biped_env.hpp"
#include "symwalk/harness/checkpoint.hpp"
#include "symwalk/harness/config.hpp"
#include "symwalk/rl/ppo.hpp"

namespace symwalk::harness {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One rollout worker: a private environment, private RNG streams and the
// running episode accumulators. Collection uses an immutable policy
// snapshot, so workers never share mutable state.
struct RolloutWorker {
  env::BipedEnv env;
  Rng act_rng;
  Rng env_seed_rng;
  Vec obs;
  double ep_return = 0.0;
  int ep_steps = 0;

  RolloutWorker(const env::ScenarioConfig& sc, const env::EnvParams& ep,
                std::uint64_t act_seed, std::uint64_t env_seed)
      : env(sc, ep), act_rng(act_seed), env_seed_rng(env_seed) {
    obs = env.reset(env_seed_rng.next_seed());
  }

  struct Result {
    rl::SampleBatch batch;
    std::vector<double> episode_returns;
    std::vector<double> episode_lengths;  // seconds
  };

  Result collect(const rl::GaussianPolicy& policy, int steps, double dt) {
    Result out;
    const int obs_dim = policy.obs_dim(), act_dim = policy.act_dim();
    out.batch.obs.resize(obs_dim, steps);
    out.batch.act.resize(act_dim, steps);
    out.batch.logp_old.resize(steps);
    out.batch.reward.resize(steps);
    out.batch.done.resize(steps);

    for (int t = 0; t < steps; ++t) {
      const rl::PolicyOutput po = rl::policy_forward(policy, obs);
      const Vec action = rl::sample_action(policy, po.mean, act_rng);
      const double logp =
          rl::gaussian_log_density(action, po.mean, policy.log_sigma());
      const env::StepResult sr = env.step(action);

      out.batch.obs.col(t) = obs;
      out.batch.act.col(t) = action;
      out.batch.logp_old(t) = logp;
      out.batch.reward(t) = sr.reward;
      out.batch.done[t] = sr.done ? 1 : 0;

      ep_return += sr.reward;
      ++ep_steps;
      if (sr.done) {
        out.episode_returns.push_back(ep_return);
        out.episode_lengths.push_back(ep_steps * dt);
        ep_return = 0.0;
        ep_steps = 0;
        obs = env.reset(env_seed_rng.next_seed());
      } else {
        obs = sr.obs;
      }
    }
    out.batch.bootstrap_obs = obs;
    out.batch.has_bootstrap = true;
    return out;
  }
};

namespace detail {

inline rl::SampleBatch merge_batches(std::vector<rl::SampleBatch>& parts) {
  int total = 0;
  for (const auto& b : parts) total += b.size();
  rl::SampleBatch out;
  out.obs.resize(parts[0].obs.rows(), total);
  out.act.resize(parts[0].act.rows(), total);
  out.logp_old.resize(total);
  out.reward.resize(total);
  out.value.resize(total);
  out.adv.resize(total);
  out.ret.resize(total);
  out.done.resize(total);
  int at = 0;
  for (const auto& b : parts) {
    const int n = b.size();
    out.obs.middleCols(at, n) = b.obs;
    out.act.middleCols(at, n) = b.act;
    out.logp_old.segment(at, n) = b.logp_old;
    out.reward.segment(at, n) = b.reward;
    out.value.segment(at, n) = b.value;
    out.adv.segment(at, n) = b.adv;
    out.ret.segment(at, n) = b.ret;
    for (int i = 0; i < n; ++i) out.done[at + i] = b.done[i];
    at += n;
  }
  return out;
}

inline std::vector<int> policy_layer_sizes(const ExperimentConfig& cfg) {
  std::vector<int> layers = {env::kObsDim};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(env::kActDim);
  return layers;
}

inline std::vector<int> value_layer_sizes(const ExperimentConfig& cfg) {
  std::vector<int> layers = {env::kObsDim};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(1);
  return layers;
}

}  // namespace detail

struct TrainResult {
  long total_steps = 0;
  int updates = 0;
  double final_avg_ep_reward = 0.0;
  double final_sym_deficit = 0.0;
  std::string metrics_path;
  std::string checkpoint_path;
};

// The collect -> update loop. Workers gather fixed-length segments in
// parallel with a frozen snapshot; GAE runs per worker segment; the merged
// batch is normalized and fed to the PPO(+S) update. Metrics append one CSV
// row per update; checkpoints are periodic.
inline TrainResult train(const ExperimentConfig& cfg,
                         std::ostream* log = nullptr) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  const std::string ckpt_path = cfg.out_dir + "/checkpoint.bin";

  Rng init_rng(mix_seed(cfg.seed, 0));
  rl::GaussianPolicy policy(detail::policy_layer_sizes(cfg), init_rng,
                            cfg.init_log_sigma, cfg.out_scale);
  rl::ValueFn value(detail::value_layer_sizes(cfg), init_rng);
  rl::Adam pol_opt(cfg.ppo.lr), vf_opt(cfg.ppo.value_lr);
  Rng shuffle_rng(mix_seed(cfg.seed, 1));

  std::uint64_t total_steps = 0, updates = 0;
  std::vector<std::unique_ptr<RolloutWorker>> workers;
  for (int w = 0; w < cfg.workers; ++w)
    workers.push_back(std::make_unique<RolloutWorker>(
        cfg.scenario, cfg.env_params, mix_seed(cfg.seed, 100 + w),
        mix_seed(cfg.seed, 200 + w)));

  bool fresh_metrics = true;
  if (!cfg.resume.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume);
    if (ck.policy_layers != detail::policy_layer_sizes(cfg) ||
        ck.value_layers != detail::value_layer_sizes(cfg))
      throw CheckpointError("checkpoint: network shape mismatch with config");
    policy.theta = ck.theta;
    value.omega = ck.omega;
    pol_opt.m = ck.adam_pol_m;
    pol_opt.v = ck.adam_pol_v;
    pol_opt.t = ck.adam_pol_t;
    vf_opt.m = ck.adam_vf_m;
    vf_opt.v = ck.adam_vf_v;
    vf_opt.t = ck.adam_vf_t;
    total_steps = ck.total_steps;
    updates = ck.updates;
    if (!ck.rng_states.empty()) shuffle_rng.deserialize(ck.rng_states[0]);
    for (std::size_t w = 0; w + 1 < ck.rng_states.size() && w < workers.size();
         ++w)
      workers[w]->act_rng.deserialize(ck.rng_states[w + 1]);
    fresh_metrics = false;
  }

  std::ofstream metrics(metrics_path, fresh_metrics
                                          ? std::ios::trunc
                                          : (std::ios::app | std::ios::ate));
  if (!metrics) throw std::runtime_error("train: cannot open " + metrics_path);
  if (fresh_metrics)
    metrics << "update,steps,avg_ep_reward,avg_ep_len,clip_frac,sym_deficit\n";

  auto save = [&]() {
    Checkpoint ck;
    ck.policy_layers = detail::policy_layer_sizes(cfg);
    ck.value_layers = detail::value_layer_sizes(cfg);
    ck.theta = policy.theta;
    ck.omega = value.omega;
    ck.adam_pol_m = pol_opt.m.size() ? pol_opt.m : Vec::Zero(policy.n_params());
    ck.adam_pol_v = pol_opt.v.size() ? pol_opt.v : Vec::Zero(policy.n_params());
    ck.adam_pol_t = pol_opt.t;
    ck.adam_vf_m = vf_opt.m.size() ? vf_opt.m : Vec::Zero(value.omega.size());
    ck.adam_vf_v = vf_opt.v.size() ? vf_opt.v : Vec::Zero(value.omega.size());
    ck.adam_vf_t = vf_opt.t;
    ck.total_steps = total_steps;
    ck.updates = updates;
    ck.rng_states.push_back(shuffle_rng.serialize());
    for (const auto& w : workers)
      ck.rng_states.push_back(w->act_rng.serialize());
    save_checkpoint(ck, ckpt_path);
  };

  double last_avg_reward = 0.0, last_avg_len = 0.0;
  TrainResult result;
  const double dt = cfg.env_params.control_dt;

  while (total_steps < static_cast<std::uint64_t>(cfg.total_steps)) {
    // parallel collection with the frozen policy
    std::vector<RolloutWorker::Result> parts(workers.size());
    {
      std::vector<std::thread> threads;
      threads.reserve(workers.size());
      for (std::size_t w = 0; w < workers.size(); ++w)
        threads.emplace_back([&, w]() {
          parts[w] = workers[w]->collect(policy, cfg.batch_per_worker, dt);
        });
      for (auto& th : threads) th.join();
    }

    std::vector<rl::SampleBatch> batches;
    std::vector<double> ep_returns, ep_lens;
    for (auto& p : parts) {
      rl::compute_gae(p.batch, cfg.ppo.gamma, cfg.ppo.lambda, value);
      batches.push_back(std::move(p.batch));
      ep_returns.insert(ep_returns.end(), p.episode_returns.begin(),
                        p.episode_returns.end());
      ep_lens.insert(ep_lens.end(), p.episode_lengths.begin(),
                     p.episode_lengths.end());
    }
    rl::SampleBatch batch = detail::merge_batches(batches);
    rl::normalize_advantages(batch);
    if (cfg.sym.kind != rl::SymLossKind::None)
      rl::build_symmetry_cache(batch, policy, {cfg.mirror});

    const rl::UpdateMetrics um =
        rl::update_policy(batch, policy, value, pol_opt, vf_opt, cfg.ppo,
                          cfg.sym, &cfg.mirror, shuffle_rng);

    total_steps += static_cast<std::uint64_t>(batch.size());
    ++updates;
    if (!ep_returns.empty()) {
      last_avg_reward = 0.0;
      last_avg_len = 0.0;
      for (double r : ep_returns) last_avg_reward += r;
      for (double l : ep_lens) last_avg_len += l;
      last_avg_reward /= ep_returns.size();
      last_avg_len /= ep_lens.size();
    }

    char row[256];
    std::snprintf(row, sizeof(row), "%llu,%llu,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<unsigned long long>(updates),
                  static_cast<unsigned long long>(total_steps),
                  last_avg_reward, last_avg_len, um.clip_frac, um.sym_deficit);
    metrics << row;
    metrics.flush();

    if (log) {
      *log << "update " << updates << " steps " << total_steps << " avg_ep_r "
           << last_avg_reward << " clip " << um.clip_frac << " sym_def "
           << um.sym_deficit << "\n";
    }
    result.final_avg_ep_reward = last_avg_reward;
    result.final_sym_deficit = um.sym_deficit;

    if (cfg.checkpoint_every > 0 &&
        updates % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0)
      save();
  }
  save();

  result.total_steps = static_cast<long>(total_steps);
  result.updates = static_cast<int>(updates);
  result.metrics_path = metrics_path;
  result.checkpoint_path = ckpt_path;
  return result;
}

struct EvalSummary {
  int episodes = 0;
  double avg_duration = 0.0;        // t, seconds
  double avg_reward_per_sec = 0.0;  // r/t
  double avg_total_reward = 0.0;
};

// Deterministic-policy rollouts (sigma = 0): the action is the policy mean.
inline EvalSummary evaluate(const rl::GaussianPolicy& policy,
                            const env::ScenarioConfig& scenario,
                            const env::EnvParams& params, int episodes,
                            std::uint64_t seed) {
  if (episodes <= 0)
    throw std::invalid_argument("evaluate: need at least one episode");
  EvalSummary sum;
  sum.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    env::BipedEnv env(scenario, params);
    Vec obs = env.reset(mix_seed(seed, 300 + e));
    double total = 0.0;
    while (!env.done()) {
      const Vec action = rl::policy_forward(policy, obs).mean;
      const env::StepResult sr = env.step(action);
      total += sr.reward;
      obs = sr.obs;
    }
    const double duration = env.time();
    sum.avg_duration += duration;
    sum.avg_total_reward += total;
    sum.avg_reward_per_sec += total / duration;
  }
  sum.avg_duration /= episodes;
  sum.avg_total_reward /= episodes;
  sum.avg_reward_per_sec /= episodes;
  return sum;
}

inline rl::GaussianPolicy policy_from_checkpoint(const Checkpoint& ck) {
  Rng dummy(0);
  rl::GaussianPolicy policy(ck.policy_layers, dummy);
  if (policy.theta.size() != ck.theta.size())
    throw CheckpointError("checkpoint: theta size mismatch");
  policy.theta = ck.theta;
  return policy;
}

// Probe states for the symmetry-deficit metric: observations gathered from
// a seeded random-action rollout.
inline Mat probe_states(const env::ScenarioConfig& scenario,
                        const env::EnvParams& params, int count,
                        std::uint64_t seed) {
  env::BipedEnv env(scenario, params);
  Rng rng(mix_seed(seed, 400));
  Vec obs = env.reset(rng.next_seed());
  Mat probes(env::kObsDim, count);
  for (int i = 0; i < count; ++i) {
    Vec a(env::kActDim);
    for (int k = 0; k < env::kActDim; ++k) a(k) = rng.uniform(-1.0, 1.0);
    const env::StepResult sr = env.step(a);
    probes.col(i) = sr.obs;
    obs = sr.done ? env.reset(rng.next_seed()) : sr.obs;
  }
  return probes;
}

inline double symmetry_deficit(const rl::GaussianPolicy& policy,
                               const Mat& probes,
                               const mdp::MirrorTransform& tr) {
  return rl::symmetry_deficit_states(policy, probes, tr);
}

}  // namespace symwalk::harness
