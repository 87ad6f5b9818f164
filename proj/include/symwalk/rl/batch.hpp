#pragma once

#include <stdexcept>
#include <vector>

#include "symwalk/mdp/mirror.hpp"
#include "symwalk/rl/policy.hpp"

namespace symwalk::rl {

// Per-transform caches that stay constant through a policy update: the
// mirrored states, the symmetric mean actions a' and their old-policy
// log-densities.
struct SymCache {
  Mat obs_mirror;
  Mat act_sym_mean;
  Vec logp_old_mirror;
};

struct SampleBatch {
  Mat obs;   // obs_dim x T
  Mat act;   // act_dim x T
  Vec logp_old;
  Vec reward;
  Vec value;
  Vec adv;
  Vec ret;
  std::vector<char> done;
  Vec bootstrap_obs;  // next observation when the batch ends mid-episode
  bool has_bootstrap = false;
  std::vector<SymCache> sym;

  int size() const { return static_cast<int>(obs.cols()); }
};

// a' = g_s(mean of pi_old(.|s)); computed once at batch construction.
inline Vec symmetric_mean_action(const GaussianPolicy& pol_old, const Vec& s,
                                 const mdp::MirrorTransform& tr) {
  const Vec mean = policy_forward(pol_old, s).mean;
  return mdp::mirror_action(tr, s, mean);
}

// Fills the caches for every transform from the frozen policy snapshot.
inline void build_symmetry_cache(SampleBatch& batch,
                                 const GaussianPolicy& pol_old,
                                 const std::vector<mdp::MirrorTransform>& trs) {
  batch.sym.clear();
  batch.sym.reserve(trs.size());
  const int n = batch.size();
  for (const auto& tr : trs) {
    SymCache cache;
    cache.obs_mirror.resize(batch.obs.rows(), n);
    cache.act_sym_mean.resize(batch.act.rows(), n);
    for (int t = 0; t < n; ++t)
      cache.obs_mirror.col(t) = tr.state.apply(batch.obs.col(t));
    const Mat means = policy_mean_batch(pol_old, batch.obs);
    for (int t = 0; t < n; ++t)
      cache.act_sym_mean.col(t) = tr.action.apply(means.col(t));
    const Mat mirror_means = policy_mean_batch(pol_old, cache.obs_mirror);
    cache.logp_old_mirror = gaussian_log_density_batch(
        cache.act_sym_mean, mirror_means, pol_old.log_sigma());
    batch.sym.push_back(std::move(cache));
  }
}

// delta_t = r_t + gamma * V_{t+1} * (1 - done) - V_t, accumulated with the
// (gamma * lambda) discount inside each episode. Fills value, adv and ret.
inline void compute_gae(SampleBatch& batch, double gamma, double lambda,
                        const ValueFn& vf) {
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("compute_gae: empty batch");
  batch.value = vf.net.forward(vf.omega, batch.obs).transpose();
  double v_next = 0.0;
  if (batch.has_bootstrap && !batch.done[n - 1]) {
    Mat last = vf.net.forward(vf.omega, batch.bootstrap_obs);
    v_next = last(0, 0);
  }
  batch.adv.resize(n);
  batch.ret.resize(n);
  double gae = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    // done[t]: the episode terminates at step t, so the successor value and
    // the advantage carry are both cut
    const double mask = batch.done[t] ? 0.0 : 1.0;
    const double delta =
        batch.reward(t) + gamma * v_next * mask - batch.value(t);
    gae = delta + gamma * lambda * mask * gae;
    batch.adv(t) = gae;
    v_next = batch.value(t);
  }
  batch.ret = batch.adv + batch.value;
}

// z-score normalization with an epsilon guard against degenerate batches.
inline void normalize_advantages(SampleBatch& batch) {
  const int n = static_cast<int>(batch.adv.size());
  if (n < 2)
    throw std::invalid_argument("normalize_advantages: batch size < 2");
  const double mean = batch.adv.mean();
  const double var = (batch.adv.array() - mean).square().sum() / n;
  const double sd = std::sqrt(var);
  batch.adv = ((batch.adv.array() - mean) / (sd + 1e-8)).matrix();
}

// Doubles the batch with mirrored samples (f(s), g_s(a), r, done); the
// artificial log-probabilities come from the frozen snapshot. A data
// augmentation baseline, not used by the symmetry losses.
inline SampleBatch augment_batch(const SampleBatch& batch,
                                 const mdp::MirrorTransform& tr,
                                 const GaussianPolicy& pol_old) {
  const int n = batch.size();
  SampleBatch out;
  out.obs.resize(batch.obs.rows(), 2 * n);
  out.act.resize(batch.act.rows(), 2 * n);
  out.logp_old.resize(2 * n);
  out.reward.resize(2 * n);
  out.done.resize(2 * n);
  if (n == 0) return out;

  out.obs.leftCols(n) = batch.obs;
  out.act.leftCols(n) = batch.act;
  out.logp_old.head(n) = batch.logp_old;
  out.reward.head(n) = batch.reward;
  for (int t = 0; t < n; ++t) {
    out.done[t] = batch.done[t];
    out.obs.col(n + t) = tr.state.apply(batch.obs.col(t));
    out.act.col(n + t) = mdp::mirror_action(tr, batch.obs.col(t), batch.act.col(t));
    out.reward(n + t) = batch.reward(t);
    out.done[n + t] = batch.done[t];
  }
  const Mat mirror_means = policy_mean_batch(pol_old, out.obs.rightCols(n));
  out.logp_old.tail(n) = gaussian_log_density_batch(
      out.act.rightCols(n), mirror_means, pol_old.log_sigma());
  out.has_bootstrap = false;  // mirrored half breaks the temporal chain
  return out;
}

}  // namespace symwalk::rl
