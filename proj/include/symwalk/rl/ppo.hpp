#pragma once

#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "symwalk/rl/symmetry_loss.hpp"

namespace symwalk::rl {

struct PpoConfig {
  double epsilon = 0.2;    // clip parameter
  double entropy_coef = 0.0;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 4;
  int minibatch = 256;
  double lr = 3e-4;
  double value_lr = 1e-3;

  void validate() const {
    if (epsilon <= 0.0 || epsilon >= 1.0)
      throw std::invalid_argument("PpoConfig: epsilon must be in (0,1)");
    if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0)
      throw std::invalid_argument("PpoConfig: gamma/lambda must be in [0,1]");
    if (epochs < 1 || minibatch < 1)
      throw std::invalid_argument("PpoConfig: epochs/minibatch must be >= 1");
  }
};

struct SurrogateStats {
  double mean_ratio = 1.0;
  double clip_frac = 0.0;
};

// Negated clipped surrogate plus the entropy bonus:
// loss = -E_t[min(r_t A_t, (1+sgn(A_t) eps) A_t)] - c H(theta).
// Per-sample gradients vanish exactly on the clipped plateaus.
inline LossGrad ppo_surrogate(const SampleBatch& batch,
                              const GaussianPolicy& pol, const PpoConfig& cfg,
                              SurrogateStats* stats = nullptr) {
  cfg.validate();
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_surrogate: empty batch");

  Mlp::Cache fwd;
  const Mat means = pol.net.forward(pol.net_params(), batch.obs, &fwd);
  const Vec logp = gaussian_log_density_batch(batch.act, means,
                                              pol.log_sigma());
  const Vec inv_var = (-2.0 * pol.log_sigma().array()).exp().matrix();

  LossGrad out;
  out.grad = Vec::Zero(pol.n_params());
  Eigen::Ref<Vec> d_log_sigma = out.grad.tail(pol.act_dim());
  Mat d_means = Mat::Zero(means.rows(), n);

  double loss_sum = 0.0;
  double ratio_sum = 0.0;
  int clipped_count = 0;
  for (int t = 0; t < n; ++t) {
    const double log_ratio = logp(t) - batch.logp_old(t);
    const double r =
        detail::checked_ratio_exp(log_ratio, t, "ppo_surrogate ratio");
    ratio_sum += r;
    const double adv = batch.adv(t);
    const double sign = adv >= 0.0 ? 1.0 : -1.0;
    const double clipped_term = (1.0 + sign * cfg.epsilon) * adv;
    const double surrogate = std::min(r * adv, clipped_term);
    loss_sum += surrogate;
    const bool plateau = (adv > 0.0 && r > 1.0 + cfg.epsilon) ||
                         (adv < 0.0 && r < 1.0 - cfg.epsilon);
    if (plateau) {
      ++clipped_count;
      continue;  // gradient contribution is exactly zero
    }
    const double coef = -adv * r / n;
    const Vec diff = batch.act.col(t) - means.col(t);
    d_means.col(t) = coef * diff.cwiseProduct(inv_var);
    d_log_sigma += coef * (diff.cwiseProduct(diff).cwiseProduct(inv_var) -
                           Vec::Ones(pol.act_dim()));
  }
  out.loss = -loss_sum / n;
  pol.net.backward(pol.net_params(), fwd, d_means,
                   out.grad.head(pol.net.n_params()));

  if (cfg.entropy_coef != 0.0) {
    out.loss -= cfg.entropy_coef * policy_entropy(pol);
    d_log_sigma.array() -= cfg.entropy_coef;
  }
  if (stats) {
    stats->mean_ratio = ratio_sum / n;
    stats->clip_frac = static_cast<double>(clipped_count) / n;
  }
  return out;
}

// Squared-error value loss E_t[(V(s_t) - ret_t)^2] and its gradient.
inline LossGrad value_loss_grad(const SampleBatch& batch, const ValueFn& vf) {
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("value_loss_grad: empty batch");
  if (batch.ret.size() != n)
    throw std::invalid_argument("value_loss_grad: returns not computed");
  Mlp::Cache fwd;
  const Mat v = vf.net.forward(vf.omega, batch.obs, &fwd);
  LossGrad out;
  out.grad = Vec::Zero(vf.omega.size());
  Mat d_v(1, n);
  double loss_sum = 0.0;
  for (int t = 0; t < n; ++t) {
    const double err = v(0, t) - batch.ret(t);
    loss_sum += err * err;
    d_v(0, t) = 2.0 * err / n;
  }
  out.loss = loss_sum / n;
  vf.net.backward(vf.omega, fwd, d_v, out.grad);
  return out;
}

// One plain gradient step on the squared-error loss.
inline void value_update(const SampleBatch& batch, ValueFn& vf, double lr) {
  const LossGrad lg = value_loss_grad(batch, vf);
  vf.omega -= lr * lg.grad;
}

// Mean action-space asymmetry over a set of states.
inline double symmetry_deficit_states(const GaussianPolicy& pol, const Mat& obs,
                                      const mdp::MirrorTransform& tr) {
  if (obs.cols() == 0)
    throw std::invalid_argument("symmetry_deficit: empty probe set");
  const Mat means = policy_mean_batch(pol, obs);
  Mat obs_mirror(obs.rows(), obs.cols());
  for (int t = 0; t < obs.cols(); ++t)
    obs_mirror.col(t) = tr.state.apply(obs.col(t));
  const Mat means_mirror = policy_mean_batch(pol, obs_mirror);
  double acc = 0.0;
  for (int t = 0; t < obs.cols(); ++t)
    acc += (means.col(t) - tr.action.apply(means_mirror.col(t))).norm();
  return acc / obs.cols();
}

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double sym_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_frac = 0.0;
  double sym_deficit = 0.0;
  int minibatches = 0;
};

namespace detail {

inline SampleBatch gather(const SampleBatch& batch,
                          const std::vector<int>& idx) {
  SampleBatch out;
  const int n = static_cast<int>(idx.size());
  out.obs.resize(batch.obs.rows(), n);
  out.act.resize(batch.act.rows(), n);
  out.logp_old.resize(n);
  out.reward.resize(n);
  out.adv.resize(n);
  out.ret.resize(n);
  out.value.resize(n);
  out.done.resize(n);
  out.sym.resize(batch.sym.size());
  for (auto& cache : out.sym) {
    cache.obs_mirror.resize(batch.obs.rows(), n);
    cache.act_sym_mean.resize(batch.act.rows(), n);
    cache.logp_old_mirror.resize(n);
  }
  for (int i = 0; i < n; ++i) {
    const int t = idx[i];
    out.obs.col(i) = batch.obs.col(t);
    out.act.col(i) = batch.act.col(t);
    out.logp_old(i) = batch.logp_old(t);
    out.reward(i) = batch.reward(t);
    out.adv(i) = batch.adv(t);
    out.ret(i) = batch.ret(t);
    out.value(i) = batch.value(t);
    out.done[i] = batch.done[t];
    for (std::size_t c = 0; c < batch.sym.size(); ++c) {
      out.sym[c].obs_mirror.col(i) = batch.sym[c].obs_mirror.col(t);
      out.sym[c].act_sym_mean.col(i) = batch.sym[c].act_sym_mean.col(t);
      out.sym[c].logp_old_mirror(i) = batch.sym[c].logp_old_mirror(t);
    }
  }
  return out;
}

}  // namespace detail

// The full PPO(+S) update: epochs of shuffled minibatches, Adam on the
// policy and value parameters. theta_old is implicit in the cached
// log-probabilities, which stay frozen throughout.
inline UpdateMetrics update_policy(const SampleBatch& batch,
                                   GaussianPolicy& pol, ValueFn& vf,
                                   Adam& pol_opt, Adam& vf_opt,
                                   const PpoConfig& cfg,
                                   const SymLossConfig& sym_cfg,
                                   const mdp::MirrorTransform* tr, Rng& rng) {
  cfg.validate();
  const int n = batch.size();
  if (n < 2) throw std::invalid_argument("update_policy: batch too small");
  if (sym_cfg.kind != SymLossKind::None && batch.sym.empty())
    throw std::invalid_argument("update_policy: symmetry loss without cache");

  UpdateMetrics metrics;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    for (int start = 0; start < n; start += cfg.minibatch) {
      const int len = std::min(cfg.minibatch, n - start);
      if (len < 2) continue;
      const std::vector<int> idx(order.begin() + start,
                                 order.begin() + start + len);
      SampleBatch mb = detail::gather(batch, idx);

      SurrogateStats stats;
      LossGrad pg = ppo_surrogate(mb, pol, cfg, &stats);
      double sym_loss_val = 0.0;
      if (sym_cfg.kind == SymLossKind::Psl) {
        LossGrad sg = generalized_psl(mb, pol, sym_cfg);
        pg.grad += sg.grad;
        sym_loss_val = sg.loss;
      } else if (sym_cfg.kind == SymLossKind::Msl) {
        LossGrad sg = msl_loss(mb, pol, sym_cfg, *tr);
        pg.grad += sg.grad;
        sym_loss_val = sg.loss;
      }
      pol_opt.step(pol.theta, pg.grad);

      LossGrad vg = value_loss_grad(mb, vf);
      vf_opt.step(vf.omega, vg.grad);

      metrics.policy_loss += pg.loss;
      metrics.value_loss += vg.loss;
      metrics.sym_loss += sym_loss_val;
      metrics.mean_ratio += stats.mean_ratio;
      metrics.clip_frac += stats.clip_frac;
      ++metrics.minibatches;
    }
  }
  if (metrics.minibatches > 0) {
    metrics.policy_loss /= metrics.minibatches;
    metrics.value_loss /= metrics.minibatches;
    metrics.sym_loss /= metrics.minibatches;
    metrics.mean_ratio /= metrics.minibatches;
    metrics.clip_frac /= metrics.minibatches;
  }
  if (tr != nullptr)
    metrics.sym_deficit = symmetry_deficit_states(pol, batch.obs, *tr);
  return metrics;
}

}  // namespace symwalk::rl
