#pragma once

#include <sstream>
#include <stdexcept>
#include <vector>

#include "symwalk/rl/batch.hpp"

namespace symwalk::rl {

enum class SymLossKind { None = 0, Msl, Psl };

struct SymLossConfig {
  SymLossKind kind = SymLossKind::None;
  double w = 0.05;        // weight factor
  double epsilon = 0.2;   // clip parameter, shared with the PPO surrogate

  void validate() const {
    if (w < 0.0) throw std::invalid_argument("SymLossConfig: w must be >= 0");
    if (epsilon <= 0.0 || epsilon >= 1.0)
      throw std::invalid_argument("SymLossConfig: epsilon must be in (0,1)");
  }
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;  // wrt the full theta (net params + log sigma)
};

enum class ZRegime { Below1 = 0, InTrust, Above };

struct PSLDiagnostics {
  std::vector<double> x;       // symmetry probability ratio min(x', z)
  std::vector<double> z;       // old-policy ratio
  std::vector<ZRegime> regime;
  std::vector<char> clipped;   // the 1+eps plateau is the active bound
  int count_below1 = 0, count_in_trust = 0, count_above = 0;
};

namespace detail {

inline double checked_ratio_exp(double log_ratio, int sample,
                                const char* what) {
  const double clamped = clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
  const double r = std::exp(clamped);
  if (!std::isfinite(r)) {
    std::ostringstream msg;
    msg << what << ": non-finite ratio at sample " << sample;
    throw std::runtime_error(msg.str());
  }
  return r;
}

// Shared core: accumulates the clipped symmetry-ratio loss and its gradient
// for one transform cache. Returns the per-cache loss sum (before averaging).
inline double psl_accumulate(const SampleBatch& batch, const SymCache& cache,
                             const GaussianPolicy& pol, double w, double eps,
                             double inv_count, Vec& grad) {
  const int n = batch.size();
  Mlp::Cache fwd;
  const Mat means = pol.net.forward(pol.net_params(), cache.obs_mirror, &fwd);
  const Vec logp_mirror = gaussian_log_density_batch(cache.act_sym_mean, means,
                                                     pol.log_sigma());
  const Vec inv_var = (-2.0 * pol.log_sigma().array()).exp().matrix();

  Mat d_means = Mat::Zero(means.rows(), n);
  Eigen::Ref<Vec> d_log_sigma =
      grad.tail(pol.act_dim());

  double loss_sum = 0.0;
  for (int t = 0; t < n; ++t) {
    const double xp = checked_ratio_exp(logp_mirror(t) - cache.logp_old_mirror(t),
                                        t, "psl_loss x'");
    const double z = checked_ratio_exp(batch.logp_old(t) - cache.logp_old_mirror(t),
                                       t, "psl_loss z");
    const double bound = std::min(z, 1.0 + eps);
    loss_sum += -w * std::min(xp, bound);
    if (xp < bound) {
      // only pi_theta(a'|f(s)) depends on theta; the branch slope is -w
      const double coef = -w * xp * inv_count;
      const Vec diff = cache.act_sym_mean.col(t) - means.col(t);
      d_means.col(t) = coef * diff.cwiseProduct(inv_var);
      d_log_sigma +=
          coef * (diff.cwiseProduct(diff).cwiseProduct(inv_var) -
                  Vec::Ones(pol.act_dim()));
    }
  }
  pol.net.backward(pol.net_params(), fwd, d_means,
                   grad.head(pol.net.n_params()));
  return loss_sum;
}

}  // namespace detail

// L^PSL = -w * E_t[min(x_t, 1+eps)] with x = min(x', z). The gradient is
// exactly zero whenever the min selects a theta-independent branch.
inline LossGrad psl_loss(const SampleBatch& batch, const GaussianPolicy& pol,
                         const SymLossConfig& cfg) {
  cfg.validate();
  if (batch.sym.empty())
    throw std::invalid_argument("psl_loss: batch carries no symmetry cache");
  LossGrad out;
  out.grad = Vec::Zero(pol.n_params());
  const double inv_count = 1.0 / batch.size();
  out.loss = detail::psl_accumulate(batch, batch.sym[0], pol, cfg.w,
                                    cfg.epsilon, inv_count, out.grad) *
             inv_count;
  return out;
}

// Average over an arbitrary number of symmetry transforms.
inline LossGrad generalized_psl(const SampleBatch& batch,
                                const GaussianPolicy& pol,
                                const SymLossConfig& cfg) {
  cfg.validate();
  if (batch.sym.empty())
    throw std::invalid_argument("generalized_psl: needs >= 1 transform");
  LossGrad out;
  out.grad = Vec::Zero(pol.n_params());
  const double inv_count =
      1.0 / (static_cast<double>(batch.size()) * batch.sym.size());
  double loss_sum = 0.0;
  for (const auto& cache : batch.sym)
    loss_sum += detail::psl_accumulate(batch, cache, pol, cfg.w, cfg.epsilon,
                                       inv_count, out.grad);
  out.loss = loss_sum * inv_count;
  return out;
}

// Mirror symmetry loss over policy means:
// w * E_t[ || mu(s) - g(mu(f(s))) ||^2 ]; gradient flows through both
// forward passes and never touches log sigma.
inline LossGrad msl_loss(const SampleBatch& batch, const GaussianPolicy& pol,
                         const SymLossConfig& cfg,
                         const mdp::MirrorTransform& tr) {
  cfg.validate();
  if (batch.sym.empty())
    throw std::invalid_argument("msl_loss: batch carries no symmetry cache");
  const int n = batch.size();
  const SymCache& cache = batch.sym[0];

  Mlp::Cache fwd_direct, fwd_mirror;
  const Mat means = pol.net.forward(pol.net_params(), batch.obs, &fwd_direct);
  const Mat means_mirror =
      pol.net.forward(pol.net_params(), cache.obs_mirror, &fwd_mirror);

  LossGrad out;
  out.grad = Vec::Zero(pol.n_params());
  Mat d_direct(means.rows(), n), d_mirror(means.rows(), n);
  double loss_sum = 0.0;
  const double scale = 2.0 * cfg.w / n;
  for (int t = 0; t < n; ++t) {
    const Vec mirrored_mean = tr.action.apply(means_mirror.col(t));
    const Vec delta = means.col(t) - mirrored_mean;
    loss_sum += delta.squaredNorm();
    d_direct.col(t) = scale * delta;
    d_mirror.col(t) = -scale * tr.action.apply_transpose(delta);
  }
  out.loss = cfg.w * loss_sum / n;
  pol.net.backward(pol.net_params(), fwd_direct, d_direct,
                   out.grad.head(pol.net.n_params()));
  pol.net.backward(pol.net_params(), fwd_mirror, d_mirror,
                   out.grad.head(pol.net.n_params()));
  return out;
}

// Diagnostic regimes of the old-policy ratio z, evaluated from the frozen
// snapshot (so x' = 1 and x = min(1, z)).
inline PSLDiagnostics classify_regimes(const SampleBatch& batch,
                                       const GaussianPolicy& pol_old,
                                       const SymLossConfig& cfg) {
  cfg.validate();
  if (batch.sym.empty())
    throw std::invalid_argument("classify_regimes: batch carries no symmetry cache");
  const SymCache& cache = batch.sym[0];
  const Mat means = policy_mean_batch(pol_old, batch.obs);
  const Vec logp_old =
      gaussian_log_density_batch(batch.act, means, pol_old.log_sigma());
  const Mat mirror_means = policy_mean_batch(pol_old, cache.obs_mirror);
  const Vec logp_mirror = gaussian_log_density_batch(
      cache.act_sym_mean, mirror_means, pol_old.log_sigma());

  PSLDiagnostics diag;
  const int n = batch.size();
  diag.x.resize(n);
  diag.z.resize(n);
  diag.regime.resize(n);
  diag.clipped.resize(n);
  for (int t = 0; t < n; ++t) {
    const double z =
        detail::checked_ratio_exp(logp_old(t) - logp_mirror(t), t, "classify z");
    diag.z[t] = z;
    diag.x[t] = std::min(1.0, z);
    if (z < 1.0) {
      diag.regime[t] = ZRegime::Below1;
      ++diag.count_below1;
    } else if (z < 1.0 + cfg.epsilon) {
      diag.regime[t] = ZRegime::InTrust;
      ++diag.count_in_trust;
    } else {
      diag.regime[t] = ZRegime::Above;
      ++diag.count_above;
    }
    diag.clipped[t] = z >= 1.0 + cfg.epsilon;
  }
  return diag;
}

}  // namespace symwalk::rl
