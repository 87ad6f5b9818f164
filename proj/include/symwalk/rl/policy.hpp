#pragma once

#include <cmath>
#include <stdexcept>

#include "symwalk/core/math.hpp"
#include "symwalk/rl/mlp.hpp"

namespace symwalk::rl {

constexpr double kLogRatioClamp = 30.0;  // density-ratio exponent guard

// Diagonal-Gaussian policy: an MLP mean head plus a global learnable
// log-stddev vector appended to the flat parameter vector theta.
struct GaussianPolicy {
  Mlp net;
  Vec theta;  // [net params..., log_sigma (act_dim)]

  GaussianPolicy(std::vector<int> layers, Rng& rng, double init_log_sigma = -0.7,
                 double out_scale = 0.01)
      : net(std::move(layers)) {
    theta = Vec(net.n_params() + net.out_dim());
    theta.head(net.n_params()) = net.init_params(rng, out_scale);
    theta.tail(net.out_dim()).setConstant(init_log_sigma);
  }

  int obs_dim() const { return net.in_dim(); }
  int act_dim() const { return net.out_dim(); }
  int n_params() const { return static_cast<int>(theta.size()); }

  Eigen::Ref<const Vec> net_params() const {
    return theta.head(net.n_params());
  }
  Eigen::Ref<const Vec> log_sigma() const { return theta.tail(net.out_dim()); }
  Vec sigma() const { return log_sigma().array().exp().matrix(); }
};

struct ValueFn {
  Mlp net;
  Vec omega;

  ValueFn(std::vector<int> layers, Rng& rng) : net(std::move(layers)) {
    if (net.out_dim() != 1)
      throw std::invalid_argument("ValueFn: output must be scalar");
    omega = net.init_params(rng, 1.0);
  }
};

struct PolicyOutput {
  Vec mean;
  Vec stddev;
};

inline PolicyOutput policy_forward(const GaussianPolicy& pol, const Vec& s) {
  if (!s.allFinite())
    throw std::invalid_argument("policy_forward: non-finite observation");
  PolicyOutput out;
  out.mean = pol.net.forward(pol.net_params(), s);
  out.stddev = pol.sigma();
  return out;
}

inline Mat policy_mean_batch(const GaussianPolicy& pol, const Mat& obs,
                             Mlp::Cache* cache = nullptr) {
  if (!obs.allFinite())
    throw std::invalid_argument("policy_mean_batch: non-finite observation");
  return pol.net.forward(pol.net_params(), obs, cache);
}

inline double gaussian_log_density(const Vec& a, const Vec& mean,
                                   const Vec& log_sigma) {
  double lp = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double s = std::exp(log_sigma(i));
    const double d = (a(i) - mean(i)) / s;
    lp += -0.5 * d * d - log_sigma(i) - 0.5 * std::log(kTwoPi);
  }
  return lp;
}

inline double log_prob(const GaussianPolicy& pol, const Vec& s, const Vec& a) {
  if (a.size() != pol.act_dim())
    throw std::invalid_argument("log_prob: action dimension mismatch");
  const Vec mean = pol.net.forward(pol.net_params(), s);
  return gaussian_log_density(a, mean, pol.log_sigma());
}

// Batched log-densities given already-computed means.
inline Vec gaussian_log_density_batch(const Mat& acts, const Mat& means,
                                      const Eigen::Ref<const Vec>& log_sigma) {
  const int batch = static_cast<int>(acts.cols());
  Vec lp(batch);
  const Vec inv_var = (-2.0 * log_sigma.array()).exp().matrix();
  const double base = -0.5 * std::log(kTwoPi) * acts.rows() - log_sigma.sum();
  for (int t = 0; t < batch; ++t) {
    const Vec d = acts.col(t) - means.col(t);
    lp(t) = base - 0.5 * d.cwiseProduct(d).dot(inv_var);
  }
  return lp;
}

inline Vec sample_action(const GaussianPolicy& pol, const Vec& mean, Rng& rng) {
  Vec a(pol.act_dim());
  const Vec sig = pol.sigma();
  for (int i = 0; i < a.size(); ++i) a(i) = mean(i) + sig(i) * rng.normal();
  return a;
}

// Entropy of the diagonal Gaussian; state-independent.
inline double policy_entropy(const GaussianPolicy& pol) {
  return pol.log_sigma().sum() +
         0.5 * pol.act_dim() * std::log(kTwoPi * std::exp(1.0));
}

}  // namespace symwalk::rl
