#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "symwalk/core/math.hpp"
#include "symwalk/walk/types.hpp"

namespace symwalk::walk {

// One curve-fitting constraint. Position/Velocity constrain the oscillator
// output directly; Zmp constrains the pendulum-propagated trajectory, i.e.
// each term amplitude is scaled by 1 + (n*beta/omega0)^2.
enum class ConstraintKind { Position, Velocity, Zmp };

struct FitConstraint {
  ConstraintKind kind = ConstraintKind::Position;
  double t = 0.0;
  double value = 0.0;
  double weight = 1.0;
};

struct FitOptions {
  int max_iters = 200;
  double grad_tol = 1e-10;
  bool linear_init = true;
  double init_lambda = 1e-4;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitResult {
  PfsOscillator osc;
  double residual_rms = 0.0;  // unweighted RMS over the constraint set
  int iterations = 0;
};

namespace detail {

inline double term_scale(ConstraintKind kind, int n, double beta,
                         double omega0) {
  if (kind != ConstraintKind::Zmp) return 1.0;
  const double r = n * beta / omega0;
  return 1.0 + r * r;
}

inline double model_value(const PfsOscillator& o, const FitConstraint& c,
                          double omega0) {
  double s = 0.0;
  for (int n = 0; n <= o.terms(); ++n) {
    const double nb = n * o.beta;
    const double arg = nb * c.t + o.phase[n];
    const double scale = term_scale(c.kind, n, o.beta, omega0);
    if (c.kind == ConstraintKind::Velocity)
      s += o.amp[n] * nb * std::cos(arg);
    else
      s += o.amp[n] * scale * std::sin(arg);
  }
  return s;
}

// Rows of the Jacobian wrt params [A_0..A_N, phi_0..phi_N].
inline void model_jacobian_row(const PfsOscillator& o, const FitConstraint& c,
                               double omega0, Eigen::RowVectorXd& row) {
  const int terms = o.terms();
  for (int n = 0; n <= terms; ++n) {
    const double nb = n * o.beta;
    const double arg = nb * c.t + o.phase[n];
    const double scale = term_scale(c.kind, n, o.beta, omega0);
    if (c.kind == ConstraintKind::Velocity) {
      row(n) = nb * std::cos(arg);
      row(terms + 1 + n) = -o.amp[n] * nb * std::sin(arg);
    } else {
      row(n) = scale * std::sin(arg);
      row(terms + 1 + n) = o.amp[n] * scale * std::cos(arg);
    }
  }
}

// The same model is linear in (a_n, b_n) = (A_n cos phi_n, A_n sin phi_n);
// solving that system gives a starting point at (or near) the optimum.
inline PfsOscillator linear_seed(const std::vector<FitConstraint>& cons,
                                 int n_terms, double beta, double omega0) {
  const int cols = 2 * (n_terms + 1);
  Mat design(cons.size(), cols);
  Vec target(cons.size());
  for (std::size_t k = 0; k < cons.size(); ++k) {
    const auto& c = cons[k];
    const double w = std::sqrt(c.weight);
    target(k) = w * c.value;
    for (int n = 0; n <= n_terms; ++n) {
      const double nb = n * beta;
      const double scale = term_scale(c.kind, n, beta, omega0);
      double da, db;
      if (c.kind == ConstraintKind::Velocity) {
        da = nb * std::cos(nb * c.t);
        db = -nb * std::sin(nb * c.t);
      } else {
        da = scale * std::sin(nb * c.t);
        db = scale * std::cos(nb * c.t);
      }
      design(k, 2 * n) = w * da;
      design(k, 2 * n + 1) = w * db;
    }
  }
  // ridge keeps rank-deficient systems (e.g. the unused a_0 column) tame
  Mat gram = design.transpose() * design;
  gram.diagonal().array() += 1e-12;
  Vec ab = gram.ldlt().solve(design.transpose() * target);

  PfsOscillator osc;
  osc.beta = beta;
  osc.amp.resize(n_terms + 1);
  osc.phase.resize(n_terms + 1);
  for (int n = 0; n <= n_terms; ++n) {
    const double a = ab(2 * n), b = ab(2 * n + 1);
    osc.amp[n] = std::hypot(a, b);
    osc.phase[n] = (osc.amp[n] > 0.0) ? std::atan2(b, a) : 0.0;
  }
  return osc;
}

}  // namespace detail

// Damped Gauss-Newton over the amplitude/phase parameterization with
// analytic Jacobians. Converges when the gradient infinity-norm drops below
// grad_tol; throws FitError past the iteration budget.
inline FitResult fit_pfs(const std::vector<FitConstraint>& cons, int n_terms,
                         double beta, const LipmParams& lipm,
                         const FitOptions& opt = {}) {
  if (n_terms < 1) throw std::invalid_argument("fit_pfs: n_terms must be >= 1");
  if (cons.empty()) throw std::invalid_argument("fit_pfs: empty constraint set");
  if (beta <= 0.0) throw std::invalid_argument("fit_pfs: beta must be positive");

  PfsOscillator osc;
  if (opt.linear_init) {
    osc = detail::linear_seed(cons, n_terms, beta, lipm.omega0);
  } else {
    osc.beta = beta;
    osc.amp.assign(n_terms + 1, 1e-3);
    osc.phase.assign(n_terms + 1, 0.0);
  }

  const int n_params = 2 * (n_terms + 1);
  const int m = static_cast<int>(cons.size());

  auto pack = [&](const PfsOscillator& o) {
    Vec p(n_params);
    for (int n = 0; n <= n_terms; ++n) {
      p(n) = o.amp[n];
      p(n_terms + 1 + n) = o.phase[n];
    }
    return p;
  };
  auto unpack = [&](const Vec& p) {
    PfsOscillator o = osc;
    for (int n = 0; n <= n_terms; ++n) {
      o.amp[n] = p(n);
      o.phase[n] = p(n_terms + 1 + n);
    }
    return o;
  };
  auto residuals = [&](const PfsOscillator& o) {
    Vec r(m);
    for (int k = 0; k < m; ++k)
      r(k) = std::sqrt(cons[k].weight) *
             (detail::model_value(o, cons[k], lipm.omega0) - cons[k].value);
    return r;
  };

  Vec p = pack(osc);
  Vec r = residuals(osc);
  double cost = 0.5 * r.squaredNorm();
  double lambda = opt.init_lambda;
  int iter = 0;

  auto fail = [&](double grad_norm) {
    std::ostringstream msg;
    msg << "fit_pfs: no convergence in " << iter << " iterations (grad norm "
        << grad_norm << ", cost " << cost << ")";
    throw FitError(msg.str());
  };

  Eigen::RowVectorXd row(n_params);
  for (;; ++iter) {
    const PfsOscillator cur = unpack(p);
    Mat jac(m, n_params);
    for (int k = 0; k < m; ++k) {
      detail::model_jacobian_row(cur, cons[k], lipm.omega0, row);
      jac.row(k) = std::sqrt(cons[k].weight) * row;
    }
    Vec grad = jac.transpose() * r;
    const double grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm < opt.grad_tol) break;
    if (iter >= opt.max_iters) fail(grad_norm);

    bool stepped = false;
    for (int attempt = 0; attempt < 25 && !stepped; ++attempt) {
      Mat h = jac.transpose() * jac;
      h.diagonal().array() += lambda;
      Vec delta = h.ldlt().solve(-grad);
      Vec p_try = p + delta;
      Vec r_try = residuals(unpack(p_try));
      const double cost_try = 0.5 * r_try.squaredNorm();
      if (cost_try <= cost) {
        p = p_try;
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) fail(grad_norm);  // damping saturated without progress
  }

  FitResult out;
  out.osc = unpack(p);
  out.iterations = iter;
  double sq = 0.0;
  for (int k = 0; k < m; ++k) {
    const double e =
        detail::model_value(out.osc, cons[k], lipm.omega0) - cons[k].value;
    sq += e * e;
  }
  out.residual_rms = std::sqrt(sq / m);
  return out;
}

}  // namespace symwalk::walk
