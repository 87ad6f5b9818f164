#pragma once

#include <stdexcept>
#include <vector>

#include "symwalk/core/math.hpp"
#include "symwalk/core/rng.hpp"

namespace symwalk::rl {

// Fully connected tanh network with a linear output layer. Parameters live
// in a flat vector owned by the caller: per layer, the weight matrix
// (column-major) followed by the bias. Forward/backward are batched with one
// sample per column.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layers) : layers_(std::move(layers)) {
    if (layers_.size() < 2)
      throw std::invalid_argument("Mlp: need at least input and output sizes");
    n_params_ = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
      n_params_ += layers_[l + 1] * layers_[l] + layers_[l + 1];
  }

  int n_params() const { return n_params_; }
  int in_dim() const { return layers_.front(); }
  int out_dim() const { return layers_.back(); }
  const std::vector<int>& layers() const { return layers_; }

  struct Cache {
    std::vector<Mat> acts;  // acts[0] = input, acts[l] = layer l output
  };

  Mat forward(const Eigen::Ref<const Vec>& params, const Mat& x,
              Cache* cache = nullptr) const {
    check_params(params);
    if (x.rows() != in_dim())
      throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    if (cache) {
      cache->acts.clear();
      cache->acts.push_back(x);
    }
    Mat h = x;
    int offset = 0;
    const int n_layers = static_cast<int>(layers_.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
      const int rows = layers_[l + 1], cols = layers_[l];
      Eigen::Map<const Mat> w(params.data() + offset, rows, cols);
      Eigen::Map<const Vec> b(params.data() + offset + rows * cols, rows);
      offset += rows * cols + rows;
      h = (w * h).colwise() + b;
      if (l + 1 < n_layers) h = h.array().tanh().matrix();
      if (cache) cache->acts.push_back(h);
    }
    return h;
  }

  // Accumulates parameter gradients for upstream d_out (out_dim x batch).
  // d_in, when requested, receives the gradient wrt the input.
  void backward(const Eigen::Ref<const Vec>& params, const Cache& cache,
                const Mat& d_out, Eigen::Ref<Vec> d_params,
                Mat* d_in = nullptr) const {
    check_params(params);
    const int n_layers = static_cast<int>(layers_.size()) - 1;
    std::vector<int> offsets(n_layers);
    int offset = 0;
    for (int l = 0; l < n_layers; ++l) {
      offsets[l] = offset;
      offset += layers_[l + 1] * layers_[l] + layers_[l + 1];
    }

    Mat delta = d_out;
    for (int l = n_layers - 1; l >= 0; --l) {
      const int rows = layers_[l + 1], cols = layers_[l];
      Eigen::Map<const Mat> w(params.data() + offsets[l], rows, cols);
      Eigen::Map<Mat> dw(d_params.data() + offsets[l], rows, cols);
      Eigen::Map<Vec> db(d_params.data() + offsets[l] + rows * cols, rows);
      dw.noalias() += delta * cache.acts[l].transpose();
      db.noalias() += delta.rowwise().sum();
      if (l > 0) {
        delta = (w.transpose() * delta).eval();
        // through tanh of the previous hidden layer
        delta.array() *= 1.0 - cache.acts[l].array().square();
      } else if (d_in) {
        *d_in = w.transpose() * delta;
      }
    }
  }

  // Scaled uniform init; out_scale shrinks the output layer (useful for
  // near-zero initial policy means).
  Vec init_params(Rng& rng, double out_scale = 1.0) const {
    Vec p(n_params_);
    int offset = 0;
    const int n_layers = static_cast<int>(layers_.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
      const int rows = layers_[l + 1], cols = layers_[l];
      const double bound = std::sqrt(6.0 / (rows + cols)) *
                           ((l + 1 == n_layers) ? out_scale : 1.0);
      for (int i = 0; i < rows * cols; ++i)
        p(offset + i) = rng.uniform(-bound, bound);
      offset += rows * cols;
      for (int i = 0; i < rows; ++i) p(offset + i) = 0.0;
      offset += rows;
    }
    return p;
  }

 private:
  void check_params(const Eigen::Ref<const Vec>& params) const {
    if (params.size() != n_params_)
      throw std::invalid_argument("Mlp: parameter vector size mismatch");
  }

  std::vector<int> layers_;
  int n_params_ = 0;
};

// Adaptive moment estimation over a flat parameter vector.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec m, v;
  long t = 0;

  explicit Adam(double learning_rate = 3e-4) : lr(learning_rate) {}

  void step(Eigen::Ref<Vec> params, const Vec& grad) {
    if (m.size() != params.size()) {
      m = Vec::Zero(params.size());
      v = Vec::Zero(params.size());
      t = 0;
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    params -= (lr / bc1) * m.cwiseQuotient(
                               ((v / bc2).cwiseSqrt().array() + eps).matrix());
  }
};

}  // namespace symwalk::rl
