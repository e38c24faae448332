#pragma once

// Plain full-batch gradient descent: a generic exponential-loss trainer used
// by the critical-point probes, and fused one-hidden-layer trainers for the
// squared-loss approximation experiments, where the inner loops dominate
// runtime.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/dynamics.hpp"
#include "crnet/networks.hpp"
#include "crnet/rng.hpp"

namespace crnet {

struct TrainResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  bool reached_target = false;
};

// Plain full-batch gradient descent in short fixed-rate epochs. Monotone
// line searches pin the iterate on gate kinks, so steps are taken as-is;
// the rate adapts to the loss trend across an epoch (grown when the epoch
// improved, cut otherwise, reverted on divergence). Returns at the first
// state whose gradient norm is below the target.
template <typename Net>
TrainResult train_exp_loss(Net& net, const Dataset& data, double lr,
                           int max_steps, double grad_target) {
  data.validate();
  TrainResult res;
  auto loss_grad = [&](const Net& n, auto* g) {
    if constexpr (std::is_same_v<Net, CRNetwork>) {
      return loss_gradient_cr(n, data, g);
    } else {
      return loss_gradient_r(n, data, g);
    }
  };
  using GradVec = std::conditional_t<std::is_same_v<Net, CRNetwork>,
                                     std::vector<CMatrix>, std::vector<RMatrix>>;
  constexpr int kEpoch = 25;
  GradVec g;
  double loss = loss_grad(net, &g);
  Net epoch_start = net;
  double epoch_start_loss = loss;
  int step = 0;
  while (step < max_steps && lr > 1e-300) {
    for (int e = 0; e < kEpoch && step < max_steps; ++e, ++step) {
      res.steps = step;
      res.loss = loss;
      res.grad_norm = gradient_norm(g);
      if (res.grad_norm < grad_target) {
        res.reached_target = true;
        return res;
      }
      for (size_t l = 0; l < net.layers.size(); ++l) {
        for (size_t k = 0; k < net.layers[l].data().size(); ++k) {
          net.layers[l].data()[k] -= lr * g[l].data()[k];
        }
      }
      loss = loss_grad(net, &g);
      if (!std::isfinite(loss)) break;
    }
    if (!std::isfinite(loss)) {
      net = epoch_start;
      loss = loss_grad(net, &g);
      lr *= 0.1;
    } else if (loss < epoch_start_loss) {
      lr *= 1.5;
    } else {
      lr *= 0.3;
    }
    epoch_start = net;
    epoch_start_loss = loss;
  }
  res.loss = loss;
  res.grad_norm = gradient_norm(g);
  res.reached_target = res.grad_norm < grad_target;
  return res;
}

// ---- Fused one-hidden-layer trainers (squared loss) ----

// Complex net: input embedded to C^d (+ constant-one coordinate), m hidden
// zReLU units, complex output row, real-part readout.
class ShallowCRModel {
 public:
  ShallowCRModel(int d, int m, bool bias) : d_(d), m_(m), bias_(bias) {
    w1_.assign(static_cast<size_t>(m_) * cols(), cplx(0.0, 0.0));
    w2_.assign(m_, cplx(0.0, 0.0));
  }

  int d() const { return d_; }
  int hidden() const { return m_; }
  int cols() const { return d_ + (bias_ ? 1 : 0); }
  int real_param_count() const { return 2 * m_ * cols() + 2 * m_; }

  void init(Rng& rng, double out_scale) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(cols()));
    for (cplx& v : w1_) v = cplx(rng.normal() * s1, rng.normal() * s1);
    const double s2 = out_scale / std::sqrt(static_cast<double>(m_));
    for (cplx& v : w2_) v = cplx(rng.normal() * s2, rng.normal() * s2);
  }

  // Pre-embedded inputs: z has cols() entries per sample.
  static std::vector<cplx> embed_batch(const std::vector<RVector>& xs, int d,
                                       bool bias) {
    const int cols = d + (bias ? 1 : 0);
    std::vector<cplx> z(xs.size() * cols);
    for (size_t i = 0; i < xs.size(); ++i) {
      for (int k = 0; k < d; ++k) z[i * cols + k] = cplx(xs[i][k], xs[i][k + d]);
      if (bias) z[i * cols + d] = cplx(1.0, 0.0);
    }
    return z;
  }

  double forward_one(const cplx* z) const {
    double out = 0.0;
    for (int u = 0; u < m_; ++u) {
      const cplx* w = &w1_[static_cast<size_t>(u) * cols()];
      cplx acc(0.0, 0.0);
      for (int k = 0; k < cols(); ++k) acc += w[k] * z[k];
      if (zrelu_kept(acc)) {
        const cplx o = w2_[u] * acc;
        out += o.real();
      }
    }
    return out;
  }

  // Mean squared error and its gradient over the batch; returns the loss.
  double loss_and_grad(const std::vector<cplx>& z, const std::vector<double>& target,
                       std::vector<cplx>* g1, std::vector<cplx>* g2) const {
    const int n = static_cast<int>(target.size());
    const int c = cols();
    g1->assign(w1_.size(), cplx(0.0, 0.0));
    g2->assign(w2_.size(), cplx(0.0, 0.0));
    std::vector<cplx> act(m_);
    std::vector<std::uint8_t> kept(m_);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const cplx* zi = &z[static_cast<size_t>(i) * c];
      double out = 0.0;
      for (int u = 0; u < m_; ++u) {
        const cplx* w = &w1_[static_cast<size_t>(u) * c];
        cplx acc(0.0, 0.0);
        for (int k = 0; k < c; ++k) acc += w[k] * zi[k];
        act[u] = acc;
        kept[u] = zrelu_kept(acc) ? 1 : 0;
        if (kept[u]) out += (w2_[u] * acc).real();
      }
      const double err = out - target[i];
      loss += err * err;
      const double coef = 2.0 * err / n;
      for (int u = 0; u < m_; ++u) {
        if (!kept[u]) continue;
        // d out / d w2 pair = conj(act); d out / d w1 pair = conj(w2) conj(z).
        (*g2)[u] += coef * std::conj(act[u]);
        const cplx back = coef * std::conj(w2_[u]);
        cplx* gu = &(*g1)[static_cast<size_t>(u) * c];
        for (int k = 0; k < c; ++k) gu[k] += back * std::conj(zi[k]);
      }
    }
    return loss / n;
  }

  double mse(const std::vector<cplx>& z, const std::vector<double>& target) const {
    const int n = static_cast<int>(target.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double err = forward_one(&z[static_cast<size_t>(i) * cols()]) - target[i];
      loss += err * err;
    }
    return loss / n;
  }

  std::vector<cplx> w1_, w2_;

 private:
  int d_, m_;
  bool bias_;
};

// Real net: input (+ constant-one coordinate), m hidden ReLU units, linear
// output.
class ShallowRModel {
 public:
  ShallowRModel(int dim, int m, bool bias) : dim_(dim), m_(m), bias_(bias) {
    w1_.assign(static_cast<size_t>(m_) * cols(), 0.0);
    w2_.assign(m_, 0.0);
  }

  int dim() const { return dim_; }
  int hidden() const { return m_; }
  int cols() const { return dim_ + (bias_ ? 1 : 0); }
  int real_param_count() const { return m_ * cols() + m_; }

  void init(Rng& rng, double out_scale) {
    const double s1 = std::sqrt(2.0 / cols());
    for (double& v : w1_) v = rng.normal() * s1;
    const double s2 = out_scale / std::sqrt(static_cast<double>(m_));
    for (double& v : w2_) v = rng.normal() * s2;
  }

  static std::vector<double> augment_batch(const std::vector<RVector>& xs,
                                           int dim, bool bias) {
    const int cols = dim + (bias ? 1 : 0);
    std::vector<double> z(xs.size() * cols);
    for (size_t i = 0; i < xs.size(); ++i) {
      for (int k = 0; k < dim; ++k) z[i * cols + k] = xs[i][k];
      if (bias) z[i * cols + dim] = 1.0;
    }
    return z;
  }

  double forward_one(const double* x) const {
    double out = 0.0;
    for (int u = 0; u < m_; ++u) {
      const double* w = &w1_[static_cast<size_t>(u) * cols()];
      double acc = 0.0;
      for (int k = 0; k < cols(); ++k) acc += w[k] * x[k];
      if (acc > 0.0) out += w2_[u] * acc;
    }
    return out;
  }

  double loss_and_grad(const std::vector<double>& x, const std::vector<double>& target,
                       std::vector<double>* g1, std::vector<double>* g2) const {
    const int n = static_cast<int>(target.size());
    const int c = cols();
    g1->assign(w1_.size(), 0.0);
    g2->assign(w2_.size(), 0.0);
    std::vector<double> act(m_);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* xi = &x[static_cast<size_t>(i) * c];
      double out = 0.0;
      for (int u = 0; u < m_; ++u) {
        const double* w = &w1_[static_cast<size_t>(u) * c];
        double acc = 0.0;
        for (int k = 0; k < c; ++k) acc += w[k] * xi[k];
        act[u] = acc;
        if (acc > 0.0) out += w2_[u] * acc;
      }
      const double err = out - target[i];
      loss += err * err;
      const double coef = 2.0 * err / n;
      for (int u = 0; u < m_; ++u) {
        if (act[u] <= 0.0) continue;
        (*g2)[u] += coef * act[u];
        const double back = coef * w2_[u];
        double* gu = &(*g1)[static_cast<size_t>(u) * c];
        for (int k = 0; k < c; ++k) gu[k] += back * xi[k];
      }
    }
    return loss / n;
  }

  double mse(const std::vector<double>& x, const std::vector<double>& target) const {
    const int n = static_cast<int>(target.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double err = forward_one(&x[static_cast<size_t>(i) * cols()]) - target[i];
      loss += err * err;
    }
    return loss / n;
  }

  std::vector<double> w1_, w2_;

 private:
  int dim_, m_;
  bool bias_;
};

struct SqTrainOptions {
  double lr = 0.05;
  int steps = 2000;
  double lr_floor = 1e-14;
};

// Gradient descent with halving on loss increase and best-iterate tracking.
template <typename Model, typename Batch>
double train_squared_loss(Model& model, const Batch& z,
                          const std::vector<double>& target,
                          const SqTrainOptions& opt) {
  auto w1_best = model.w1_;
  auto w2_best = model.w2_;
  std::decay_t<decltype(model.w1_)> g1;
  std::decay_t<decltype(model.w2_)> g2;
  double lr = opt.lr;
  double loss = model.loss_and_grad(z, target, &g1, &g2);
  double best = loss;
  for (int step = 0; step < opt.steps && lr > opt.lr_floor; ++step) {
    auto w1_prev = model.w1_;
    auto w2_prev = model.w2_;
    for (size_t k = 0; k < model.w1_.size(); ++k) model.w1_[k] -= lr * g1[k];
    for (size_t k = 0; k < model.w2_.size(); ++k) model.w2_[k] -= lr * g2[k];
    const double new_loss = model.loss_and_grad(z, target, &g1, &g2);
    if (new_loss > loss) {
      model.w1_ = std::move(w1_prev);
      model.w2_ = std::move(w2_prev);
      lr *= 0.5;
      // Gradient buffers refer to the rejected point; recompute at the
      // restored parameters.
      loss = model.loss_and_grad(z, target, &g1, &g2);
      continue;
    }
    loss = new_loss;
    if (loss < best) {
      best = loss;
      w1_best = model.w1_;
      w2_best = model.w2_;
    }
  }
  model.w1_ = std::move(w1_best);
  model.w2_ = std::move(w2_best);
  return best;
}

}  // namespace crnet
