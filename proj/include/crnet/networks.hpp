#pragma once

// Parameter containers and exact manual gradients for both network families:
// complex layers with zReLU activation and a real-part readout, and real
// layers with ReLU. Also the weight-normalized (gamma, V) parametrization
// and the real <-> complex parameter-matching layer plan.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/rng.hpp"

namespace crnet {

// Real input of length 2d -> complex vector of length d,
// z_k = x_k + i x_{k+d}. Norm preserving.
inline CVector embed(const RVector& x) {
  if (x.size() % 2 != 0) {
    throw std::invalid_argument("embed: input length must be even");
  }
  const size_t d = x.size() / 2;
  CVector z(d);
  for (size_t k = 0; k < d; ++k) z[k] = cplx(x[k], x[k + d]);
  return z;
}

// Complex-reaction network: complex layers, zReLU between them, final layer
// linear with the real part taken as output. Depth >= 2 (at least one hidden
// layer). If input_bias is set, a constant 1 coordinate is appended to the
// embedded input; deeper layers carry no implicit bias.
struct CRNetwork {
  int d = 0;  // complex input dimension (real inputs have length 2d)
  bool input_bias = false;
  std::vector<CMatrix> layers;

  int input_cols() const { return d + (input_bias ? 1 : 0); }

  void validate() const {
    if (layers.size() < 2) {
      throw std::invalid_argument("CRNetwork: depth must be >= 2");
    }
    if (layers.front().cols() != input_cols()) {
      throw std::invalid_argument("CRNetwork: first layer width mismatch");
    }
    for (size_t l = 1; l < layers.size(); ++l) {
      if (layers[l].cols() != layers[l - 1].rows()) {
        throw std::invalid_argument("CRNetwork: layer " + std::to_string(l) +
                                    " does not compose");
      }
    }
    if (layers.back().rows() != 1) {
      throw std::invalid_argument("CRNetwork: output layer must be a single row");
    }
  }
};

// Real network with ReLU activation; depth >= 1 (a single layer is linear).
struct RNetwork {
  int dim = 0;  // real input dimension
  bool input_bias = false;
  std::vector<RMatrix> layers;

  int input_cols() const { return dim + (input_bias ? 1 : 0); }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("RNetwork: no layers");
    if (layers.front().cols() != input_cols()) {
      throw std::invalid_argument("RNetwork: first layer width mismatch");
    }
    for (size_t l = 1; l < layers.size(); ++l) {
      if (layers[l].cols() != layers[l - 1].rows()) {
        throw std::invalid_argument("RNetwork: layer " + std::to_string(l) +
                                    " does not compose");
      }
    }
    if (layers.back().rows() != 1) {
      throw std::invalid_argument("RNetwork: output layer must be a single row");
    }
  }
};

struct CRTrace {
  std::vector<CVector> h;  // h[0] = (embedded, biased) input; h[l] post-activation
  std::vector<CVector> a;  // a[l] pre-activation of layer l (0-based)
  double out = 0.0;
};

inline CVector cr_input(const CRNetwork& net, const RVector& x) {
  if (static_cast<int>(x.size()) != 2 * net.d) {
    throw std::invalid_argument("forward_cr: input length must be 2d");
  }
  CVector z = embed(x);
  if (net.input_bias) z.push_back(cplx(1.0, 0.0));
  return z;
}

inline CRTrace forward_cr_trace(const CRNetwork& net, const RVector& x) {
  CRTrace tr;
  tr.h.push_back(cr_input(net, x));
  const size_t L = net.layers.size();
  for (size_t l = 0; l < L; ++l) {
    CVector a = matvec(net.layers[l], tr.h.back());
    tr.a.push_back(a);
    if (l + 1 < L) {
      for (cplx& v : a) v = zrelu(v);
      tr.h.push_back(std::move(a));
    } else {
      tr.out = a[0].real();
    }
  }
  return tr;
}

inline double forward_cr(const CRNetwork& net, const RVector& x) {
  return forward_cr_trace(net, x).out;
}

// Per-layer gradient grids G with Re(G) = d out / d Re(W) and
// Im(G) = d out / d Im(W), by backward accumulation through the
// zReLU gates. G^l = u^l (conj h^{l-1})^T with u the layer adjoint.
inline std::vector<CMatrix> grad_cr(const CRNetwork& net, const RVector& x,
                                    CRTrace* trace_out = nullptr) {
  CRTrace tr = forward_cr_trace(net, x);
  const size_t L = net.layers.size();
  std::vector<CMatrix> grads(L);
  CVector u(1, cplx(1.0, 0.0));  // adjoint of the output pre-activation
  for (size_t l = L; l-- > 0;) {
    const CVector& hin = tr.h[l];
    CMatrix g(net.layers[l].rows(), net.layers[l].cols());
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) g(r, c) = u[r] * std::conj(hin[c]);
    }
    grads[l] = std::move(g);
    if (l > 0) {
      const CMatrix& w = net.layers[l];
      CVector un(w.cols(), cplx(0.0, 0.0));
      for (int c = 0; c < w.cols(); ++c) {
        cplx acc(0.0, 0.0);
        for (int r = 0; r < w.rows(); ++r) acc += std::conj(w(r, c)) * u[r];
        un[c] = acc;
      }
      // Gate of layer l-1.
      for (int c = 0; c < w.cols(); ++c) {
        if (!zrelu_kept(tr.a[l - 1][c])) un[c] = cplx(0.0, 0.0);
      }
      u = std::move(un);
    }
  }
  if (trace_out) *trace_out = std::move(tr);
  return grads;
}

inline double relu(double x) { return x >= 0.0 ? x : 0.0; }
inline bool relu_kept(double x) { return x >= 0.0; }

struct RTrace {
  std::vector<RVector> h;
  std::vector<RVector> a;
  double out = 0.0;
};

inline RVector r_input(const RNetwork& net, const RVector& x) {
  if (static_cast<int>(x.size()) != net.dim) {
    throw std::invalid_argument("forward_r: input length mismatch");
  }
  RVector h = x;
  if (net.input_bias) h.push_back(1.0);
  return h;
}

inline RTrace forward_r_trace(const RNetwork& net, const RVector& x) {
  RTrace tr;
  tr.h.push_back(r_input(net, x));
  const size_t L = net.layers.size();
  for (size_t l = 0; l < L; ++l) {
    RVector a = matvec(net.layers[l], tr.h.back());
    tr.a.push_back(a);
    if (l + 1 < L) {
      for (double& v : a) v = relu(v);
      tr.h.push_back(std::move(a));
    } else {
      tr.out = a[0];
    }
  }
  return tr;
}

inline double forward_r(const RNetwork& net, const RVector& x) {
  return forward_r_trace(net, x).out;
}

inline std::vector<RMatrix> grad_r(const RNetwork& net, const RVector& x,
                                   RTrace* trace_out = nullptr) {
  RTrace tr = forward_r_trace(net, x);
  const size_t L = net.layers.size();
  std::vector<RMatrix> grads(L);
  RVector u(1, 1.0);
  for (size_t l = L; l-- > 0;) {
    const RVector& hin = tr.h[l];
    RMatrix g(net.layers[l].rows(), net.layers[l].cols());
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) g(r, c) = u[r] * hin[c];
    }
    grads[l] = std::move(g);
    if (l > 0) {
      const RMatrix& w = net.layers[l];
      RVector un(w.cols(), 0.0);
      for (int c = 0; c < w.cols(); ++c) {
        double acc = 0.0;
        for (int r = 0; r < w.rows(); ++r) acc += w(r, c) * u[r];
        un[c] = relu_kept(tr.a[l - 1][c]) ? acc : 0.0;
      }
      u = std::move(un);
    }
  }
  if (trace_out) *trace_out = std::move(tr);
  return grads;
}

// Weight normalization W^l_j = gamma^l_j V^l_j with gamma > 0, ||V|| = 1.
template <typename Matrix>
struct Normalized {
  std::vector<std::vector<double>> gamma;  // [layer][row]
  std::vector<Matrix> dirs;                // unit rows
};

using CRNormalized = Normalized<CMatrix>;
using RNormalized = Normalized<RMatrix>;

namespace detail {

inline double row_norm(const CMatrix& w, int r) {
  double s = 0.0;
  for (int c = 0; c < w.cols(); ++c) s += std::norm(w(r, c));
  return std::sqrt(s);
}

inline double row_norm(const RMatrix& w, int r) {
  double s = 0.0;
  for (int c = 0; c < w.cols(); ++c) s += w(r, c) * w(r, c);
  return std::sqrt(s);
}

}  // namespace detail

template <typename Matrix>
Normalized<Matrix> normalize_layers(const std::vector<Matrix>& layers) {
  Normalized<Matrix> n;
  for (const Matrix& w : layers) {
    std::vector<double> g(w.rows());
    Matrix v = w;
    for (int r = 0; r < w.rows(); ++r) {
      const double s = detail::row_norm(w, r);
      if (s == 0.0) throw std::invalid_argument("normalize: zero row");
      g[r] = s;
      for (int c = 0; c < w.cols(); ++c) v(r, c) = w(r, c) / s;
    }
    n.gamma.push_back(std::move(g));
    n.dirs.push_back(std::move(v));
  }
  return n;
}

template <typename Matrix>
std::vector<Matrix> denormalize_layers(const Normalized<Matrix>& n) {
  std::vector<Matrix> layers;
  for (size_t l = 0; l < n.dirs.size(); ++l) {
    Matrix w = n.dirs[l];
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) w(r, c) *= n.gamma[l][r];
    }
    layers.push_back(std::move(w));
  }
  return layers;
}

// Complex layer plan matching the real-parameter count of a real p x q layer.
// Parity cases: if q is even the complex layer is p inputs x q/2 units; else
// if p is even it is p/2 inputs x q units; else ((p+1)/2) inputs x q units
// with the imaginary part of the last input forced to zero, which masks one
// imaginary weight per unit.
struct ComplexLayerPlan {
  int inputs = 0;
  int units = 0;
  bool mask_last_input_imag = false;

  int real_param_count() const {
    int c = 2 * inputs * units;
    if (mask_last_input_imag) c -= units;
    return c;
  }
};

inline ComplexLayerPlan match_parameter_structure(int p, int q) {
  if (p < 1 || q < 1) {
    throw std::invalid_argument("match_parameter_structure: p, q must be >= 1");
  }
  ComplexLayerPlan plan;
  if (q % 2 == 0) {
    plan.inputs = p;
    plan.units = q / 2;
  } else if (p % 2 == 0) {
    plan.inputs = p / 2;
    plan.units = q;
  } else {
    plan.inputs = (p + 1) / 2;
    plan.units = q;
    plan.mask_last_input_imag = true;
  }
  return plan;
}

// Complex weights: independent real/imaginary Gaussian entries scaled by
// 1/sqrt(fan-in); real nets He-style.
inline CRNetwork random_cr_network(int d, const std::vector<int>& hidden,
                                   Rng& rng, bool input_bias = false) {
  CRNetwork net;
  net.d = d;
  net.input_bias = input_bias;
  int in = net.input_cols();
  for (size_t l = 0; l <= hidden.size(); ++l) {
    const int out = l < hidden.size() ? hidden[l] : 1;
    CMatrix w(out, in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (cplx& v : w.data()) v = cplx(rng.normal() * scale, rng.normal() * scale);
    net.layers.push_back(std::move(w));
    in = out;
  }
  net.validate();
  return net;
}

inline RNetwork random_r_network(int dim, const std::vector<int>& hidden,
                                 Rng& rng, bool input_bias = false) {
  RNetwork net;
  net.dim = dim;
  net.input_bias = input_bias;
  int in = net.input_cols();
  for (size_t l = 0; l <= hidden.size(); ++l) {
    const int out = l < hidden.size() ? hidden[l] : 1;
    RMatrix w(out, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : w.data()) v = rng.normal() * scale;
    net.layers.push_back(std::move(w));
    in = out;
  }
  net.validate();
  return net;
}

}  // namespace crnet
