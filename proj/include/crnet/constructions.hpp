#pragma once

// Executable approximator constructions: the 1-D ReLU interpolant, a sector
// gadget approximating |z| from one complex layer plus a max tournament, and
// the assembled radial approximator g(||x||) with certified error budgets.
//
// Assembly invariant: after the first layer, every hidden unit has the form
// sigma_cr(real combination + (c + i C) * carry). When C exceeds the
// magnitude of any imaginary junk reaching the unit, the pre-activation has
// strictly positive imaginary part, the gate reduces to {Re >= 0}, and the
// real part of the unit equals relu(real combination) exactly. Real signals
// therefore propagate exactly; the junk only rides the imaginary parts and
// is discarded by the final real-part readout.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/networks.hpp"
#include "crnet/rng.hpp"

namespace crnet {

// One-hidden-layer real ReLU form: sum alpha_i relu(beta_i x - b_i) - a.
struct Ridge1DApproximator {
  std::vector<double> alpha, beta, b;
  double offset = 0.0;

  int width() const { return static_cast<int>(alpha.size()); }

  double operator()(double x) const {
    double s = -offset;
    for (size_t i = 0; i < alpha.size(); ++i) {
      const double pre = beta[i] * x - b[i];
      if (pre > 0.0) s += alpha[i] * pre;
    }
    return s;
  }

  double lipschitz_bound() const {
    double lo = 0.0;  // slope accumulates left to right (all beta = 1)
    double worst = 0.0;
    for (double a : alpha) {
      lo += a;
      worst = std::max(worst, std::abs(lo));
    }
    return worst;
  }
};

// Knot interpolation of an L-Lipschitz f on [lo, hi] to sup error <= delta.
template <typename F>
Ridge1DApproximator build_ridge_on_interval(const F& f, double lipschitz,
                                            double lo, double hi, double delta,
                                            int width_cap = 1 << 20) {
  if (!(delta > 0.0) || !(hi > lo) || lipschitz < 0.0) {
    throw std::invalid_argument("build_ridge: need hi > lo, delta > 0, L >= 0");
  }
  const double span = hi - lo;
  // Piecewise-linear interpolation of a Lipschitz function at spacing h has
  // sup error at most L h / 2; h = 2 delta / L meets the target.
  int m = std::max(1, static_cast<int>(std::ceil(lipschitz * span / (2.0 * delta))));
  if (m > width_cap) {
    throw std::invalid_argument("build_ridge: width " + std::to_string(m) +
                                " exceeds cap at requested delta");
  }
  const double h = span / m;
  std::vector<double> fx(m + 1);
  for (int k = 0; k <= m; ++k) fx[k] = f(lo + k * h);

  Ridge1DApproximator out;
  out.offset = -fx[0];
  double prev_slope = 0.0;
  double scale = 0.0;
  for (int k = 0; k <= m; ++k) scale = std::max(scale, std::abs(fx[k]));
  const double prune = 1e-13 * std::max(1.0, scale + lipschitz);
  for (int k = 0; k < m; ++k) {
    const double slope = (fx[k + 1] - fx[k]) / h;
    const double jump = slope - prev_slope;
    if (std::abs(jump) > prune) {
      out.alpha.push_back(jump);
      out.beta.push_back(1.0);
      out.b.push_back(lo + k * h);
    }
    prev_slope = slope;
  }
  return out;
}

// Domain [-R, R].
template <typename F>
Ridge1DApproximator build_1d_relu(const F& f, double lipschitz, double r,
                                  double delta, int width_cap = 1 << 20) {
  if (!(r > 0.0)) throw std::invalid_argument("build_1d_relu: R must be > 0");
  return build_ridge_on_interval(f, lipschitz, -r, r, delta, width_cap);
}

// ---- Exact-ReLU assembly on zReLU layers ----

// Affine combination of the previous layer's unit real parts.
struct Combo {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static Combo unit(int idx, double coeff = 1.0) {
    Combo c;
    c.terms.push_back({idx, coeff});
    return c;
  }
};

inline Combo combo_add(const Combo& a, const Combo& b, double bscale = 1.0) {
  Combo out = a;
  out.constant += bscale * b.constant;
  for (const auto& [idx, w] : b.terms) {
    bool merged = false;
    for (auto& [oi, ow] : out.terms) {
      if (oi == idx) {
        ow += bscale * w;
        merged = true;
        break;
      }
    }
    if (!merged) out.terms.push_back({idx, bscale * w});
  }
  return out;
}

inline Combo combo_scale(const Combo& a, double s) {
  Combo out = a;
  out.constant *= s;
  for (auto& [idx, w] : out.terms) w *= s;
  return out;
}

class ZReluAssembler {
 public:
  // d complex input coordinates plus a constant-one bias coordinate;
  // input_bound must dominate |x_p| over the intended domain.
  ZReluAssembler(int d, double input_bound)
      : d_(d), input_bound_(input_bound) {}

  // Layer-1 unit sigma_cr(w x_coord + i C): real part relu(Re(w x_coord)).
  int add_projection_unit(int coord, cplx w) {
    if (committed_ > 0) throw std::logic_error("projection units go in layer 1");
    Layer1Unit u{coord, w};
    layer1_.push_back(u);
    return static_cast<int>(layer1_.size()) - 1;
  }

  void finish_input_layer() {
    if (committed_ > 0) throw std::logic_error("input layer already committed");
    CMatrix w(static_cast<int>(layer1_.size()) + 1, d_ + 1);
    std::vector<double> junk(layer1_.size() + 1, 0.0);
    for (size_t u = 0; u < layer1_.size(); ++u) {
      const double reach = std::abs(layer1_[u].w) * input_bound_;
      const double lift = reach + 1.0;
      w(static_cast<int>(u), layer1_[u].coord) = layer1_[u].w;
      w(static_cast<int>(u), d_) = cplx(0.0, lift);
      junk[u] = lift + reach;
    }
    w(static_cast<int>(layer1_.size()), d_) = cplx(1.0, 0.0);  // carry
    junk[layer1_.size()] = 0.0;
    layers_.push_back(std::move(w));
    junk_.push_back(std::move(junk));
    committed_ = 1;
    carry_ = static_cast<int>(layer1_.size());
  }

  int carry() const { return carry_; }

  // relu(combo of previous layer's real parts + constant).
  int add_relu_unit(const Combo& pre) {
    if (committed_ == 0) throw std::logic_error("commit the input layer first");
    pending_.push_back(pre);
    return static_cast<int>(pending_.size()) - 1;
  }

  void commit_layer() {
    const int prev_units = layers_.back().rows();
    CMatrix w(static_cast<int>(pending_.size()) + 1, prev_units);
    std::vector<double> junk(pending_.size() + 1, 0.0);
    for (size_t u = 0; u < pending_.size(); ++u) {
      double junk_in = 0.0;
      for (const auto& [idx, coeff] : pending_[u].terms) {
        w(static_cast<int>(u), idx) += cplx(coeff, 0.0);
        junk_in += std::abs(coeff) * junk_.back()[idx];
      }
      const double lift = junk_in + 1.0;
      w(static_cast<int>(u), carry_) += cplx(pending_[u].constant, lift);
      junk[u] = junk_in + lift;
    }
    w(static_cast<int>(pending_.size()), carry_) = cplx(1.0, 0.0);
    carry_ = static_cast<int>(pending_.size());
    layers_.push_back(std::move(w));
    junk_.push_back(std::move(junk));
    pending_.clear();
    committed_ += 1;
  }

  CRNetwork finish(const Combo& readout) {
    if (!pending_.empty()) throw std::logic_error("uncommitted units at finish");
    CMatrix w(1, layers_.back().rows());
    for (const auto& [idx, coeff] : readout.terms) w(0, idx) += cplx(coeff, 0.0);
    w(0, carry_) += cplx(readout.constant, 0.0);
    CRNetwork net;
    net.d = d_;
    net.input_bias = true;
    net.layers = layers_;
    net.layers.push_back(std::move(w));
    net.validate();
    return net;
  }

  int hidden_units() const {
    int n = 0;
    for (const CMatrix& w : layers_) n += w.rows();
    return n;
  }

  int depth() const { return committed_; }

 private:
  struct Layer1Unit {
    int coord;
    cplx w;
  };

  int d_;
  double input_bound_;
  std::vector<Layer1Unit> layer1_;
  std::vector<CMatrix> layers_;
  std::vector<std::vector<double>> junk_;
  std::vector<Combo> pending_;
  int committed_ = 0;
  int carry_ = -1;
};

// Reduce each group of non-negative values to its maximum with shared
// tournament layers; max(a, b) = b + relu(a - b), with relu(b) = b carrying
// the second operand forward.
inline std::vector<Combo> assemble_max_groups(ZReluAssembler& a,
                                              std::vector<std::vector<Combo>> groups) {
  auto unfinished = [&] {
    for (const auto& g : groups) {
      if (g.size() > 1) return true;
    }
    return false;
  };
  while (unfinished()) {
    std::vector<std::vector<Combo>> next(groups.size());
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      const auto& vals = groups[gi];
      if (vals.size() == 1) {
        next[gi].push_back(Combo::unit(a.add_relu_unit(vals[0])));
        continue;
      }
      size_t k = 0;
      for (; k + 1 < vals.size(); k += 2) {
        const int diff = a.add_relu_unit(combo_add(vals[k], vals[k + 1], -1.0));
        const int keep = a.add_relu_unit(vals[k + 1]);
        next[gi].push_back(combo_add(Combo::unit(diff), Combo::unit(keep)));
      }
      if (k < vals.size()) {
        next[gi].push_back(Combo::unit(a.add_relu_unit(vals[k])));
      }
    }
    a.commit_layer();
    groups = std::move(next);
  }
  std::vector<Combo> out;
  for (auto& g : groups) out.push_back(g[0]);
  return out;
}

inline int sectors_for_relative_error(double eps) {
  eps = std::min(eps, 0.5);
  if (!(eps > 0.0)) throw std::invalid_argument("sector count: eps must be > 0");
  const double theta = std::acos(1.0 - eps);
  return std::max(2, static_cast<int>(std::ceil(M_PI / (2.0 * theta))));
}

struct ModulusGadget {
  CRNetwork net;
  int sectors = 0;
  int hidden_units = 0;
  // One-sided: output in [cos(pi/(2 m)) |z|, |z|]; quoted bound is the
  // slack-normalized (1 - cos)/cos form.
  double rel_error_bound = 0.0;

  double operator()(cplx z) const {
    return forward_cr(net, RVector{z.real(), z.imag()});
  }
};

// Scalar modulus approximation: max over m_sec half-plane projections
// |Re(e^{-i phi_k} z)|, phi_k = k pi / m_sec. Exact on every sector axis.
inline ModulusGadget build_modulus_gadget(int m_sec, double input_bound = 4.0) {
  if (m_sec < 2) throw std::invalid_argument("build_modulus_gadget: m_sec >= 2");
  ZReluAssembler a(1, input_bound);
  std::vector<Combo> abs_projections;
  for (int k = 0; k < m_sec; ++k) {
    const double phi = k * M_PI / m_sec;
    const cplx w = std::polar(1.0, -phi);
    const int up = a.add_projection_unit(0, w);
    const int un = a.add_projection_unit(0, -w);
    abs_projections.push_back(combo_add(Combo::unit(up), Combo::unit(un)));
  }
  a.finish_input_layer();
  const Combo out = assemble_max_groups(a, {abs_projections})[0];
  ModulusGadget g;
  g.sectors = m_sec;
  g.hidden_units = a.hidden_units();
  const double c = std::cos(M_PI / (2.0 * m_sec));
  g.rel_error_bound = (1.0 - c) / c;
  g.net = a.finish(out);
  return g;
}

struct RadialCRApproximator {
  CRNetwork net;
  Ridge1DApproximator ridge;
  int hidden_units = 0;
  int depth = 0;
  double requested_delta = 0.0;
  double norm_shrink_bound = 0.0;  // ||x|| estimate lies in [(1-b)||x||, ||x||]
  double width_budget = 0.0;

  double operator()(const RVector& x) const { return forward_cr(net, x); }
};

// Assembles a zReLU network approximating g(||x||) on r <= ||x|| <= R to sup
// error delta: per-coordinate sector gadgets, pairwise two-norm stages, then
// the 1-D ReLU stage evaluated on the norm estimate.
template <typename G>
RadialCRApproximator build_radial_cr(const G& g, double lipschitz, double r,
                                     double big_r, double delta, int d,
                                     double c_cr = 1.0) {
  if (!(r > 0.0) || !(big_r >= r) || !(delta > 0.0) || d < 1) {
    throw std::invalid_argument("build_radial_cr: need 0 < r <= R, delta > 0, d >= 1");
  }
  RadialCRApproximator out;
  out.requested_delta = delta;
  out.width_budget = 2.0 * c_cr * d * big_r * big_r * std::max(lipschitz, 1.0) /
                     (std::sqrt(r) * delta);

  // Constant targets need no norm estimate.
  {
    const Ridge1DApproximator probe =
        build_ridge_on_interval(g, lipschitz, r, big_r, delta / 2.0);
    if (probe.width() == 0) {
      ZReluAssembler a(d, big_r + 1.0);
      a.finish_input_layer();
      Combo readout;
      readout.constant = -probe.offset;
      out.net = a.finish(readout);
      out.ridge = probe;
      out.hidden_units = a.hidden_units();
      out.depth = a.depth();
      return out;
    }
  }

  int pair_rounds = 0;
  for (int v = d; v > 1; v = (v + 1) / 2) ++pair_rounds;
  const int stages = 1 + pair_rounds;
  const double eps_total =
      std::min(0.2, delta / (2.0 * std::max(lipschitz, 1e-12) * big_r));
  const double eps_stage = eps_total / stages;

  const int m_a = sectors_for_relative_error(eps_stage);
  // Pair stages span a quarter circle with both axes included, so axis
  // inputs stay exact; half-spacing pi / (4 (m_b - 1)).
  int m_b = 2;
  {
    const double theta = std::acos(1.0 - eps_stage);
    m_b = std::max(2, static_cast<int>(std::ceil(M_PI / (4.0 * theta))) + 1);
  }

  ZReluAssembler a(d, big_r + 1.0);
  std::vector<std::vector<Combo>> coord_groups(d);
  for (int p = 0; p < d; ++p) {
    for (int k = 0; k < m_a; ++k) {
      const double phi = k * M_PI / m_a;
      const cplx w = std::polar(1.0, -phi);
      const int up = a.add_projection_unit(p, w);
      const int un = a.add_projection_unit(p, -w);
      coord_groups[p].push_back(combo_add(Combo::unit(up), Combo::unit(un)));
    }
  }
  a.finish_input_layer();
  std::vector<Combo> values = assemble_max_groups(a, std::move(coord_groups));

  while (values.size() > 1) {
    // Projection layer for every pair, passthrough for a leftover value.
    std::vector<std::vector<Combo>> groups;
    size_t k = 0;
    for (; k + 1 < values.size(); k += 2) {
      std::vector<Combo> projections;
      for (int jj = 0; jj < m_b; ++jj) {
        const double psi = jj * (M_PI / 2.0) / (m_b - 1);
        Combo pre = combo_scale(values[k], std::cos(psi));
        pre = combo_add(pre, values[k + 1], std::sin(psi));
        projections.push_back(Combo::unit(a.add_relu_unit(pre)));
      }
      groups.push_back(std::move(projections));
    }
    if (k < values.size()) {
      groups.push_back({Combo::unit(a.add_relu_unit(values[k]))});
    }
    a.commit_layer();
    values = assemble_max_groups(a, std::move(groups));
  }

  // The estimate lies in [(1 - eps_total) ||x||, ||x||]; widen the ridge
  // domain accordingly and clamp g outside its own interval.
  const double lo = r * (1.0 - eps_total) - 1e-9 * big_r;
  const double hi = big_r + 1e-9 * big_r;
  const auto g_ext = [&](double s) { return g(std::min(std::max(s, r), big_r)); };
  out.ridge = build_ridge_on_interval(g_ext, lipschitz, lo, hi, delta / 2.0);

  std::vector<Combo> ridge_units;
  for (int i = 0; i < out.ridge.width(); ++i) {
    Combo pre = combo_scale(values[0], out.ridge.beta[i]);
    pre.constant -= out.ridge.b[i];
    ridge_units.push_back(Combo::unit(a.add_relu_unit(pre)));
  }
  a.commit_layer();

  Combo readout;
  readout.constant = -out.ridge.offset;
  for (int i = 0; i < out.ridge.width(); ++i) {
    readout = combo_add(readout, ridge_units[i], out.ridge.alpha[i]);
  }
  out.net = a.finish(readout);
  out.hidden_units = a.hidden_units();
  out.depth = a.depth();
  out.norm_shrink_bound = eps_total;

  if (out.hidden_units > out.width_budget) {
    throw std::runtime_error(
        "build_radial_cr: width " + std::to_string(out.hidden_units) +
        " exceeds budget " + std::to_string(out.width_budget) +
        " at requested delta " + std::to_string(delta) +
        " (certified error <= requested)");
  }
  return out;
}

// Dense-grid sup error of a 1-D approximator.
template <typename F>
double measure_sup_error_1d(const Ridge1DApproximator& ridge, const F& f,
                            double lo, double hi, int grid = 10000) {
  double worst = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    worst = std::max(worst, std::abs(ridge(x) - f(x)));
  }
  return worst;
}

// Dense phase sweep of a modulus gadget at fixed radius.
inline double measure_gadget_sweep(const ModulusGadget& g, double radius,
                                   int phases = 10000) {
  double worst = 0.0;
  for (int i = 0; i < phases; ++i) {
    const double th = 2.0 * M_PI * i / phases;
    const cplx z = std::polar(radius, th);
    worst = std::max(worst, std::abs(g(z) - radius));
  }
  return worst;
}

// Monte-Carlo sup error of the assembled radial net over the annulus,
// radius uniform x direction uniform.
template <typename G>
double measure_radial_sup_error(const RadialCRApproximator& approx, const G& g,
                                double r, double big_r, int d, int samples,
                                std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = rng.uniform(r, big_r);
    RVector x = random_unit_vector(rng, 2 * d);
    for (double& v : x) v *= t;
    worst = std::max(worst, std::abs(approx(x) - g(t)));
  }
  return worst;
}

}  // namespace crnet
