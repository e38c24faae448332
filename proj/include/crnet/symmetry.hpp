#pragma once

// Equioutput transformation machinery: the two-row linear moves and their
// next-layer compensators, their 4x4 real affine forms, exact permutation /
// scaling / sign-flip maps, critical-point probes, and the per-layer
// symmetry census against the factorial * 2^width order bound.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/dynamics.hpp"
#include "crnet/networks.hpp"

namespace crnet {

// Row i becomes rho * theta_j + theta_i, row j becomes (1 - rho) * theta_j.
template <typename Matrix, typename Scalar>
Matrix phi_move(const Matrix& theta, Scalar rho, int i, int j) {
  if (i == j) throw std::invalid_argument("phi_move: need i != j");
  if (i < 0 || j < 0 || i >= theta.rows() || j >= theta.rows()) {
    throw std::invalid_argument("phi_move: row index out of range");
  }
  Matrix out = theta;
  for (int c = 0; c < theta.cols(); ++c) {
    out(i, c) = rho * theta(j, c) + theta(i, c);
    out(j, c) = (Scalar(1) - rho) * theta(j, c);
  }
  return out;
}

// Next-layer columns: alpha_i unchanged, alpha_j = (alpha_j - rho alpha_i)
// / (1 - rho); solves the two-layer matching system on the open-gate region.
template <typename Matrix, typename Scalar>
Matrix compensator(const Matrix& lambda, Scalar rho, int i, int j) {
  if (rho == Scalar(1)) {
    throw std::invalid_argument("compensator: rho = 1 is degenerate");
  }
  if (i == j) throw std::invalid_argument("compensator: need i != j");
  if (i < 0 || j < 0 || i >= lambda.cols() || j >= lambda.cols()) {
    throw std::invalid_argument("compensator: column index out of range");
  }
  Matrix out = lambda;
  for (int r = 0; r < lambda.rows(); ++r) {
    out(r, j) = (lambda(r, j) - rho * lambda(r, i)) / (Scalar(1) - rho);
  }
  return out;
}

struct EquioutputMove {
  int layer = 0;  // 0-based hidden layer whose rows move
  int i = 0;
  int j = 1;
  cplx rho{0.0, 0.0};
};

template <typename Net, typename Scalar>
Net apply_equioutput_move(const Net& net, int layer, int i, int j, Scalar rho) {
  if (layer < 0 || layer + 1 >= static_cast<int>(net.layers.size())) {
    throw std::invalid_argument("apply_equioutput_move: layer out of range");
  }
  Net out = net;
  out.layers[layer] = phi_move(net.layers[layer], rho, i, j);
  out.layers[layer + 1] = compensator(net.layers[layer + 1], rho, i, j);
  return out;
}

// 4x4 real matrix of the move on ([theta_i]_R, [theta_i]_I, [theta_j]_R,
// [theta_j]_I). For real rho the theta_j block is diagonal; for complex rho
// it carries the +-Im(rho) antisymmetric part.
inline RMatrix rho_affine_matrix(cplx rho) {
  const double r1 = rho.real(), r2 = rho.imag();
  RMatrix m(4, 4);
  const double vals[16] = {1, 0, r1,       -r2,       //
                           0, 1, r2,       r1,        //
                           0, 0, 1.0 - r1, r2,        //
                           0, 0, -r2,      1.0 - r1};
  for (int k = 0; k < 16; ++k) m.data()[k] = vals[k];
  return m;
}

// The same matrix extracted from phi_move itself by pushing the four basis
// configurations of a two-row, one-column parameter block through it.
inline RMatrix induced_affine_matrix(cplx rho) {
  RMatrix m(4, 4);
  for (int basis = 0; basis < 4; ++basis) {
    CMatrix theta(2, 1);
    theta(0, 0) = cplx(basis == 0 ? 1.0 : 0.0, basis == 1 ? 1.0 : 0.0);
    theta(1, 0) = cplx(basis == 2 ? 1.0 : 0.0, basis == 3 ? 1.0 : 0.0);
    const CMatrix out = phi_move(theta, rho, 0, 1);
    m(0, basis) = out(0, 0).real();
    m(1, basis) = out(0, 0).imag();
    m(2, basis) = out(1, 0).real();
    m(3, basis) = out(1, 0).imag();
  }
  return m;
}

template <typename Net>
Net exact_equioutput_permutation(const Net& net, int layer,
                                 const std::vector<int>& perm) {
  if (layer < 0 || layer + 1 >= static_cast<int>(net.layers.size())) {
    throw std::invalid_argument("permutation: layer out of range");
  }
  const int n = net.layers[layer].rows();
  if (static_cast<int>(perm.size()) != n) {
    throw std::invalid_argument("permutation: size mismatch");
  }
  Net out = net;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < net.layers[layer].cols(); ++c) {
      out.layers[layer](r, c) = net.layers[layer](perm[r], c);
    }
    for (int rr = 0; rr < net.layers[layer + 1].rows(); ++rr) {
      out.layers[layer + 1](rr, r) = net.layers[layer + 1](rr, perm[r]);
    }
  }
  return out;
}

template <typename Net, typename Scalar>
Net exact_equioutput_scaling(const Net& net, int layer, int j, Scalar c) {
  if (!(c > Scalar(0))) {
    throw std::invalid_argument("scaling: factor must be positive");
  }
  if (layer < 0 || layer + 1 >= static_cast<int>(net.layers.size())) {
    throw std::invalid_argument("scaling: layer out of range");
  }
  Net out = net;
  for (int cc = 0; cc < net.layers[layer].cols(); ++cc) {
    out.layers[layer](j, cc) = net.layers[layer](j, cc) * c;
  }
  for (int rr = 0; rr < net.layers[layer + 1].rows(); ++rr) {
    out.layers[layer + 1](rr, j) = net.layers[layer + 1](rr, j) / c;
  }
  return out;
}

// Row sign flip with compensating column sign flip; exact for odd
// activations, recorded empirically by the census.
template <typename Net>
Net sign_flip_move(const Net& net, int layer, int j) {
  Net out = net;
  for (int cc = 0; cc < net.layers[layer].cols(); ++cc) {
    out.layers[layer](j, cc) = -net.layers[layer](j, cc);
  }
  for (int rr = 0; rr < net.layers[layer + 1].rows(); ++rr) {
    out.layers[layer + 1](rr, j) = -net.layers[layer + 1](rr, j);
  }
  return out;
}

// Gate pattern over all hidden units for one input.
inline std::vector<std::uint8_t> gate_pattern(const CRNetwork& net,
                                              const RVector& x) {
  CRTrace tr = forward_cr_trace(net, x);
  std::vector<std::uint8_t> p;
  for (size_t l = 0; l + 1 < tr.a.size(); ++l) {
    for (const cplx& v : tr.a[l]) p.push_back(zrelu_kept(v) ? 1 : 0);
  }
  return p;
}

inline std::vector<std::uint8_t> gate_pattern(const RNetwork& net,
                                              const RVector& x) {
  RTrace tr = forward_r_trace(net, x);
  std::vector<std::uint8_t> p;
  for (size_t l = 0; l + 1 < tr.a.size(); ++l) {
    for (double v : tr.a[l]) p.push_back(relu_kept(v) ? 1 : 0);
  }
  return p;
}

// An input certifies a move when the whole gate pattern survives the
// transformation and the moved pair is gated uniformly (both on or both
// off): the matching system has no solution when one of the pair is open
// and the other closed, so only the uniform region is validated.
template <typename Net>
bool move_gate_stable(const Net& before, const Net& after, int layer, int i,
                      int j, const RVector& x) {
  const auto pa = gate_pattern(before, x);
  const auto pb = gate_pattern(after, x);
  if (pa != pb) return false;
  int offset = 0;
  for (int l = 0; l < layer; ++l) offset += before.layers[l].rows();
  return pa[offset + i] == pa[offset + j];
}

struct CriticalPointReport {
  double before_norm = 0.0;
  double after_norm = 0.0;
  cplx rho{0.0, 0.0};
  double gate_stable_fraction = 0.0;
  std::string verdict;
};

// Applies move + compensator at a near-critical net and reports the loss
// gradient norm before and after, with the fraction of dataset inputs on
// which the move is certified.
inline CriticalPointReport critical_point_probe(const CRNetwork& net,
                                                const Dataset& data, int layer,
                                                int i, int j, cplx rho,
                                                double g0) {
  CriticalPointReport rep;
  rep.rho = rho;
  std::vector<CMatrix> g;
  loss_gradient_cr(net, data, &g);
  rep.before_norm = gradient_norm(g);
  const CRNetwork moved = apply_equioutput_move(net, layer, i, j, rho);
  std::vector<CMatrix> g2;
  loss_gradient_cr(moved, data, &g2);
  rep.after_norm = gradient_norm(g2);
  int stable = 0;
  for (const auto& x : data.x) {
    stable += move_gate_stable(net, moved, layer, i, j, x) ? 1 : 0;
  }
  rep.gate_stable_fraction = static_cast<double>(stable) / data.size();
  if (std::abs(rho.imag()) < 0.25 && rho.imag() != 0.0) {
    rep.verdict = "no-verdict-small-imag";
  } else if (rho.imag() == 0.0) {
    rep.verdict = rep.after_norm < 10.0 * g0 ? "critical-preserved" : "moved";
  } else {
    rep.verdict = rep.after_norm > 10.0 * g0 ? "criticality-broken" : "still-critical";
  }
  return rep;
}

// Appends a copy of hidden row i (layer `layer`) and splits its outgoing
// column in half, preserving the function and any criticality. The twin pair
// is gate-aligned on every input, which makes it the natural seat for
// equioutput moves.
template <typename Net>
Net duplicate_unit(const Net& net, int layer, int i) {
  if (layer < 0 || layer + 1 >= static_cast<int>(net.layers.size())) {
    throw std::invalid_argument("duplicate_unit: layer out of range");
  }
  Net out = net;
  const auto& w = net.layers[layer];
  const auto& lam = net.layers[layer + 1];
  typename std::decay_t<decltype(w)> w2(w.rows() + 1, w.cols());
  for (int r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < w.cols(); ++c) w2(r, c) = w(r, c);
  }
  for (int c = 0; c < w.cols(); ++c) w2(w.rows(), c) = w(i, c);
  typename std::decay_t<decltype(lam)> lam2(lam.rows(), lam.cols() + 1);
  for (int r = 0; r < lam.rows(); ++r) {
    for (int c = 0; c < lam.cols(); ++c) lam2(r, c) = lam(r, c);
    lam2(r, i) = lam(r, i) * 0.5;
    lam2(r, lam.cols()) = lam(r, i) * 0.5;
  }
  out.layers[layer] = std::move(w2);
  out.layers[layer + 1] = std::move(lam2);
  return out;
}

struct SymmetryGroupCensus {
  int width = 0;
  long long order_bound = 0;        // n! * 2^n
  int counted_permutations = 0;     // pure permutations passing exactly
  int counted_total = 0;            // permutation x sign-flip candidates passing
  int sign_flips_passing = 0;       // pure sign patterns (identity permutation)
};

// Exhaustive per-layer census for tiny widths: every permutation x sign
// pattern is applied with its compensating column map and tested for exact
// forward equality on random inputs.
template <typename Net>
SymmetryGroupCensus group_census(const Net& net, int layer, Rng& rng,
                                 int probe_inputs = 64, double tol = 1e-12,
                                 int width_cap = 4) {
  const int n = net.layers[layer].rows();
  if (n > width_cap) {
    throw std::invalid_argument("group_census: width exceeds enumeration cap");
  }
  SymmetryGroupCensus census;
  census.width = n;
  long long fact = 1;
  for (int k = 2; k <= n; ++k) fact *= k;
  census.order_bound = fact << n;

  const int in_dim = std::is_same_v<Net, CRNetwork> ? 2 * net.layers[0].cols()
                                                    : net.layers[0].cols();
  std::vector<RVector> xs;
  for (int s = 0; s < probe_inputs; ++s) {
    RVector x(std::is_same_v<Net, CRNetwork>
                  ? 2 * (net.layers[0].cols() - (net.input_bias ? 1 : 0))
                  : net.layers[0].cols() - (net.input_bias ? 1 : 0));
    for (double& v : x) v = rng.normal();
    xs.push_back(std::move(x));
  }
  (void)in_dim;

  auto outputs_match = [&](const Net& a, const Net& b) {
    for (const auto& x : xs) {
      double fa, fb;
      if constexpr (std::is_same_v<Net, CRNetwork>) {
        fa = forward_cr(a, x);
        fb = forward_cr(b, x);
      } else {
        fa = forward_r(a, x);
        fb = forward_r(b, x);
      }
      if (std::abs(fa - fb) > tol) return false;
    }
    return true;
  };

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      Net cand = exact_equioutput_permutation(net, layer, perm);
      for (int j = 0; j < n; ++j) {
        if (mask & (1u << j)) cand = sign_flip_move(cand, layer, j);
      }
      if (outputs_match(net, cand)) {
        census.counted_total += 1;
        if (mask == 0) census.counted_permutations += 1;
        bool is_identity_perm = true;
        for (int k = 0; k < n; ++k) is_identity_perm &= perm[k] == k;
        if (is_identity_perm && mask != 0) census.sign_flips_passing += 1;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return census;
}

}  // namespace crnet
