#pragma once

// Empirical exponential loss, the normalization-matrix algebra, the
// weight-normalized gradient-flow systems for both network families, and a
// deterministic RK4/Euler integrator with trace recording.
//
// The per-row flow is
//   d gamma^l_j / dt = (eta / gamma^l_j) (1/N) sum_n y_n e^{-y_n f_W(x_n)} f_V(x_n)
//   d V^l_j / dt     = (eta / (gamma^l_j)^2) (1/N) sum_n y_n e^{-y_n f_W(x_n)} D_j(x_n)
// where f_W is the raw-parameter output, f_V the output of the direction
// network, and D_j projects the direction gradient onto the tangent space of
// the unit sphere (I - V^T V acting on the row gradient), so
// Re<V_j, dV_j/dt> = 0. eta is a configured constant, the same for every row
// and layer; with it the squared-scale growth rate 2 gamma dgamma/dt shares
// one formula across all (l, j).

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/networks.hpp"

namespace crnet {

struct Dataset {
  std::vector<RVector> x;
  std::vector<int> y;  // labels in {-1, +1}

  int size() const { return static_cast<int>(x.size()); }

  void validate() const {
    if (x.empty() || x.size() != y.size()) {
      throw std::invalid_argument("Dataset: empty or mismatched");
    }
    for (int v : y) {
      if (v != 1 && v != -1) {
        throw std::invalid_argument("Dataset: labels must be +-1");
      }
    }
  }
};

// (1/N) sum exp(-y_n out_n). Large positive margins are summed in
// log-sum-exp form to avoid premature overflow.
inline double exp_loss_from_outputs(const std::vector<double>& outs,
                                    const std::vector<int>& y) {
  const int n = static_cast<int>(outs.size());
  double max_m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) max_m = std::max(max_m, -y[i] * outs[i]);
  if (max_m <= 30.0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(-y[i] * outs[i]);
    return s / n;
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(-y[i] * outs[i] - max_m);
  return std::exp(max_m + std::log(s / n));
}

template <typename Net>
double exp_loss(const Net& net, const Dataset& data) {
  data.validate();
  std::vector<double> outs(data.size());
  for (int i = 0; i < data.size(); ++i) {
    if constexpr (std::is_same_v<Net, CRNetwork>) {
      outs[i] = forward_cr(net, data.x[i]);
    } else {
      outs[i] = forward_r(net, data.x[i]);
    }
  }
  return exp_loss_from_outputs(outs, data.y);
}

// Normalization matrix S = I - v^T v for a unit row v.
inline RMatrix smatrix(const RVector& v) {
  const double nv = norm2(v);
  if (std::abs(nv - 1.0) > 1e-10) {
    throw std::invalid_argument("smatrix: v must be unit norm");
  }
  const int n = static_cast<int>(v.size());
  RMatrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = (i == j ? 1.0 : 0.0) - v[i] * v[j];
  }
  return s;
}

// Loss gradient with respect to the raw weights, all layers; also returns
// the per-sample outputs. dL/dW^l = (1/N) sum_n -y_n e^{-y_n out_n} G^l(x_n).
inline double loss_gradient_cr(const CRNetwork& net, const Dataset& data,
                               std::vector<CMatrix>* grad_out) {
  std::vector<CMatrix> agg;
  for (const CMatrix& w : net.layers) agg.emplace_back(w.rows(), w.cols());
  const int n = data.size();
  std::vector<double> outs(n);
  for (int i = 0; i < n; ++i) {
    CRTrace tr;
    const auto g = grad_cr(net, data.x[i], &tr);
    outs[i] = tr.out;
    const double coef = -data.y[i] * std::exp(-data.y[i] * tr.out) / n;
    for (size_t l = 0; l < agg.size(); ++l) {
      for (size_t k = 0; k < agg[l].data().size(); ++k) {
        agg[l].data()[k] += coef * g[l].data()[k];
      }
    }
  }
  if (grad_out) *grad_out = std::move(agg);
  return exp_loss_from_outputs(outs, data.y);
}

inline double loss_gradient_r(const RNetwork& net, const Dataset& data,
                              std::vector<RMatrix>* grad_out) {
  std::vector<RMatrix> agg;
  for (const RMatrix& w : net.layers) agg.emplace_back(w.rows(), w.cols());
  const int n = data.size();
  std::vector<double> outs(n);
  for (int i = 0; i < n; ++i) {
    RTrace tr;
    const auto g = grad_r(net, data.x[i], &tr);
    outs[i] = tr.out;
    const double coef = -data.y[i] * std::exp(-data.y[i] * tr.out) / n;
    for (size_t l = 0; l < agg.size(); ++l) {
      for (size_t k = 0; k < agg[l].data().size(); ++k) {
        agg[l].data()[k] += coef * g[l].data()[k];
      }
    }
  }
  if (grad_out) *grad_out = std::move(agg);
  return exp_loss_from_outputs(outs, data.y);
}

template <typename MatrixVec>
double gradient_norm(const MatrixVec& grads) {
  double s = 0.0;
  for (const auto& g : grads) {
    const double gn = norm2(g);
    s += gn * gn;
  }
  return std::sqrt(s);
}

// ---- Weight-normalized flow ----

struct CRFlowState {
  int d = 0;
  bool input_bias = false;
  CRNormalized p;
  double t = 0.0;
  int steps = 0;

  CRNetwork materialize(bool unit_scales = false) const {
    CRNetwork net;
    net.d = d;
    net.input_bias = input_bias;
    if (unit_scales) {
      net.layers = p.dirs;
    } else {
      net.layers = denormalize_layers(p);
    }
    return net;
  }

  void check_valid() const {
    for (const auto& g : p.gamma) {
      for (double v : g) {
        if (!(v > 0.0)) throw std::invalid_argument("flow: gamma must stay positive");
      }
    }
  }
};

struct RFlowState {
  int dim = 0;
  bool input_bias = false;
  RNormalized p;
  double t = 0.0;
  int steps = 0;

  RNetwork materialize(bool unit_scales = false) const {
    RNetwork net;
    net.dim = dim;
    net.input_bias = input_bias;
    if (unit_scales) {
      net.layers = p.dirs;
    } else {
      net.layers = denormalize_layers(p);
    }
    return net;
  }

  void check_valid() const {
    for (const auto& g : p.gamma) {
      for (double v : g) {
        if (!(v > 0.0)) throw std::invalid_argument("flow: gamma must stay positive");
      }
    }
  }
};

inline CRFlowState cr_flow_state(const CRNetwork& net) {
  CRFlowState s;
  s.d = net.d;
  s.input_bias = net.input_bias;
  s.p = normalize_layers(net.layers);
  return s;
}

inline RFlowState r_flow_state(const RNetwork& net) {
  RFlowState s;
  s.dim = net.dim;
  s.input_bias = net.input_bias;
  s.p = normalize_layers(net.layers);
  return s;
}

template <typename Matrix>
struct FlowRhs {
  std::vector<std::vector<double>> dgamma;
  std::vector<Matrix> dV;
};

using CRFlowRhs = FlowRhs<CMatrix>;
using RFlowRhs = FlowRhs<RMatrix>;

inline CRFlowRhs flow_rhs_cr(const CRFlowState& state, const Dataset& data,
                             double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("flow_rhs: eta must be positive");
  state.check_valid();
  const CRNetwork net_w = state.materialize(false);
  const CRNetwork net_v = state.materialize(true);
  const int n = data.size();

  std::vector<CMatrix> agg;
  for (const CMatrix& w : net_v.layers) agg.emplace_back(w.rows(), w.cols());
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    const double out_w = forward_cr(net_w, data.x[i]);
    CRTrace tr;
    const auto g = grad_cr(net_v, data.x[i], &tr);
    const double e = data.y[i] * std::exp(-data.y[i] * out_w) / n;
    c += e * tr.out;
    for (size_t l = 0; l < agg.size(); ++l) {
      for (size_t k = 0; k < agg[l].data().size(); ++k) {
        agg[l].data()[k] += e * g[l].data()[k];
      }
    }
  }

  CRFlowRhs rhs;
  for (size_t l = 0; l < agg.size(); ++l) {
    const int rows = agg[l].rows(), cols = agg[l].cols();
    std::vector<double> dg(rows);
    CMatrix dv(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const double gamma = state.p.gamma[l][r];
      dg[r] = eta * c / gamma;
      const cplx* vrow = state.p.dirs[l].row(r);
      const cplx* arow = agg[l].row(r);
      const double proj = real_dot(vrow, arow, cols);
      const double scale = eta / (gamma * gamma);
      for (int cc = 0; cc < cols; ++cc) {
        dv(r, cc) = scale * (arow[cc] - proj * vrow[cc]);
      }
    }
    rhs.dgamma.push_back(std::move(dg));
    rhs.dV.push_back(std::move(dv));
  }
  return rhs;
}

inline RFlowRhs flow_rhs_r(const RFlowState& state, const Dataset& data,
                           double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("flow_rhs: eta must be positive");
  state.check_valid();
  const RNetwork net_w = state.materialize(false);
  const RNetwork net_v = state.materialize(true);
  const int n = data.size();

  std::vector<RMatrix> agg;
  for (const RMatrix& w : net_v.layers) agg.emplace_back(w.rows(), w.cols());
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    const double out_w = forward_r(net_w, data.x[i]);
    RTrace tr;
    const auto g = grad_r(net_v, data.x[i], &tr);
    const double e = data.y[i] * std::exp(-data.y[i] * out_w) / n;
    c += e * tr.out;
    for (size_t l = 0; l < agg.size(); ++l) {
      for (size_t k = 0; k < agg[l].data().size(); ++k) {
        agg[l].data()[k] += e * g[l].data()[k];
      }
    }
  }

  RFlowRhs rhs;
  for (size_t l = 0; l < agg.size(); ++l) {
    const int rows = agg[l].rows(), cols = agg[l].cols();
    std::vector<double> dg(rows);
    RMatrix dv(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const double gamma = state.p.gamma[l][r];
      dg[r] = eta * c / gamma;
      const double* vrow = state.p.dirs[l].row(r);
      const double* arow = agg[l].row(r);
      double proj = 0.0;
      for (int cc = 0; cc < cols; ++cc) proj += vrow[cc] * arow[cc];
      const double scale = eta / (gamma * gamma);
      for (int cc = 0; cc < cols; ++cc) {
        dv(r, cc) = scale * (arow[cc] - proj * vrow[cc]);
      }
    }
    rhs.dgamma.push_back(std::move(dg));
    rhs.dV.push_back(std::move(dv));
  }
  return rhs;
}

enum class Integrator { kRk4, kEuler };

struct FlowTrace {
  std::vector<double> t;
  std::vector<double> loss;
  std::vector<double> grad_norm;
  std::vector<int> gate_flips;               // vs previous recorded step
  std::vector<std::vector<double>> gamma;    // flattened per recorded step
  std::vector<std::vector<double>> growth;   // d(gamma^2)/dt per row
  std::vector<std::string> gamma_labels;     // "g<layer>_<row>"
  bool diverged = false;
  bool gamma_collapsed = false;

  int rows() const { return static_cast<int>(t.size()); }
};

namespace detail {

template <typename State>
std::vector<std::vector<std::uint8_t>> gate_patterns(const State& state,
                                                     const Dataset& data) {
  std::vector<std::vector<std::uint8_t>> pats;
  const auto net = state.materialize(false);
  for (const auto& x : data.x) {
    std::vector<std::uint8_t> p;
    if constexpr (std::is_same_v<State, CRFlowState>) {
      CRTrace tr = forward_cr_trace(net, x);
      for (size_t l = 0; l + 1 < tr.a.size(); ++l) {
        for (const cplx& v : tr.a[l]) p.push_back(zrelu_kept(v) ? 1 : 0);
      }
    } else {
      RTrace tr = forward_r_trace(net, x);
      for (size_t l = 0; l + 1 < tr.a.size(); ++l) {
        for (double v : tr.a[l]) p.push_back(relu_kept(v) ? 1 : 0);
      }
    }
    pats.push_back(std::move(p));
  }
  return pats;
}

template <typename State, typename Rhs>
void axpy_state(State& s, double a, const Rhs& k) {
  for (size_t l = 0; l < s.p.gamma.size(); ++l) {
    for (size_t r = 0; r < s.p.gamma[l].size(); ++r) {
      s.p.gamma[l][r] += a * k.dgamma[l][r];
    }
    for (size_t i = 0; i < s.p.dirs[l].data().size(); ++i) {
      s.p.dirs[l].data()[i] += a * k.dV[l].data()[i];
    }
  }
}

template <typename State>
bool renormalize_dirs(State& s) {
  for (size_t l = 0; l < s.p.dirs.size(); ++l) {
    auto& v = s.p.dirs[l];
    for (int r = 0; r < v.rows(); ++r) {
      double nrm;
      if constexpr (std::is_same_v<State, CRFlowState>) {
        nrm = detail::row_norm(v, r);
      } else {
        nrm = detail::row_norm(v, r);
      }
      if (!(nrm > 0.0) || !std::isfinite(nrm)) return false;
      for (int c = 0; c < v.cols(); ++c) v(r, c) /= nrm;
    }
  }
  return true;
}

}  // namespace detail

// Integrates the flow; V rows are renormalized after every step. The trace
// records loss, raw-weight gradient norm, gate flips against the previous
// recorded state, every gamma, and the analytic rate d(gamma^2)/dt per row.
template <typename State>
FlowTrace integrate_flow(State& state, const Dataset& data, double eta,
                         double h, int steps,
                         Integrator method = Integrator::kRk4,
                         int record_every = 1) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate_flow: h must be > 0");
  data.validate();
  FlowTrace trace;
  for (size_t l = 0; l < state.p.gamma.size(); ++l) {
    for (size_t r = 0; r < state.p.gamma[l].size(); ++r) {
      trace.gamma_labels.push_back("g" + std::to_string(l + 1) + "_" +
                                   std::to_string(r + 1));
    }
  }

  auto rhs_of = [&](const State& s) {
    if constexpr (std::is_same_v<State, CRFlowState>) {
      return flow_rhs_cr(s, data, eta);
    } else {
      return flow_rhs_r(s, data, eta);
    }
  };

  auto record = [&](const State& s,
                    std::vector<std::vector<std::uint8_t>>* prev_gates) {
    const auto net = s.materialize(false);
    double loss;
    double gn;
    if constexpr (std::is_same_v<State, CRFlowState>) {
      std::vector<CMatrix> g;
      loss = loss_gradient_cr(net, data, &g);
      gn = gradient_norm(g);
    } else {
      std::vector<RMatrix> g;
      loss = loss_gradient_r(net, data, &g);
      gn = gradient_norm(g);
    }
    const auto rhs = rhs_of(s);
    std::vector<double> gams, rates;
    for (size_t l = 0; l < s.p.gamma.size(); ++l) {
      for (size_t r = 0; r < s.p.gamma[l].size(); ++r) {
        gams.push_back(s.p.gamma[l][r]);
        rates.push_back(2.0 * s.p.gamma[l][r] * rhs.dgamma[l][r]);
      }
    }
    auto gates = detail::gate_patterns(s, data);
    int flips = 0;
    if (!prev_gates->empty()) {
      for (size_t i = 0; i < gates.size(); ++i) {
        for (size_t k = 0; k < gates[i].size(); ++k) {
          flips += gates[i][k] != (*prev_gates)[i][k];
        }
      }
    }
    *prev_gates = std::move(gates);
    trace.t.push_back(s.t);
    trace.loss.push_back(loss);
    trace.grad_norm.push_back(gn);
    trace.gate_flips.push_back(flips);
    trace.gamma.push_back(std::move(gams));
    trace.growth.push_back(std::move(rates));
    return loss;
  };

  std::vector<std::vector<std::uint8_t>> prev_gates;
  record(state, &prev_gates);

  for (int step = 0; step < steps; ++step) {
    if (method == Integrator::kRk4) {
      const auto k1 = rhs_of(state);
      State s2 = state;
      detail::axpy_state(s2, 0.5 * h, k1);
      const auto k2 = rhs_of(s2);
      State s3 = state;
      detail::axpy_state(s3, 0.5 * h, k2);
      const auto k3 = rhs_of(s3);
      State s4 = state;
      detail::axpy_state(s4, h, k3);
      const auto k4 = rhs_of(s4);
      detail::axpy_state(state, h / 6.0, k1);
      detail::axpy_state(state, h / 3.0, k2);
      detail::axpy_state(state, h / 3.0, k3);
      detail::axpy_state(state, h / 6.0, k4);
    } else {
      const auto k1 = rhs_of(state);
      detail::axpy_state(state, h, k1);
    }
    state.t += h;
    state.steps += 1;
    if (!detail::renormalize_dirs(state)) {
      trace.diverged = true;
      break;
    }
    bool gamma_ok = true;
    for (const auto& g : state.p.gamma) {
      for (double v : g) gamma_ok = gamma_ok && v > 0.0 && std::isfinite(v);
    }
    if (!gamma_ok) {
      trace.gamma_collapsed = true;
      break;
    }
    if ((step + 1) % record_every == 0 || step + 1 == steps) {
      const double loss = record(state, &prev_gates);
      if (!std::isfinite(loss) || loss > 1e12) {
        trace.diverged = true;
        break;
      }
    }
  }
  return trace;
}

// Max over recorded steps of the relative spread of d(gamma^2)/dt across all
// (layer, row); flip_free restricts to steps with no gate flips.
inline double growth_rate_spread(const FlowTrace& trace, bool flip_free = true) {
  if (trace.rows() < 2) {
    throw std::invalid_argument("growth_rate_spread: need a trace with >= 2 steps");
  }
  double worst = 0.0;
  for (int i = 0; i < trace.rows(); ++i) {
    if (flip_free && trace.gate_flips[i] != 0) continue;
    double lo = trace.growth[i][0], hi = lo, amax = std::abs(lo);
    for (double v : trace.growth[i]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      amax = std::max(amax, std::abs(v));
    }
    if (amax > 0.0) worst = std::max(worst, (hi - lo) / amax);
  }
  return worst;
}

inline std::string flow_trace_csv(const FlowTrace& trace) {
  std::ostringstream out;
  out << "# crnet-csv schema=flow_trace.v1\n";
  out << "t,loss,grad_norm,gate_flips";
  for (const auto& lbl : trace.gamma_labels) out << "," << lbl;
  for (const auto& lbl : trace.gamma_labels) out << ",rate_" << lbl;
  out << "\n";
  char buf[64];
  auto emit = [&](double v) {
    snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < trace.rows(); ++i) {
    emit(trace.t[i]);
    out << ",";
    emit(trace.loss[i]);
    out << ",";
    emit(trace.grad_norm[i]);
    out << "," << trace.gate_flips[i];
    for (double v : trace.gamma[i]) {
      out << ",";
      emit(v);
    }
    for (double v : trace.growth[i]) {
      out << ",";
      emit(v);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace crnet
