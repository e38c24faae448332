#pragma once

// The radial hard-target family, the probability density phi^2 built from
// the Fourier transform of a unit-volume ball indicator, sampling from the
// induced measure mu, and Monte-Carlo L2(mu) distances.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "crnet/ctensor.hpp"
#include "crnet/quadrature.hpp"
#include "crnet/rng.hpp"

namespace crnet {

// Piecewise-constant radial target: sum of signed shell indicators over N
// adjacent intervals of equal width covering [C2 sqrt(2d), 2 C2 sqrt(2d)].
struct RadialTarget {
  int d = 1;        // complex dimension; ambient real dimension is 2d
  int N = 0;        // shell count; N = 0 gives the zero target
  double C2 = 1.0;  // scale
  std::vector<int> eps;  // +-1 per shell

  RadialTarget() = default;
  RadialTarget(int d_, int N_, double C2_, std::vector<int> eps_)
      : d(d_), N(N_), C2(C2_), eps(std::move(eps_)) {
    if (d < 1 || N < 0 || C2 <= 0.0) {
      throw std::invalid_argument("RadialTarget: need d >= 1, N >= 0, C2 > 0");
    }
    if (static_cast<int>(eps.size()) != N) {
      throw std::invalid_argument("RadialTarget: eps length must equal N");
    }
    for (int e : eps) {
      if (e != 1 && e != -1) {
        throw std::invalid_argument("RadialTarget: eps entries must be +-1");
      }
    }
  }

  double base() const { return C2 * std::sqrt(2.0 * d); }
  double shell_lower(int i) const { return (1.0 + static_cast<double>(i - 1) / N) * base(); }
  double shell_upper(int i) const { return (1.0 + static_cast<double>(i) / N) * base(); }

  // 1-based shell index containing radius r, or 0 if none. Shared interior
  // endpoints go to the lower-index shell, so shell 1 is closed and shells
  // 2..N are half-open (lower edge excluded).
  int shell_index(double r) const {
    if (N == 0) return 0;
    const double lo = base(), hi = 2.0 * base();
    if (r < lo || r > hi) return 0;
    int i = 1 + static_cast<int>(std::floor((r - lo) / (base() / N)));
    if (i > N) i = N;
    // Rounding near an edge: nudge until r in (lower_i, upper_i].
    while (i > 1 && r <= shell_lower(i)) --i;
    while (i < N && r > shell_upper(i)) ++i;
    return i;
  }

  double eval_radius(double r) const {
    const int i = shell_index(r);
    return i == 0 ? 0.0 : static_cast<double>(eps[i - 1]);
  }

  double operator()(const RVector& x) const {
    if (static_cast<int>(x.size()) != 2 * d) {
      throw std::invalid_argument("RadialTarget: input length must be 2d");
    }
    return eval_radius(norm2(x));
  }
};

// Continuous surrogate of a RadialTarget: per shell a tent that ramps from 0
// at the shell edges with slope N and is clipped at 1 on the interior
// plateau. N-Lipschitz in the radius, range [-1, 1].
struct LipschitzSurrogate {
  RadialTarget target;

  explicit LipschitzSurrogate(RadialTarget t) : target(std::move(t)) {}

  double eval_radius(double r) const {
    const int i = target.shell_index(r);
    if (i == 0) return 0.0;
    const double dist =
        std::min(r - target.shell_lower(i), target.shell_upper(i) - r);
    const double ramp = std::min(1.0, target.N * dist);
    return target.eps[i - 1] * ramp;
  }

  double operator()(const RVector& x) const {
    if (static_cast<int>(x.size()) != 2 * target.d) {
      throw std::invalid_argument("LipschitzSurrogate: input length must be 2d");
    }
    return eval_radius(norm2(x));
  }

  double lipschitz_bound() const { return static_cast<double>(target.N); }
};

inline LipschitzSurrogate lipschitz_surrogate(const RadialTarget& t) {
  return LipschitzSurrogate(t);
}

// Density model for mu: phi(x) is the Fourier transform of the indicator of
// the ball of unit volume in R^n, evaluated by 1-D quadrature on cached
// cubic-spline grids; mu has density phi^2, truncated at a radius holding
// all but < 1e-3 of the mass.
//
// Radial reduction: with A_n(u) the surface integral of exp(-i u cos theta)
// over the unit sphere, phi(|x| = t) = Int_0^r s^{n-1} A_n(2 pi t s) ds,
// and substituting u = 2 pi t s turns every radius into one antiderivative:
// phi(t) = (2 pi t)^{-n} B(2 pi t r) with B(U) = Int_0^U u^{n-1} A_n(u) du.
class DensityModel {
 public:
  explicit DensityModel(int n, double tail_mass = 1e-3) : n_(n) {
    if (n < 2 || n > 16 || n % 2 != 0) {
      throw std::invalid_argument(
          "DensityModel: ambient dimension must be even, in [2, 16]");
    }
    sphere_area_ = 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
    const double ball_volume_unit = sphere_area_ / n;  // radius-1 ball
    ball_radius_ = std::pow(ball_volume_unit, -1.0 / n);

    // Envelope of the radial mass density |S^{n-1}| t^{n-1} phi(t)^2 at
    // large t is |S^{n-1}| r^{n-1} / (2 pi^2 t^2); integrate its tail.
    const double tail_coeff =
        sphere_area_ * std::pow(ball_radius_, n - 1) / (2.0 * M_PI * M_PI);
    r_trunc_ = tail_coeff / tail_mass;
    tail_estimate_ = tail_mass;

    build_a_spline();
    build_b_spline();
    build_cdf();

    // The full measure integrates to 1; what the quadrature sees up to the
    // truncation radius must agree with the envelope tail estimate.
    const double miss = std::abs(1.0 - truncated_mass_ - tail_estimate_);
    if (miss > 10.0 * tail_mass) {
      throw std::runtime_error(
          "DensityModel: radial quadrature did not converge (mass defect " +
          std::to_string(miss) + ")");
    }
  }

  int dim() const { return n_; }
  double ball_radius() const { return ball_radius_; }
  double r_trunc() const { return r_trunc_; }
  double truncated_mass() const { return truncated_mass_; }
  double tail_estimate() const { return tail_estimate_; }

  // phi at radius t (phi is radial). phi(0) = ball volume = 1.
  double phi_radius(double t) const {
    if (t < 1e-8) return phi_series_origin(t);
    const double u = 2.0 * M_PI * t * ball_radius_;
    if (u <= b_spline_.max_x()) {
      return b_spline_(u) / std::pow(2.0 * M_PI * t, n_);
    }
    return phi_direct(t);  // beyond the cache; rare
  }

  double operator()(const RVector& x) const {
    if (static_cast<int>(x.size()) != n_) {
      throw std::invalid_argument("DensityModel: input length mismatch");
    }
    return phi_radius(norm2(x));
  }

  // Radial mass density of mu: |S^{n-1}| t^{n-1} phi(t)^2.
  double radial_mass(double t) const {
    return sphere_area_ * std::pow(t, n_ - 1) * phi_radius(t) * phi_radius(t);
  }

  // Unnormalized CDF of the radius, Int_0^t radial_mass.
  double radial_cdf(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= r_trunc_) return truncated_mass_;
    return cdf_spline_(t);
  }

  // Quantile of the truncated radial law, p in [0, 1].
  double radial_quantile(double p) const {
    const double target = p * truncated_mass_;
    double lo = 0.0, hi = r_trunc_;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * r_trunc_; ++it) {
      const double mid = 0.5 * (lo + hi);
      (radial_cdf(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Direct quadrature evaluation bypassing the B cache; used as a slow
  // reference path and for radii beyond the cache.
  double phi_direct(double t) const {
    const auto f = [&](double s) { return std::pow(s, n_ - 1) * a_value(2.0 * M_PI * t * s); };
    return integrate_adaptive(f, 0.0, ball_radius_, 1e-10);
  }

  double a_value(double u) const {
    if (u <= a_spline_.max_x()) return a_spline_(u);
    return a_direct(u);
  }

 private:
  double phi_series_origin(double t) const {
    // phi(t) = V_n r^n (1 - (2 pi t r)^2 n / (2 (n + 2)) + O(t^4)); the
    // leading constant is 1 by the unit-volume normalization.
    const double u = 2.0 * M_PI * t * ball_radius_;
    return 1.0 - u * u * n_ / (2.0 * (n_ + 2.0));
  }

  double a_direct(double u) const {
    // Int_0^pi cos(u cos th) sin^{n-2} th dth times |S^{n-2}|, by composite
    // Gauss panels holding the per-panel phase swing u * pi / panels <= 12.
    const double area =
        2.0 * std::pow(M_PI, 0.5 * (n_ - 1)) / std::tgamma(0.5 * (n_ - 1));
    const int panels =
        std::max(8, static_cast<int>(std::ceil(std::abs(u) * M_PI / 12.0)));
    static const GaussRule rule = gauss_legendre(16);
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = M_PI * p / panels, b = M_PI * (p + 1) / panels;
      s += integrate_gauss(
          [&](double th) {
            return std::cos(u * std::cos(th)) * std::pow(std::sin(th), n_ - 2);
          },
          a, b, rule);
    }
    return area * s;
  }

  void build_a_spline() {
    const double umax = 2.0 * M_PI * ball_radius_ * (r_trunc_ * 1.02 + 4.0);
    // Dense knots where the amplitude is largest, coarser once it has
    // decayed; both grids resolve the period-2pi oscillation far beyond
    // cubic accuracy.
    const double u_split = std::min(50.0, umax);
    std::vector<double> xs, ys;
    for (double u = 0.0; u < u_split; u += 0.005) xs.push_back(u);
    for (double u = u_split; u < umax + 0.02; u += 0.02) xs.push_back(u);
    ys.resize(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) ys[i] = a_direct(xs[i]);
    a_spline_ = CubicSpline(std::move(xs), std::move(ys));
  }

  void build_b_spline() {
    const double umax = a_spline_.max_x();
    const double du = 0.02;
    const size_t count = static_cast<size_t>(umax / du) + 1;
    std::vector<double> xs(count), ys(count);
    double acc = 0.0;
    xs[0] = 0.0;
    ys[0] = 0.0;
    const auto f = [&](double u) { return std::pow(u, n_ - 1) * a_spline_(u); };
    for (size_t i = 1; i < count; ++i) {
      xs[i] = i * du;
      acc += integrate_gk15(f, xs[i - 1], xs[i]);
      ys[i] = acc;
    }
    b_spline_ = CubicSpline(std::move(xs), std::move(ys));
  }

  void build_cdf() {
    const double dt = 0.004;
    const size_t count = static_cast<size_t>(r_trunc_ / dt) + 2;
    std::vector<double> xs(count), ys(count);
    double acc = 0.0;
    xs[0] = 0.0;
    ys[0] = 0.0;
    const auto f = [&](double t) {
      const double u = 2.0 * M_PI * t * ball_radius_;
      double phi;
      if (t < 1e-8) {
        phi = phi_series_origin(t);
      } else {
        phi = b_spline_(u) / std::pow(2.0 * M_PI * t, n_);
      }
      return sphere_area_ * std::pow(t, n_ - 1) * phi * phi;
    };
    for (size_t i = 1; i < count; ++i) {
      xs[i] = i * dt;
      acc += integrate_gk15(f, xs[i - 1], xs[i]);
      ys[i] = acc;
    }
    cdf_spline_ = CubicSpline(std::move(xs), std::move(ys));
    truncated_mass_ = cdf_spline_(r_trunc_);
  }

  int n_;
  double sphere_area_ = 0.0;
  double ball_radius_ = 0.0;
  double r_trunc_ = 0.0;
  double truncated_mass_ = 0.0;
  double tail_estimate_ = 0.0;
  CubicSpline a_spline_, b_spline_, cdf_spline_;
};

// i.i.d. samples from mu restricted to the truncation ball: radius by
// inverse CDF, direction uniform on the sphere. Deterministic per seed.
inline std::vector<RVector> sample_mu(const DensityModel& m, int count,
                                      std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_mu: count must be >= 1");
  Rng rng(seed);
  std::vector<RVector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = m.radial_quantile(rng.uniform());
    RVector x = random_unit_vector(rng, m.dim());
    for (double& v : x) v *= t;
    out.push_back(std::move(x));
  }
  return out;
}

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Unbiased MC estimate of ||fa - fb||^2 in L2 of the truncated mu.
template <typename FA, typename FB>
McEstimate l2_mu_distance(const FA& fa, const FB& fb, const DensityModel& m,
                          int count, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  RVector x(m.dim());
  for (int i = 0; i < count; ++i) {
    const double t = m.radial_quantile(rng.uniform());
    x = random_unit_vector(rng, m.dim());
    for (double& v : x) v *= t;
    const double dfx = fa(x) - fb(x);
    const double v = dfx * dfx;
    sum += v;
    sum2 += v * v;
  }
  McEstimate e;
  e.value = sum / count;
  const double var = std::max(0.0, sum2 / count - e.value * e.value);
  e.stderr_ = std::sqrt(var / count);
  return e;
}

// MC estimate of Int phi^2 over the truncation ball, by importance sampling
// of the radius from a uniform + 1/t^2 mixture (the known envelope shape).
// The target value is 1 up to the truncated tail.
inline McEstimate mc_phi2_integral(const DensityModel& m, int count,
                                   std::uint64_t seed) {
  Rng rng(seed);
  const double r1 = 2.0, r2 = m.r_trunc();
  const double w_uniform = 0.5;
  // Mixture radial density q(t) on [0, r2].
  const double pareto_norm = 1.0 / r1 - 1.0 / r2;
  const auto q = [&](double t) {
    double v = w_uniform / r1 * (t <= r1 ? 1.0 : 0.0);
    if (t >= r1) v += (1.0 - w_uniform) / (pareto_norm * t * t);
    return v;
  };
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < count; ++i) {
    double t;
    if (rng.uniform() < w_uniform) {
      t = rng.uniform() * r1;
    } else {
      // Inverse CDF of the 1/t^2 leg.
      const double u = rng.uniform();
      t = 1.0 / (1.0 / r1 - u * pareto_norm);
    }
    const double v = m.radial_mass(t) / q(t);
    sum += v;
    sum2 += v * v;
  }
  McEstimate e;
  e.value = sum / count;
  const double var = std::max(0.0, sum2 / count - e.value * e.value);
  e.stderr_ = std::sqrt(var / count);
  return e;
}

}  // namespace crnet
