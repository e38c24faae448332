#pragma once

// 1-D quadrature and interpolation utilities: Gauss-Legendre rules of
// arbitrary order, an adaptive Gauss-Kronrod (7,15) integrator, and a
// natural cubic spline.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace crnet {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Nodes by Newton iteration on the Legendre recurrence.
inline GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

template <typename F>
double integrate_gauss(const F& f, double a, double b, const GaussRule& rule) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return s * half;
}

namespace detail {

// Gauss-Kronrod (7,15) abscissae and weights.
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15WK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGK15WG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double* result, double* err) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(mid);
  double resk = fc * kGK15WK[7];
  double resg = fc * kGK15WG[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kGK15X[j];
    const double f1 = f(mid - dx);
    const double f2 = f(mid + dx);
    resk += kGK15WK[j] * (f1 + f2);
    if (j % 2 == 1) resg += kGK15WG[j / 2] * (f1 + f2);
  }
  *result = resk * half;
  *err = std::abs((resk - resg) * half);
}

}  // namespace detail

// Single (7,15) panel; exact to machine precision for integrands smooth on
// the panel.
template <typename F>
double integrate_gk15(const F& f, double a, double b) {
  double r = 0.0, e = 0.0;
  detail::gk15(f, a, b, &r, &e);
  return r;
}

// Adaptive bisection to absolute tolerance, with a floating-point floor
// relative to the local panel magnitude. Interval count is capped; the cap
// is generous for the oscillatory-but-smooth integrands used here.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol,
                          int max_intervals = 400000) {
  if (a == b) return 0.0;
  struct Seg {
    double a, b, tol;
  };
  std::vector<Seg> stack{{a, b, abs_tol}};
  double total = 0.0;
  int used = 0;
  while (!stack.empty()) {
    const Seg s = stack.back();
    stack.pop_back();
    double r = 0.0, e = 0.0;
    detail::gk15(f, s.a, s.b, &r, &e);
    ++used;
    if (e <= std::max(s.tol, 1e-15 * std::abs(r)) ||
        (s.b - s.a) < 1e-14 * (std::abs(s.a) + std::abs(s.b) + 1.0) ||
        used >= max_intervals) {
      total += r;
    } else {
      const double m = 0.5 * (s.a + s.b);
      stack.push_back({s.a, m, 0.5 * s.tol});
      stack.push_back({m, s.b, 0.5 * s.tol});
    }
  }
  return total;
}

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || n != y_.size()) {
      throw std::invalid_argument("CubicSpline: need >= 2 matching knots");
    }
    for (size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw std::invalid_argument("CubicSpline: knots must increase");
      }
    }
    m_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> diag(n, 0.0), off(n, 0.0), rhs(n, 0.0);
      for (size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (h0 + h1);
        off[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      }
      // Thomas algorithm on the interior unknowns.
      for (size_t i = 2; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double w = h0 / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
      }
      for (size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - off[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
      }
    }
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

  double operator()(double t) const {
    const size_t n = x_.size();
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const size_t hi =
        std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
    const size_t lo = hi - 1;
    const double h = x_[hi] - x_[lo];
    const double u = (x_[hi] - t) / h;
    const double v = (t - x_[lo]) / h;
    return u * y_[lo] + v * y_[hi] +
           ((u * u * u - u) * m_[lo] + (v * v * v - v) * m_[hi]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

}  // namespace crnet
