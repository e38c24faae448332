#pragma once

// Dense complex linear algebra, the zReLU activation, and scalar Wirtinger
// derivative utilities. Everything here is a pure function over immutable
// values and safe for unrestricted parallel use.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnet {

using cplx = std::complex<double>;

using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

// Phase in [0, 2pi); atan2 results in (-pi, 0) are shifted up. phase(0) = 0.
inline double phase(cplx z) {
  double t = std::atan2(z.imag(), z.real());
  if (t < 0.0) t += 2.0 * M_PI;
  return t;
}

// Keep set of zReLU: phase in [0, pi/2] u [pi, 3pi/2], boundaries kept.
// Equivalent sign test: Re and Im do not have strictly opposite signs.
// The sign form is exact (including signed zeros) and avoids atan2.
inline bool zrelu_kept(cplx z) {
  const double re = z.real(), im = z.imag();
  return (re >= 0.0 && im >= 0.0) || (re <= 0.0 && im <= 0.0);
}

inline cplx zrelu(cplx z) { return zrelu_kept(z) ? z : cplx(0.0, 0.0); }

struct WirtingerPair {
  cplx dz;
  cplx dzbar;
};

// Wirtinger derivatives of zReLU away from the gate boundaries:
// (1, 0) on the keep set (boundary included, matching zrelu), (0, 0) off it.
// The gate-as-derivative identity zrelu(z) == dz * z holds exactly.
inline WirtingerPair zrelu_wirtinger(cplx z) {
  return zrelu_kept(z) ? WirtingerPair{cplx(1.0, 0.0), cplx(0.0, 0.0)}
                       : WirtingerPair{cplx(0.0, 0.0), cplx(0.0, 0.0)};
}

inline double norm2(const CVector& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline double norm2(const RVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Dense row-major complex matrix.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cplx& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
  const cplx& operator()(int r, int c) const {
    return a_[static_cast<size_t>(r) * cols_ + c];
  }

  cplx* row(int r) { return a_.data() + static_cast<size_t>(r) * cols_; }
  const cplx* row(int r) const { return a_.data() + static_cast<size_t>(r) * cols_; }

  std::vector<cplx>& data() { return a_; }
  const std::vector<cplx>& data() const { return a_; }

  bool same_shape(const CMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> a_;
};

// Dense row-major real matrix.
class RMatrix {
 public:
  RMatrix() = default;
  RMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
  const double& operator()(int r, int c) const {
    return a_[static_cast<size_t>(r) * cols_ + c];
  }

  double* row(int r) { return a_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return a_.data() + static_cast<size_t>(r) * cols_; }

  std::vector<double>& data() { return a_; }
  const std::vector<double>& data() const { return a_; }

  bool same_shape(const RMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

inline CVector matvec(const CMatrix& w, const CVector& x) {
  if (static_cast<size_t>(w.cols()) != x.size()) {
    throw std::invalid_argument("matvec: shape mismatch (" +
                                std::to_string(w.rows()) + "x" +
                                std::to_string(w.cols()) + " vs length " +
                                std::to_string(x.size()) + ")");
  }
  CVector y(w.rows());
  for (int r = 0; r < w.rows(); ++r) {
    const cplx* wr = w.row(r);
    cplx acc(0.0, 0.0);
    for (size_t c = 0; c < x.size(); ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

inline RVector matvec(const RMatrix& w, const RVector& x) {
  if (static_cast<size_t>(w.cols()) != x.size()) {
    throw std::invalid_argument("matvec: shape mismatch");
  }
  RVector y(w.rows());
  for (int r = 0; r < w.rows(); ++r) {
    const double* wr = w.row(r);
    double acc = 0.0;
    for (size_t c = 0; c < x.size(); ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// Entry-wise (Frobenius-style) matrix norm.
inline double norm2(const CMatrix& w) {
  double s = 0.0;
  for (const cplx& z : w.data()) s += std::norm(z);
  return std::sqrt(s);
}

inline double norm2(const RMatrix& w) {
  double s = 0.0;
  for (double x : w.data()) s += x * x;
  return std::sqrt(s);
}

// Sum over entries of Re(a) * Re(b) + Im(a) * Im(b); the pairing that treats
// a complex row as a real vector of twice the length.
inline double real_dot(const cplx* a, const cplx* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return s;
}

inline double real_dot(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("real_dot: length mismatch");
  return real_dot(a.data(), b.data(), static_cast<int>(a.size()));
}

}  // namespace crnet
