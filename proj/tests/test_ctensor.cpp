#include "crnet/ctensor.hpp"

#include <gtest/gtest.h>

#include "crnet/rng.hpp"
#include "test_util.hpp"

namespace crnet {
namespace {

// Reference gate straight from the phase-interval definition.
bool kept_by_phase_interval(cplx z) {
  const double t = phase(z);
  return (t >= 0.0 && t <= M_PI / 2.0) || (t >= M_PI && t <= 1.5 * M_PI);
}

TEST(Zrelu, KeepsFirstQuadrant) {
  const cplx z(1.0, 1.0);
  EXPECT_EQ(zrelu(z), z);
}

TEST(Zrelu, DropsSecondQuadrant) {
  EXPECT_EQ(zrelu(cplx(-1.0, 1.0)), cplx(0.0, 0.0));
}

TEST(Zrelu, PositiveHomogeneityExample) {
  EXPECT_EQ(zrelu(2.0 * cplx(1.0, 1.0)), cplx(2.0, 2.0));
}

TEST(Zrelu, BoundaryPhasesKept) {
  EXPECT_EQ(zrelu(cplx(1.0, 0.0)), cplx(1.0, 0.0));
  EXPECT_EQ(zrelu(cplx(0.0, 1.0)), cplx(0.0, 1.0));
  EXPECT_EQ(zrelu(cplx(-1.0, 0.0)), cplx(-1.0, 0.0));
  EXPECT_EQ(zrelu(cplx(0.0, -1.0)), cplx(0.0, -1.0));
  EXPECT_EQ(zrelu(cplx(0.0, 0.0)), cplx(0.0, 0.0));
}

TEST(Zrelu, SignGateMatchesPhaseIntervalDefinition) {
  Rng rng(11);
  for (int i = 0; i < 200000; ++i) {
    const cplx z(rng.normal(), rng.normal());
    ASSERT_EQ(zrelu_kept(z), kept_by_phase_interval(z)) << z.real() << " " << z.imag();
  }
}

TEST(ZreluWirtinger, KeptAndDroppedValues) {
  const auto kept = zrelu_wirtinger(cplx(1.0, 1.0));
  EXPECT_EQ(kept.dz, cplx(1.0, 0.0));
  EXPECT_EQ(kept.dzbar, cplx(0.0, 0.0));
  const auto dropped = zrelu_wirtinger(cplx(-1.0, 1.0));
  EXPECT_EQ(dropped.dz, cplx(0.0, 0.0));
  EXPECT_EQ(dropped.dzbar, cplx(0.0, 0.0));
}

// Confirmed against the phase-interval oracle: atan2(-2, 3) + 2 pi is about
// 5.70 rad, outside both kept intervals, so the derivative pair vanishes.
TEST(ZreluWirtinger, FourthQuadrantIsDropped) {
  const cplx z(3.0, -2.0);
  EXPECT_FALSE(kept_by_phase_interval(z));
  const auto w = zrelu_wirtinger(z);
  EXPECT_EQ(w.dz, cplx(0.0, 0.0));
  EXPECT_EQ(w.dzbar, cplx(0.0, 0.0));
  EXPECT_EQ(zrelu(z), cplx(0.0, 0.0));
}

TEST(ZreluWirtinger, GateIdentityExact) {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const cplx z(rng.normal() * 3.0, rng.normal() * 3.0);
    const auto w = zrelu_wirtinger(z);
    const cplx lhs = zrelu(z);
    const cplx rhs = w.dz * z;
    ASSERT_EQ(lhs, rhs);
  }
}

TEST(Zrelu, PositiveHomogeneityExact) {
  Rng rng(13);
  for (int i = 0; i < 100000; ++i) {
    const cplx z(rng.normal(), rng.normal());
    const double alpha = std::exp(rng.normal());
    const cplx a = zrelu(alpha * z);
    const cplx b = alpha * zrelu(z);
    ASSERT_EQ(a, b);
  }
}

// zrelu(z) and zrelu(i z) keep complementary halves of the circle: away
// from the boundary rays exactly one of the two is nonzero.
TEST(Zrelu, QuarterTurnPartitionsPhases) {
  Rng rng(17);
  for (int i = 0; i < 50000; ++i) {
    const cplx z(rng.normal(), rng.normal());
    if (std::min(std::abs(z.real()), std::abs(z.imag())) < 1e-12) continue;
    const bool a = zrelu(z) != cplx(0.0, 0.0);
    const bool b = zrelu(cplx(0.0, 1.0) * z) != cplx(0.0, 0.0);
    ASSERT_NE(a, b);
  }
}

// Empirical symmetry of the definition as written: the keep set is
// invariant under z -> -z, so the activation acts oddly, never evenly.
TEST(Zrelu, DefinitionActsOddlyUnderNegation) {
  Rng rng(19);
  int kept_count = 0;
  for (int i = 0; i < 100000; ++i) {
    const cplx z(rng.normal(), rng.normal());
    ASSERT_EQ(zrelu(-z), -zrelu(z));
    if (zrelu(z) != cplx(0.0, 0.0)) ++kept_count;
  }
  // Half of all phases are kept.
  EXPECT_NEAR(kept_count / 100000.0, 0.5, 0.01);
}

TEST(Phase, RangeAndSpecialValues) {
  EXPECT_DOUBLE_EQ(phase(cplx(-1.0, 0.0)), M_PI);
  EXPECT_DOUBLE_EQ(phase(cplx(0.0, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(phase(cplx(0.0, -1.0)), 1.5 * M_PI);
  Rng rng(23);
  for (int i = 0; i < 10000; ++i) {
    const double t = phase(cplx(rng.normal(), rng.normal()));
    ASSERT_GE(t, 0.0);
    ASSERT_LT(t, 2.0 * M_PI);
  }
}

TEST(Norms, PythagoreanVector) {
  EXPECT_DOUBLE_EQ(norm2(CVector{cplx(3.0, 0.0), cplx(0.0, 4.0)}), 5.0);
  EXPECT_DOUBLE_EQ(norm2(CVector{cplx(0.0, 0.0)}), 0.0);
}

TEST(Norms, TriangleInequalityAndHomogeneity) {
  Rng rng(29);
  for (int rep = 0; rep < 2000; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(10));
    CVector a(n), b(n), sum(n);
    for (int i = 0; i < n; ++i) {
      a[i] = cplx(rng.normal(), rng.normal());
      b[i] = cplx(rng.normal(), rng.normal());
      sum[i] = a[i] + b[i];
    }
    ASSERT_LE(norm2(sum), norm2(a) + norm2(b) + 1e-12);
    const double alpha = std::exp(rng.normal());
    CVector scaled = a;
    for (auto& v : scaled) v *= alpha;
    ASSERT_NEAR(norm2(scaled), alpha * norm2(a), 1e-12 * (1.0 + alpha * norm2(a)));
  }
}

TEST(Matvec, IdentityAndShapeMismatch) {
  CMatrix eye(2, 2);
  eye(0, 0) = cplx(1.0, 0.0);
  eye(1, 1) = cplx(1.0, 0.0);
  const CVector x{cplx(1.0, 0.0), cplx(0.0, 1.0)};
  EXPECT_EQ(matvec(eye, x), x);
  EXPECT_THROW(matvec(eye, CVector{cplx(1.0, 0.0)}), std::invalid_argument);
}

TEST(Matvec, MatrixNormIsEntrywise) {
  CMatrix w(2, 2);
  w(0, 0) = cplx(1.0, 1.0);
  w(1, 1) = cplx(-1.0, 1.0);
  EXPECT_DOUBLE_EQ(norm2(w), 2.0);
}

}  // namespace
}  // namespace crnet
