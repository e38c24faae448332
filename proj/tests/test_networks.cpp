#include "crnet/networks.hpp"

#include <gtest/gtest.h>

#include "crnet/checkpoint.hpp"
#include "test_util.hpp"

namespace crnet {
namespace {

using testutil::gate_margin_cr;
using testutil::gate_margin_r;
using testutil::random_input;

TEST(Embed, DefinitionAndIsometry) {
  const CVector z = embed({1.0, 2.0, 3.0, 4.0});
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z[0], cplx(1.0, 3.0));
  EXPECT_EQ(z[1], cplx(2.0, 4.0));
  EXPECT_EQ(embed({0.0, 0.0, 0.0, 0.0}), CVector(2, cplx(0.0, 0.0)));
  const RVector x{3.0, 0.0, 0.0, 4.0};
  EXPECT_DOUBLE_EQ(norm2(embed(x)), 5.0);
  EXPECT_DOUBLE_EQ(norm2(x), 5.0);
  EXPECT_THROW(embed({1.0, 2.0, 3.0}), std::invalid_argument);
}

CRNetwork tiny_cr_net() {
  CRNetwork net;
  net.d = 1;
  CMatrix w1(1, 1), w2(1, 1);
  w1(0, 0) = cplx(1.0, 0.0);
  w2(0, 0) = cplx(1.0, 0.0);
  net.layers = {w1, w2};
  net.validate();
  return net;
}

TEST(ForwardCr, HandEvaluatedSingleUnit) {
  const CRNetwork net = tiny_cr_net();
  // embed (1,1) = 1+i, kept by the gate, readout takes the real part.
  EXPECT_DOUBLE_EQ(forward_cr(net, {1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(forward_cr(net, {3.0, 3.0}), 3.0);
}

TEST(ForwardCr, ZeroWeightsGiveZero) {
  CRNetwork net = tiny_cr_net();
  net.layers[0](0, 0) = cplx(0.0, 0.0);
  net.layers[1](0, 0) = cplx(0.0, 0.0);
  EXPECT_DOUBLE_EQ(forward_cr(net, {0.7, -1.3}), 0.0);
}

TEST(ForwardCr, ShapeMismatchThrows) {
  const CRNetwork net = tiny_cr_net();
  EXPECT_THROW(forward_cr(net, {1.0, 2.0, 3.0, 4.0}), std::invalid_argument);
}

TEST(Networks, DepthTwoRequired) {
  CRNetwork net;
  net.d = 1;
  net.layers = {CMatrix(1, 1)};
  EXPECT_THROW(net.validate(), std::invalid_argument);
}

// Analytic gradients against central finite differences, away from gate
// boundaries.
TEST(GradCr, MatchesCentralFiniteDifferences) {
  Rng rng(101);
  int done = 0;
  while (done < 100) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int h1 = 1 + static_cast<int>(rng.below(4));
    const int h2 = 1 + static_cast<int>(rng.below(3));
    CRNetwork net = random_cr_network(d, {h1, h2}, rng);
    const RVector x = random_input(rng, 2 * d);
    if (gate_margin_cr(net, x) < 1e-4) continue;
    ++done;
    const auto grads = grad_cr(net, x);
    const double f0 = forward_cr(net, x);
    for (size_t l = 0; l < net.layers.size(); ++l) {
      for (int r = 0; r < net.layers[l].rows(); ++r) {
        for (int c = 0; c < net.layers[l].cols(); ++c) {
          for (int part = 0; part < 2; ++part) {
            const double analytic = part == 0 ? grads[l](r, c).real()
                                              : grads[l](r, c).imag();
            const double fd = testutil::central_diff([&](double eps) {
              CRNetwork p = net;
              p.layers[l](r, c) += part == 0 ? cplx(eps, 0.0) : cplx(0.0, eps);
              return forward_cr(p, x);
            });
            const double scale = std::max({1e-3, std::abs(analytic), std::abs(fd)});
            ASSERT_NEAR(analytic, fd, 1e-5 * scale)
                << "layer " << l << " entry " << r << "," << c << " f=" << f0;
          }
        }
      }
    }
  }
}

TEST(GradR, MatchesCentralFiniteDifferences) {
  Rng rng(103);
  int done = 0;
  while (done < 100) {
    const int dim = 2 + static_cast<int>(rng.below(4));
    const int h1 = 1 + static_cast<int>(rng.below(5));
    RNetwork net = random_r_network(dim, {h1}, rng);
    const RVector x = random_input(rng, dim);
    if (gate_margin_r(net, x) < 1e-4) continue;
    ++done;
    const auto grads = grad_r(net, x);
    for (size_t l = 0; l < net.layers.size(); ++l) {
      for (int r = 0; r < net.layers[l].rows(); ++r) {
        for (int c = 0; c < net.layers[l].cols(); ++c) {
          const double analytic = grads[l](r, c);
          const double fd = testutil::central_diff([&](double eps) {
            RNetwork p = net;
            p.layers[l](r, c) += eps;
            return forward_r(p, x);
          });
          const double scale = std::max({1e-3, std::abs(analytic), std::abs(fd)});
          ASSERT_NEAR(analytic, fd, 1e-5 * scale);
        }
      }
    }
  }
}

TEST(GradCr, ZeroInputGivesZeroGradientInFirstLayer) {
  Rng rng(105);
  CRNetwork net = random_cr_network(2, {3}, rng);
  const auto grads = grad_cr(net, {0.0, 0.0, 0.0, 0.0});
  for (const cplx& g : grads[0].data()) EXPECT_EQ(g, cplx(0.0, 0.0));
}

// Each layer is 1-homogeneous as a whole: summing the real pairing of every
// row with its gradient recovers the output.
TEST(GradCr, LayerwiseHomogeneityPairingRecoversOutput) {
  Rng rng(107);
  int done = 0;
  while (done < 50) {
    const int d = 1 + static_cast<int>(rng.below(3));
    CRNetwork net = random_cr_network(d, {3, 2}, rng);
    const RVector x = random_input(rng, 2 * d);
    if (gate_margin_cr(net, x) < 1e-6) continue;
    ++done;
    const double f = forward_cr(net, x);
    const auto grads = grad_cr(net, x);
    for (size_t l = 0; l < net.layers.size(); ++l) {
      double paired = 0.0;
      for (int r = 0; r < net.layers[l].rows(); ++r) {
        paired += real_dot(net.layers[l].row(r), grads[l].row(r),
                           net.layers[l].cols());
      }
      ASSERT_NEAR(paired, f, 1e-8 * std::max(1.0, std::abs(f)));
    }
  }
}

// With a single row the layer pairing is the per-row identity.
TEST(GradCr, SingleRowLayerPairingIsRowwise) {
  Rng rng(109);
  for (int rep = 0; rep < 50; ++rep) {
    CRNetwork net = random_cr_network(2, {1}, rng);
    const RVector x = random_input(rng, 4);
    const double f = forward_cr(net, x);
    const auto grads = grad_cr(net, x);
    for (size_t l = 0; l < net.layers.size(); ++l) {
      const double paired =
          real_dot(net.layers[l].row(0), grads[l].row(0), net.layers[l].cols());
      ASSERT_NEAR(paired, f, 1e-10 * std::max(1.0, std::abs(f)));
    }
  }
}

TEST(ForwardCr, RowColumnRescalingInvariance) {
  Rng rng(111);
  for (int rep = 0; rep < 50; ++rep) {
    CRNetwork net = random_cr_network(2, {4}, rng);
    const RVector x = random_input(rng, 4);
    const double before = forward_cr(net, x);
    const double alpha = std::exp(rng.normal());
    CRNetwork scaled = net;
    const int j = static_cast<int>(rng.below(4));
    for (int c = 0; c < scaled.layers[0].cols(); ++c) scaled.layers[0](j, c) *= alpha;
    scaled.layers[1](0, j) /= alpha;
    ASSERT_NEAR(forward_cr(scaled, x), before, 1e-12 * std::max(1.0, std::abs(before)));
  }
}

TEST(ForwardR, PositiveRescalingAndLinearLayer) {
  Rng rng(113);
  RNetwork net = random_r_network(3, {4}, rng);
  const RVector x = random_input(rng, 3);
  const double before = forward_r(net, x);
  RNetwork scaled = net;
  for (int c = 0; c < scaled.layers[0].cols(); ++c) scaled.layers[0](1, c) *= 2.5;
  scaled.layers[1](0, 1) /= 2.5;
  EXPECT_NEAR(forward_r(scaled, x), before, 1e-12 * std::max(1.0, std::abs(before)));

  RNetwork lin;
  lin.dim = 3;
  RMatrix w(1, 3);
  w(0, 0) = 0.5;
  w(0, 1) = -1.0;
  w(0, 2) = 2.0;
  lin.layers = {w};
  EXPECT_DOUBLE_EQ(forward_r(lin, {1.0, 2.0, 3.0}), 0.5 - 2.0 + 6.0);
}

TEST(Normalize, RowExampleRoundTripAndZeroRow) {
  CMatrix w(1, 2);
  w(0, 0) = cplx(3.0, 0.0);
  w(0, 1) = cplx(4.0, 0.0);
  const auto n = normalize_layers(std::vector<CMatrix>{w});
  EXPECT_DOUBLE_EQ(n.gamma[0][0], 5.0);
  EXPECT_EQ(n.dirs[0](0, 0), cplx(0.6, 0.0));
  EXPECT_EQ(n.dirs[0](0, 1), cplx(0.8, 0.0));

  Rng rng(115);
  CRNetwork net = random_cr_network(2, {3, 3}, rng);
  const auto norm = normalize_layers(net.layers);
  const auto back = denormalize_layers(norm);
  for (size_t l = 0; l < back.size(); ++l) {
    for (size_t k = 0; k < back[l].data().size(); ++k) {
      ASSERT_NEAR(std::abs(back[l].data()[k] - net.layers[l].data()[k]), 0.0, 1e-12);
    }
    for (int r = 0; r < norm.dirs[l].rows(); ++r) {
      double s = 0.0;
      for (int c = 0; c < norm.dirs[l].cols(); ++c) s += std::norm(norm.dirs[l](r, c));
      ASSERT_NEAR(std::sqrt(s), 1.0, 1e-12);
    }
  }

  CMatrix zero_row(2, 2);
  zero_row(0, 0) = cplx(1.0, 0.0);
  EXPECT_THROW(normalize_layers(std::vector<CMatrix>{zero_row}), std::invalid_argument);
}

TEST(MatchParameterStructure, ParityCases) {
  const auto even_even = match_parameter_structure(4, 6);
  EXPECT_EQ(even_even.inputs, 4);
  EXPECT_EQ(even_even.units, 3);
  EXPECT_FALSE(even_even.mask_last_input_imag);
  EXPECT_EQ(even_even.real_param_count(), 24);

  const auto odd_even = match_parameter_structure(5, 6);
  EXPECT_EQ(odd_even.inputs, 5);
  EXPECT_EQ(odd_even.units, 3);
  EXPECT_EQ(odd_even.real_param_count(), 30);

  const auto odd_odd = match_parameter_structure(5, 7);
  EXPECT_EQ(odd_odd.inputs, 3);
  EXPECT_EQ(odd_odd.units, 7);
  EXPECT_TRUE(odd_odd.mask_last_input_imag);
  EXPECT_EQ(odd_odd.real_param_count(), 35);
}

TEST(MatchParameterStructure, CountIdentityExhaustive) {
  for (int p = 1; p <= 64; ++p) {
    for (int q = 1; q <= 64; ++q) {
      ASSERT_EQ(match_parameter_structure(p, q).real_param_count(), p * q)
          << p << "x" << q;
    }
  }
  EXPECT_THROW(match_parameter_structure(0, 3), std::invalid_argument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(117);
  CRNetwork net = random_cr_network(3, {5, 2}, rng, true);
  const auto j = checkpoint_json(net);
  const std::string text = j.dump();
  const CRNetwork back = cr_network_from_json(nlohmann::json::parse(text));
  ASSERT_EQ(back.layers.size(), net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    ASSERT_TRUE(back.layers[l].same_shape(net.layers[l]));
    for (size_t k = 0; k < net.layers[l].data().size(); ++k) {
      ASSERT_EQ(back.layers[l].data()[k], net.layers[l].data()[k]);
    }
  }
  EXPECT_EQ(checkpoint_json(back).dump(), text);

  RNetwork rnet = random_r_network(4, {3}, rng);
  const std::string rtext = checkpoint_json(rnet).dump();
  const RNetwork rback = r_network_from_json(nlohmann::json::parse(rtext));
  EXPECT_EQ(checkpoint_json(rback).dump(), rtext);
}

}  // namespace
}  // namespace crnet
