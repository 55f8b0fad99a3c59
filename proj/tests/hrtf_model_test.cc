#include "imagls/hrtf_model.h"

#include <cmath>
#include <random>

#include <boost/math/special_functions/hankel.hpp>
#include <gtest/gtest.h>

#include "imagls/errors.h"
#include "test_support.h"

namespace imagls {
namespace {

// Independent series evaluation with Boost's spherical Hankel function of the
// second kind and the derivative identity h_n' = (n / x) h_n - h_{n+1}.
Complex BoostSphereResponse(double ka, double cos_angle, int order) {
  Complex sum = 0.0;
  Complex i_pow = Complex(0.0, -1.0);  // i^(n-1) at n = 0
  for (int n = 0; n <= order; ++n) {
    const Complex h = boost::math::sph_hankel_2(n, ka);
    const Complex h_next = boost::math::sph_hankel_2(n + 1, ka);
    const Complex dh = (static_cast<double>(n) / ka) * h - h_next;
    sum += (2.0 * n + 1.0) * i_pow * std::legendre(n, cos_angle) /
           (ka * ka * dh);
    i_pow *= Complex(0.0, 1.0);
  }
  return sum;
}

double Ka(double f_hz, const SphereModelConfig& cfg = {}) {
  return 2.0 * kPi * f_hz * cfg.radius_m / cfg.speed_of_sound_mps;
}

TEST(RigidSphereTest, MatchesBoostSeriesOracle) {
  for (double f : {100.0, 1000.0, 5000.0, 18000.0}) {
    for (double cos_angle : {1.0, 0.3, -0.2, -1.0}) {
      const Complex expected = BoostSphereResponse(Ka(f), cos_angle, 80);
      const Complex got = RigidSphereResponse(Ka(f), cos_angle, 60);
      EXPECT_LT(std::abs(got - expected), 1e-9 * std::abs(expected))
          << "f=" << f << " cos=" << cos_angle;
    }
  }
}

TEST(RigidSphereTest, LowFrequencyLimitIsUnity) {
  // H = 1 + i (3/2) ka cos + O(ka^2): unit magnitude, first-order phase.
  const double ka = Ka(10.0);
  for (double c : {1.0, -1.0, 0.4}) {
    const Complex h = RigidSphereResponse(ka, c, 60);
    EXPECT_LT(std::abs(std::abs(h) - 1.0), 1e-3);
    EXPECT_LT(std::abs(h - Complex(1.0, 1.5 * ka * c)), 10.0 * ka * ka);
  }
}

TEST(RigidSphereTest, HighFrequencyIpsilateralBoost) {
  const double g = std::abs(RigidSphereResponse(Ka(18000.0), 1.0, 60));
  EXPECT_GT(g, 1.5);
  EXPECT_LT(g, 2.5);
}

TEST(RigidSphereTest, HeadShadowAtThreeKilohertz) {
  const SphereModelConfig cfg;
  const FrequencyGrid freqs({3000.0});
  const auto ears = RigidSphereEars(cfg, Direction(kPi / 2.0, kPi / 2.0), freqs);
  EXPECT_GT(std::abs(ears[0][0]), std::abs(ears[1][0]));
}

TEST(RigidSphereTest, MirrorSymmetryAcrossMedianPlane) {
  const SphereModelConfig cfg;
  const FrequencyGrid freqs = DefaultFrequencyGrid();
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Direction d = test::RandomDirection(&rng);
    const Direction mirrored(-d.azimuth(), d.colatitude());
    const auto a = RigidSphereEars(cfg, d, freqs);
    const auto b = RigidSphereEars(cfg, mirrored, freqs);
    for (int f = 0; f < freqs.size(); ++f) {
      EXPECT_LT(std::abs(a[0][f] - b[1][f]), 1e-10);
      EXPECT_LT(std::abs(a[1][f] - b[0][f]), 1e-10);
    }
  }
}

TEST(RigidSphereTest, MedianPlaneEarsAreEqual) {
  const SphereModelConfig cfg;
  const FrequencyGrid freqs = DefaultFrequencyGrid();
  for (double col : {0.0, 0.7, kPi / 2.0, 2.5, kPi}) {
    for (double az : {0.0, kPi}) {
      const auto e = RigidSphereEars(cfg, Direction(az, col), freqs);
      for (int f = 0; f < freqs.size(); ++f) {
        EXPECT_LT(std::abs(e[0][f] - e[1][f]), 1e-10);
      }
    }
  }
}

TEST(RigidSphereTest, DependsOnlyOnAngleToEar) {
  // Two sources at the same angle from the left ear must give the same
  // left-ear response.
  const SphereModelConfig cfg;
  const FrequencyGrid freqs({500.0, 4000.0, 12000.0});
  const Direction ear = cfg.ear_direction(Ear::kLeft);
  const Direction a(kPi / 2.0 + 0.8, kPi / 2.0);
  const Direction b(kPi / 2.0, kPi / 2.0 + 0.8);
  ASSERT_NEAR(a.CosAngleTo(ear), b.CosAngleTo(ear), 1e-15);
  const auto ra = RigidSphereEars(cfg, a, freqs);
  const auto rb = RigidSphereEars(cfg, b, freqs);
  for (int f = 0; f < freqs.size(); ++f) {
    EXPECT_LT(std::abs(ra[0][f] - rb[0][f]), 1e-12);
  }
}

TEST(RigidSphereTest, SeriesOrderDoublingIsStable) {
  const FrequencyGrid freqs = DefaultFrequencyGrid();
  for (int f = 0; f < freqs.size(); ++f) {
    for (double c : {1.0, 0.0, -1.0, 0.5}) {
      const Complex a = RigidSphereResponse(Ka(freqs[f]), c, 60);
      const Complex b = RigidSphereResponse(Ka(freqs[f]), c, 120);
      EXPECT_LT(std::abs(a - b), 1e-8 * std::abs(b));
    }
  }
}

TEST(RigidSphereTest, ValidationErrors) {
  SphereModelConfig cfg;
  cfg.radius_m = 0.0;
  EXPECT_THROW(cfg.Validate(1000.0), ValidationError);
  cfg = SphereModelConfig{};
  cfg.series_order = 5;
  EXPECT_THROW(cfg.Validate(18000.0), ValidationError);
  cfg = SphereModelConfig{};
  EXPECT_NO_THROW(cfg.Validate(18000.0));
  EXPECT_GT(RigidSphereTailRatio(Ka(18000.0), 10), 1e-10);
  EXPECT_LT(RigidSphereTailRatio(Ka(18000.0), 60), 1e-10);
}

TEST(RigidSphereHrtfTest, GridSetMatchesPointEvaluation) {
  const SphereModelConfig cfg;
  const SphericalGrid grid = GaussGrid(4);
  const FrequencyGrid freqs({250.0, 2500.0, 9000.0});
  const HrtfSet set = RigidSphereHrtf(cfg, grid, freqs);
  EXPECT_NO_THROW(set.Validate());
  for (int q = 0; q < grid.size(); ++q) {
    const auto e = RigidSphereEars(cfg, grid.direction(q), freqs);
    for (int f = 0; f < freqs.size(); ++f) {
      EXPECT_EQ(set.left(q, f), e[0][f]);
      EXPECT_EQ(set.right(q, f), e[1][f]);
    }
  }
}

TEST(FrequencyGridTest, ValidationAndDefaults) {
  EXPECT_THROW(FrequencyGrid({0.0, 100.0}), ValidationError);
  EXPECT_THROW(FrequencyGrid({200.0, 100.0}), ValidationError);
  EXPECT_THROW(FrequencyGrid({}), ValidationError);
  const FrequencyGrid d = DefaultFrequencyGrid();
  EXPECT_EQ(d.size(), 96);
  EXPECT_DOUBLE_EQ(d.front(), 187.5);
  EXPECT_DOUBLE_EQ(d.back(), 18000.0);
  const std::vector<int> bins = d.BinsInRange(1200.0, 20000.0);
  EXPECT_EQ(bins.front(), 6);  // 1312.5 Hz
  EXPECT_EQ(bins.back(), 95);
}

TEST(HrtfSetTest, ValidateRejectsBadShapesAndValues) {
  HrtfSet set = RigidSphereHrtf(SphereModelConfig{}, GaussGrid(2),
                                FrequencyGrid({1000.0, 2000.0}));
  HrtfSet bad = set;
  bad.left.conservativeResize(bad.left.rows() - 1, Eigen::NoChange);
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad = set;
  bad.right(0, 0) = Complex(std::nan(""), 0.0);
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad = set;
  bad.right(0, 0) = 2e6;
  EXPECT_THROW(bad.Validate(), ValidationError);
}

TEST(TruncateReferenceTest, BandlimitedSetIsReproducedExactly) {
  const SphericalGrid grid = GaussGrid(6);
  const FrequencyGrid freqs({500.0, 1000.0});
  const HrtfSet set = test::BandlimitedSet(grid, 6, freqs, 12);
  const ShHrtf sh = TruncateReference(set, 6);
  EXPECT_EQ(sh.provenance, Provenance::kTruncation);
  EXPECT_LT(test::MaxAbsDiff(IshtColumns(sh.left, grid.directions()), set.left),
            1e-10);
  EXPECT_LT(test::MaxAbsDiff(IshtColumns(sh.right, grid.directions()), set.right),
            1e-10);
}

TEST(TruncateReferenceTest, OrderZeroOfConstantAndGridLimit) {
  const SphericalGrid grid = GaussGrid(3);
  const FrequencyGrid freqs({500.0});
  HrtfSet set{grid, freqs, Eigen::MatrixXcd::Constant(grid.size(), 1, 2.0),
              Eigen::MatrixXcd::Constant(grid.size(), 1, 3.0), "const"};
  const ShHrtf sh = TruncateReference(set, 0);
  EXPECT_NEAR(std::abs(sh.left(0, 0) - 2.0 * std::sqrt(kFourPi)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(sh.right(0, 0) - 3.0 * std::sqrt(kFourPi)), 0.0, 1e-12);
  EXPECT_THROW(TruncateReference(set, 4), ValidationError);
}

TEST(TruncateReferenceTest, SphereErrorShrinksWithOrder) {
  const HrtfSet set = test::SmallSphereSet(12);
  const int bin = 20;  // 7875 Hz
  double prev = 1e300;
  for (int order : {1, 4, 8, 12}) {
    const ShHrtf sh = TruncateReference(set, order);
    const Eigen::VectorXcd y =
        IshtColumns(sh.left.col(bin), set.grid.directions());
    const double err = (y - set.left.col(bin)).norm();
    EXPECT_LT(err, prev) << order;
    prev = err;
  }
}

TEST(ProvenanceTest, NamesRoundTrip) {
  for (Provenance p : {Provenance::kLs, Provenance::kMagLs, Provenance::kMagLsCc,
                       Provenance::kIMagLs, Provenance::kTruncation}) {
    EXPECT_EQ(ParseProvenance(ProvenanceName(p)), p);
  }
  EXPECT_THROW(ParseProvenance("bogus"), ValidationError);
}

}  // namespace
}  // namespace imagls
