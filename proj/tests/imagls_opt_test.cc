#include "imagls/imagls_opt.h"

#include <cmath>

#include <gtest/gtest.h>

#include "imagls/errors.h"
#include "imagls/pipeline.h"
#include "test_support.h"

namespace imagls {
namespace {

using test::MakeSmallProblem;
using test::SmallProblem;

double MeanIldError(const ShHrtf& h, const IldSetup& ild) {
  return IldErrorAveraged(ild.reference,
                          ComputeIldCurve(h, ild.azimuths, ild.bank))
      .mean();
}

TEST(AutoLambdaTest, Examples) {
  EXPECT_EQ(AutoLambda(4.0, 2.0), 2.0);
  EXPECT_EQ(AutoLambda(1.0, 1.0), 1.0);
  EXPECT_THROW(AutoLambda(1.0, 0.0), ValidationError);
}

TEST(ImaglsConfigTest, Validation) {
  ImaglsConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.lambda = -1.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = ImaglsConfig{};
  c.smooth_eps_db = 0.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = ImaglsConfig{};
  c.band_lo_hz = 5000.0;
  c.band_hi_hz = 4000.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = ImaglsConfig{};
  c.band_lo_hz = 30000.0;
  c.band_hi_hz = 40000.0;
  EXPECT_THROW(OptimizationBand(DefaultFrequencyGrid(), c), ValidationError);
}

class SmallOptimizationTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    problem_ = new SmallProblem(MakeSmallProblem());
    result_ = new std::pair<ShHrtf, OptimReport>(OptimizeImagls(
        problem_->ref, 1, ImaglsConfig{}, MaglsConfig{}, problem_->ild));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete problem_;
  }
  static SmallProblem* problem_;
  static std::pair<ShHrtf, OptimReport>* result_;
};

SmallProblem* SmallOptimizationTest::problem_ = nullptr;
std::pair<ShHrtf, OptimReport>* SmallOptimizationTest::result_ = nullptr;

TEST_F(SmallOptimizationTest, AutoLambdaBalancesTermsAtStart) {
  const OptimReport& report = result_->second;
  ASSERT_FALSE(report.loss_trace.empty());
  const TraceEntry& t0 = report.loss_trace.front();
  EXPECT_EQ(t0.iteration, 0);
  EXPECT_NEAR(t0.mag, report.lambda_used * t0.ild, 1e-12 * t0.mag);
}

TEST_F(SmallOptimizationTest, TraceIsMonotoneAndConsistent) {
  const OptimReport& report = result_->second;
  EXPECT_EQ(static_cast<int>(report.loss_trace.size()), report.iterations + 1);
  for (std::size_t i = 0; i < report.loss_trace.size(); ++i) {
    const TraceEntry& t = report.loss_trace[i];
    EXPECT_EQ(t.iteration, static_cast<int>(i));
    EXPECT_NEAR(t.total, t.mag + report.lambda_used * t.ild, 1e-12 * t.total);
    if (i > 0) {
      EXPECT_LE(t.total, report.loss_trace[i - 1].total);
    }
  }
  EXPECT_LE(report.iterations, 500);
}

TEST_F(SmallOptimizationTest, ReducesIldErrorAgainstMagls) {
  const ShHrtf& solution = result_->first;
  EXPECT_EQ(solution.provenance, Provenance::kIMagLs);
  EXPECT_LT(MeanIldError(solution, problem_->ild),
            MeanIldError(problem_->init, problem_->ild));
}

TEST_F(SmallOptimizationTest, BinsOutsideBandKeepMaglsCoefficients) {
  const ShHrtf& solution = result_->first;
  for (int f = 0; f < problem_->ref.freqs.size(); ++f) {
    if (problem_->ref.freqs[f] < 1200.0) {
      EXPECT_EQ(solution.left.col(f), problem_->init.left.col(f));
      EXPECT_EQ(solution.right.col(f), problem_->init.right.col(f));
    }
  }
}

TEST(ImaglsOptTest, ExplicitLambdaIsUsed) {
  const SmallProblem sp = MakeSmallProblem(8);
  ImaglsConfig cfg;
  cfg.lambda = 0.25;
  cfg.max_iters = 5;
  const auto [solution, report] =
      OptimizeImagls(sp.ref, 1, cfg, MaglsConfig{}, sp.ild);
  EXPECT_EQ(report.lambda_used, 0.25);
  EXPECT_EQ(report.status, "max_iters");
  EXPECT_FALSE(report.converged);
}

TEST(ImaglsOptTest, ZeroLambdaMatchesMagnitudeOnlyRun) {
  const SmallProblem sp = MakeSmallProblem(8);
  ImaglsConfig zero;
  zero.lambda = 0.0;
  ImaglsConfig mag_only;
  mag_only.include_ild = false;
  const auto a = OptimizeImagls(sp.ref, 1, zero, MaglsConfig{}, sp.ild);
  const auto b = OptimizeImagls(sp.ref, 1, mag_only, MaglsConfig{}, sp.ild);
  EXPECT_EQ(b.second.lambda_used, 0.0);
  EXPECT_NEAR(a.second.loss_trace.back().mag, b.second.loss_trace.back().mag, 1e-6);
  // Magnitude-only refinement cannot be worse than its MagLS start.
  EXPECT_LE(b.second.loss_trace.back().mag, b.second.loss_trace.front().mag);
}

TEST(ImaglsOptTest, LbfgsAlsoReducesIldError) {
  const SmallProblem sp = MakeSmallProblem(8);
  ImaglsConfig cfg;
  cfg.optimizer = QuasiNewtonMethod::kLbfgs;
  const auto [solution, report] =
      OptimizeImagls(sp.ref, 1, cfg, MaglsConfig{}, sp.ild);
  EXPECT_LT(MeanIldError(solution, sp.ild), MeanIldError(sp.init, sp.ild));
  EXPECT_LT(report.loss_trace.back().total, report.loss_trace.front().total);
}

TEST(ImaglsOptTest, FullOrderZeroResidualProblemStaysExact) {
  // H = B(q) s(f) with B of order 3: the MagLS start already represents the
  // magnitudes and the reference ILD exactly.
  const SphericalGrid grid = GaussGrid(4);
  const HrtfSet ref = test::SeparableSet(grid, 3, test::SmallFrequencies(), 61);
  const IldSetup ild = MakeIldSetup(TruncateReference(ref, 3),
                                    GammatoneBank(ref.freqs, 1200.0, 18000.0),
                                    HorizontalAzimuths(24));
  ImaglsConfig cfg;
  EXPECT_THROW(OptimizeImagls(ref, 3, cfg, MaglsConfig{}, ild), ValidationError);
  cfg.lambda = 1.0;
  const auto [solution, report] = OptimizeImagls(ref, 3, cfg, MaglsConfig{}, ild);
  EXPECT_TRUE(report.converged);
  EXPECT_LT(report.loss_trace.back().total, 1e-9);
  for (Ear e : kEars) {
    const Eigen::MatrixXcd y = IshtColumns(solution.ear(e), grid.directions());
    EXPECT_LT((y.cwiseAbs() - ref.ear(e).cwiseAbs()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ImaglsOptTest, SmoothingConsistencyOnDefaultProblem) {
  const PipelineConfig pc;
  const HrtfSet ref = BuildReference(pc);
  const IldSetup ild = BuildIldSetup(pc, ref);
  std::vector<double> ild_terms;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    ImaglsConfig cfg = pc.imagls;
    cfg.smooth_eps_db = eps;
    const auto [solution, report] =
        OptimizeImagls(ref, pc.low_order, cfg, pc.magls, ild);
    ild_terms.push_back(report.loss_trace.back().ild);
  }
  const double change = std::abs(ild_terms[2] - ild_terms[1]) / ild_terms[1];
  EXPECT_LT(change, 0.01) << ild_terms[0] << " " << ild_terms[1] << " "
                          << ild_terms[2];
}

}  // namespace
}  // namespace imagls
