#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dyson_eq/denoise.hpp"
#include "test_util.hpp"

using namespace dyson_eq;

namespace {

Eigen::MatrixXd low_rank(Index m, Index n, Index r, std::uint64_t seed, double scale = 1.0) {
  return scale * testutil::gaussian(m, r, seed) * testutil::gaussian(r, n, seed + 1000);
}

// Weighted loss with S = x y^T, minimized over rank r by truncating the rescaled matrix.
Eigen::MatrixXd weighted_truncation(const Eigen::MatrixXd& y, const Eigen::VectorXd& x, const Eigen::VectorXd& yv,
                                    Index r) {
  return unscale_rows_cols(truncate_svd(scale_rows_cols(y, x, yv), r), x, yv);
}

}  // namespace

TEST(TruncateSvd, EdgeRanks) {
  const Eigen::MatrixXd a = testutil::gaussian(5, 7, 1);
  EXPECT_LT(testutil::max_abs(truncate_svd(a, 5) - a), 1e-15);
  EXPECT_EQ(testutil::max_abs(truncate_svd(a, 0)), 0.0);
  EXPECT_THROW(truncate_svd(a, 6), RankOutOfRange);
  EXPECT_THROW(truncate_svd(a, -1), RankOutOfRange);
}

TEST(TruncateSvd, DiagonalByHand) {
  Eigen::MatrixXd a(2, 2);
  a << 3.0, 0.0, 0.0, 1.0;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(0, 0) = 3.0;
  EXPECT_LT(testutil::max_abs(truncate_svd(a, 1) - expected), 1e-14);
  const Eigen::MatrixXd tall = testutil::gaussian(9, 4, 2);
  EXPECT_LT(testutil::max_abs(truncate_svd(low_rank(9, 4, 2, 3), 2) - low_rank(9, 4, 2, 3)), 1e-12);
  EXPECT_EQ(truncate_svd(tall, 1).rows(), 9);
}

TEST(DenoiseEqualized, FullRankReproducesInput) {
  const DenseMatrix y(testutil::gaussian(20, 35, 4));
  const DenoiseResult res = denoise_equalized(y, EtaPolicy::quantile(), Index{20});
  EXPECT_LT(testutil::max_abs(res.x_bar.values() - y.values()), 1e-10);
  EXPECT_EQ(res.r_used, 20);
  EXPECT_EQ(testutil::max_abs(denoise_equalized(y, EtaPolicy::quantile(), Index{0}).x_bar.values()), 0.0);
  EXPECT_THROW(denoise_equalized(y, EtaPolicy::quantile(), Index{21}), RankOutOfRange);
}

TEST(DenoiseEqualized, PureNoiseSelectsRankZero) {
  // The top noise singular value sits near the edge, so an occasional 1 is expected.
  int zeros = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    zeros += denoise_equalized(DenseMatrix(testutil::gaussian(100, 200, seed))).r_used == 0;
  EXPECT_GE(zeros, 15);
}

TEST(DenoiseEqualized, StrongSignalRecovered) {
  const Eigen::MatrixXd x = low_rank(100, 200, 3, 6, 2.0);
  const DenseMatrix y(Eigen::MatrixXd(x + testutil::gaussian(100, 200, 7)));
  const DenoiseResult res = denoise_equalized(y);
  EXPECT_EQ(res.r_used, 3);
  EXPECT_LT(relative_mse(res.x_bar.values(), x), 0.1);
}

TEST(OracleSvt, ExactSignalAndZeroSignal) {
  const Eigen::MatrixXd x = low_rank(8, 12, 3, 8);
  const DenoiseResult a = oracle_svt(DenseMatrix(x), DenseMatrix(x));
  EXPECT_LT((a.x_bar.values() - x).norm(), 1e-10 * x.norm());
  EXPECT_GE(a.r_used, 3);
  const DenoiseResult b = oracle_svt(DenseMatrix(testutil::gaussian(8, 12, 9)), DenseMatrix(8, 12));
  EXPECT_EQ(b.r_used, 0);
  EXPECT_EQ(testutil::max_abs(b.x_bar.values()), 0.0);
  EXPECT_THROW(oracle_svt(DenseMatrix(8, 12), DenseMatrix(8, 11)), ShapeMismatch);
}

TEST(OracleSvt, MatchesBruteForceOverRanks) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd x = low_rank(50, 80, 5, 20 + seed, 0.3);
    const Eigen::MatrixXd y = x + testutil::gaussian(50, 80, 40 + seed);
    double best = x.norm();
    for (Index r = 1; r <= 50; ++r) best = std::min(best, (truncate_svd(y, r) - x).norm());
    const DenoiseResult res = oracle_svt(DenseMatrix(y), DenseMatrix(x));
    EXPECT_NEAR((res.x_bar.values() - x).norm(), best, 1e-9 * best);
  }
}

TEST(OracleShrinkage, ExactSignal) {
  const Eigen::MatrixXd x = low_rank(10, 15, 2, 50);
  const DenoiseResult res = oracle_shrinkage(DenseMatrix(x), DenseMatrix(x), 10);
  EXPECT_LT((res.x_bar.values() - x).norm(), 1e-10 * x.norm());
  EXPECT_EQ(testutil::max_abs(oracle_shrinkage(DenseMatrix(x), DenseMatrix(x), 0).x_bar.values()), 0.0);
  EXPECT_THROW(oracle_shrinkage(DenseMatrix(x), DenseMatrix(x), 11), RankOutOfRange);
}

TEST(OracleShrinkage, OrthogonalSignalGivesZero) {
  // Y = e1 e1^T, X = e2 e2^T: every u_i^T X v_i is 0 or the component is shrunk to 0.
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(3, 4), x = Eigen::MatrixXd::Zero(3, 4);
  y(0, 0) = 5.0;
  x(1, 1) = 1.0;
  const DenoiseResult res = oracle_shrinkage(DenseMatrix(y), DenseMatrix(x), 1);
  EXPECT_LT(testutil::max_abs(res.x_bar.values()), 1e-15);
}

TEST(OracleShrinkage, NeverWorseThanOracleSvtAndLocallyOptimal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd x = low_rank(30, 45, 4, 60 + seed, 0.4);
    const Eigen::MatrixXd y = x + testutil::gaussian(30, 45, 70 + seed);
    const double svt = (oracle_svt(DenseMatrix(y), DenseMatrix(x)).x_bar.values() - x).norm();
    const DenoiseResult shr = oracle_shrinkage(DenseMatrix(y), DenseMatrix(x), 30);
    const double base = (shr.x_bar.values() - x).norm();
    EXPECT_LE(base, svt + 1e-12);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd ut = svd.matrixU().transpose() * shr.x_bar.values() * svd.matrixV();
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd theta = ut.diagonal();
      for (Index i = 0; i < theta.size(); ++i) theta(i) = std::max(0.0, theta(i) + 0.05 * d(rng));
      const Eigen::MatrixXd cand = svd.matrixU() * theta.asDiagonal() * svd.matrixV().transpose();
      EXPECT_GE((cand - x).norm(), base - 1e-12);
    }
  }
}

TEST(WeightedLoss, ByHand) {
  const DenseMatrix theta{{1.0, 2.0}};
  const DenseMatrix y{{0.0, 0.0}};
  Eigen::MatrixXd s(1, 2);
  s << 0.5, 4.0;
  EXPECT_DOUBLE_EQ(weighted_loss(theta, y, VarianceMatrix(s)), 2.0 + 1.0);
  EXPECT_THROW(weighted_loss(theta, DenseMatrix(1, 3), VarianceMatrix(s)), ShapeMismatch);
}

TEST(RelativeMse, ByHand) {
  Eigen::MatrixXd truth(1, 2), est(1, 2);
  truth << 3.0, 4.0;
  est << 3.0, 5.0;
  EXPECT_DOUBLE_EQ(relative_mse(est, truth), 1.0 / 25.0);
}

TEST(WeightedLowRank, EckartYoungBeatsRandomCompetitors) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d;
  const Eigen::MatrixXd y = testutil::gaussian(12, 20, 12);
  for (Index r : {1, 3}) {
    const double best = (truncate_svd(y, r) - y).squaredNorm();
    for (int k = 0; k < 100; ++k) {
      const Eigen::MatrixXd cand = testutil::gaussian(12, r, 100 + k) * testutil::gaussian(r, 20, 300 + k);
      EXPECT_GE((cand - y).squaredNorm(), best);
      Eigen::MatrixXd near = truncate_svd(y, r);
      near += 1e-3 * testutil::gaussian(12, 1, 500 + k) * testutil::gaussian(1, 20, 700 + k);
      EXPECT_GE((truncate_svd(near, r) - y).squaredNorm(), best - 1e-12);
    }
  }
}

TEST(WeightedLowRank, RankOneVarianceClosedForm) {
  const Eigen::VectorXd xv = testutil::uniform(10, 0.5, 5.0, 13);
  const Eigen::VectorXd yv = testutil::uniform(14, 0.5, 5.0, 14);
  const VarianceMatrix s(Eigen::MatrixXd(xv * yv.transpose()));
  const DenseMatrix y(testutil::gaussian(10, 14, 15));
  for (Index r : {1, 2, 4}) {
    const DenseMatrix opt(weighted_truncation(y.values(), xv, yv, r));
    const double best = weighted_loss(opt, y, s);
    // Perturbations that stay rank r: rescale factor matrices of the optimum.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(opt.values(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd a = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    const Eigen::MatrixXd b = svd.matrixV().leftCols(r);
    for (int k = 0; k < 100; ++k) {
      const Eigen::MatrixXd da = 1e-2 * testutil::gaussian(10, r, 900 + k);
      const Eigen::MatrixXd db = 1e-2 * testutil::gaussian(14, r, 1900 + k);
      const DenseMatrix cand(Eigen::MatrixXd((a + da) * (b + db).transpose()));
      EXPECT_GE(weighted_loss(cand, y, s), best - 1e-10);
      const DenseMatrix unweighted(truncate_svd(y.values(), r));
      EXPECT_GE(weighted_loss(unweighted, y, s), best - 1e-10);
    }
  }
}
