#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "eccentric/kernel.hpp"
#include "support/oracles.hpp"

using namespace eccentric;

namespace {

ParamSet params(int dim, double mu, double n) { return ParamSet{dim, mu, n, 0.0}; }

Matrix fd_gradient(const Matrix &z, const ParamSet &p, double h) {
  Matrix g(z.rows(), z.cols());
  Matrix work = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      work(i, k) = z(i, k) + h;
      double up = batch_loss(PointBatch(work), p);
      work(i, k) = z(i, k) - h;
      double down = batch_loss(PointBatch(work), p);
      work(i, k) = z(i, k);
      g(i, k) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

} // namespace

TEST(PairKernel, OriginPairIsZero) {
  std::vector<double> o{0.0, 0.0};
  EXPECT_EQ(pair_kernel(o, o, params(2, 1.0, 6.0)), 0.0);
}

TEST(PairKernel, OppositeUnitPointsMatchHighPrecisionValue) {
  std::vector<double> a{1.0, 0.0}, b{-1.0, 0.0};
  EXPECT_NEAR(pair_kernel(a, b, params(2, 1.0, 6.0)), -2.0649537425959440992, 1e-14);
}

TEST(PairKernel, Symmetric) {
  Matrix m = oracle::random_matrix(2, 5, 11);
  auto p = params(5, 1.7, 3.2);
  PointBatch batch(m);
  EXPECT_EQ(pair_kernel(batch.row(0), batch.row(1), p), pair_kernel(batch.row(1), batch.row(0), p));
}

TEST(PairKernel, RejectsBadInput) {
  std::vector<double> a{1.0, 0.0}, b{1.0, 0.0, 0.0};
  EXPECT_THROW(pair_kernel(a, b, params(2, 1.0, 6.0)), ValidationError);
  std::vector<double> c{NAN, 0.0};
  EXPECT_THROW(pair_kernel(a, c, params(2, 1.0, 6.0)), ValidationError);
}

TEST(BatchLoss, AllAtOriginIsZero) {
  EXPECT_EQ(batch_loss(PointBatch(7, 3), params(3, 1.0, 2.0)), 0.0);
}

TEST(BatchLoss, TwoPointsEqualsPairKernel) {
  PointBatch batch(oracle::random_matrix(2, 4, 3));
  auto p = params(4, 2.0, 1.5);
  EXPECT_NEAR(batch_loss(batch, p), pair_kernel(batch.row(0), batch.row(1), p), 1e-14);
}

TEST(BatchLoss, ExpandedFormAndOrderedPairMean) {
  Matrix z = oracle::random_matrix(9, 3, 5);
  auto p = params(3, 1.3, 2.7);
  PointBatch batch(z);
  double mean = 0.0;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      if (i != j)
        mean += pair_kernel(batch.row(i), batch.row(j), p);
  mean /= 72.0;
  EXPECT_LT(oracle::rel_err(batch_loss(batch, p), mean), 1e-13);
}

TEST(BatchLoss, MatchesGramExpansionReference) {
  auto p = params_with_auto_n(64, 1.0);
  EXPECT_NEAR(p.big_n, 129.02, 0.005);
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    Matrix z = oracle::random_matrix(100, 64, 100 + seed);
    EXPECT_LT(oracle::rel_err(batch_loss(PointBatch(z), p), oracle::gram_loss(z, p.mu, p.big_n)),
              1e-10);
  }
}

TEST(BatchLoss, ZeroMuIsMeanSquaredNorm) {
  Matrix z = oracle::random_matrix(13, 4, 8);
  EXPECT_DOUBLE_EQ(batch_loss(PointBatch(z), params(4, 0.0, 3.0)),
                   z.rowwise().squaredNorm().sum() / 13.0);
}

TEST(BatchLoss, RotationInvariant) {
  Matrix z = oracle::random_matrix(30, 6, 21);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(oracle::random_matrix(6, 6, 22)));
  Eigen::MatrixXd q = qr.householderQ();
  Matrix rotated = z * q;
  auto p = params(6, 1.5, 4.0);
  EXPECT_LT(oracle::rel_err(batch_loss(PointBatch(rotated), p), batch_loss(PointBatch(z), p)),
            1e-12);
}

TEST(BatchLoss, RejectsSmallBatchOrWrongDim) {
  EXPECT_THROW(batch_loss(PointBatch(1, 2), params(2, 1.0, 6.0)), ValidationError);
  EXPECT_THROW(batch_loss(PointBatch(4, 3), params(2, 1.0, 6.0)), ValidationError);
  EXPECT_THROW(batch_loss_gradient(PointBatch(1, 2), params(2, 1.0, 6.0)), ValidationError);
}

TEST(Gradient, ZeroAtOrigin) {
  Matrix g = batch_loss_gradient(PointBatch(5, 3), params(3, 1.0, 2.0));
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, AntisymmetricPair) {
  Matrix z(2, 3);
  z << 0.3, -1.2, 0.7, -0.3, 1.2, -0.7;
  Matrix g = batch_loss_gradient(PointBatch(z), params(3, 1.0, 7.5));
  EXPECT_EQ((g.row(0) + g.row(1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    Matrix z = oracle::random_matrix(20, 8, 40 + seed);
    auto p = params(8, 1.0 + seed, 3.0 + seed);
    Matrix g = batch_loss_gradient(PointBatch(z), p);
    Matrix fd = fd_gradient(z, p, 1e-5);
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
  }
}

TEST(Gradient, ThreadCountDoesNotChangeResult) {
  Matrix z = oracle::random_matrix(300, 16, 77);
  auto p = params_with_auto_n(16, 1.0);
  Matrix g1 = batch_loss_gradient(PointBatch(z), p, 1);
  for (unsigned t : {2u, 3u, 8u}) {
    Matrix gt = batch_loss_gradient(PointBatch(z), p, t);
    EXPECT_LE((g1 - gt).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(g1 == gt) << "row sums are index-ordered, so results should be bit-identical";
  }
}

TEST(ChooseBigN, CaptionValues) {
  EXPECT_DOUBLE_EQ(choose_big_n(2, 1.0), 6.0);
  EXPECT_DOUBLE_EQ(choose_big_n(2, 2.5), 1.2);
}

TEST(ChooseBigN, TableValues) {
  EXPECT_NEAR(choose_big_n(64, 1.0), 129.02, 0.005);
  EXPECT_NEAR(choose_big_n(64, 16.5), 4.00, 0.005);
  EXPECT_NEAR(choose_big_n(64, 64.5), 1.00, 0.005);
  // The two middle rows also agree with the formula to the printed precision.
  EXPECT_NEAR(choose_big_n(64, 1.5), 64.34, 0.005);
  EXPECT_NEAR(choose_big_n(64, 4.5), 16.03, 0.005);
}

TEST(ChooseBigN, RejectsWeakRepulsion) {
  EXPECT_THROW(choose_big_n(8, 0.5), ValidationError);
  EXPECT_THROW(choose_big_n(1, 1.0), ValidationError);
  EXPECT_THROW(params_with_auto_n(4, 9.5), ValidationError);
  EXPECT_THROW(params_with_auto_n(4, 0.9), ValidationError);
}
