#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pslb/design.hpp"
#include "pslb/env.hpp"
#include "pslb/errors.hpp"

namespace pslb {
namespace {

ArmMatrix random_arms(std::mt19937_64& rng, int d, int k) {
  std::normal_distribution<double> n(0.0, 1.0);
  ArmMatrix a(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = n(rng);
  return a;
}

double g_of(const ArmMatrix& arms, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd a = arms * w.asDiagonal() * arms.transpose();
  const Eigen::MatrixXd inv = a.inverse();
  return (arms.transpose() * inv * arms).diagonal().maxCoeff();
}

TEST(Design, UnitVectorsGiveUniformWeights) {
  for (int d = 1; d <= 5; ++d) {
    const Allocation a = compute_g_optimal(Eigen::MatrixXd::Identity(d, d));
    for (int i = 0; i < d; ++i) EXPECT_NEAR(a.weights[i], 1.0 / d, 1e-9);
    EXPECT_NEAR(max_design_norm(a, Eigen::MatrixXd::Identity(d, d)), d, 1e-9);
  }
}

TEST(Design, SingleArmInOneDimension) {
  ArmMatrix one(1, 1);
  one(0, 0) = 1.0;
  const Allocation a = compute_g_optimal(one);
  EXPECT_DOUBLE_EQ(a.weights[0], 1.0);
  EXPECT_NEAR(max_design_norm(a, one), 1.0, 1e-12);
}

TEST(Design, ExampleFiveOneMatchesSimplexGrid) {
  const Instance inst = make_example_5_1(2, std::acos(-1.0) / 8.0);
  const Allocation a = compute_g_optimal(inst.arms);
  const double g = max_design_norm(a, inst.arms);
  EXPECT_LE(g, 2.0 * (1.0 + 1e-4));

  double best = 1e300;
  const int res = 1000;
  for (int i = 0; i <= res; ++i)
    for (int j = 0; i + j <= res; ++j) {
      Eigen::Vector3d w(i, j, res - i - j);
      w /= res;
      const Eigen::Matrix2d m = inst.arms * w.asDiagonal() * inst.arms.transpose();
      if (std::abs(m.determinant()) < 1e-12) continue;
      best = std::min(best, g_of(inst.arms, w));
    }
  EXPECT_LE(g, best + 1e-9);
  EXPECT_NEAR(best, 2.0, 1e-2);
}

TEST(Design, UniformOverTwoAxesHasNormTwo) {
  const Allocation a = make_allocation(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.5, 0.5));
  EXPECT_DOUBLE_EQ(max_design_norm(a, Eigen::MatrixXd::Identity(2, 2)), 2.0);
}

TEST(Design, AllocationInvariants) {
  std::mt19937_64 rng(11);
  const ArmMatrix arms = random_arms(rng, 4, 9);
  const Allocation a = compute_g_optimal(arms);
  EXPECT_NEAR(a.weights.sum(), 1.0, 1e-12);
  EXPECT_GE(a.weights.minCoeff(), 0.0);
  EXPECT_TRUE(a.info_matrix.isApprox(a.info_matrix.transpose(), 1e-14));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.info_matrix);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  const Eigen::MatrixXd id = a.info_inverse * a.info_matrix;
  EXPECT_LE((id - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_DOUBLE_EQ(a.cdf[a.cdf.size() - 1], 1.0);
}

TEST(Design, KieferWolfowitzOnRandomArmSets) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dd(1, 6);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = dd(rng);
    const int k = std::uniform_int_distribution<int>(d, 20)(rng);
    const ArmMatrix arms = random_arms(rng, d, k);
    const Allocation a = compute_g_optimal(arms);
    const Eigen::VectorXd norms = design_norms(a, arms);
    const double g = norms.maxCoeff();
    EXPECT_LE(g, d * (1.0 + 1e-6)) << "rep " << rep;
    int support = 0;
    for (int i = 0; i < k; ++i) {
      if (a.weights[i] <= 0.0) continue;
      ++support;
      EXPECT_NEAR(norms[i], g, d * 1e-3) << "rep " << rep << " arm " << i;
    }
    EXPECT_LE(support, d * (d + 1) / 2) << "rep " << rep;
    // Independent re-check of the design value.
    EXPECT_NEAR(g_of(arms, a.weights), g, 1e-8 * d);
  }
}

TEST(Design, ScalingLeavesWeightsUnchanged) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const ArmMatrix arms = random_arms(rng, 3, 8);
    const Allocation a = compute_g_optimal(arms);
    for (double s : {2.0, 3.7, 0.01}) {
      const Allocation b = compute_g_optimal(arms * s);
      EXPECT_LE((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-8) << "scale " << s;
    }
  }
}

TEST(Design, Deterministic) {
  std::mt19937_64 rng(9);
  const ArmMatrix arms = random_arms(rng, 5, 17);
  const Allocation a = compute_g_optimal(arms);
  const Allocation b = compute_g_optimal(arms);
  for (int i = 0; i < a.weights.size(); ++i) EXPECT_EQ(a.weights[i], b.weights[i]);
}

TEST(Design, RankDeficientArmsThrow) {
  ArmMatrix arms(3, 4);
  arms << 1, 0, 1, 2,
          0, 1, 1, 0,
          0, 0, 0, 0;
  EXPECT_THROW(compute_g_optimal(arms), RankDeficientError);
  EXPECT_THROW(make_allocation(arms, Eigen::Vector4d::Constant(0.25)), RankDeficientError);
}

TEST(Design, IterationCapReportsFinalValue) {
  std::mt19937_64 rng(3);
  const ArmMatrix arms = random_arms(rng, 6, 20);
  DesignOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-12;
  try {
    compute_g_optimal(arms, o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.final_g, 6.0 * (1.0 + 1e-12));
  }
}

TEST(Design, SampleArmDegenerateAndBalanced) {
  const Allocation pure = make_allocation(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0 - 1e-300, 1e-300));
  Stream s(1, Substream::arms);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_arm(pure, s), 0u);

  const Allocation half = make_allocation(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.5, 0.5));
  Stream t(2, Substream::arms);
  int zeros = 0;
  for (int i = 0; i < 100000; ++i) zeros += sample_arm(half, t) == 0 ? 1 : 0;
  EXPECT_NEAR(zeros / 1e5, 0.5, 0.01);
  EXPECT_EQ(t.counter(), 100000u);
}

TEST(Design, SampleArmReplays) {
  const Instance inst = make_example_5_1(3, 0.3);
  const Allocation a = compute_g_optimal(inst.arms);
  Stream s1(77, Substream::arms), s2(77, Substream::arms);
  for (int i = 0; i < 5000; ++i) ASSERT_EQ(sample_arm(a, s1), sample_arm(a, s2));
}

TEST(Design, CholeskyRankOneMatchesRefactor) {
  std::mt19937_64 rng(8);
  const ArmMatrix x = random_arms(rng, 5, 12);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(5, 5);
  Eigen::MatrixXd l = m.llt().matrixL();
  for (int i = 0; i < 12; ++i) {
    m += x.col(i) * x.col(i).transpose();
    ASSERT_TRUE(cholesky_rank_one(l, x.col(i), 1.0));
  }
  EXPECT_LE((l * l.transpose() - m).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 0; i < 6; ++i) {
    m -= x.col(i) * x.col(i).transpose();
    ASSERT_TRUE(cholesky_rank_one(l, x.col(i), -1.0));
  }
  EXPECT_LE((l * l.transpose() - m).cwiseAbs().maxCoeff(), 1e-9);
  Eigen::MatrixXd small = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_FALSE(cholesky_rank_one(small, Eigen::Vector2d(2.0, 0.0), -1.0));
}

TEST(Design, TransductiveOnArmsRecoversG) {
  const Instance inst = make_example_5_1(2, std::acos(-1.0) / 8.0);
  const TransductiveDesign t = transductive_design(inst.arms, inst.arms);
  EXPECT_NEAR(t.value, 2.0, 0.02);
  EXPECT_GE(t.value, 2.0 - 1e-9);
}

}  // namespace
}  // namespace pslb
