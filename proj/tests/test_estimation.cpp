#include <chrono>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pslb/design.hpp"
#include "pslb/env.hpp"
#include "pslb/errors.hpp"
#include "pslb/estimation.hpp"

namespace pslb {
namespace {

const double kPhi = std::acos(-1.0) / 8.0;

Allocation uniform2() { return make_allocation(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.5, 0.5)); }

bool bitwise_equal(const RunningStats& a, const RunningStats& b) {
  if (a.total() != b.total()) return false;
  for (std::size_t j = 0; j < a.num_contexts(); ++j)
    if (a.count(j) != b.count(j)) return false;
  for (Eigen::Index i = 0; i < a.sums().size(); ++i)
    if (a.sums().data()[i] != b.sums().data()[i]) return false;
  return true;
}

TEST(Estimation, SingleUpdateAlgebra) {
  const Allocation al = uniform2();
  RunningStats s(Eigen::MatrixXd::Identity(2, 2), al, 2, 8);
  s.update(0, 0, 0.5);
  EXPECT_TRUE(s.theta_hat(0).isApprox(Eigen::Vector2d(1.0, 0.0)));
  EXPECT_DOUBLE_EQ(s.p_hat(0), 1.0);
  EXPECT_DOUBLE_EQ(s.p_hat(1), 0.0);
  EXPECT_TRUE(s.theta_hat(1).isZero());
  s.update(1, 1, 0.25);
  EXPECT_DOUBLE_EQ(s.p_hat(0), 0.5);
  EXPECT_DOUBLE_EQ(s.p_hat(1), 0.5);
  EXPECT_EQ(s.total(), s.count(0) + s.count(1));
  EXPECT_TRUE(s.mixed_theta().isApprox(s.theta_hat_matrix() * Eigen::Vector2d(0.5, 0.5)));
}

TEST(Estimation, NoiselessConvergence) {
  const Allocation al = uniform2();
  const Eigen::Vector2d theta(0.3, -0.2);
  RunningStats s(Eigen::MatrixXd::Identity(2, 2), al, 1, 1);
  Stream st(4, Substream::arms);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = sample_arm(al, st);
    s.update(0, k, theta[static_cast<Eigen::Index>(k)]);
  }
  EXPECT_LE((s.theta_hat(0) - theta).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Estimation, RevertToFreshAndReplay) {
  const Instance inst = make_example_5_1(2, kPhi);
  const Allocation al = compute_g_optimal(inst.arms);
  RunningStats a(inst.arms, al, 2, 16), fresh(inst.arms, al, 2, 16);
  for (int i = 0; i < 5; ++i) a.update(i % 2, static_cast<std::size_t>(i % 3), 0.1 * i - 0.2);
  a.revert(5);
  EXPECT_TRUE(bitwise_equal(a, fresh));
  EXPECT_EQ(a.journal_size(), 0u);

  RunningStats b(inst.arms, al, 2, 16), replay(inst.arms, al, 2, 16);
  for (int i = 0; i < 8; ++i) {
    const double r = std::sin(i * 1.7);
    b.update(i % 2, static_cast<std::size_t>(i % 3), r);
    if (i < 5) replay.update(i % 2, static_cast<std::size_t>(i % 3), r);
  }
  b.revert(3);
  EXPECT_TRUE(bitwise_equal(b, replay));
  EXPECT_TRUE(b.same_estimates(replay));
}

TEST(Estimation, NoOpsCountTowardDepth) {
  const Allocation al = uniform2();
  RunningStats a(Eigen::MatrixXd::Identity(2, 2), al, 1, 10), ref(Eigen::MatrixXd::Identity(2, 2), al, 1, 10);
  for (int i = 0; i < 4; ++i) {
    a.update(0, i % 2, 0.3 * i);
    ref.update(0, i % 2, 0.3 * i);
  }
  a.update(0, 0, 1.0);
  a.record_noop();
  a.update(0, 1, -1.0);
  a.record_noop();
  a.revert(4);
  EXPECT_TRUE(bitwise_equal(a, ref));
}

TEST(Estimation, RingOverwritesOldestAndDepthIsChecked) {
  const Allocation al = uniform2();
  RunningStats a(Eigen::MatrixXd::Identity(2, 2), al, 2, 4), ref(Eigen::MatrixXd::Identity(2, 2), al, 2, 4);
  for (int i = 0; i < 20; ++i) {
    a.update(i % 2, i % 2, 0.01 * i);
    if (i < 16) ref.update(i % 2, i % 2, 0.01 * i);
  }
  EXPECT_EQ(a.journal_size(), 4u);
  EXPECT_THROW(a.revert(5), ReversionDepthError);
  a.revert(4);
  EXPECT_TRUE(bitwise_equal(a, ref));
  EXPECT_THROW(a.revert(1), ReversionDepthError);
}

TEST(Estimation, DeltaSplitsSummable) {
  RadiusParams p{3, 2, 2, 5000.0, 0.05};
  double sum = 0.0;
  for (int s = 1; s <= 1000000; ++s) {
    const DeltaSplits ds = delta_splits(p, s);
    ASSERT_GT(ds.m, 0.0);
    sum += ds.v + ds.d + ds.m;
  }
  EXPECT_LE(sum, 0.05 / 4.0);
  const DeltaSplits ds = delta_splits(p, 1000.0);
  const LogSplits lg = log_splits(p, 1000.0);
  EXPECT_NEAR(lg.v, std::log(2.0 / ds.v), 1e-9);
  EXPECT_NEAR(lg.d, std::log(2.0 / ds.d), 1e-9);
  EXPECT_NEAR(lg.m, std::log(2.0 / ds.m), 1e-9);
}

RunningStats fixed_ratio_stats(const ArmMatrix& arms, const Allocation& al, std::size_t s_total, double p1) {
  // Context 0 for a p1 share of steps; arms alternate so each theta_hat is constant.
  RunningStats st(arms, al, 2, 1);
  const std::size_t n0 = static_cast<std::size_t>(std::llround(p1 * static_cast<double>(s_total)));
  for (std::size_t i = 0; i < s_total; ++i) {
    const std::size_t j = i < n0 ? 0 : 1;
    const std::size_t k = i % 2;
    st.update(j, k, j == 0 ? (k == 0 ? 0.4 : 0.1) : (k == 0 ? -0.3 : 0.2));
  }
  return st;
}

TEST(Estimation, TheoryTermsMatchFormulas) {
  const ArmMatrix arms = Eigen::MatrixXd::Identity(2, 2);
  const Allocation al = uniform2();
  RadiusParams p{3, 2, 2, 5000.0, 0.05};
  p.mode = RadiusMode::theory;
  const RunningStats st = fixed_ratio_stats(arms, al, 1000, 0.7);
  const RadiusTerms t = radius_terms(st, p);
  const double s = 1000.0;
  EXPECT_NEAR(5.0 * std::sqrt(2.0 / 1000.0 * std::log(2.0 * 15 * 3 * 1e9 / 0.05)), 1.188, 5e-4);
  EXPECT_NEAR(t.alpha, 5.0 * std::sqrt(2.0 / s * std::log(2.0 / (0.05 / (15 * 3 * s * s * s)))), 1e-12);
  const double lnm = std::log(2.0 / (0.05 / (15 * 3 * 2 * s * s * s)));
  EXPECT_NEAR(t.xi, 25.0 * std::sqrt(2.0) * 2 * 5000 / s * lnm, 1e-9);
  const double lnd = std::log(2.0 / (0.05 / (15 * 2 * s * s * s)));
  for (int j = 0; j < 2; ++j) {
    const double ph = j == 0 ? 0.7 : 0.3;
    const double phi = std::min(4.0 * std::max(ph, 25.0 / 4.0 * 5000 / s * lnd), 0.25);
    EXPECT_NEAR(t.phi[j], phi, 1e-12);
    EXPECT_NEAR(t.beta[j], std::min(2.5 * std::sqrt(2 * phi * 5000 / s * lnd), 1.0), 1e-12);
  }
}

TEST(Estimation, TightAlphaAndBetaForms) {
  const double s = 1e6, l = 5000.0, ln = 40.0;
  const double a = l * ln / 3.0;
  const double phi = phi_term(0.4, s, l, ln);
  EXPECT_NEAR(phi, 0.25, 0);
  EXPECT_NEAR(beta_tight(0.4, s, l, ln, BetaForm::bernstein), (a + std::sqrt(a * a + 2 * s * phi * l * ln)) / s, 1e-14);
  EXPECT_NEAR(beta_tight(0.4, s, l, ln, BetaForm::printed), (a + std::sqrt(a * a + 2 * phi * l / s * ln)) / s, 1e-14);
  EXPECT_EQ(beta_tight(0.4, 10.0, l, ln, BetaForm::bernstein), 1.0);

  const ArmMatrix arms = Eigen::MatrixXd::Identity(2, 2);
  RadiusParams p{3, 2, 2, 5000.0, 0.05};
  const RunningStats st = fixed_ratio_stats(arms, uniform2(), 20000, 0.5);
  const RadiusTerms t = radius_terms(st, p);
  const double q = 2.0 / 20000.0 * log_splits(p, 20000.0).v;
  EXPECT_NEAR(t.alpha, q + std::sqrt(q * q + 4 * q), 1e-12);
  EXPECT_LE(t.alpha, 5.0 * std::sqrt(q) + 1e-12);
}

TEST(Estimation, RadiusShrinksWithSamples) {
  const ArmMatrix arms = Eigen::MatrixXd::Identity(2, 2);
  const Allocation al = uniform2();
  for (RadiusMode mode : {RadiusMode::theory, RadiusMode::tight}) {
    RadiusParams p{2, 2, 2, 50.0, 0.05};
    p.mode = mode;
    double prev = 1e300;
    for (std::size_t s : {10000u, 100000u, 1000000u}) {
      const RunningStats st = fixed_ratio_stats(arms, al, s, 0.5);
      const double rho = confidence_radius(st, p, arms, 0, 1);
      EXPECT_LT(rho, prev);
      prev = rho;
    }
  }
}

TEST(Estimation, UnseenContextsGiveFiniteRadius) {
  const ArmMatrix arms = Eigen::MatrixXd::Identity(2, 2);
  RunningStats st(arms, uniform2(), 3, 1);
  for (int i = 0; i < 500; ++i) st.update(0, i % 2, 0.2);
  for (RadiusMode mode : {RadiusMode::theory, RadiusMode::tight}) {
    RadiusParams p{2, 3, 2, 100.0, 0.05};
    p.mode = mode;
    EXPECT_TRUE(std::isfinite(confidence_radius(st, p, arms, 0, 1)));
  }
}

TEST(Estimation, ZetaModesAndDegenerateBeta) {
  RadiusParams p{2, 3, 2, 100.0, 0.05};
  RadiusTerms t;
  t.alpha = 0.1;
  t.xi = 0.05;
  t.beta = {0.5, 0.25, 0.25};
  const double gaps[3] = {0.4, -0.2, 3.0};  // last is clipped to 2
  const double zeta = -(0.5 * 0.4 + 0.25 * -0.2 + 0.25 * 2.0) / 1.0;
  const double expect = 0.3 + 0.5 * std::abs(0.4 + zeta) + 0.25 * std::abs(-0.2 + zeta) + 0.25 * std::abs(2.0 + zeta);
  EXPECT_NEAR(radius_from_gaps(t, p, gaps, 3), expect, 1e-14);
  p.zeta = ZetaMode::epsilon;
  p.epsilon = 0.1;
  EXPECT_NEAR(radius_from_gaps(t, p, gaps, 3), 0.3 + 0.5 * 0.5 + 0.25 * 0.1 + 0.25 * 2.1, 1e-14);
  p.zeta = ZetaMode::minimizer;
  t.beta = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(radius_from_gaps(t, p, gaps, 3), 0.3);
}

TEST(Estimation, ClipTwo) {
  for (double v : {-2.0, -1.3, 0.0, 0.7, 2.0}) EXPECT_EQ(clip2(v), v);
  EXPECT_EQ(clip2(-7.0), -2.0);
  EXPECT_EQ(clip2(2.5), 2.0);
}

TEST(Estimation, EmpiricalBestArm) {
  const ArmMatrix arms = Eigen::MatrixXd::Identity(2, 2);
  RunningStats st(arms, uniform2(), 1, 1);
  st.update(0, 0, 0.5);
  EXPECT_EQ(empirical_best_arm(st, arms), 0u);

  ArmMatrix three(2, 3);
  three << 1, 0, 1,
           0, 1, 0;
  const Allocation al = make_allocation(three, Eigen::Vector3d(0.25, 0.5, 0.25));
  RunningStats tie(three, al, 1, 1);
  tie.update(0, 0, 0.3);
  EXPECT_EQ(empirical_best_arm(tie, three), 0u);

  const Instance inst = make_example_5_1(2, kPhi);
  const Allocation g = compute_g_optimal(inst.arms);
  Instance quiet = inst;
  quiet.noise.kind = NoiseModel::Kind::none;
  Env env(quiet, 3, 4, Dynamics::index_revealed);
  RunningStats ex(inst.arms, g, 2, 1);
  Stream s(5, Substream::arms);
  for (int i = 0; i < 100000; ++i) {
    const std::size_t k = sample_arm(g, s);
    const Observation o = env.step(k);
    ex.update(o.context, k, o.reward);
  }
  EXPECT_EQ(empirical_best_arm(ex, inst.arms), best_arm(inst));
}

TEST(Estimation, EstimatorConsistencyRate) {
  // ||theta_hat - theta||_inf <= 5 sqrt(d/n ln(2/delta)) with frequency >= 1 - delta.
  const Instance inst = make_example_5_1(2, kPhi);
  const Allocation g = compute_g_optimal(inst.arms);
  const Eigen::VectorXd theta = inst.thetas.col(0);
  const int n = 10000, reps = 500;
  const double bound = 5.0 * std::sqrt(2.0 / n * std::log(2.0 / 0.05));
  int ok = 0;
  for (int r = 0; r < reps; ++r) {
    RunningStats st(inst.arms, g, 1, 1);
    Stream arms(100 + r, Substream::arms), noise(100 + r, Substream::noise);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = sample_arm(g, arms);
      st.update(0, k, inst.arms.col(static_cast<Eigen::Index>(k)).dot(theta) + inst.noise.sample(noise));
    }
    ok += (st.theta_hat(0) - theta).cwiseAbs().maxCoeff() <= bound ? 1 : 0;
  }
  EXPECT_GE(ok, static_cast<int>(0.95 * reps));
}

TEST(Estimation, CoverageOnExampleFiveOne) {
  Instance inst = make_example_5_1(2, kPhi);
  inst.l_min = 300;
  inst.l_max = 500;
  const Allocation g = compute_g_optimal(inst.arms);
  RadiusParams p{3, 2, 2, 500.0, 0.05};
  int cells = 0, covered = 0;
  for (int run = 0; run < 20; ++run) {
    Env env(inst, 1000 + run, 2000 + run, Dynamics::index_revealed);
    RunningStats st(inst.arms, g, 2, 1);
    Stream s(3000 + run, Substream::arms);
    std::uint64_t next = 200000;
    while (cells < (run + 1) * 5) {
      const std::size_t k = sample_arm(g, s);
      const Observation o = env.step(k);
      st.update(o.context, k, o.reward);
      if (st.total() != next) continue;
      next += 200000;
      ++cells;
      const Eigen::VectorXd mu_hat = inst.arms.transpose() * st.mixed_theta();
      bool all = true;
      for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t y = 0; y < 3; ++y) {
          if (x == y) continue;
          const double truth = expected_return(inst, x) - expected_return(inst, y);
          const double est = mu_hat[static_cast<Eigen::Index>(x)] - mu_hat[static_cast<Eigen::Index>(y)];
          all = all && std::abs(est - truth) <= confidence_radius(st, p, inst.arms, x, y);
        }
      covered += all ? 1 : 0;
    }
  }
  EXPECT_GE(covered, static_cast<int>(0.95 * cells));
}

TEST(Estimation, RadiusCallUnderOneMicrosecond) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  ArmMatrix arms(5, 10);
  for (Eigen::Index i = 0; i < arms.size(); ++i) arms.data()[i] = nd(rng);
  const Allocation al = compute_g_optimal(arms);
  RunningStats st(arms, al, 10, 1);
  for (int i = 0; i < 100000; ++i) st.update(static_cast<std::size_t>(i % 10), static_cast<std::size_t>(i % 10), 0.1);
  RadiusParams p{10, 10, 5, 1000.0, 0.05};
  RadiusTerms t;
  std::vector<double> gaps(10, 0.05);
  const int calls = 200000;
  double sink = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < calls; ++i) {
    gaps[static_cast<std::size_t>(i % 10)] += 1e-9;
    fill_radius_terms(st, p, t);
    sink += radius_from_gaps(t, p, gaps.data(), gaps.size());
  }
  const double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count() / calls;
  EXPECT_GT(sink, 0.0);
  EXPECT_LT(ns, 1000.0);
}

}  // namespace
}  // namespace pslb
