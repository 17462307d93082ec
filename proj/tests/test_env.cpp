#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pslb/env.hpp"
#include "pslb/errors.hpp"

namespace pslb {
namespace {

const double kPhi = std::acos(-1.0) / 8.0;

Instance axis_instance(double t1, double t2) {
  Instance inst;
  inst.arms = Eigen::MatrixXd::Identity(2, 2);
  inst.thetas = Eigen::MatrixXd(2, 1);
  inst.thetas << t1, t2;
  inst.probs = Eigen::VectorXd::Ones(1);
  inst.l_min = inst.l_max = 10;
  inst.noise.kind = NoiseModel::Kind::none;
  return inst;
}

TEST(Env, NoiselessRewards) {
  const Instance inst = axis_instance(1.0, 0.0);
  Env env(inst, 1, 2);
  EXPECT_DOUBLE_EQ(env.step(0).reward, 1.0);
  EXPECT_DOUBLE_EQ(env.step(1).reward, 0.0);
  EXPECT_EQ(env.time(), 2u);
}

TEST(Env, ArmOutOfRangeThrows) {
  const Instance inst = axis_instance(1.0, 0.0);
  Env env(inst, 1, 2);
  EXPECT_THROW(env.step(2), std::out_of_range);
}

TEST(Env, UniformNoiseMeanOnBestArm) {
  const Instance inst = make_example_5_1(2, kPhi);
  Env env(inst, 3, 4);
  double s = 0.0;
  for (int i = 0; i < 1000000; ++i) s += env.step(0).reward;
  EXPECT_NEAR(s / 1e6, 0.92388, 0.01);
}

TEST(Env, NoiseModelsStayInRangeWithZeroMean) {
  for (NoiseModel m : {NoiseModel{NoiseModel::Kind::uniform, 1.0}, NoiseModel{NoiseModel::Kind::clipped_gaussian, 1.0},
                       NoiseModel{NoiseModel::Kind::clipped_gaussian, 0.2}}) {
    Stream s(5, Substream::noise);
    double sum = 0.0;
    for (int i = 0; i < 1000000; ++i) {
      const double v = m.sample(s);
      ASSERT_GE(v, -1.0);
      ASSERT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum / 1e6, 0.0, 0.005) << m.name();
  }
}

TEST(Env, ExpectedReturnsOfExampleFiveOne) {
  const Instance inst = make_example_5_1(2, kPhi);
  EXPECT_EQ(inst.num_arms(), 3u);
  EXPECT_EQ(inst.num_contexts(), 2u);
  EXPECT_DOUBLE_EQ(inst.probs[0], 0.5);
  EXPECT_NEAR(expected_return(inst, 0), 0.923880, 1e-6);
  EXPECT_NEAR(expected_return(inst, 1), 0.0, 1e-12);
  EXPECT_NEAR(expected_return(inst, 2), 0.853553, 1e-6);
  EXPECT_EQ(best_arm(inst), 0u);
  EXPECT_NEAR(min_gap(inst), 0.0703, 1e-4);
}

TEST(Env, EpsBestSet) {
  const Instance inst = make_example_5_1(2, kPhi);
  EXPECT_EQ(eps_best_set(inst, 0.1), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(eps_best_set(inst, 0.05), (std::vector<std::size_t>{0}));
  const Instance single = axis_instance(0.6, -0.3);
  EXPECT_EQ(eps_best_set(single, 2.0), (std::vector<std::size_t>{0, 1}));
}

TEST(Env, TiesBreakByIndex) {
  const Instance inst = axis_instance(0.5, 0.5);
  EXPECT_EQ(best_arm(inst), 0u);
}

TEST(Env, DegenerateExampleHasNoSeparation) {
  const Instance inst = make_example_5_1(3, 0.0);
  EXPECT_EQ(inst.num_contexts(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_TRUE(inst.thetas.col(j).isApprox(Eigen::Vector3d(1, 0, 0)));
  EXPECT_DOUBLE_EQ(context_separation(inst), 0.0);
}

TEST(Env, ExampleI2Gap) {
  const Instance inst = make_example_I_2(3, 0.4, 0.8, 0.1, 0.05);
  EXPECT_NEAR(inst.probs[0], 0.8, 1e-12);
  EXPECT_NEAR(inst.probs[2], 0.1, 1e-12);
  const double gap = expected_return(inst, 0) - expected_return(inst, 1);
  EXPECT_NEAR(gap, (1 - 0.1) * 0.4 - 0.1 * (0.8 - 0.4), 1e-12);
  EXPECT_NEAR(gap, 0.32, 1e-12);
  EXPECT_THROW(make_example_I_2(3, 0.4, 0.8, 0.9, 0.05), ConfigError);
  EXPECT_THROW(make_example_5_1(2, 1.0), ConfigError);
}

TEST(Env, ValidationRejectsBadInstances) {
  Instance inst = axis_instance(1.0, 0.0);
  inst.probs[0] = 0.9;
  EXPECT_THROW(inst.validate(), ConfigError);
  inst = axis_instance(1.5, 0.0);
  EXPECT_THROW(inst.validate(), ConfigError);
  inst = axis_instance(1.0, 0.0);
  inst.l_min = 20;
  EXPECT_THROW(inst.validate(), ConfigError);
}

TEST(Env, ContextFrequenciesAndSegmentLaw) {
  Instance inst = make_example_I_2(3, 0.4, 0.8, 0.1);
  inst.l_min = 3;
  inst.l_max = 5;
  Env env(inst, 42, 43);
  std::vector<int> hits(3, 0);
  int shorts = 0;
  const int n = 10000;
  for (int l = 0; l < n; ++l) {
    ++hits[env.segment_context(l)];
    const std::size_t len = env.segment_length(l);
    ASSERT_TRUE(len == 3 || len == 5);
    shorts += len == 3 ? 1 : 0;
  }
  for (int j = 0; j < 3; ++j) {
    const double p = inst.probs[j];
    EXPECT_NEAR(hits[j], n * p, 3.0 * std::sqrt(n * p * (1 - p)) + 1) << j;
  }
  EXPECT_NEAR(shorts / static_cast<double>(n), 0.8, 0.02);
}

TEST(Env, ContextChangesOnlyAtChangepoints) {
  Instance inst = make_example_5_1(3, 0.4);
  inst.l_min = 7;
  inst.l_max = 11;
  Env env(inst, 9, 10, Dynamics::full_info);
  std::size_t last = kNoIndex;
  for (int t = 1; t <= 2000; ++t) {
    const Observation o = env.step(0);
    if (o.context != last) ASSERT_TRUE(o.changepoint) << t;
    if (o.changepoint) ASSERT_EQ(env.changepoints().back(), static_cast<std::uint64_t>(t));
    ASSERT_EQ(o.theta, inst.thetas.col(static_cast<Eigen::Index>(o.context)).data());
    last = o.context;
  }
  EXPECT_EQ(env.changepoints().front(), 1u);
  for (std::size_t i = 1; i < env.changepoints().size(); ++i) {
    const auto len = env.changepoints()[i] - env.changepoints()[i - 1];
    EXPECT_TRUE(len == 7 || len == 11);
  }
}

TEST(Env, DynamicsRevealOnlyWhatTheyShould) {
  const Instance inst = make_example_5_1(2, kPhi);
  Env hidden(inst, 1, 2, Dynamics::hidden);
  const Observation h = hidden.step(0);
  EXPECT_EQ(h.context, kNoIndex);
  EXPECT_EQ(h.theta, nullptr);
  EXPECT_THROW(hidden.advance(), DynamicsMismatchError);
  Env idx(inst, 1, 2, Dynamics::index_revealed);
  const Observation i = idx.step(0);
  EXPECT_NE(i.context, kNoIndex);
  EXPECT_EQ(i.theta, nullptr);
  Env full(inst, 1, 2, Dynamics::full_info);
  const Observation a = full.advance();
  EXPECT_TRUE(std::isnan(a.reward));
  EXPECT_TRUE(a.changepoint);
  EXPECT_EQ(a.context, i.context);
}

TEST(Env, ReplayIsBitExactAndScheduleSharedAcrossNoise) {
  const Instance inst = make_example_5_1(2, kPhi);
  Env a(inst, 5, 6), b(inst, 5, 6), c(inst, 5, 99);
  for (int t = 0; t < 20000; ++t) {
    const std::size_t arm = static_cast<std::size_t>(t % 3);
    const double ra = a.step(arm).reward;
    ASSERT_EQ(ra, b.step(arm).reward);
    c.step(arm);
  }
  EXPECT_EQ(a.changepoints(), c.changepoints());
}

TEST(Env, JsonRoundTrip) {
  Instance inst = make_example_I_2(3, 0.4, 0.8, 0.1);
  inst.noise = {NoiseModel::Kind::clipped_gaussian, 0.5};
  inst.schedule = {Schedule::Kind::fixed, 0.8, {4, 6, 5}};
  inst.l_min = 4;
  inst.l_max = 6;
  const Instance back = instance_from_json(instance_to_json(inst));
  EXPECT_TRUE(back.arms.isApprox(inst.arms));
  EXPECT_TRUE(back.thetas.isApprox(inst.thetas));
  EXPECT_TRUE(back.probs.isApprox(inst.probs));
  EXPECT_EQ(back.schedule.lengths, inst.schedule.lengths);
  EXPECT_EQ(back.noise.kind, NoiseModel::Kind::clipped_gaussian);
  EXPECT_DOUBLE_EQ(back.noise.sigma, 0.5);
  Env env(back, 1, 1);
  EXPECT_EQ(env.segment_length(0), 4u);
  EXPECT_EQ(env.segment_length(4), 6u);

  const Instance ex = instance_from_json(nlohmann::json::parse(R"({"example":{"name":"5.1","d":2},"lmin":30,"lmax":50,"noise":"none"})"));
  EXPECT_EQ(ex.l_min, 30u);
  EXPECT_EQ(ex.noise.kind, NoiseModel::Kind::none);
  EXPECT_THROW(instance_from_json(nlohmann::json::parse(R"({"example":{"name":"9.9"}})")), ConfigError);
}

}  // namespace
}  // namespace pslb
