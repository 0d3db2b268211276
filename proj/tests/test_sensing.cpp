#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vdsa/rng.hpp"
#include "vdsa/sensing.hpp"
#include "vdsa/verify.hpp"

using namespace vdsa;
using namespace vdsa::sensing;
using vdsa::test::q_inverse_oracle;
using vdsa::test::q_oracle;

TEST(QFunction, SymmetryPoint) { EXPECT_DOUBLE_EQ(q_function(0.0), 0.5); }

TEST(QFunction, MatchesIntegrationOracle) {
  EXPECT_NEAR(q_function(1.6449), 0.05, 1e-4);
  EXPECT_NEAR(q_function(1.6449), q_oracle(1.6449), 1e-9);
  for (double x : {-3.0, -0.7, 0.2, 1.0, 2.5, 4.0}) EXPECT_NEAR(q_function(x), q_oracle(x), 1e-9) << x;
}

TEST(QFunction, ComplementIdentity) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(-6.0, 6.0);
    EXPECT_NEAR(q_function(x) + q_function(-x), 1.0, 1e-14);
  }
}

TEST(QInverse, KnownPoints) {
  EXPECT_NEAR(q_inverse(0.5), 0.0, 1e-15);
  EXPECT_NEAR(q_inverse(q_function(2.0)), 2.0, 1e-8);
  EXPECT_NEAR(q_inverse(0.05), 1.6449, 1e-4);
  EXPECT_NEAR(q_inverse(0.05), q_inverse_oracle(0.05), 1e-7);
  EXPECT_NEAR(q_inverse(0.01), q_inverse_oracle(0.01), 1e-7);
}

TEST(QInverse, RejectsOutOfRange) {
  EXPECT_THROW(q_inverse(0.0), DomainError);
  EXPECT_THROW(q_inverse(1.0), DomainError);
}

TEST(Threshold, LargeSampleLimit) {
  SensingParams p;
  p.noise_power = 0.7;
  p.dtt_power = 0.3;
  p.sample_count = 1'000'000'000'000;
  EXPECT_NEAR(threshold(p), 1.0, 1e-4);
}

TEST(Threshold, HalfFalseAlarm) {
  SensingParams p;
  p.sample_count = 2;
  p.target_pfa = 0.5;
  EXPECT_NEAR(threshold(p), 1.0, 1e-15);
}

TEST(Threshold, HandValue) {
  SensingParams p;
  p.sample_count = 50;
  p.target_pfa = 0.01;
  EXPECT_NEAR(threshold(p), 1.4653, 1e-3);
  EXPECT_NEAR(threshold(p), 1.0 * (std::sqrt(0.04) * q_inverse_oracle(0.01) + 1.0), 1e-9);
}

TEST(Probabilities, AtNullPowerFalseAlarmIsHalf) {
  SensingParams p;
  p.noise_power = 2.0;
  p.sample_count = 37;
  EXPECT_NEAR(pfa(p, 2.0), 0.5, 1e-15);
}

TEST(Probabilities, ThresholdRoundTrip) {
  for (double t : {0.001, 0.01, 0.1, 0.3}) {
    SensingParams p;
    p.noise_power = 1e-9;
    p.dtt_power = 3e-9;
    p.sample_count = 80;
    p.target_pfa = t;
    EXPECT_NEAR(pfa(p, threshold(p)), t, 1e-10);
  }
}

TEST(Probabilities, HandValues) {
  SensingParams p;
  p.signal_power = 1.0;
  p.sample_count = 100;
  EXPECT_NEAR(pfa(p, 1.5), q_oracle(0.5 / std::sqrt(0.02)), 1e-9);
  EXPECT_NEAR(pfa(p, 1.5), 2.04e-4, 0.01e-4);
  EXPECT_NEAR(pd(p, 1.5), q_oracle(-0.5 / (std::sqrt(0.02) * 2.0)), 1e-9);
  EXPECT_NEAR(pd(p, 1.5), 0.9615, 1e-4);
}

TEST(RequiredSamples, DegenerateTargets) { EXPECT_EQ(required_samples(1.0, 0.5, 0.5).samples, 1); }

TEST(RequiredSamples, HandValue) {
  const auto r = required_samples(1.0, 0.01, 0.99);
  EXPECT_EQ(r.samples, 98);
  EXPECT_FALSE(r.capped);
  const double qa = q_inverse_oracle(0.01);
  EXPECT_EQ(r.samples, static_cast<std::int64_t>(std::ceil(2.0 * std::pow(qa + 2.0 * qa, 2))));
}

TEST(RequiredSamples, LowSnrScaling) {
  const double a = static_cast<double>(required_samples(0.01, 0.01, 0.99, 1'000'000'000).samples);
  const double b = static_cast<double>(required_samples(0.005, 0.01, 0.99, 1'000'000'000).samples);
  EXPECT_NEAR(b / a, 4.0, 0.4);
}

TEST(RequiredSamples, InfeasibleAndCapped) {
  EXPECT_THROW(required_samples(0.0, 0.01, 0.99), InfeasibleSensing);
  EXPECT_THROW(required_samples(-1.0, 0.01, 0.99), InfeasibleSensing);
  const auto r = required_samples(1e-6, 0.01, 0.99, 1000);
  EXPECT_TRUE(r.capped);
  EXPECT_EQ(r.samples, 1000);
}

TEST(RequiredSamples, ReachesDetectionTarget) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    SensingParams p;
    p.noise_power = 1.0;
    p.signal_power = db_to_linear(rng.uniform(-10.0, 10.0));
    p.target_pfa = rng.uniform(0.001, 0.2);
    p.target_pd = rng.uniform(0.8, 0.999);
    p.sample_count = required_samples(p.signal_power, p.target_pfa, p.target_pd).samples;
    EXPECT_GE(pd(p, threshold(p)), p.target_pd - 1e-6);
  }
}

TEST(SensingMonteCarlo, WithinThreeStandardErrors) {
  const auto r = verify::verify_sensing(0.01, 0.99, 0.0, 100000, 5);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.empirical_pfa, 0.01, 3.0 * std::sqrt(0.01 * 0.99 / 1e5) + std::abs(r.model_pfa - 0.01));
}

TEST(SensingMonteCarlo, HalfTargets) {
  const auto r = verify::verify_sensing(0.5, 0.5, 0.0, 20000, 2);
  EXPECT_EQ(r.samples, 1);
  EXPECT_NEAR(r.gamma, 1.0, 1e-12);
  EXPECT_NEAR(r.empirical_pfa, 0.5, 0.02);
  EXPECT_TRUE(r.pass);
}

TEST(SensingMonteCarlo, HighSnrNeedsFewSamples) {
  const auto loose = verify::verify_sensing(0.1, 0.9, 20.0, 20000, 4);
  EXPECT_LE(loose.samples, 10);
  EXPECT_TRUE(loose.pass);
  // Tight targets keep a floor of 2 Q^-1(pd)^2 samples however strong the signal.
  const auto tight = verify::verify_sensing(0.01, 0.99, 20.0, 20000, 4);
  EXPECT_EQ(tight.samples, 12);
  EXPECT_TRUE(tight.pass);
}
