#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vdsa/channel.hpp"
#include "vdsa/rng.hpp"

using namespace vdsa;

TEST(Pathloss, ReferenceDistance) {
  const auto m = PathlossModel::dual_slope_5g9();
  EXPECT_NEAR(link_gain(m, {0, 0}, {10, 0}, 0.0).value, std::pow(10.0, -m.reference_loss_db / 10.0), 1e-20);
  EXPECT_NEAR(m.mean_gain(10.0), std::pow(10.0, -m.reference_loss_db / 10.0), 1e-20);
}

TEST(Pathloss, ContinuousAtBreakpoint) {
  const auto m = PathlossModel::dual_slope_5g9();
  const double near = m.reference_loss_db + 10.0 * m.exponent_near * std::log10(m.breakpoint_m / m.reference_distance_m);
  EXPECT_NEAR(m.loss_db(m.breakpoint_m), near, 1e-12);
  EXPECT_NEAR(m.loss_db(m.breakpoint_m * (1 + 1e-12)), near, 1e-9);
}

TEST(Pathloss, HandValue) {
  PathlossModel m;
  m.variant = PathlossVariant::TvwsLogDistance;
  m.reference_distance_m = 1.0;
  m.reference_loss_db = 47.86;
  m.exponent_near = m.exponent_far = 2.0;
  m.breakpoint_m = 1.0;
  EXPECT_NEAR(m.loss_db(100.0), 87.86, 1e-12);
  EXPECT_NEAR(link_gain(m, {0, 0}, {60, 80}, 0.0).value, std::pow(10.0, -8.786), 1e-22);
  EXPECT_NEAR(m.mean_gain(100.0), std::pow(10.0, -8.786), 1e-22);
}

TEST(Pathloss, ShadowingAddsLoss) {
  const auto m = PathlossModel::tvws();
  EXPECT_NEAR(link_gain(m, {0, 0}, {50, 0}, 3.0).db(), link_gain(m, {0, 0}, {50, 0}, 0.0).db() - 3.0, 1e-9);
}

TEST(Pathloss, MonotoneInDistance) {
  for (const auto& m : {PathlossModel::dual_slope_5g9(), PathlossModel::tvws()}) {
    double prev = -1.0;
    for (double d = 0.5; d < 5000.0; d *= 1.07) {
      EXPECT_GE(m.loss_db(d), prev);
      EXPECT_NEAR(m.mean_gain(d), std::pow(10.0, -m.loss_db(d) / 10.0), 1e-12 * m.mean_gain(d));
      prev = m.loss_db(d);
    }
  }
}

TEST(Pathloss, CoincidentEndpoints) {
  EXPECT_THROW(link_gain(PathlossModel::tvws(), {1, 1}, {1, 1}, 0.0), DegenerateGeometry);
}

TEST(Acir, CoChannel) {
  const auto s = AcirSet::defaults();
  EXPECT_EQ(s.vehicle_to_vehicle(500e6, 500e6), 1.0);
  EXPECT_EQ(s.vehicle_to_dtt(490e6, 490e6), 1.0);
}

TEST(Acir, StepBetweenBreakpoints) {
  const AcirTable t({{0.0, 1.0}, {4e6, 0.1}, {8e6, 0.01}});
  EXPECT_EQ(t(500e6, 505e6), 0.1);
  EXPECT_EQ(t.at_offset(3.999e6), 1.0);
  EXPECT_EQ(t.at_offset(8e6), 0.01);
  EXPECT_EQ(t.at_offset(1e9), 0.01);
}

TEST(Acir, Symmetric) {
  const auto s = AcirSet::defaults();
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(470e6, 790e6), b = rng.uniform(470e6, 790e6);
    EXPECT_EQ(s.vehicle_to_vehicle(a, b), s.vehicle_to_vehicle(b, a));
    EXPECT_EQ(s.vehicle_to_dtt(a, b), s.vehicle_to_dtt(b, a));
  }
}

TEST(Acir, ParseRoundTripAndValidation) {
  const AcirTable t = AcirTable::parse("0:1, 9e6:0.000112, 17e6:1e-6");
  EXPECT_EQ(AcirTable::parse(t.to_string()).points().size(), 3u);
  EXPECT_EQ(AcirTable::parse(t.to_string()).at_offset(10e6), t.at_offset(10e6));
  EXPECT_THROW(AcirTable::parse("5e6:0.1"), Error);
  EXPECT_THROW(AcirTable::parse("0:1, 5e6:2"), Error);
  EXPECT_THROW(AcirTable::parse("0:1, 5e6:0.1, 3e6:0.01"), Error);
}

TEST(DttInterference, IdentityCoupling) {
  const auto rem = test::flat_rem(50, {0, 0}, 2, 2, {{21, -60.0}});
  const AcirTable unity;
  EXPECT_NEAR(dtt_interference_at({20, 20}, 474e6, *rem, unity), 1e-6, 1e-18);
}

TEST(DttInterference, SumsChannels) {
  const auto rem = test::flat_rem(50, {0, 0}, 2, 2, {{21, -60.0}, {22, -60.0}});
  const AcirTable half({{0.0, 0.5}});
  EXPECT_NEAR(dtt_interference_at({20, 20}, 478e6, *rem, half), 1e-6, 1e-18);
}

TEST(DttInterference, NoTransmitters) {
  const RemDatabase rem({}, {}, RemGrid(50, {0, 0}, 2, 2, {}));
  EXPECT_EQ(dtt_interference_at({20, 20}, 478e6, rem, AcirTable{}), 0.0);
}
