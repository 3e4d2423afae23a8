#include <gtest/gtest.h>

#include "fwa/energy_model.hpp"

using namespace fwa;

TEST(ServerPower, Examples) {
  EXPECT_EQ(server_power({}), 0.0);
  ServerPower sp{100, {50, 50}, {}, 2, {}};
  EXPECT_EQ(server_power(sp), 200.0);
  sp.vnf_active = {true, false};
  EXPECT_EQ(server_power(sp), 150.0);
}

TEST(TotalPower, Examples) {
  ServerPower sp{200, {}, {}, 1, {{true, 1.0, 2.0}}};
  EXPECT_DOUBLE_EQ(total_power({sp}), 100.0);
  sp.cpe_share[0].y = false;
  EXPECT_EQ(total_power({sp}), 0.0);
  ServerPower two{200, {}, {}, 2, {{true, 1.0, 2.0}, {true, 3.0, 2.0}}};
  const double base = total_power({two});
  for (auto& c : two.cpe_share) c.lambda_pps *= 2;
  EXPECT_DOUBLE_EQ(total_power({two}), 2 * base);
  two.cpe_share[0].mu_pps = 0;
  EXPECT_THROW(total_power({two}), Error);
  two.vnf_count = 0;
  EXPECT_THROW(total_power({two}), Error);
}

TEST(Consumption, Examples) {
  EXPECT_DOUBLE_EQ(consumption_kwh(1000, 1), 1.0);
  EXPECT_EQ(consumption_kwh(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(consumption_kwh(200, 2), 0.4);
  EXPECT_THROW(consumption_kwh(100, 0), Error);
}

TEST(EnergyCost, Examples) {
  PriceConfig p;
  EXPECT_EQ(energy_cost(0, 0, p), 0.0);
  EXPECT_NEAR(energy_cost(10, 5, p), 0.38, 1e-15);
  EXPECT_NEAR(energy_cost(0, 5, p), -0.35, 1e-15);
}

TEST(Dispatch, SolarSufficientBuysNothing) {
  EnergyLimits lim;
  PriceConfig p;
  auto e = dispatch_hour({0, 6.0, 4.0, 0.0}, lim, p);
  EXPECT_EQ(e.grid_in_kwh, 0.0);
  EXPECT_GE(e.surplus_kwh, 0.0);
  EXPECT_EQ(e.storage_mode, 0);
  EXPECT_TRUE(check_ledger(e, lim).ok);
}

TEST(Dispatch, NightWithEmptyStorageBuysDemand) {
  EnergyLimits lim;
  auto e = dispatch_hour({0, 0.0, 3.5, 0.0}, lim, PriceConfig{});
  EXPECT_DOUBLE_EQ(e.grid_in_kwh, 3.5);
  EXPECT_EQ(e.surplus_kwh, 0.0);
  EXPECT_TRUE(check_ledger(e, lim).ok);
}

TEST(Dispatch, ChargeLimitedByHeadroom) {
  EnergyLimits lim;  // capacity 10
  auto e = dispatch_hour({0, 10.0, 4.0, 7.0}, lim, PriceConfig{});
  EXPECT_DOUBLE_EQ(e.charge_kwh, 3.0);
  EXPECT_DOUBLE_EQ(e.surplus_kwh, 3.0);
  EXPECT_EQ(e.grid_in_kwh, 0.0);
  EXPECT_DOUBLE_EQ(e.level_after_kwh, 10.0);
}

TEST(Dispatch, DischargeBeforeGrid) {
  EnergyLimits lim;
  auto e = dispatch_hour({0, 1.0, 9.0, 6.0}, lim, PriceConfig{});
  EXPECT_EQ(e.storage_mode, 1);
  EXPECT_DOUBLE_EQ(e.discharge_kwh, 5.0);  // per-hour discharge limit
  EXPECT_DOUBLE_EQ(e.grid_in_kwh, 3.0);
  EXPECT_DOUBLE_EQ(e.level_after_kwh, 1.0);
}

TEST(Dispatch, InfeasibleHourReported) {
  EnergyLimits lim;
  auto e = dispatch_hour({3, 0.0, 60.0, 0.0}, lim, PriceConfig{});
  EXPECT_FALSE(e.feasible);
  auto c = check_ledger(e, lim);
  EXPECT_FALSE(c.ok);
  EXPECT_NE(c.detail.find("hour 3"), std::string::npos);
  EXPECT_THROW(dispatch_with_mode({0, 1, 1, 0}, 2, lim, PriceConfig{}), Error);
  EXPECT_THROW(dispatch_with_mode({0, 1, 1, 11.0}, 0, lim, PriceConfig{}), Error);
}

TEST(Dispatch, YearLongFuzzKeepsEveryInvariant) {
  EnergyLimits lim;
  PriceConfig p;
  Rng rng = make_stream(1, "energy-fuzz");
  std::uniform_real_distribution<double> solar(0, 25), demand(0, 40);
  double level = 0;
  for (int h = 0; h < 8760; ++h) {
    const double g = (h % 24 >= 6 && h % 24 <= 19) ? solar(rng) : 0.0;
    auto e = dispatch_hour({h, g, demand(rng), level}, lim, p);
    auto c = check_ledger(e, lim);
    ASSERT_TRUE(c.ok) << c.detail;
    ASSERT_DOUBLE_EQ(e.level_after_kwh, level + e.charge_kwh - e.discharge_kwh);
    ASSERT_EQ(e.charge_kwh * e.discharge_kwh, 0.0);
    ASSERT_DOUBLE_EQ(e.surplus_kwh, std::max(e.available_kwh - e.consumption_kwh, 0.0));
    ASSERT_GE(e.available_kwh + 1e-12, e.consumption_kwh);
    ASSERT_LE(e.solar_kwh, lim.solar_max_kwh);
    level = e.level_after_kwh;
  }
}

TEST(Dispatch, MoreSolarNeverCostsMore) {
  EnergyLimits lim;
  PriceConfig p;
  Rng rng = make_stream(2, "energy-mono");
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10'000; ++i) {
    const double d = 30 * u(rng), lvl = 10 * u(rng), g = 20 * u(rng), dg = 5 * u(rng);
    const double h0 = dispatch_hour({0, g, d, lvl}, lim, p).cost;
    const double h1 = dispatch_hour({0, g + dg, d, lvl}, lim, p).cost;
    ASSERT_LE(h1, h0 + 1e-12) << "g=" << g << " dg=" << dg << " d=" << d << " level=" << lvl;
  }
}

TEST(Dispatch, AvailableEnergyFormula) {
  EXPECT_DOUBLE_EQ(available_energy(0, 5, 2, 1, 0), 6.0);
  EXPECT_DOUBLE_EQ(available_energy(1, 5, 2, 0, 3), 10.0);
}

TEST(AllocationCondition, LoggedReading) {
  EXPECT_TRUE(allocation_condition(true, 3.0));
  EXPECT_TRUE(allocation_condition(false, 0.0));
  EXPECT_FALSE(allocation_condition(false, 0.5));
}
