#include <gtest/gtest.h>

#include "fwa/scenario.hpp"
#include "test_support.hpp"

using namespace fwa;
using fwa::testing::TempDir;

TEST(Scenario, DefaultsMatchServiceTable) {
  auto s = paper_scenario(1);
  const std::vector<double> budgets{100, 150, 50, 300, 100, 200, 500};
  const std::vector<int> fiveqi{1, 2, 3, 4, 7, 70, 76};
  ASSERT_EQ(s.services.size(), 7u);
  for (int k = 0; k < 7; ++k) {
    EXPECT_EQ(s.services[k].delay_budget_ms, budgets[k]);
    EXPECT_EQ(s.services[k].fiveqi, fiveqi[k]);
  }
  EXPECT_EQ(s.topology.orus.at(0).fronthaul.capacity_bps, 6e9);
  EXPECT_EQ(s.rb.total_rb, 273);
  EXPECT_NO_THROW(validate_scenario(s));
}

TEST(Scenario, JsonRoundTrip) {
  auto s = paper_scenario(3);
  s.sim.hours = 5;
  s.sim.phi_dis = 0.25;
  s.prices.rb_price = 4.5;
  const auto j = scenario_to_json(s);
  const auto back = scenario_from_json(j);
  EXPECT_EQ(scenario_to_json(back), j);
  EXPECT_EQ(back.sim.hours, 5);
  EXPECT_EQ(back.prices.rb_price, 4.5);
}

TEST(Scenario, SavedFullDefaultsMatchRepository) {
  TempDir d("scen");
  save_scenario(paper_scenario(1), (d / "s.json").string());
  EXPECT_EQ(fwa::testing::slurp(d / "s.json"), fwa::testing::slurp(fwa::testing::source_dir() / "scenarios/paper_defaults_full.json"));
}

TEST(Scenario, ShippedFilesLoad) {
  const auto dir = fwa::testing::source_dir() / "scenarios";
  for (const char* name : {"paper_defaults.json", "paper_defaults_full.json", "traces_30day.json"})
    EXPECT_NO_THROW(load_scenario((dir / name).string())) << name;
  auto t = load_scenario((dir / "traces_30day.json").string());
  EXPECT_EQ(t.sim.hours, 720);
  EXPECT_FALSE(read_solar_trace(t.resolve(t.energy.solar_trace)).empty());
  EXPECT_EQ(read_server_trace(t.resolve(t.energy.server_trace)).size(), 4u);
}

TEST(Scenario, MissingTraceNamesPath) {
  json j = {{"paper_defaults", true}, {"traces", {{"solar", "no/such/solar.csv"}}}};
  try {
    scenario_from_json(j, "/tmp");
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Validation);
    EXPECT_NE(std::string(e.what()).find("no/such/solar.csv"), std::string::npos) << e.what();
  }
}

TEST(Scenario, TypeErrorNamesField) {
  json j = {{"sim", {{"hours", "many"}}}};
  try {
    scenario_from_json(j);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("sim.hours"), std::string::npos) << e.what();
  }
}

TEST(Scenario, UnknownModeRejected) {
  json j = {{"sim", {{"queue_mode", "fifo"}}}};
  EXPECT_THROW(scenario_from_json(j), Error);
}

TEST(Scenario, BadTimingRejected) {
  auto s = paper_scenario(1);
  s.sim.loop1_window_ticks = 10;
  EXPECT_THROW(validate_scenario(s), Error);
  s = paper_scenario(1);
  s.sim.loop2_period_ticks = 5;
  EXPECT_THROW(validate_scenario(s), Error);
  s = paper_scenario(1);
  s.services[2].delay_budget_ms = 60;
  EXPECT_THROW(validate_scenario(s), Error);
}

TEST(Scenario, LoadErrors) {
  TempDir d("scen-bad");
  std::ofstream(d / "bad.json") << "{ \"seed\": ";
  EXPECT_THROW(load_scenario((d / "bad.json").string()), Error);
  EXPECT_THROW(load_scenario((d / "absent.json").string()), Error);
}

TEST(Traces, FineSeriesUnchanged) {
  std::vector<TracePoint> raw;
  for (int i = 0; i < 50; ++i) raw.push_back({i * 0.5, 10.0 * i});
  const auto out = augment_trace(raw, 1.0);
  ASSERT_EQ(out.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_EQ(out[i].t, raw[i].t);
    EXPECT_EQ(out[i].watts, raw[i].watts);
  }
}

TEST(Traces, HourlyConstantGives3600Samples) {
  const auto out = augment_trace({{0, 500}, {3600, 500}}, 1.0);
  ASSERT_EQ(out.size(), 3600u);
  for (const auto& p : out) EXPECT_EQ(p.watts, 500.0);
  EXPECT_EQ(out.back().t, 3599.0);
}

TEST(Traces, RampInterpolatesLinearly) {
  const std::vector<TracePoint> raw{{0, 0}, {3600, 3600}, {7200, 0}};
  const auto out = augment_trace(raw, 1.0);
  ASSERT_EQ(out.size(), 7200u);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double expect = k <= 3600 ? static_cast<double>(k) : 7200.0 - k;
    ASSERT_NEAR(out[k].watts, expect, 1e-9) << k;
  }
  const double a = trapezoid_integral(raw), b = trapezoid_integral(out);
  EXPECT_NEAR(b, a, 1e-3 * a);
}

TEST(Traces, RandomTracesPreserveEnergy) {
  Rng rng = make_stream(1, "traces");
  std::uniform_real_distribution<double> w(0, 5000);
  for (int c = 0; c < 50; ++c) {
    std::vector<TracePoint> raw;
    for (int h = 0; h <= 48; ++h) raw.push_back({h * 3600.0, w(rng)});
    auto fine = augment_trace(raw, 1.0);
    fine.push_back(raw.back());
    const double a = trapezoid_integral(raw);
    EXPECT_NEAR(trapezoid_integral(fine), a, 1e-3 * a);
  }
}

TEST(Traces, JitterIsSeededAndNonNegative) {
  const std::vector<TracePoint> raw{{0, 100}, {3600, 200}};
  auto a = augment_trace(raw, 1.0, 0.5, 4), b = augment_trace(raw, 1.0, 0.5, 4), c = augment_trace(raw, 1.0, 0.5, 5);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].watts, b[i].watts);
    EXPECT_GE(a[i].watts, 0.0);
    differs = differs || a[i].watts != c[i].watts;
  }
  EXPECT_TRUE(differs);
}

TEST(Traces, UnorderedTimestampsRejected) {
  EXPECT_THROW(augment_trace({{0, 1}, {10, 1}, {5, 1}}), Error);
  EXPECT_THROW(augment_trace({{0, 1}, {0, 1}}), Error);
  EXPECT_THROW(augment_trace({{0, 1}, {10, 1}}, 0.0), Error);
}

TEST(Traces, HourlyEnergy) {
  const auto kwh = hourly_kwh({{0, 1000}, {3600, 1000}, {7200, 1000}}, 5);
  ASSERT_EQ(kwh.size(), 5u);
  for (double v : kwh) EXPECT_DOUBLE_EQ(v, 1.0);
  const auto ramp = hourly_kwh({{0, 0}, {3600, 2000}}, 1);
  EXPECT_NEAR(ramp[0], 1.0, 1e-3);
  EXPECT_THROW(hourly_kwh({}, 1), Error);
}

TEST(Traces, SyntheticSolarShape) {
  const auto s = synthetic_solar(48, 6000, 0.15, 2);
  ASSERT_EQ(s.size(), 49u);
  for (const auto& p : s) {
    const int hod = static_cast<int>(p.t / 3600) % 24;
    if (hod <= 6 || hod >= 20) {
      EXPECT_EQ(p.watts, 0.0) << hod;
    }
    EXPECT_LE(p.watts, 6000.0);
  }
  EXPECT_GT(s[13].watts, 5000.0 * 0.85 * 0.9);
}
