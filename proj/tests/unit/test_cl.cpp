#include <gtest/gtest.h>

#include <cmath>

#include "fwa/cl_predictor.hpp"
#include "test_support.hpp"

using namespace fwa;
using cl::ClConfig;
using cl::Forecaster;

namespace {

std::vector<double> noisy(std::uint64_t seed, int n, double (*shape)(int)) {
  Rng rng = make_stream(seed, "cl-series");
  std::normal_distribution<double> e(0, 0.05);
  std::vector<double> s;
  for (int t = 0; t < n; ++t) s.push_back(shape(t) + e(rng));
  return s;
}

double ramp(int t) { return 0.5 * t; }
double sine(int t) { return std::sin(2 * M_PI * t / 24); }
double shifted(int t) { return 2.0 + 0.5 * std::sin(2 * M_PI * t / 12); }

std::vector<double> head(const std::vector<double>& s, std::size_t n) { return {s.begin(), s.begin() + n}; }

auto model_fn(const Forecaster& f) {
  return [&f](const std::vector<double>& h, int k) { return f.predict(h, k); };
}

auto persistence_fn() {
  return [](const std::vector<double>& h, int k) { return cl::persistence_forecast(h, k); };
}

}  // namespace

TEST(ForwardFill, FillsGapsAfterFirstValue) {
  std::vector<double> s{NAN, 1, NAN, NAN, 4, NAN};
  EXPECT_EQ(cl::forward_fill(s), 3);
  EXPECT_TRUE(std::isnan(s[0]));
  EXPECT_EQ(s[2], 1);
  EXPECT_EQ(s[3], 1);
  EXPECT_EQ(s[5], 4);
}

TEST(Forecaster, InsufficientHistory) {
  Forecaster f(ClConfig{});
  EXPECT_THROW(f.fit_initial(std::vector<double>(100, 1.0)), Error);
  try {
    f.fit_initial(std::vector<double>(50, 1.0));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
  EXPECT_THROW(f.update_increment({1.0}), Error);
}

TEST(Forecaster, ConstantSeriesForecastsConstant) {
  ClConfig c;
  c.epochs = 5;
  Forecaster f(c);
  std::vector<double> s(150, 7.0);
  f.fit_initial(s);
  for (double v : f.predict(s, 24)) EXPECT_EQ(v, 7.0);
  f.update_increment(std::vector<double>(60, 7.0));
  for (double v : f.predict(s, 24)) EXPECT_EQ(v, 7.0);
}

TEST(Forecaster, SingleStepMatchesPredictNext) {
  ClConfig c;
  c.epochs = 5;
  Forecaster f(c);
  auto s = noisy(1, 200, sine);
  f.fit_initial(s);
  EXPECT_EQ(f.predict(s, 1)[0], f.predict_next(s));
  EXPECT_EQ(f.predict(s, 24).size(), 24u);
  EXPECT_THROW(f.predict(s, 0), Error);
  EXPECT_THROW(f.predict(s, 169), Error);
  EXPECT_THROW(f.predict(head(s, 50), 3), Error);
}

TEST(Forecaster, RampBeatsPersistence) {
  auto s = noisy(3, 400, ramp);
  Forecaster f(ClConfig{});
  f.fit_initial(head(s, 300));
  const double m = cl::rolling_mse(s, 300, 24, model_fn(f));
  const double p = cl::rolling_mse(s, 300, 24, persistence_fn());
  EXPECT_LT(m, p);
}

TEST(Forecaster, SinusoidBeatsPersistence) {
  auto s = noisy(3, 400, sine);
  Forecaster f(ClConfig{});
  f.fit_initial(head(s, 300));
  const double m = cl::rolling_mse(s, 300, 24, model_fn(f));
  const double p = cl::rolling_mse(s, 300, 24, persistence_fn());
  EXPECT_LT(m, p);
}

TEST(Forecaster, SameDistributionIncrementKeepsAccuracy) {
  auto s = noisy(4, 360, sine);
  auto held = noisy(5, 240, sine);
  Forecaster f(ClConfig{});
  f.fit_initial(head(s, 300));
  const double before = cl::rolling_mse(held, 120, 24, model_fn(f), 4);
  f.update_increment({s.begin() + 300, s.end()});
  const double after = cl::rolling_mse(held, 120, 24, model_fn(f), 4);
  EXPECT_LE(after, 1.10 * before) << before << " -> " << after;
}

TEST(Forecaster, RegimeShiftImprovesNewRegimeAndForgetsLittle) {
  auto s = noisy(6, 300, sine);
  Rng rng = make_stream(7, "shift");
  std::normal_distribution<double> e(0, 0.05);
  std::vector<double> full = s;
  for (int t = 300; t < 420; ++t) full.push_back(shifted(t) + e(rng));
  Forecaster f(ClConfig{});
  f.fit_initial(s);
  // New-regime error: one-step forecasts over the second shifted block, which the update never sees.
  const double new_before = cl::rolling_mse(full, 360, 1, model_fn(f));
  const double old_before = cl::rolling_mse(s, 150, 24, model_fn(f), 6);
  f.update_increment({full.begin() + 300, full.begin() + 360});
  const double new_after = cl::rolling_mse(full, 360, 1, model_fn(f));
  const double old_after = cl::rolling_mse(s, 150, 24, model_fn(f), 6);
  EXPECT_LT(new_after, new_before);
  EXPECT_LE(old_after, 1.25 * old_before) << old_before << " -> " << old_after;
}

TEST(Forecaster, EmptyIncrementIsNoOp) {
  ClConfig c;
  c.epochs = 3;
  Forecaster f(c);
  f.fit_initial(noisy(8, 150, sine));
  const auto p = f.net().params();
  f.update_increment({});
  EXPECT_EQ(f.net().params(), p);
  EXPECT_EQ(f.history_size(), 150u);
}

TEST(Forecaster, SameRecordsSameParameters) {
  ClConfig c;
  c.epochs = 5;
  c.increment_epochs = 5;
  auto s = noisy(9, 260, sine);
  Forecaster a(c), b(c);
  a.fit_initial(head(s, 200));
  b.fit_initial(head(s, 200));
  a.update_increment({s.begin() + 200, s.end()});
  b.update_increment({s.begin() + 200, s.end()});
  EXPECT_EQ(a.net().params(), b.net().params());
}

TEST(Forecaster, RejectsNonFinite) {
  auto s = noisy(10, 150, sine);
  s[40] = NAN;
  Forecaster f(ClConfig{});
  EXPECT_THROW(f.fit_initial(s), Error);
}

TEST(Forecaster, SavesCheckpoint) {
  ClConfig c;
  c.epochs = 2;
  Forecaster f(c);
  f.fit_initial(noisy(11, 120, sine));
  fwa::testing::TempDir d("clsave");
  f.save((d / "m.clnet").string());
  const auto text = fwa::testing::slurp(d / "m.clnet");
  EXPECT_EQ(text.rfind("fwa-clnet-v1", 0), 0u);
  EXPECT_NE(text.find("scale "), std::string::npos);
}

TEST(Baselines, Examples) {
  EXPECT_EQ(cl::persistence_forecast({1, 2, 3}, 2), (std::vector<double>{3, 3}));
  EXPECT_EQ(cl::moving_average_forecast({1, 2, 3, 6}, 1, 2), (std::vector<double>{4.5}));
  EXPECT_EQ(cl::moving_average_forecast({2, 4}, 1, 24), (std::vector<double>{3}));
  EXPECT_THROW(cl::persistence_forecast({}, 1), Error);
  std::vector<double> s{0, 1, 2, 3, 4};
  // persistence on a unit ramp, tau 2 from origins 2 and 3: errors 1, 2, 1, 2
  EXPECT_DOUBLE_EQ(cl::rolling_mse(s, 2, 2, persistence_fn()), 2.5);
}

TEST(ApplyForecast, ClampsAndPatches) {
  auto p = cl::apply_forecast({{0, 0, 95.0, 80, 91}});
  ASSERT_EQ(p.grants.size(), 1u);
  EXPECT_EQ(p.grants[0].grant, 91);
  EXPECT_FALSE(p.warnings.empty());
  EXPECT_TRUE(cl::apply_forecast({{0, 0, 40.2, 40, 91}}).empty());
  EXPECT_THROW(cl::apply_forecast({{0, 0, NAN, 40, 91}}), Error);
  auto neg = cl::apply_forecast({{0, 2, -4.0, 3, 91}});
  EXPECT_EQ(neg.grants[0].grant, 0);
  auto tot = cl::apply_forecast({{0, 0, 60, 0, 91}, {0, 1, 60, 0, 91}, {1, 2, 10, 0, 91}});
  int v0 = 0;
  for (const auto& g : tot.grants)
    if (g.vodu == 0) v0 += g.grant;
  EXPECT_EQ(v0, 91);
  auto cost = cl::apply_forecast({}, {0.5, 0.25});
  EXPECT_TRUE(cost.has_cost);
  EXPECT_DOUBLE_EQ(cost.expected_cost, 0.75);
}
