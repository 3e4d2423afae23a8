#include <gtest/gtest.h>

#include "fwa/loop3.hpp"

using namespace fwa;

namespace {

// Separable convex quadratic sum_i w_i (z_i - c_i)^2 with a closed-form box minimizer.
struct Quadratic {
  std::vector<double> w, c;
  double value(const std::vector<double>& z) const {
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * (z[i] - c[i]) * (z[i] - c[i]);
    return s;
  }
  std::vector<double> gradient(const std::vector<double>& z) const {
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) g[i] = 2 * w[i] * (z[i] - c[i]);
    return g;
  }
  std::vector<double> argmin() const {
    std::vector<double> z;
    for (double v : c) z.push_back(project01(v));
    return z;
  }
};

HorizonObjective random_horizon(Rng& rng, int J) {
  std::uniform_real_distribution<double> u(0, 1);
  HorizonObjective f;
  for (int j = 0; j < J; ++j) {
    const double hod = j % 24;
    f.solar_kwh.push_back(hod >= 6 && hod <= 19 ? 6.0 * u(rng) : 0.0);
    f.demand_kwh.push_back(0.5 + 2.5 * u(rng));
    f.rb_mean.push_back(150 + 100 * u(rng));
  }
  f.initial_level_kwh = 10 * u(rng);
  return f;
}

std::vector<double> random_z(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> z(n);
  for (auto& v : z) v = u(rng);
  return z;
}

}  // namespace

TEST(JointObjective, Examples) {
  PriceConfig p;
  EXPECT_EQ(joint_objective(0, 0, p), 0.0);
  EXPECT_NEAR(joint_objective(0.38, 91, p), -545.62, 1e-12);
  EXPECT_LT(joint_objective(0.38, 92, p), joint_objective(0.38, 91, p));
}

TEST(Surrogate, AnchorIdentityAndPenalty) {
  Rng rng = make_stream(1, "anchor");
  for (int i = 0; i < 200; ++i) {
    auto f = random_horizon(rng, 24);
    auto z = random_z(rng, 24);
    const auto s = mm_surrogate(f, z, z, 3.0);
    EXPECT_EQ(s.value, f.value(z));
    EXPECT_EQ(s.gradient, f.gradient(z));
  }
  Quadratic q{{0.0}, {0.0}};
  EXPECT_DOUBLE_EQ(mm_surrogate(q, {1.0}, {0.0}, 2.0).value, 1.0);
  EXPECT_THROW(mm_surrogate(q, {1.0}, {0.0}, 0.0), Error);
}

TEST(Surrogate, MajorizesObjective) {
  Rng rng = make_stream(2, "major");
  std::uniform_real_distribution<double> r(1e-3, 10);
  for (int i = 0; i < 1000; ++i) {
    auto f = random_horizon(rng, 12);
    auto z = random_z(rng, 12), a = random_z(rng, 12);
    EXPECT_GE(mm_surrogate(f, z, a, r(rng)).value, f.value(z));
  }
}

TEST(Horizon, GradientMatchesFiniteDifferences) {
  Rng rng = make_stream(3, "hgrad");
  // Differences of the energy term only: the RB revenue is constant in z and large enough to swamp them in rounding.
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    auto f = random_horizon(rng, 24);
    auto z = random_z(rng, 24);
    const auto g = f.gradient(z);
    for (std::size_t j = 0; j < z.size(); ++j) {
      auto up = z, dn = z;
      up[j] += h;
      dn[j] -= h;
      const double fd = (f.energy_cost_total(up) - f.energy_cost_total(dn)) / (2 * h);
      EXPECT_NEAR(g[j], fd, 1e-6 + 1e-4 * std::abs(fd)) << "case " << i << " hour " << j;
    }
  }
}

TEST(Horizon, ValueIsEnergyCostMinusRevenue) {
  Rng rng = make_stream(4, "hval");
  auto f = random_horizon(rng, 6);
  std::vector<double> z(6, 1.0);
  // Integral modes reproduce the hourly dispatch chain.
  double level = f.initial_level_kwh, H = 0, rev = 0;
  for (int j = 0; j < 6; ++j) {
    auto e = dispatch_with_mode({j, f.solar_kwh[j], f.demand_kwh[j], level}, 1, f.limits, f.prices);
    H += e.cost;
    level = e.level_after_kwh;
    rev += f.prices.rb_price * f.rb_mean[j];
  }
  EXPECT_NEAR(f.value(z), H - rev, 1e-9);
}

TEST(MmSolve, ToyQuadraticClosedForm) {
  Quadratic q{{1.0}, {0.3}};
  auto r = mm_solve(q, {0.9});
  EXPECT_TRUE(r.trace.converged);
  EXPECT_NEAR(r.z[0], 0.3, 1e-6);
  EXPECT_TRUE(trace_non_increasing(r.trace));
  EXPECT_LE(r.trace.iterations, 200);
}

TEST(MmSolve, RandomBoxQuadratics) {
  Rng rng = make_stream(5, "boxq");
  std::uniform_real_distribution<double> w(0.1, 5), c(-0.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    Quadratic q;
    for (int k = 0; k < 8; ++k) {
      q.w.push_back(w(rng));
      q.c.push_back(c(rng));
    }
    auto r = mm_solve(q, random_z(rng, 8));
    ASSERT_TRUE(r.trace.converged);
    const auto z = q.argmin();
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(r.z[k], z[k], 1e-4) << i;
  }
}

TEST(MmSolve, StartAtOptimumStopsAfterOneIteration) {
  Quadratic q{{1.0}, {0.3}};
  auto r = mm_solve(q, {0.3});
  EXPECT_EQ(r.trace.iterations, 1);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_EQ(r.z[0], 0.3);
}

TEST(MmSolve, LargerRhoGivesShorterSteps) {
  Rng rng = make_stream(6, "rho");
  MmOptions o;
  for (int i = 0; i < 100; ++i) {
    Quadratic q;
    for (int k = 0; k < 6; ++k) {
      q.w.push_back(std::uniform_real_distribution<double>(0.1, 5)(rng));
      q.c.push_back(std::uniform_real_distribution<double>(-0.5, 1.5)(rng));
    }
    const auto anchor = random_z(rng, 6);
    double prev = INFINITY;
    for (double rho = 0.01; rho < 2000; rho *= 2) {
      const auto x = minimize_surrogate(q, anchor, rho, o);
      double d = 0;
      for (int k = 0; k < 6; ++k) d += (x[k] - anchor[k]) * (x[k] - anchor[k]);
      d = std::sqrt(d);
      EXPECT_LE(d, prev + 1e-9) << "rho " << rho;
      prev = d;
    }
  }
}

TEST(MmSolve, HorizonProblemsDescendAndConverge) {
  Rng rng = make_stream(7, "mm-horizon");
  for (int i = 0; i < 200; ++i) {
    auto f = random_horizon(rng, 24);
    auto r = mm_solve(f, random_z(rng, 24));
    EXPECT_TRUE(trace_non_increasing(r.trace)) << i;
    EXPECT_TRUE(r.trace.converged) << i;
    EXPECT_LE(r.trace.iterations, 200);
    for (double v : r.z) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_LE(f.value(r.z), r.trace.objective.front() + 1e-9);
  }
}

TEST(SolveHour, RoundedModeGivesValidLedger) {
  Rng rng = make_stream(8, "solve-hour");
  for (int i = 0; i < 200; ++i) {
    auto f = random_horizon(rng, 24);
    auto s = solve_hour(i, f, MmOptions{});
    EXPECT_TRUE(s.z == 0 || s.z == 1);
    EXPECT_TRUE(check_ledger(s.ledger, f.limits).ok);
    EXPECT_NEAR(s.F, s.H - s.rb_revenue, 1e-9);
    EXPECT_EQ(s.hour, i);
  }
}

TEST(SolveHour, MonotoneTraceHelper) {
  MmTrace t;
  t.objective = {3, 2, 2, 1};
  EXPECT_TRUE(trace_non_increasing(t));
  t.objective.push_back(1.1);
  EXPECT_FALSE(trace_non_increasing(t));
  EXPECT_THROW(solve_hour(0, HorizonObjective{}, MmOptions{}), Error);
}
