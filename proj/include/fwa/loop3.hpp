#pragma once

// Closed loop 3: hourly joint energy-cost / RB-revenue objective over relaxed storage modes,
// minimized by majorization-minimization with a proximal term.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/energy_model.hpp"

namespace fwa {

inline double joint_objective(double energy_cost_h, double rb_mean, const PriceConfig& p) {
  return energy_cost_h - p.rb_price * rb_mean;
}

inline double project01(double v) { return std::min(1.0, std::max(0.0, v)); }

inline void project_box(std::vector<double>& z) {
  for (auto& v : z) v = project01(v);
}

// Energy part of the joint objective over a horizon, with one relaxed storage mode per hour.
struct HorizonObjective {
  std::vector<double> solar_kwh;
  std::vector<double> demand_kwh;
  std::vector<double> rb_mean;  // per hour, RBs granted on average
  double initial_level_kwh = 0;
  EnergyLimits limits;
  PriceConfig prices;

  std::size_t size() const { return solar_kwh.size(); }

  struct Step {
    double m_c, dm_c, m_d, dm_d;  // charge / discharge headroom and their level derivatives
    double H;
    double level_next;
  };

  Step step(std::size_t j, double z, double s) const {
    const double g = std::min(solar_kwh[j], limits.solar_max_kwh);
    const double d = demand_kwh[j];
    const double used = std::min(g, d);
    const double r = d - used, e = g - used;
    Step st{};
    const double head = limits.charge_max_kwh - s;
    if (head < e) {
      st.m_c = head;
      st.dm_c = -1;
    } else {
      st.m_c = e;
      st.dm_c = 0;
    }
    st.m_d = std::min(r, limits.discharge_max_kwh);
    st.dm_d = 0;
    if (s < st.m_d) {
      st.m_d = s;
      st.dm_d = 1;
    }
    const double charge = (1 - z) * st.m_c, discharge = z * st.m_d;
    st.H = energy_cost(r - discharge, e - charge, prices);
    st.level_next = s + charge - discharge;
    return st;
  }

  double energy_cost_total(const std::vector<double>& z) const {
    double s = initial_level_kwh, F = 0;
    for (std::size_t j = 0; j < size(); ++j) {
      auto st = step(j, z[j], s);
      F += st.H;
      s = st.level_next;
    }
    return F;
  }

  double value(const std::vector<double>& z) const {
    double rb = 0;
    for (double v : rb_mean) rb += v;
    return energy_cost_total(z) - prices.rb_price * rb;
  }

  // Reverse-mode derivative through the storage level recursion.
  std::vector<double> gradient(const std::vector<double>& z) const {
    const std::size_t J = size();
    std::vector<Step> steps(J);
    std::vector<double> level(J + 1);
    level[0] = initial_level_kwh;
    for (std::size_t j = 0; j < J; ++j) {
      steps[j] = step(j, z[j], level[j]);
      level[j + 1] = steps[j].level_next;
    }
    std::vector<double> g(J);
    double adj = 0;  // dF/d level[j+1]
    const double buy = prices.buy_per_kwh, sell = prices.sell_per_kwh;
    for (std::size_t j = J; j-- > 0;) {
      const auto& st = steps[j];
      const double dH_dz = -buy * st.m_d - sell * st.m_c;
      const double dH_ds = -buy * z[j] * st.dm_d + sell * (1 - z[j]) * st.dm_c;
      const double dsn_dz = -st.m_c - st.m_d;
      const double dsn_ds = 1 + (1 - z[j]) * st.dm_c - z[j] * st.dm_d;
      g[j] = dH_dz + adj * dsn_dz;
      adj = dH_ds + adj * dsn_ds;
    }
    return g;
  }
};

struct SurrogateEval {
  double value = 0;
  std::vector<double> gradient;
};

// F(z) + rho/2 ||z - anchor||^2; equals F at the anchor and upper-bounds it elsewhere.
template <typename Objective>
SurrogateEval mm_surrogate(const Objective& f, const std::vector<double>& z, const std::vector<double>& anchor, double rho) {
  require(rho > 0, ErrorCode::InvalidArgument, "mm_surrogate: rho must be positive");
  SurrogateEval out;
  out.value = f.value(z);
  out.gradient = f.gradient(z);
  double pen = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - anchor[i];
    pen += d * d;
    out.gradient[i] += rho * d;
  }
  if (pen != 0.0) out.value += 0.5 * rho * pen;
  return out;
}

struct MmOptions {
  int max_iter = 200;
  double tol = 1e-6;
  double rho = 1.0;
  double rho_shrink = 0.1;  // applied after each accepted step
  double rho_min = 1e-6;
  int inner_max_iter = 200;
  double inner_tol = 1e-12;
};

struct MmTrace {
  std::vector<double> objective;  // F at the starting point and after every iteration
  std::vector<double> step;       // max-norm of each outer step
  int iterations = 0;
  bool converged = false;
  double final_rho = 1.0;
};

struct MmResult {
  std::vector<double> z;
  MmTrace trace;
};

namespace detail {
inline double inf_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
}  // namespace detail

// Projected gradient with backtracking on the box-constrained surrogate.
template <typename Objective>
std::vector<double> minimize_surrogate(const Objective& f, const std::vector<double>& anchor, double rho, const MmOptions& o) {
  std::vector<double> x = anchor, cand(x.size());
  double t = 1.0 / rho;
  auto cur = mm_surrogate(f, x, anchor, rho);
  for (int k = 0; k < o.inner_max_iter; ++k) {
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      double lin = 0, quad = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        cand[i] = project01(x[i] - t * cur.gradient[i]);
        const double d = cand[i] - x[i];
        lin += cur.gradient[i] * d;
        quad += d * d;
      }
      if (quad == 0.0) return x;
      auto next = mm_surrogate(f, cand, anchor, rho);
      if (next.value <= cur.value + lin + quad / (2 * t) && next.value <= cur.value) {
        const double move = std::sqrt(quad);
        x = cand;
        cur = std::move(next);
        accepted = true;
        t *= 2;
        if (move < o.inner_tol) return x;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return x;
}

template <typename Objective>
MmResult mm_solve(const Objective& f, std::vector<double> z0, const MmOptions& o = {}) {
  project_box(z0);
  MmResult r;
  r.z = std::move(z0);
  double rho = o.rho;
  double F = f.value(r.z);
  r.trace.objective.push_back(F);
  for (int it = 1; it <= o.max_iter; ++it) {
    r.trace.iterations = it;
    auto x = minimize_surrogate(f, r.z, rho, o);
    const double Fx = f.value(x);
    if (Fx > F) {
      // Non-descent: double rho and retry from the same anchor.
      rho *= 2;
      r.trace.objective.push_back(F);
      r.trace.step.push_back(0.0);
      continue;
    }
    const double dz = detail::inf_norm_diff(x, r.z);
    const double dF = F - Fx;
    rho = std::max(o.rho_min, rho * o.rho_shrink);
    r.z = std::move(x);
    F = Fx;
    r.trace.objective.push_back(F);
    r.trace.step.push_back(dz);
    if (dF < o.tol) {
      r.trace.converged = true;
      break;
    }
  }
  r.trace.final_rho = rho;
  return r;
}

inline bool trace_non_increasing(const MmTrace& t, double slack = 1e-9) {
  for (std::size_t i = 1; i < t.objective.size(); ++i)
    if (t.objective[i] > t.objective[i - 1] + slack) return false;
  return true;
}

struct HourSolution {
  int hour = 0;
  int z = 0;
  double F = 0;
  double H = 0;
  double rb_revenue = 0;
  int iterations = 0;
  bool converged = false;
  bool repaired = false;
  EnergyLedger ledger;
  MmTrace trace;
};

// Solves the horizon starting at `hour`, rounds the first relaxed mode and dispatches that hour.
// Rounding that yields an infeasible or invalid hour is flipped to the other mode.
inline HourSolution solve_hour(int hour, const HorizonObjective& problem, const MmOptions& opt) {
  require(problem.size() >= 1, ErrorCode::InvalidArgument, "solve_hour: empty horizon");
  std::vector<double> z0(problem.size(), 0.5);
  auto res = mm_solve(problem, z0, opt);
  HourSolution out;
  out.hour = hour;
  out.iterations = res.trace.iterations;
  out.converged = res.trace.converged;
  out.trace = res.trace;
  out.z = res.z[0] >= 0.5 ? 1 : 0;
  HourInputs in{hour, problem.solar_kwh[0], problem.demand_kwh[0], problem.initial_level_kwh};
  auto led = dispatch_with_mode(in, out.z, problem.limits, problem.prices);
  if (!check_ledger(led, problem.limits).ok) {
    auto alt = dispatch_with_mode(in, 1 - out.z, problem.limits, problem.prices);
    if (check_ledger(alt, problem.limits).ok || (alt.feasible && !led.feasible)) {
      led = alt;
      out.z = 1 - out.z;
      out.repaired = true;
    }
  }
  out.ledger = led;
  out.H = led.cost;
  out.rb_revenue = problem.prices.rb_price * (problem.rb_mean.empty() ? 0.0 : problem.rb_mean[0]);
  out.F = joint_objective(out.H, problem.rb_mean.empty() ? 0.0 : problem.rb_mean[0], problem.prices);
  return out;
}

}  // namespace fwa
