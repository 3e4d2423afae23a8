#pragma once

// Closed loop 1: intra-slice RB allocation to CPEs and zero-touch scaling.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/domain.hpp"

namespace fwa {

// Index order is shared with the Q-network outputs.
enum class Action { ScaleUp = 0, ScaleDown = 1, Terminate = 2, Keep = 3 };
constexpr int kActionCount = 4;

inline const char* action_name(Action a) {
  switch (a) {
    case Action::ScaleUp: return "scale_up";
    case Action::ScaleDown: return "scale_down";
    case Action::Terminate: return "terminate";
    case Action::Keep: return "keep";
  }
  return "?";
}

struct Loop1Decision {
  Action action = Action::Keep;
  double omega = 1.0;
};

// Omega attached to each action for a given buffer configuration.
inline double omega_for(Action a, double B, double B_cap) {
  switch (a) {
    case Action::ScaleUp: return B_cap / B;
    case Action::ScaleDown: return B / B_cap;
    case Action::Terminate: return 0.0;
    case Action::Keep: return 1.0;
  }
  return 1.0;
}

// Zero-touch rule table. Overlapping guards resolve as terminate > up > down > keep.
inline Loop1Decision select_action(double psi, double B, double B_cap, double phi, double util) {
  require(B < B_cap, ErrorCode::InvalidArgument, "select_action: need B < B~");
  Action a = Action::Keep;
  if (psi >= B_cap)
    a = Action::Terminate;
  else if (psi <= B && phi < 1.0)
    a = Action::ScaleUp;
  else if (psi > B && util < 1.0)
    a = Action::ScaleDown;
  return {a, omega_for(a, B, B_cap)};
}

struct CpeAlloc {
  CpeId cpe = 0;
  int demand = 0;  // beta_v before scaling
  bool y = false;
  int rbs = 0;
};

struct SliceAllocState {
  SliceId slice = 0;
  VoduId vodu = 0;
  int rb_pool = 0;
  std::vector<CpeAlloc> cpe_allocs;  // ascending CPE id
  double omega = 1.0;
  int nu = 0;         // pool minus granted
  int demand_nu = 0;  // pool minus floor(Omega * total demand); negative means shortage
  double last_phi = 1.0;
  Action last_action = Action::Keep;

  int granted() const {
    int s = 0;
    for (const auto& a : cpe_allocs) s += a.y ? a.rbs : 0;
    return s;
  }
  int total_demand() const {
    int s = 0;
    for (const auto& a : cpe_allocs) s += a.demand;
    return s;
  }
  const CpeAlloc* find(CpeId id) const {
    for (const auto& a : cpe_allocs)
      if (a.cpe == id) return &a;
    return nullptr;
  }
};

// Whole-or-nothing first-fit in ascending CPE id; CPEs that do not fit get y = 0.
inline SliceAllocState apply_allocation(const SliceAllocState& state, const Loop1Decision& d,
                                        std::vector<std::pair<CpeId, int>> demands) {
  std::sort(demands.begin(), demands.end());
  SliceAllocState s = state;
  s.omega = d.omega;
  s.last_action = d.action;
  s.cpe_allocs.clear();
  int left = s.rb_pool;
  for (const auto& [cpe, demand] : demands) {
    CpeAlloc a{cpe, std::max(0, demand), false, 0};
    const int want = static_cast<int>(std::floor(d.omega * a.demand));
    if (want > 0 && want <= left) {
      a.y = true;
      a.rbs = want;
      left -= want;
    }
    s.cpe_allocs.push_back(a);
  }
  s.nu = s.rb_pool - s.granted();
  s.demand_nu = s.rb_pool - static_cast<int>(std::floor(d.omega * s.total_demand()));
  return s;
}

enum class PenaltyMode { ViolationsOnly, Literal };

struct Penalties {
  double fronthaul = 1.0;     // Delta_m
  double exclusivity = 1.0;   // Delta_v
  double rb_gap = 1.0;        // Delta_z
  double multiplicity = 1.0;  // Delta_d
  double budget = 1.0;        // Delta_beta
  PenaltyMode mode = PenaltyMode::ViolationsOnly;

  // Literal mode adds the slack as is; the default only charges the violated (negative) part.
  double term(double weight, double slack) const {
    return mode == PenaltyMode::Literal ? weight * slack : weight * std::min(0.0, slack);
  }
};

// r_{s,c}. Slacks are nonnegative when the constraint holds:
// fronthaul_slack = capacity - offered load, exclusivity_slack = 1 - sum_c y, nu = RB gap.
inline double reward_loop1(double mean_phi, double fronthaul_slack, double exclusivity_slack, double nu,
                           const Penalties& p) {
  return mean_phi + p.term(p.fronthaul, fronthaul_slack) + p.term(p.exclusivity, exclusivity_slack) + p.term(p.rb_gap, nu);
}

inline bool capacity_ok(const SliceAllocState& s) { return s.granted() <= s.rb_pool; }

}  // namespace fwa
