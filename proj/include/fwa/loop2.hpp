#pragma once

// Closed loop 2: RB distribution from the RIC to vO-DUs and their slices.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/domain.hpp"
#include "fwa/loop1.hpp"

namespace fwa {

struct SliceGrant {
  SliceId slice = 0;
  int grant = 0;
};

struct VoduBudget {
  VoduId vodu = 0;
  int rb_budget = 0;
  std::vector<SliceGrant> slice_grants;  // ascending slice id
  std::vector<double> utilization;       // phi~ history

  int granted() const {
    int s = 0;
    for (const auto& g : slice_grants) s += g.grant;
    return s;
  }
  int* grant_ptr(SliceId c) {
    for (auto& g : slice_grants)
      if (g.slice == c) return &g.grant;
    return nullptr;
  }
  int grant_of(SliceId c) const {
    for (const auto& g : slice_grants)
      if (g.slice == c) return g.grant;
    return 0;
  }
};

inline std::vector<VoduBudget> initial_distribution(int total_rb, int vodu_count, const std::vector<ServiceProfile>& services,
                                                    const std::vector<SlicePlacement>& placement) {
  require(vodu_count >= 1, ErrorCode::InvalidArgument, "initial_distribution: need at least one vO-DU");
  std::vector<VoduBudget> out(static_cast<std::size_t>(vodu_count));
  const int budget = total_rb / vodu_count;
  for (int d = 0; d < vodu_count; ++d) out[d] = {d, budget, {}, {}};
  for (const auto& p : placement) {
    require(p.vodu >= 0 && p.vodu < vodu_count, ErrorCode::Validation, "slice " + std::to_string(p.slice) + " placed on unknown vO-DU");
    auto it = std::find_if(services.begin(), services.end(), [&](const auto& s) { return s.service_id == p.service; });
    require(it != services.end(), ErrorCode::Validation, "slice " + std::to_string(p.slice) + " has unknown service");
    out[p.vodu].slice_grants.push_back({p.slice, it->initial_rb});
  }
  for (auto& b : out) {
    std::sort(b.slice_grants.begin(), b.slice_grants.end(), [](const auto& a, const auto& c) { return a.slice < c.slice; });
    require(b.granted() <= b.rb_budget, ErrorCode::Validation,
            "vO-DU " + std::to_string(b.vodu) + ": initial grants " + std::to_string(b.granted()) + " exceed budget " +
                std::to_string(b.rb_budget));
  }
  return out;
}

// Ties: nu = 0 keeps even when the grant is also 0.
inline Action select_vodu_action(int nu, int grant) {
  if (nu < 0) return Action::ScaleUp;
  if (nu == 0) return Action::Keep;
  if (nu == grant) return Action::Terminate;
  return Action::ScaleDown;
}

// Proportional floor trim when grants exceed the budget; leftover RBs go one each from the lowest slice id.
inline void trim_to_budget(VoduBudget& b) {
  const int total = b.granted();
  if (total <= b.rb_budget) return;
  int sum = 0;
  for (auto& g : b.slice_grants) {
    g.grant = static_cast<int>(static_cast<long long>(g.grant) * b.rb_budget / total);
    sum += g.grant;
  }
  for (std::size_t i = 0; sum < b.rb_budget; i = (i + 1) % b.slice_grants.size()) {
    ++b.slice_grants[i].grant;
    ++sum;
  }
}

// Scale-up never goes below the current demand; scale-down never cuts below it.
inline VoduBudget apply_vodu_action(const VoduBudget& budget, SliceId slice, Action a, double omega, int demand = 0) {
  VoduBudget b = budget;
  int* g = b.grant_ptr(slice);
  require(g != nullptr, ErrorCode::InvalidArgument, "apply_vodu_action: slice not hosted on this vO-DU");
  const int cur = *g;
  switch (a) {
    case Action::ScaleUp:
      *g = std::max({cur, static_cast<int>(std::floor(omega * cur)), demand});
      break;
    case Action::ScaleDown:
      *g = std::min(cur, std::max(static_cast<int>(std::floor(std::min(omega, 1.0) * cur)), demand));
      break;
    case Action::Terminate:
      *g = 0;
      break;
    case Action::Keep:
      break;
  }
  trim_to_budget(b);
  return b;
}

// r_{s,d}: multiplicity_slack = 1 - sum of placements per slice, budget_slack = beta^d - sum grants + nu.
inline double reward_loop2(double mean_util, double multiplicity_slack, double budget_slack, const Penalties& p) {
  return mean_util + p.term(p.multiplicity, multiplicity_slack) + p.term(p.budget, budget_slack);
}

inline double main_reward(double r_sd, double r_sc, double phi_dis) {
  require(phi_dis >= 0 && phi_dis <= 1, ErrorCode::InvalidArgument, "main_reward: phi_dis outside [0,1]");
  return phi_dis * r_sd + (1.0 - phi_dis) * r_sc;
}

inline bool budgets_ok(const std::vector<VoduBudget>& bs, int total_rb) {
  int all = 0;
  for (const auto& b : bs) {
    if (b.granted() > b.rb_budget) return false;
    for (const auto& g : b.slice_grants)
      if (g.grant < 0) return false;
    all += b.rb_budget;
  }
  return all <= total_rb;
}

}  // namespace fwa
