#pragma once

// Edge-cloud energy: server power, consumption, hourly grid/solar/storage dispatch and cost.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fwa/core.hpp"

namespace fwa {

struct CpeLoad {
  bool y = false;
  double lambda_pps = 0;
  double mu_pps = 1;
};

struct ServerPower {
  double base_w = 0;
  std::vector<double> vnf_w;
  std::vector<bool> vnf_active;  // empty means all active
  int vnf_count = 1;             // W
  std::vector<CpeLoad> cpe_share;
};

inline double server_power(const ServerPower& sp) {
  double p = sp.base_w;
  for (std::size_t i = 0; i < sp.vnf_w.size(); ++i)
    if (sp.vnf_active.empty() || (i < sp.vnf_active.size() && sp.vnf_active[i])) p += sp.vnf_w[i];
  return p;
}

// phi(P) = sum_p p^pow * sum_v y * lambda / (W * mu), in W.
inline double total_power(const std::vector<ServerPower>& servers) {
  double total = 0;
  for (const auto& sp : servers) {
    require(sp.vnf_count >= 1, ErrorCode::InvalidArgument, "total_power: server needs W >= 1");
    double share = 0;
    for (const auto& c : sp.cpe_share) {
      if (!c.y) continue;
      require(c.mu_pps > 0, ErrorCode::InvalidArgument, "total_power: zero service rate");
      share += c.lambda_pps / (sp.vnf_count * c.mu_pps);
    }
    total += server_power(sp) * share;
  }
  return total;
}

inline double consumption_kwh(double power_w, double hours) {
  require(hours > 0, ErrorCode::InvalidArgument, "consumption: duration must be positive");
  return power_w * hours / 1000.0;
}

struct PriceConfig {
  double buy_per_kwh = 0.073;   // grid purchase
  double sell_per_kwh = 0.070;  // surplus sale
  double rb_price = 6.0;        // revenue per RB
};

inline double energy_cost(double grid_in_kwh, double surplus_kwh, const PriceConfig& p) {
  return grid_in_kwh * p.buy_per_kwh - surplus_kwh * p.sell_per_kwh;
}

struct EnergyLimits {
  double grid_max_kwh = 50.0;       // h^max
  double solar_max_kwh = 20.0;      // g^max
  double charge_max_kwh = 10.0;     // Phi+_max, also the storage capacity
  double discharge_max_kwh = 5.0;   // Phi-_max per hour
};

struct HourInputs {
  int hour = 0;
  double solar_kwh = 0;
  double demand_kwh = 0;  // L_cons
  double storage_kwh = 0;
};

struct EnergyLedger {
  int hour = 0;
  double solar_kwh = 0;
  double grid_in_kwh = 0;
  double surplus_kwh = 0;
  double charge_kwh = 0;
  double discharge_kwh = 0;
  int storage_mode = 0;  // z: 1 discharge, 0 charge
  double level_before_kwh = 0;
  double level_after_kwh = 0;
  double consumption_kwh = 0;
  double available_kwh = 0;
  double cost = 0;
  bool feasible = true;
};

inline double available_energy(int z, double g, double h_plus, double charge, double discharge) {
  return (1 - z) * (g + h_plus - charge) + z * (g + h_plus + discharge);
}

// Dispatch with the storage mode fixed: solar first, then discharge (z = 1), then grid.
// Leftover solar charges storage (z = 0) or is sold.
inline EnergyLedger dispatch_with_mode(const HourInputs& in, int z, const EnergyLimits& lim, const PriceConfig& prices) {
  require(z == 0 || z == 1, ErrorCode::InvalidArgument, "dispatch: storage mode must be 0 or 1");
  require(lim.grid_max_kwh >= 0 && lim.charge_max_kwh > 0 && lim.discharge_max_kwh >= 0, ErrorCode::InvalidArgument,
          "dispatch: limits must be positive");
  require(in.storage_kwh >= -1e-12 && in.storage_kwh <= lim.charge_max_kwh + 1e-12, ErrorCode::InvalidArgument,
          "dispatch: storage level outside [0, capacity]");
  require(in.demand_kwh >= 0 && in.solar_kwh >= 0, ErrorCode::InvalidArgument, "dispatch: negative energy input");
  EnergyLedger e;
  e.hour = in.hour;
  e.storage_mode = z;
  e.level_before_kwh = std::clamp(in.storage_kwh, 0.0, lim.charge_max_kwh);
  e.solar_kwh = std::min(in.solar_kwh, lim.solar_max_kwh);
  e.consumption_kwh = in.demand_kwh;
  const double solar_used = std::min(e.solar_kwh, in.demand_kwh);
  double need = in.demand_kwh - solar_used;
  const double spare = e.solar_kwh - solar_used;
  if (z == 1) {
    e.discharge_kwh = std::min({need, lim.discharge_max_kwh, e.level_before_kwh});
    need -= e.discharge_kwh;
  } else {
    e.charge_kwh = std::min(spare, lim.charge_max_kwh - e.level_before_kwh);
  }
  e.grid_in_kwh = std::min(need, lim.grid_max_kwh);
  e.feasible = need <= lim.grid_max_kwh + 1e-12;
  e.level_after_kwh = e.level_before_kwh + e.charge_kwh - e.discharge_kwh;
  e.available_kwh = available_energy(z, e.solar_kwh, e.grid_in_kwh, e.charge_kwh, e.discharge_kwh);
  e.surplus_kwh = std::max(e.available_kwh - e.consumption_kwh, 0.0);
  e.cost = energy_cost(e.grid_in_kwh, e.surplus_kwh, prices);
  return e;
}

// Greedy mode choice: charge when solar covers demand or storage is empty, otherwise discharge.
inline EnergyLedger dispatch_hour(const HourInputs& in, const EnergyLimits& lim, const PriceConfig& prices) {
  const double g = std::min(in.solar_kwh, lim.solar_max_kwh);
  const int z = (g < in.demand_kwh && in.storage_kwh > 0) ? 1 : 0;
  return dispatch_with_mode(in, z, lim, prices);
}

struct LedgerCheck {
  bool ok = true;
  std::string detail;
};

inline LedgerCheck check_ledger(const EnergyLedger& e, const EnergyLimits& lim, double tol = 1e-9) {
  auto bad = [&](const std::string& what) { return LedgerCheck{false, "hour " + std::to_string(e.hour) + ": " + what}; };
  if (!e.feasible) return bad("infeasible (demand exceeds supply limits)");
  if (e.consumption_kwh > e.available_kwh + tol) return bad("L_cons > L");
  if (e.level_after_kwh < -tol || e.level_after_kwh > lim.charge_max_kwh + tol) return bad("storage level out of bounds");
  if (std::abs(e.level_after_kwh - (e.level_before_kwh + e.charge_kwh - e.discharge_kwh)) > tol) return bad("storage not conserved");
  if (e.charge_kwh > tol && e.discharge_kwh > tol) return bad("charge and discharge in the same hour");
  if (e.grid_in_kwh < -tol || e.grid_in_kwh > lim.grid_max_kwh + tol) return bad("grid draw out of bounds");
  if (e.charge_kwh > lim.charge_max_kwh + tol || e.discharge_kwh > lim.discharge_max_kwh + tol) return bad("storage rate out of bounds");
  if (std::abs(e.surplus_kwh - std::max(e.available_kwh - e.consumption_kwh, 0.0)) > tol) return bad("surplus mismatch");
  return {};
}

// The ill-typed (z + (1 - z))(x + y) > 1 condition, read as: some allocation is active whenever power is drawn.
inline bool allocation_condition(bool any_allocation, double consumption_kwh) {
  return any_allocation || consumption_kwh <= 0;
}

}  // namespace fwa
