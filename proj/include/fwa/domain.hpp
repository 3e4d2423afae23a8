#pragma once

// Core data model: services, topology, RB numerology, and static validation.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fwa/core.hpp"

namespace fwa {

using CpeId = int;
using ServiceId = int;
using SliceId = int;
using VoduId = int;
using OruId = int;
using ServerId = int;

struct ServiceProfile {
  ServiceId service_id = 0;
  int fiveqi = 0;
  double delay_budget_ms = 100.0;
  double packet_bits_min = 1e6;
  double packet_bits_max = 1e6;
  double arrival_rate_pps = 1.0;  // per subscribed CPE
  int initial_rb = 0;
  double buffer_capacity_pkts = 20.0;
  double buffer_threshold_pkts = 16.0;

  double mean_packet_bits() const { return 0.5 * (packet_bits_min + packet_bits_max); }
};

struct FronthaulLink {
  double capacity_bps = 6e9;
  double fiber_length_m = 20'000.0;
  double propagation_speed_mps = 2e8;
};

struct CpeDescriptor {
  CpeId id = 0;
  double distance_m = 1000.0;
  double tx_power_w = 1.0;
  double noise_w = 1.5e-10;
  double csi_gain = 1.0;  // |h~|^2 of the estimated channel
  OruId serving_oru = 0;
  ServiceId service = 0;  // slice membership
};

struct OruDescriptor {
  OruId id = 0;
  FronthaulLink fronthaul;
};

struct VoduDescriptor {
  VoduId id = 0;
  ServerId host_server = 0;
};

struct ServerDescriptor {
  ServerId id = 0;
  double base_power_w = 100.0;
  std::vector<double> vnf_power_w;  // one entry per hosted VNF; W = size()
  std::vector<VoduId> hosted_vodus;
  bool serves_all_cpes = false;  // CU-UP / RIC host: every CPE's traffic passes through
};

// x^{beta,d}_{c,k} = 1 entries.
struct SlicePlacement {
  SliceId slice = 0;
  ServiceId service = 0;
  VoduId vodu = 0;
};

struct Topology {
  std::vector<CpeDescriptor> cpes;
  std::vector<OruDescriptor> orus;
  std::vector<VoduDescriptor> vodus;
  std::vector<ServerDescriptor> servers;
  std::vector<SlicePlacement> slice_map;
  double pathloss_exponent = 2.0;
  double csi_error_std = 0.0;

  const OruDescriptor* oru(OruId id) const {
    for (const auto& o : orus)
      if (o.id == id) return &o;
    return nullptr;
  }
  // Hosting vO-DU of a slice; -1 when unplaced.
  VoduId vodu_of(SliceId slice) const {
    for (const auto& p : slice_map)
      if (p.slice == slice) return p.vodu;
    return -1;
  }
  std::vector<SliceId> slices_on(VoduId d) const {
    std::vector<SliceId> out;
    for (const auto& p : slice_map)
      if (p.vodu == d) out.push_back(p.slice);
    return out;
  }
  std::vector<CpeId> members(ServiceId k) const {
    std::vector<CpeId> out;
    for (const auto& c : cpes)
      if (c.service == k) out.push_back(c.id);
    return out;
  }
};

struct CarrierConfig {
  int layers = 1;            // MIMO layers
  int modulation_order = 8;  // bits per symbol (256-QAM)
  double scaling = 1.0;
  double overhead = 0.14;
};

struct RbConfig {
  int total_rb = 273;
  int numerology = 3;
  double scs_khz = 120.0;
  double rb_bandwidth_hz = 12 * 120e3;
  std::vector<CarrierConfig> carriers{CarrierConfig{}};
  double max_code_rate = 948.0 / 1024.0;
  int subband_count = 1;
  int tti_count = 14;

  // Average OFDM symbol duration for the numerology, 10^-3 / (14 * 2^i).
  double symbol_duration_s() const { return 1e-3 / (14.0 * static_cast<double>(1 << numerology)); }
};

struct Violation {
  std::string kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += v.kind + ": " + v.detail + "\n";
    return s;
  }
};

// Round-robin slice creation: service k goes to vO-DU (k mod D), starting at the first vO-DU.
inline std::vector<SlicePlacement> round_robin_placement(int service_count, int vodu_count) {
  require(vodu_count >= 1, ErrorCode::InvalidArgument, "round_robin_placement: need at least one vO-DU");
  std::vector<SlicePlacement> out;
  for (int k = 0; k < service_count; ++k) out.push_back({k, k, k % vodu_count});
  return out;
}

inline int vodu_budget(const RbConfig& rb, int vodu_count) {
  return vodu_count > 0 ? rb.total_rb / vodu_count : 0;
}

namespace detail {
template <typename T, typename Id>
void check_unique(const std::vector<T>& items, Id T::*field, const std::string& what, ValidationReport& r) {
  std::set<Id> seen;
  for (const auto& it : items)
    if (!seen.insert(it.*field).second)
      r.violations.push_back({"duplicate id", what + " " + std::to_string(it.*field)});
}
}  // namespace detail

inline ValidationReport validate_rb_config(const RbConfig& rb) {
  ValidationReport r;
  if (rb.total_rb <= 0) r.violations.push_back({"rb config", "total_rb must be positive"});
  if (rb.numerology < 0 || rb.numerology > 6) r.violations.push_back({"rb config", "numerology out of range"});
  if (!(rb.rb_bandwidth_hz > 0)) r.violations.push_back({"rb config", "rb_bandwidth_hz must be positive"});
  if (!(rb.max_code_rate > 0 && rb.max_code_rate <= 1))
    r.violations.push_back({"rb config", "max_code_rate must be in (0,1]"});
  if (rb.carriers.empty()) r.violations.push_back({"rb config", "at least one carrier required"});
  for (std::size_t e = 0; e < rb.carriers.size(); ++e) {
    const auto& c = rb.carriers[e];
    const std::string tag = "carrier " + std::to_string(e);
    if (!(c.overhead >= 0 && c.overhead < 1)) r.violations.push_back({"rb config", tag + ": overhead must be in [0,1)"});
    if (!(c.scaling > 0 && c.scaling <= 1)) r.violations.push_back({"rb config", tag + ": scaling must be in (0,1]"});
    if (c.layers <= 0 || c.modulation_order <= 0)
      r.violations.push_back({"rb config", tag + ": layers and modulation order must be positive"});
  }
  return r;
}

inline ValidationReport validate_services(const std::vector<ServiceProfile>& services) {
  ValidationReport r;
  detail::check_unique(services, &ServiceProfile::service_id, "service", r);
  for (const auto& s : services) {
    const std::string tag = "service " + std::to_string(s.service_id);
    if (!(s.delay_budget_ms > 0)) r.violations.push_back({"service", tag + ": delay budget must be positive"});
    if (!(s.buffer_threshold_pkts > 0 && s.buffer_threshold_pkts < s.buffer_capacity_pkts))
      r.violations.push_back({"service", tag + ": need 0 < buffer threshold < buffer capacity"});
    if (s.initial_rb < 0) r.violations.push_back({"service", tag + ": initial_rb must be >= 0"});
    if (!(s.packet_bits_min >= 1e6 && s.packet_bits_max <= 1e9 && s.packet_bits_min <= s.packet_bits_max))
      r.violations.push_back({"service", tag + ": packet sizes must lie in [1 Mb, 1 Gb]"});
    if (!(s.arrival_rate_pps >= 0)) r.violations.push_back({"service", tag + ": arrival rate must be >= 0"});
  }
  return r;
}

// Checks every static invariant of the loaded world. An empty report means valid.
inline ValidationReport validate_topology(const Topology& t, const RbConfig& rb,
                                          const std::vector<ServiceProfile>& services = {}) {
  ValidationReport r = validate_rb_config(rb);
  detail::check_unique(t.cpes, &CpeDescriptor::id, "cpe", r);
  detail::check_unique(t.orus, &OruDescriptor::id, "oru", r);
  detail::check_unique(t.vodus, &VoduDescriptor::id, "vodu", r);
  detail::check_unique(t.servers, &ServerDescriptor::id, "server", r);

  for (const auto& c : t.cpes) {
    const std::string tag = "cpe " + std::to_string(c.id);
    if (!t.oru(c.serving_oru)) r.violations.push_back({"unknown oru", tag + " references oru " + std::to_string(c.serving_oru)});
    if (!(c.distance_m > 0)) r.violations.push_back({"nonpositive distance", tag});
    if (!(c.noise_w > 0)) r.violations.push_back({"nonpositive noise", tag});
    if (!(c.tx_power_w >= 0)) r.violations.push_back({"negative power", tag});
  }
  for (const auto& o : t.orus) {
    const auto& f = o.fronthaul;
    if (!(f.capacity_bps > 0 && f.fiber_length_m > 0 && f.propagation_speed_mps > 0))
      r.violations.push_back({"nonpositive capacity", "oru " + std::to_string(o.id) + " fronthaul"});
  }

  std::map<SliceId, std::set<VoduId>> hosts;
  std::map<SliceId, std::set<ServiceId>> svc;
  for (const auto& p : t.slice_map) {
    hosts[p.slice].insert(p.vodu);
    svc[p.slice].insert(p.service);
    const bool known_vodu = std::any_of(t.vodus.begin(), t.vodus.end(), [&](const auto& v) { return v.id == p.vodu; });
    if (!known_vodu) r.violations.push_back({"unknown vodu", "slice " + std::to_string(p.slice)});
  }
  for (const auto& [slice, ds] : hosts)
    if (ds.size() > 1) r.violations.push_back({"slice multiplicity", "slice " + std::to_string(slice) + " placed on " + std::to_string(ds.size()) + " vO-DUs"});
  for (const auto& [slice, ks] : svc)
    if (ks.size() > 1) r.violations.push_back({"slice multiplicity", "slice " + std::to_string(slice) + " bound to several services"});

  if (!services.empty()) {
    auto sv = validate_services(services);
    r.violations.insert(r.violations.end(), sv.violations.begin(), sv.violations.end());
    const int budget = vodu_budget(rb, static_cast<int>(t.vodus.size()));
    std::map<VoduId, int> granted;
    for (const auto& p : t.slice_map)
      for (const auto& s : services)
        if (s.service_id == p.service) granted[p.vodu] += s.initial_rb;
    for (const auto& [d, total] : granted)
      if (total > budget)
        r.violations.push_back({"vodu over budget", "vodu " + std::to_string(d) + ": initial grants " + std::to_string(total) + " > " + std::to_string(budget)});
    for (const auto& c : t.cpes) {
      const bool known = std::any_of(services.begin(), services.end(), [&](const auto& s) { return s.service_id == c.service; });
      if (!known) r.violations.push_back({"unknown service", "cpe " + std::to_string(c.id)});
    }
  }
  return r;
}

}  // namespace fwa
