#pragma once

// Scenario assembly: default world, JSON load/save, trace ingestion and augmentation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fwa/cl_predictor.hpp"
#include "fwa/core.hpp"
#include "fwa/domain.hpp"
#include "fwa/energy_model.hpp"
#include "fwa/loop1.hpp"
#include "fwa/loop3.hpp"
#include "fwa/rl/agent.hpp"
#include "fwa/workload.hpp"

namespace fwa {

using json = nlohmann::json;

struct TracePoint {
  double t = 0;  // seconds
  double watts = 0;
};

struct SimConfig {
  double tick_ms = 1.0;
  int loop1_window_ticks = 9;
  int loop2_period_ticks = 100;
  int loop2_epochs_per_hour = 60;
  int loop2_history_epochs = 20;  // windows over which loop 2 reads nu and peak demand
  int hours = 1;
  int arrival_window_ticks = 100;
  int activity_window_ticks = 30;
  QueueMode queue_mode = QueueMode::Stable;
  Penalties penalties;
  double phi_dis = 0.5;
  double delay_target_fraction = 0.35;
  double load_scale = 1.0;
  int horizon_hours = 24;
  MmOptions mm;
};

struct EnergyConfig {
  EnergyLimits limits;
  double initial_storage_kwh = 0.0;
  double solar_peak_w = 6000.0;  // used by the built-in diurnal curve
  double solar_cloud_jitter = 0.15;
  std::string solar_trace;   // timestamp,watts
  std::string server_trace;  // timestamp,server_id,watts
};

struct TopologyGen {
  int cpe_count = 65;
  std::vector<int> members_per_service{10, 9, 8, 10, 9, 9, 10};
  double distance_min_m = 500.0;
  double distance_max_m = 5000.0;
  double tx_power_w = 1.0;
  double noise_w = 1.5e-10;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  bool paper_defaults = true;
  TopologyGen gen;
  Topology topology;
  RbConfig rb;
  std::vector<ServiceProfile> services;
  PriceConfig prices;
  EnergyConfig energy;
  rl::RlConfig rl;
  std::string rl_checkpoint;
  cl::ClConfig cl;
  SimConfig sim;
  std::string arrivals_trace;
  std::string base_dir;  // directory that relative trace paths resolve against

  std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).string();
  }
};

struct FiveQi {
  int fiveqi;
  double budget_ms;
};

// Standardized 5QI values and packet delay budgets for the seven services.
inline const std::vector<FiveQi>& paper_5qi() {
  static const std::vector<FiveQi> t{{1, 100}, {2, 150}, {3, 50}, {4, 300}, {7, 100}, {70, 200}, {76, 500}};
  return t;
}

inline std::vector<ServiceProfile> default_services() {
  struct Traffic {
    double bmin, bmax, pps;
    int rb;
  };
  // Initial grants follow the placement order: vO-DU 0 hosts services 0, 3, 6; vO-DU 1 hosts 1, 4; vO-DU 2 hosts 2, 5.
  const Traffic tr[7] = {{1.0e6, 1.5e6, 1.0, 33}, {1.0e6, 3.0e6, 1.0, 25}, {1.0e6, 1.2e6, 1.0, 23}, {2.0e6, 8.0e6, 0.5, 23},
                         {1.0e6, 2.0e6, 1.0, 25}, {1.0e6, 4.0e6, 0.5, 28}, {4.0e6, 1.6e7, 0.25, 22}};
  std::vector<ServiceProfile> out;
  for (int k = 0; k < 7; ++k) {
    ServiceProfile s;
    s.service_id = k;
    s.fiveqi = paper_5qi()[k].fiveqi;
    s.delay_budget_ms = paper_5qi()[k].budget_ms;
    s.packet_bits_min = tr[k].bmin;
    s.packet_bits_max = tr[k].bmax;
    s.arrival_rate_pps = tr[k].pps;
    s.initial_rb = tr[k].rb;
    s.buffer_capacity_pkts = 20;
    s.buffer_threshold_pkts = 16;
    out.push_back(s);
  }
  return out;
}

// CPE membership and distances are drawn from the "topology" stream.
inline std::vector<CpeDescriptor> generate_cpes(const TopologyGen& g, std::uint64_t seed) {
  std::vector<int> services;
  for (std::size_t k = 0; k < g.members_per_service.size(); ++k)
    for (int i = 0; i < g.members_per_service[k]; ++i) services.push_back(static_cast<int>(k));
  require(static_cast<int>(services.size()) == g.cpe_count, ErrorCode::Validation,
          "topology: members_per_service sums to " + std::to_string(services.size()) + ", expected cpe_count " +
              std::to_string(g.cpe_count));
  Rng rng = make_stream(seed, "topology");
  std::shuffle(services.begin(), services.end(), rng);
  std::uniform_real_distribution<double> dist(g.distance_min_m, g.distance_max_m);
  std::vector<CpeDescriptor> out;
  for (int v = 0; v < g.cpe_count; ++v) {
    CpeDescriptor c;
    c.id = v;
    c.distance_m = std::round(dist(rng));
    c.tx_power_w = g.tx_power_w;
    c.noise_w = g.noise_w;
    c.serving_oru = 0;
    c.service = services[v];
    out.push_back(c);
  }
  return out;
}

inline Topology default_topology(const TopologyGen& g, std::uint64_t seed, int service_count) {
  Topology t;
  t.cpes = generate_cpes(g, seed);
  t.orus = {{0, FronthaulLink{6e9, 20'000.0, 2e8}}};
  t.vodus = {{0, 0}, {1, 1}, {2, 2}};
  t.servers = {{0, 300.0, {150.0, 150.0}, {0}, false},
               {1, 300.0, {150.0, 150.0}, {1}, false},
               {2, 300.0, {150.0, 150.0}, {2}, false},
               {3, 300.0, {150.0, 150.0}, {}, true}};  // vO-CU-UP and near-RT RIC
  t.slice_map = round_robin_placement(service_count, static_cast<int>(t.vodus.size()));
  return t;
}

inline ScenarioSpec paper_scenario(std::uint64_t seed = 1) {
  ScenarioSpec s;
  s.seed = seed;
  s.paper_defaults = true;
  s.services = default_services();
  s.topology = default_topology(s.gen, seed, static_cast<int>(s.services.size()));
  return s;
}

// ---- traces ----

inline std::vector<TracePoint> read_solar_trace(const std::string& path) {
  auto t = csv::read(path);
  const int ct = t.column("timestamp"), cw = t.column("watts");
  require(ct >= 0 && cw >= 0, ErrorCode::Parse, path + ": expected header timestamp,watts");
  std::vector<TracePoint> out;
  for (const auto& r : t.rows) out.push_back({csv::to_double(r[ct], path), csv::to_double(r[cw], path)});
  return out;
}

inline std::map<int, std::vector<TracePoint>> read_server_trace(const std::string& path) {
  auto t = csv::read(path);
  const int ct = t.column("timestamp"), cs = t.column("server_id"), cw = t.column("watts");
  require(ct >= 0 && cs >= 0 && cw >= 0, ErrorCode::Parse, path + ": expected header timestamp,server_id,watts");
  std::map<int, std::vector<TracePoint>> out;
  for (const auto& r : t.rows)
    out[static_cast<int>(csv::to_double(r[cs], path))].push_back({csv::to_double(r[ct], path), csv::to_double(r[cw], path)});
  return out;
}

// Linear interpolation onto a regular grid over [t_first, t_last). A series already at or finer than
// the target cadence is returned unchanged.
inline std::vector<TracePoint> augment_trace(const std::vector<TracePoint>& raw, double cadence_s = 1.0, double jitter_std = 0.0,
                                             std::uint64_t seed = 0) {
  require(cadence_s > 0, ErrorCode::InvalidArgument, "augment_trace: cadence must be positive");
  for (std::size_t i = 1; i < raw.size(); ++i)
    require(raw[i].t > raw[i - 1].t, ErrorCode::InvalidArgument, "augment_trace: timestamps must be strictly increasing");
  if (raw.size() < 2) return raw;
  double min_gap = raw[1].t - raw[0].t;
  for (std::size_t i = 2; i < raw.size(); ++i) min_gap = std::min(min_gap, raw[i].t - raw[i - 1].t);
  if (min_gap <= cadence_s && jitter_std == 0.0) return raw;
  std::vector<TracePoint> out;
  Rng rng = make_stream(seed, "trace-jitter");
  std::normal_distribution<double> jit(0.0, jitter_std > 0 ? jitter_std : 1.0);
  std::size_t seg = 0;
  const double t0 = raw.front().t, t1 = raw.back().t;
  const long n = static_cast<long>(std::ceil((t1 - t0) / cadence_s - 1e-9));
  for (long k = 0; k < n; ++k) {
    const double t = t0 + k * cadence_s;
    while (seg + 2 < raw.size() && raw[seg + 1].t <= t) ++seg;
    const auto& a = raw[seg];
    const auto& b = raw[seg + 1];
    double w = a.watts + (b.watts - a.watts) * (t - a.t) / (b.t - a.t);
    if (jitter_std > 0) w = std::max(0.0, w * (1.0 + jit(rng)));
    out.push_back({t, w});
  }
  return out;
}

inline double trapezoid_integral(const std::vector<TracePoint>& s) {
  double a = 0;
  for (std::size_t i = 1; i < s.size(); ++i) a += 0.5 * (s[i].watts + s[i - 1].watts) * (s[i].t - s[i - 1].t);
  return a;
}

// Hourly energy (kWh) from a trace; the trace repeats when shorter than the requested span.
inline std::vector<double> hourly_kwh(const std::vector<TracePoint>& raw, int hours) {
  require(!raw.empty(), ErrorCode::InvalidArgument, "hourly_kwh: empty trace");
  auto fine = augment_trace(raw, 1.0);
  std::vector<double> sums, counts;
  const double t0 = fine.front().t;
  for (const auto& p : fine) {
    const auto h = static_cast<std::size_t>((p.t - t0) / 3600.0);
    if (sums.size() <= h) {
      sums.resize(h + 1, 0.0);
      counts.resize(h + 1, 0.0);
    }
    sums[h] += p.watts;
    counts[h] += 1;
  }
  if (fine.size() == 1) {
    sums = {fine[0].watts};
    counts = {1};
  }
  std::vector<double> base;
  for (std::size_t h = 0; h < sums.size(); ++h) base.push_back(counts[h] > 0 ? sums[h] / counts[h] / 1000.0 : 0.0);
  std::vector<double> out;
  for (int h = 0; h < hours; ++h) out.push_back(base[static_cast<std::size_t>(h) % base.size()]);
  return out;
}

// Built-in diurnal photovoltaic curve (W) sampled hourly, with a seeded daily cloud factor.
inline std::vector<TracePoint> synthetic_solar(int hours, double peak_w, double cloud_jitter, std::uint64_t seed) {
  Rng rng = make_stream(seed, "solar");
  std::uniform_real_distribution<double> u(1.0 - cloud_jitter, 1.0);
  std::vector<TracePoint> out;
  double cloud = u(rng);
  for (int h = 0; h <= hours; ++h) {
    if (h % 24 == 0 && h > 0) cloud = u(rng);
    const double hod = h % 24;
    const double shape = std::max(0.0, std::sin(3.14159265358979323846 * (hod - 6.0) / 14.0));
    out.push_back({h * 3600.0, std::round(peak_w * cloud * shape * shape)});
  }
  return out;
}

// ---- JSON ----

inline void to_json(json& j, const ServiceProfile& s) {
  j = json{{"service_id", s.service_id},           {"fiveqi", s.fiveqi},
           {"delay_budget_ms", s.delay_budget_ms}, {"packet_bits_min", s.packet_bits_min},
           {"packet_bits_max", s.packet_bits_max}, {"arrival_rate_pps", s.arrival_rate_pps},
           {"initial_rb", s.initial_rb},           {"buffer_capacity_pkts", s.buffer_capacity_pkts},
           {"buffer_threshold_pkts", s.buffer_threshold_pkts}};
}

inline ServiceProfile service_from_json(const json& j, const ServiceProfile& d) {
  ServiceProfile s = d;
  s.service_id = j.value("service_id", d.service_id);
  s.fiveqi = j.value("fiveqi", d.fiveqi);
  s.delay_budget_ms = j.value("delay_budget_ms", d.delay_budget_ms);
  if (j.contains("packet_size_bits")) {
    const auto& p = j.at("packet_size_bits");
    s.packet_bits_min = p.at(0).get<double>();
    s.packet_bits_max = p.at(1).get<double>();
  }
  s.packet_bits_min = j.value("packet_bits_min", s.packet_bits_min);
  s.packet_bits_max = j.value("packet_bits_max", s.packet_bits_max);
  s.arrival_rate_pps = j.value("arrival_rate_pps", d.arrival_rate_pps);
  s.initial_rb = j.value("initial_rb", d.initial_rb);
  s.buffer_capacity_pkts = j.value("buffer_capacity_pkts", d.buffer_capacity_pkts);
  s.buffer_threshold_pkts = j.value("buffer_threshold_pkts", d.buffer_threshold_pkts);
  return s;
}

inline const char* queue_mode_name(QueueMode m) { return m == QueueMode::Stable ? "stable" : "paper_literal"; }
inline const char* penalty_mode_name(PenaltyMode m) { return m == PenaltyMode::Literal ? "literal" : "violations_only"; }

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["paper_defaults"] = s.paper_defaults;

  json t;
  t["cpe_count"] = s.gen.cpe_count;
  t["members_per_service"] = s.gen.members_per_service;
  t["distance_min_m"] = s.gen.distance_min_m;
  t["distance_max_m"] = s.gen.distance_max_m;
  t["tx_power_w"] = s.gen.tx_power_w;
  t["noise_w"] = s.gen.noise_w;
  t["pathloss_exponent"] = s.topology.pathloss_exponent;
  t["csi_error_std"] = s.topology.csi_error_std;
  for (const auto& c : s.topology.cpes)
    t["cpes"].push_back({{"id", c.id}, {"distance_m", c.distance_m}, {"tx_power_w", c.tx_power_w}, {"noise_w", c.noise_w},
                         {"csi_gain", c.csi_gain}, {"serving_oru", c.serving_oru}, {"service", c.service}});
  for (const auto& o : s.topology.orus)
    t["orus"].push_back({{"id", o.id},
                         {"fronthaul",
                          {{"capacity_bps", o.fronthaul.capacity_bps},
                           {"fiber_length_m", o.fronthaul.fiber_length_m},
                           {"propagation_speed_mps", o.fronthaul.propagation_speed_mps}}}});
  for (const auto& v : s.topology.vodus) t["vodus"].push_back({{"id", v.id}, {"host_server", v.host_server}});
  for (const auto& sv : s.topology.servers)
    t["servers"].push_back({{"id", sv.id},
                            {"base_power_w", sv.base_power_w},
                            {"vnf_power_w", sv.vnf_power_w},
                            {"hosted_vodus", sv.hosted_vodus},
                            {"serves_all_cpes", sv.serves_all_cpes}});
  for (const auto& p : s.topology.slice_map) t["slice_map"].push_back({{"slice", p.slice}, {"service", p.service}, {"vodu", p.vodu}});
  j["topology"] = t;

  json rb;
  rb["total_rb"] = s.rb.total_rb;
  rb["numerology"] = s.rb.numerology;
  rb["scs_khz"] = s.rb.scs_khz;
  rb["rb_bandwidth_hz"] = s.rb.rb_bandwidth_hz;
  rb["max_code_rate"] = s.rb.max_code_rate;
  rb["subband_count"] = s.rb.subband_count;
  rb["tti_count"] = s.rb.tti_count;
  for (const auto& c : s.rb.carriers)
    rb["carriers"].push_back({{"layers", c.layers}, {"modulation_order", c.modulation_order}, {"scaling", c.scaling}, {"overhead", c.overhead}});
  j["rb_config"] = rb;

  for (const auto& sv : s.services) j["services"].push_back(sv);

  j["prices"] = {{"buy_per_kwh", s.prices.buy_per_kwh}, {"sell_per_kwh", s.prices.sell_per_kwh}, {"rb_price", s.prices.rb_price}};

  j["energy"] = {{"grid_max_kwh", s.energy.limits.grid_max_kwh},
                 {"solar_max_kwh", s.energy.limits.solar_max_kwh},
                 {"charge_max_kwh", s.energy.limits.charge_max_kwh},
                 {"discharge_max_kwh", s.energy.limits.discharge_max_kwh},
                 {"initial_storage_kwh", s.energy.initial_storage_kwh},
                 {"solar_peak_w", s.energy.solar_peak_w},
                 {"solar_cloud_jitter", s.energy.solar_cloud_jitter}};

  const auto& r = s.rl;
  j["rl"] = {{"layer_sizes", r.layer_sizes},
             {"gamma", r.gamma},
             {"n_step", r.n_step},
             {"batch_size", r.batch_size},
             {"lr", r.lr},
             {"grad_clip", r.grad_clip},
             {"target_sync", r.target_sync},
             {"alpha", r.alpha},
             {"beta_start", r.beta_start},
             {"beta_end", r.beta_end},
             {"beta_anneal_steps", r.beta_anneal_steps},
             {"eps_start", r.eps_start},
             {"eps_end", r.eps_end},
             {"eps_anneal_steps", r.eps_anneal_steps},
             {"replay_capacity", r.replay_capacity},
             {"learn_start", r.learn_start},
             {"train_interval", r.train_interval},
             {"priority_eps", r.priority_eps},
             {"actor_eps_base", r.actor_eps_base},
             {"actor_eps_alpha", r.actor_eps_alpha},
             {"checkpoint", s.rl_checkpoint}};

  const auto& c = s.cl;
  j["cl"] = {{"window", c.window}, {"hidden", c.hidden}, {"epochs", c.epochs},   {"increment", c.increment},
             {"increment_epochs", c.increment_epochs}, {"replay", c.replay}, {"batch", c.batch}, {"lr", c.lr},
             {"max_tau", c.max_tau}};

  const auto& m = s.sim;
  j["sim"] = {{"tick_ms", m.tick_ms},
              {"loop1_window_ticks", m.loop1_window_ticks},
              {"loop2_period_ticks", m.loop2_period_ticks},
              {"loop2_epochs_per_hour", m.loop2_epochs_per_hour},
              {"loop2_history_epochs", m.loop2_history_epochs},
              {"hours", m.hours},
              {"arrival_window_ticks", m.arrival_window_ticks},
              {"activity_window_ticks", m.activity_window_ticks},
              {"queue_mode", queue_mode_name(m.queue_mode)},
              {"penalty_mode", penalty_mode_name(m.penalties.mode)},
              {"penalties",
               {{"fronthaul", m.penalties.fronthaul},
                {"exclusivity", m.penalties.exclusivity},
                {"rb_gap", m.penalties.rb_gap},
                {"multiplicity", m.penalties.multiplicity},
                {"budget", m.penalties.budget}}},
              {"phi_dis", m.phi_dis},
              {"delay_target_fraction", m.delay_target_fraction},
              {"load_scale", m.load_scale},
              {"horizon_hours", m.horizon_hours},
              {"mm_max_iter", m.mm.max_iter},
              {"mm_tol", m.mm.tol},
              {"mm_rho", m.mm.rho},
              {"mm_rho_shrink", m.mm.rho_shrink},
              {"mm_rho_min", m.mm.rho_min}};

  j["traces"] = {{"solar", s.energy.solar_trace}, {"server_power", s.energy.server_trace}, {"arrivals", s.arrivals_trace}};
  return j;
}

namespace detail {

// Reads a field if present and reports type errors with the field path.
template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, "scenario field " + path + "." + key + ": " + e.what());
  }
}

inline QueueMode parse_queue_mode(const std::string& s) {
  if (s == "stable") return QueueMode::Stable;
  if (s == "paper_literal") return QueueMode::PaperLiteral;
  fail(ErrorCode::Parse, "scenario field sim.queue_mode: expected stable|paper_literal, got '" + s + "'");
}

inline PenaltyMode parse_penalty_mode(const std::string& s) {
  if (s == "violations_only") return PenaltyMode::ViolationsOnly;
  if (s == "literal") return PenaltyMode::Literal;
  fail(ErrorCode::Parse, "scenario field sim.penalty_mode: expected violations_only|literal, got '" + s + "'");
}

}  // namespace detail

inline void validate_scenario(const ScenarioSpec& s) {
  auto rep = validate_topology(s.topology, s.rb, s.services);
  if (s.paper_defaults) {
    const auto& table = paper_5qi();
    if (s.services.size() != table.size()) {
      rep.violations.push_back({"paper_defaults", "expected 7 services"});
    } else {
      for (std::size_t k = 0; k < table.size(); ++k)
        if (s.services[k].fiveqi != table[k].fiveqi || s.services[k].delay_budget_ms != table[k].budget_ms)
          rep.violations.push_back({"paper_defaults", "service " + std::to_string(k) + " does not match the 5QI table"});
    }
  }
  for (const auto& c : s.topology.cpes)
    if (c.service < 0 || c.service >= static_cast<int>(s.services.size()))
      rep.violations.push_back({"unknown service", "cpe " + std::to_string(c.id)});
  const auto& m = s.sim;
  if (!(m.tick_ms > 0) || m.loop1_window_ticks < 1 || m.loop2_period_ticks < 1 || m.loop2_epochs_per_hour < 1 || m.hours < 0)
    rep.violations.push_back({"sim", "timing values must be positive"});
  if (m.loop1_window_ticks * m.tick_ms >= 10.0) rep.violations.push_back({"sim", "loop 1 window must stay below 10 ms"});
  const double s2 = m.loop2_period_ticks * m.tick_ms;
  if (s2 < 10.0 || s2 >= 1000.0) rep.violations.push_back({"sim", "loop 2 period must be in [10 ms, 1 s)"});
  if (!(m.phi_dis >= 0 && m.phi_dis <= 1)) rep.violations.push_back({"sim", "phi_dis outside [0,1]"});
  if (!(m.delay_target_fraction > 0 && m.delay_target_fraction <= 1)) rep.violations.push_back({"sim", "delay_target_fraction outside (0,1]"});
  if (!(m.mm.rho > 0) || !(m.mm.rho_min > 0) || !(m.mm.rho_shrink > 0 && m.mm.rho_shrink <= 1) || m.mm.max_iter < 1)
    rep.violations.push_back({"sim", "MM options need rho > 0, rho_min > 0, rho_shrink in (0,1], max_iter >= 1"});
  if (m.activity_window_ticks < 0 || m.loop2_history_epochs < 1) rep.violations.push_back({"sim", "activity window and loop 2 history must be non-negative / positive"});
  if (s.prices.buy_per_kwh < 0 || s.prices.sell_per_kwh < 0 || s.prices.rb_price < 0)
    rep.violations.push_back({"prices", "prices must be >= 0"});
  for (const auto& p : {s.energy.solar_trace, s.energy.server_trace, s.arrivals_trace})
    if (!p.empty() && !std::filesystem::exists(s.resolve(p)))
      rep.violations.push_back({"missing trace", "trace file not found: " + s.resolve(p)});
  if (!rep.ok()) fail(ErrorCode::Validation, "invalid scenario:\n" + rep.summary());
}

inline ScenarioSpec scenario_from_json(const json& j, const std::string& base_dir = "") {
  ScenarioSpec s;
  s.base_dir = base_dir;
  detail::read_field(j, "seed", s.seed, "");
  detail::read_field(j, "paper_defaults", s.paper_defaults, "");
  s.services = default_services();
  if (j.contains("services")) {
    require(j.at("services").is_array(), ErrorCode::Parse, "scenario field services: expected an array");
    std::vector<ServiceProfile> out;
    std::size_t k = 0;
    for (const auto& e : j.at("services")) {
      ServiceProfile d = k < s.services.size() ? s.services[k] : ServiceProfile{};
      d.service_id = static_cast<int>(k);
      try {
        out.push_back(service_from_json(e, d));
      } catch (const json::exception& ex) {
        fail(ErrorCode::Parse, "scenario field services[" + std::to_string(k) + "]: " + ex.what());
      }
      ++k;
    }
    s.services = out;
  }

  const json t = j.value("topology", json::object());
  detail::read_field(t, "cpe_count", s.gen.cpe_count, "topology");
  detail::read_field(t, "members_per_service", s.gen.members_per_service, "topology");
  detail::read_field(t, "distance_min_m", s.gen.distance_min_m, "topology");
  detail::read_field(t, "distance_max_m", s.gen.distance_max_m, "topology");
  detail::read_field(t, "tx_power_w", s.gen.tx_power_w, "topology");
  detail::read_field(t, "noise_w", s.gen.noise_w, "topology");
  if (s.gen.members_per_service.size() != s.services.size() && !t.contains("cpes")) {
    // Spread CPEs evenly when no membership counts match the service list.
    s.gen.members_per_service.assign(s.services.size(), 0);
    for (int v = 0; v < s.gen.cpe_count; ++v) ++s.gen.members_per_service[v % s.services.size()];
  }
  s.topology = default_topology(s.gen, s.seed, static_cast<int>(s.services.size()));
  detail::read_field(t, "pathloss_exponent", s.topology.pathloss_exponent, "topology");
  detail::read_field(t, "csi_error_std", s.topology.csi_error_std, "topology");
  try {
    if (t.contains("cpes")) {
      s.topology.cpes.clear();
      for (const auto& c : t.at("cpes")) {
        CpeDescriptor d;
        d.id = c.at("id").get<int>();
        d.distance_m = c.value("distance_m", d.distance_m);
        d.tx_power_w = c.value("tx_power_w", s.gen.tx_power_w);
        d.noise_w = c.value("noise_w", s.gen.noise_w);
        d.csi_gain = c.value("csi_gain", d.csi_gain);
        d.serving_oru = c.value("serving_oru", 0);
        d.service = c.value("service", 0);
        s.topology.cpes.push_back(d);
      }
    }
    if (t.contains("orus")) {
      s.topology.orus.clear();
      for (const auto& o : t.at("orus")) {
        OruDescriptor d;
        d.id = o.at("id").get<int>();
        const json f = o.value("fronthaul", json::object());
        d.fronthaul.capacity_bps = f.value("capacity_bps", d.fronthaul.capacity_bps);
        d.fronthaul.fiber_length_m = f.value("fiber_length_m", d.fronthaul.fiber_length_m);
        d.fronthaul.propagation_speed_mps = f.value("propagation_speed_mps", d.fronthaul.propagation_speed_mps);
        s.topology.orus.push_back(d);
      }
    }
    if (t.contains("vodus")) {
      s.topology.vodus.clear();
      for (const auto& v : t.at("vodus")) s.topology.vodus.push_back({v.at("id").get<int>(), v.value("host_server", 0)});
      if (!t.contains("slice_map"))
        s.topology.slice_map = round_robin_placement(static_cast<int>(s.services.size()), static_cast<int>(s.topology.vodus.size()));
    }
    if (t.contains("servers")) {
      s.topology.servers.clear();
      for (const auto& v : t.at("servers")) {
        ServerDescriptor d;
        d.id = v.at("id").get<int>();
        d.base_power_w = v.value("base_power_w", d.base_power_w);
        d.vnf_power_w = v.value("vnf_power_w", std::vector<double>{});
        d.hosted_vodus = v.value("hosted_vodus", std::vector<int>{});
        d.serves_all_cpes = v.value("serves_all_cpes", false);
        s.topology.servers.push_back(d);
      }
    }
    if (t.contains("slice_map")) {
      s.topology.slice_map.clear();
      for (const auto& p : t.at("slice_map"))
        s.topology.slice_map.push_back({p.at("slice").get<int>(), p.at("service").get<int>(), p.at("vodu").get<int>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("scenario field topology: ") + e.what());
  }

  const json rb = j.value("rb_config", json::object());
  detail::read_field(rb, "total_rb", s.rb.total_rb, "rb_config");
  detail::read_field(rb, "numerology", s.rb.numerology, "rb_config");
  detail::read_field(rb, "scs_khz", s.rb.scs_khz, "rb_config");
  s.rb.rb_bandwidth_hz = 12 * s.rb.scs_khz * 1e3;
  detail::read_field(rb, "rb_bandwidth_hz", s.rb.rb_bandwidth_hz, "rb_config");
  detail::read_field(rb, "max_code_rate", s.rb.max_code_rate, "rb_config");
  detail::read_field(rb, "subband_count", s.rb.subband_count, "rb_config");
  detail::read_field(rb, "tti_count", s.rb.tti_count, "rb_config");
  if (rb.contains("carriers")) {
    s.rb.carriers.clear();
    for (const auto& c : rb.at("carriers")) {
      CarrierConfig d;
      d.layers = c.value("layers", d.layers);
      d.modulation_order = c.value("modulation_order", d.modulation_order);
      d.scaling = c.value("scaling", d.scaling);
      d.overhead = c.value("overhead", d.overhead);
      s.rb.carriers.push_back(d);
    }
  }

  const json pr = j.value("prices", json::object());
  detail::read_field(pr, "buy_per_kwh", s.prices.buy_per_kwh, "prices");
  detail::read_field(pr, "sell_per_kwh", s.prices.sell_per_kwh, "prices");
  detail::read_field(pr, "rb_price", s.prices.rb_price, "prices");

  const json en = j.value("energy", json::object());
  detail::read_field(en, "grid_max_kwh", s.energy.limits.grid_max_kwh, "energy");
  detail::read_field(en, "solar_max_kwh", s.energy.limits.solar_max_kwh, "energy");
  detail::read_field(en, "charge_max_kwh", s.energy.limits.charge_max_kwh, "energy");
  detail::read_field(en, "discharge_max_kwh", s.energy.limits.discharge_max_kwh, "energy");
  detail::read_field(en, "initial_storage_kwh", s.energy.initial_storage_kwh, "energy");
  detail::read_field(en, "solar_peak_w", s.energy.solar_peak_w, "energy");
  detail::read_field(en, "solar_cloud_jitter", s.energy.solar_cloud_jitter, "energy");

  const json r = j.value("rl", json::object());
  auto& rc = s.rl;
  detail::read_field(r, "layer_sizes", rc.layer_sizes, "rl");
  detail::read_field(r, "gamma", rc.gamma, "rl");
  detail::read_field(r, "n_step", rc.n_step, "rl");
  detail::read_field(r, "batch_size", rc.batch_size, "rl");
  detail::read_field(r, "lr", rc.lr, "rl");
  detail::read_field(r, "grad_clip", rc.grad_clip, "rl");
  detail::read_field(r, "target_sync", rc.target_sync, "rl");
  detail::read_field(r, "alpha", rc.alpha, "rl");
  detail::read_field(r, "beta_start", rc.beta_start, "rl");
  detail::read_field(r, "beta_end", rc.beta_end, "rl");
  detail::read_field(r, "beta_anneal_steps", rc.beta_anneal_steps, "rl");
  detail::read_field(r, "eps_start", rc.eps_start, "rl");
  detail::read_field(r, "eps_end", rc.eps_end, "rl");
  detail::read_field(r, "eps_anneal_steps", rc.eps_anneal_steps, "rl");
  detail::read_field(r, "replay_capacity", rc.replay_capacity, "rl");
  detail::read_field(r, "learn_start", rc.learn_start, "rl");
  detail::read_field(r, "train_interval", rc.train_interval, "rl");
  detail::read_field(r, "priority_eps", rc.priority_eps, "rl");
  detail::read_field(r, "actor_eps_base", rc.actor_eps_base, "rl");
  detail::read_field(r, "actor_eps_alpha", rc.actor_eps_alpha, "rl");
  detail::read_field(r, "checkpoint", s.rl_checkpoint, "rl");

  const json c = j.value("cl", json::object());
  detail::read_field(c, "window", s.cl.window, "cl");
  detail::read_field(c, "hidden", s.cl.hidden, "cl");
  detail::read_field(c, "epochs", s.cl.epochs, "cl");
  detail::read_field(c, "increment", s.cl.increment, "cl");
  detail::read_field(c, "increment_epochs", s.cl.increment_epochs, "cl");
  detail::read_field(c, "replay", s.cl.replay, "cl");
  detail::read_field(c, "batch", s.cl.batch, "cl");
  detail::read_field(c, "lr", s.cl.lr, "cl");
  detail::read_field(c, "max_tau", s.cl.max_tau, "cl");

  const json m = j.value("sim", json::object());
  auto& sc = s.sim;
  detail::read_field(m, "tick_ms", sc.tick_ms, "sim");
  detail::read_field(m, "loop1_window_ticks", sc.loop1_window_ticks, "sim");
  detail::read_field(m, "loop2_period_ticks", sc.loop2_period_ticks, "sim");
  detail::read_field(m, "loop2_epochs_per_hour", sc.loop2_epochs_per_hour, "sim");
  detail::read_field(m, "loop2_history_epochs", sc.loop2_history_epochs, "sim");
  detail::read_field(m, "hours", sc.hours, "sim");
  detail::read_field(m, "arrival_window_ticks", sc.arrival_window_ticks, "sim");
  detail::read_field(m, "activity_window_ticks", sc.activity_window_ticks, "sim");
  if (m.contains("queue_mode")) sc.queue_mode = detail::parse_queue_mode(m.at("queue_mode").get<std::string>());
  if (m.contains("penalty_mode")) sc.penalties.mode = detail::parse_penalty_mode(m.at("penalty_mode").get<std::string>());
  const json pen = m.value("penalties", json::object());
  detail::read_field(pen, "fronthaul", sc.penalties.fronthaul, "sim.penalties");
  detail::read_field(pen, "exclusivity", sc.penalties.exclusivity, "sim.penalties");
  detail::read_field(pen, "rb_gap", sc.penalties.rb_gap, "sim.penalties");
  detail::read_field(pen, "multiplicity", sc.penalties.multiplicity, "sim.penalties");
  detail::read_field(pen, "budget", sc.penalties.budget, "sim.penalties");
  detail::read_field(m, "phi_dis", sc.phi_dis, "sim");
  detail::read_field(m, "delay_target_fraction", sc.delay_target_fraction, "sim");
  detail::read_field(m, "load_scale", sc.load_scale, "sim");
  detail::read_field(m, "horizon_hours", sc.horizon_hours, "sim");
  detail::read_field(m, "mm_max_iter", sc.mm.max_iter, "sim");
  detail::read_field(m, "mm_tol", sc.mm.tol, "sim");
  detail::read_field(m, "mm_rho", sc.mm.rho, "sim");
  detail::read_field(m, "mm_rho_shrink", sc.mm.rho_shrink, "sim");
  detail::read_field(m, "mm_rho_min", sc.mm.rho_min, "sim");

  const json tr = j.value("traces", json::object());
  detail::read_field(tr, "solar", s.energy.solar_trace, "traces");
  detail::read_field(tr, "server_power", s.energy.server_trace, "traces");
  detail::read_field(tr, "arrivals", s.arrivals_trace, "traces");

  s.cl.seed = s.seed;
  validate_scenario(s);
  return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open scenario '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, path + ": " + e.what());
  }
  return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

inline void save_scenario(const ScenarioSpec& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  out << scenario_to_json(s).dump(2) << '\n';
}

}  // namespace fwa
