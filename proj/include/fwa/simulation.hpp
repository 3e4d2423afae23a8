#pragma once

// Multi-timescale simulator: millisecond ticks drive loop 1 epochs, loop 2 epochs and hourly loop 3.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fwa/cl_predictor.hpp"
#include "fwa/core.hpp"
#include "fwa/domain.hpp"
#include "fwa/energy_model.hpp"
#include "fwa/loop1.hpp"
#include "fwa/loop2.hpp"
#include "fwa/loop3.hpp"
#include "fwa/radio_model.hpp"
#include "fwa/rl/agent.hpp"
#include "fwa/scenario.hpp"
#include "fwa/workload.hpp"

namespace fwa {

enum class Role { Loop1 = 0, Loop2 = 1 };

struct Transition {
  Role role = Role::Loop1;
  int key = 0;  // slice id
  rl::State s{};
  int action = 0;
  double reward = 0;
  rl::State s2{};
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual int loop1(const rl::State& s, Action rule) = 0;
  virtual int loop2(const rl::State& s, Action rule) = 0;
  virtual void observe(const Transition&) {}
};

class RulesController : public Controller {
 public:
  int loop1(const rl::State&, Action rule) override { return static_cast<int>(rule); }
  int loop2(const rl::State&, Action rule) override { return static_cast<int>(rule); }
};

class RandomController : public Controller {
 public:
  explicit RandomController(Rng rng) : rng_(std::move(rng)) {}
  int loop1(const rl::State&, Action) override { return pick(); }
  int loop2(const rl::State&, Action) override { return pick(); }

 private:
  int pick() { return std::uniform_int_distribution<int>(0, kActionCount - 1)(rng_); }
  Rng rng_;
};

// Epsilon-greedy over one Q-network per role; epsilon 0 gives the frozen greedy policy.
class QController : public Controller {
 public:
  using Sink = std::function<void(const Transition&)>;
  QController(std::array<const nn::Mlp*, 2> nets, Rng rng, std::function<double()> epsilon = {}, Sink sink = {})
      : nets_(nets), rng_(std::move(rng)), eps_(std::move(epsilon)), sink_(std::move(sink)) {}

  void set_nets(std::array<const nn::Mlp*, 2> nets) { nets_ = nets; }
  int loop1(const rl::State& s, Action) override { return rl::act(*nets_[0], s, eps(), rng_); }
  int loop2(const rl::State& s, Action) override { return rl::act(*nets_[1], s, eps(), rng_); }
  void observe(const Transition& t) override {
    if (sink_) sink_(t);
  }

 private:
  double eps() const { return eps_ ? eps_() : 0.0; }
  std::array<const nn::Mlp*, 2> nets_;
  Rng rng_;
  std::function<double()> eps_;
  Sink sink_;
};

struct Packet {
  std::int64_t arrival_tick = 0;
  double bits = 0;
};

struct SliceStats {
  SliceId slice = 0;
  ServiceId service = 0;
  int fiveqi = 0;
  double budget_ms = 0;
  long samples = 0;
  long satisfied = 0;
  long dropped = 0;
  double delay_sum_ms = 0;
  double phi() const { return samples > 0 ? static_cast<double>(satisfied) / samples : 1.0; }
};

struct ForecastRow {
  int origin_hour = 0;
  int horizon = 0;
  double cl = 0;
  double persistence = 0;
};

struct RunMetrics {
  std::vector<SliceStats> slices;
  std::vector<double> loop2_rewards;  // r_s per decision
  std::vector<double> vodu_util_sum;
  std::vector<long> vodu_util_n;
  long capacity_violations = 0;
  long loop1_epochs = 0;
  long loop2_epochs = 0;
  long ticks = 0;
  std::vector<EnergyLedger> ledger;
  std::vector<HourSolution> solutions;
  std::vector<double> hourly_rb_mean;
  std::vector<ForecastRow> forecasts;

  long total_samples() const {
    long n = 0;
    for (const auto& s : slices) n += s.samples;
    return n;
  }
  long total_satisfied() const {
    long n = 0;
    for (const auto& s : slices) n += s.satisfied;
    return n;
  }
  double aggregate_satisfaction() const {
    const long n = total_samples();
    return n > 0 ? static_cast<double>(total_satisfied()) / n : 1.0;
  }
  double mean_loop2_reward() const {
    if (loop2_rewards.empty()) return 0.0;
    double s = 0;
    for (double r : loop2_rewards) s += r;
    return s / loop2_rewards.size();
  }
};

struct SimOptions {
  bool energy = true;
  bool forecast = true;
  int forecast_tau = 24;
  std::ostream* loop1_csv = nullptr;
  std::ostream* loop2_csv = nullptr;
};

// Rates and RB demand per service, fixed for a run.
struct ServiceSizing {
  double mean_bits = 0;
  double required_bps = 0;
  int demand_rbs = 1;
};

inline ServiceSizing size_service(const ServiceProfile& s, const RbConfig& rb, double target_fraction, double load_scale) {
  ServiceSizing z;
  z.mean_bits = s.mean_packet_bits();
  z.required_bps = required_rate_bps(z.mean_bits, s.packet_bits_max, s.arrival_rate_pps * load_scale,
                                     target_fraction * s.delay_budget_ms * 1e-3);
  z.demand_rbs = std::max(1, required_rbs(z.required_bps, rb));
  return z;
}

class Simulation {
 public:
  Simulation(const ScenarioSpec& spec, std::uint64_t seed, Controller& ctl, SimOptions opt = {})
      : spec_(spec), seed_(seed), ctl_(ctl), opt_(opt), channel_rng_(make_stream(seed, "channel")) {
    const auto& t = spec_.topology;
    traffic_ = make_traffic_profile(t, spec_.services, spec_.sim.tick_ms, spec_.sim.load_scale);
    budgets_ = initial_distribution(spec_.rb.total_rb, static_cast<int>(t.vodus.size()), spec_.services, t.slice_map);
    const int window = spec_.sim.arrival_window_ticks;
    for (const auto& c : t.cpes) {
      CpeRt r;
      r.desc = c;
      r.window = ArrivalWindow(window);
      const auto* o = t.oru(c.serving_oru);
      require(o != nullptr, ErrorCode::Validation, "cpe " + std::to_string(c.id) + " has unknown O-RU");
      r.fronthaul = o->fronthaul;
      cpe_index_[c.id] = cpes_.size();
      cpes_.push_back(std::move(r));
    }
    for (const auto& p : t.slice_map) {
      SliceRt s;
      s.service = service(p.service);
      s.sizing = size_service(s.service, spec_.rb, spec_.sim.delay_target_fraction, spec_.sim.load_scale);
      s.alloc.slice = p.slice;
      s.alloc.vodu = p.vodu;
      s.alloc.rb_pool = budgets_[p.vodu].grant_of(p.slice);
      s.members = t.members(p.service);
      std::sort(s.members.begin(), s.members.end());
      s.window = ArrivalWindow(window);
      for (auto v : s.members) cpes_[cpe_index_[v]].slice = static_cast<int>(slices_.size());
      metrics_.slices.push_back({p.slice, p.service, s.service.fiveqi, s.service.delay_budget_ms});
      slice_index_[p.slice] = slices_.size();
      slices_.push_back(std::move(s));
    }
    metrics_.vodu_util_sum.assign(budgets_.size(), 0.0);
    metrics_.vodu_util_n.assign(budgets_.size(), 0);
    if (opt_.energy) prepare_energy();
    if (!spec_.arrivals_trace.empty()) {
      replay_ = trace::read_arrivals(spec_.resolve(spec_.arrivals_trace));
      for (const auto& e : replay_)
        require(cpe_index_.count(e.cpe_id) > 0, ErrorCode::Validation, "arrivals trace: unknown cpe " + std::to_string(e.cpe_id));
      replaying_ = true;
    }
    if (opt_.loop1_csv) *opt_.loop1_csv << "epoch,slice,omega,nu,phi,reward,action\n";
    if (opt_.loop2_csv) *opt_.loop2_csv << "epoch,vodu,slice,grant,utilization,reward_d,reward_main,action\n";
  }

  const RunMetrics& metrics() const { return metrics_; }
  const std::vector<VoduBudget>& budgets() const { return budgets_; }
  std::int64_t tick() const { return tick_; }
  double storage_kwh() const { return storage_kwh_; }

  const SliceAllocState& slice_alloc(SliceId c) const { return slices_.at(slice_index_.at(c)).alloc; }
  std::vector<SliceAllocState> slice_allocs() const {
    std::vector<SliceAllocState> out;
    for (const auto& s : slices_) out.push_back(s.alloc);
    return out;
  }
  int demand_rbs(SliceId c) const { return slices_.at(slice_index_.at(c)).sizing.demand_rbs; }

  // Hard capacity invariants; returns the number of violations at this instant.
  long check_capacity() const {
    long bad = budgets_ok(budgets_, spec_.rb.total_rb) ? 0 : 1;
    std::map<CpeId, int> holders;
    for (const auto& s : slices_) {
      const int grant = budgets_[s.alloc.vodu].grant_of(s.alloc.slice);
      if (s.alloc.rb_pool != grant || !capacity_ok(s.alloc)) ++bad;
      for (const auto& a : s.alloc.cpe_allocs)
        if (a.y) ++holders[a.cpe];
    }
    for (const auto& [cpe, n] : holders)
      if (n > 1) ++bad;
    return bad;
  }

  void step() {
    const auto& sc = spec_.sim;
    if (tick_ % sc.loop1_window_ticks == 0) loop1_epoch();
    arrivals();
    serve();
    ++tick_;
    ++metrics_.ticks;
    if (tick_ % sc.loop2_period_ticks == 0) {
      loop2_epoch();
      if (opt_.energy && metrics_.loop2_epochs % sc.loop2_epochs_per_hour == 0) loop3_hour();
    }
  }

  std::int64_t ticks_per_hour() const {
    return static_cast<std::int64_t>(spec_.sim.loop2_period_ticks) * spec_.sim.loop2_epochs_per_hour;
  }

  void run_hours(int hours) {
    const std::int64_t end = tick_ + hours * ticks_per_hour();
    while (tick_ < end) step();
  }

  template <typename Stop>
  void run_until(Stop&& stop) {
    while (!stop()) step();
  }

 private:
  struct CpeRt {
    CpeDescriptor desc;
    FronthaulLink fronthaul;
    std::deque<Packet> queue;
    ArrivalWindow window{100};
    int slice = -1;
    std::int64_t last_arrival = -1;
    ChannelSample channel;
    double rate_bps = 0;
    // Hourly load accounting for the energy loop.
    long hour_arrivals = 0;
    long hour_alloc_ticks = 0;
    double hour_rate_sum = 0;
  };

  struct SliceRt {
    ServiceProfile service;
    ServiceSizing sizing;
    SliceAllocState alloc;
    std::vector<CpeId> members;
    ArrivalWindow window{100};
    int occupancy = 0;
    // loop 1 epoch
    long ep_samples = 0, ep_ok = 0;
    bool l1_prev = false;
    rl::State l1_s{};
    int l1_a = 0;
    double offered_bps = 0;
    // loop 2 window
    int win_min_nu = INT_MAX;
    int win_max_demand = 0;
    double win_rsc_sum = 0;
    long win_rsc_n = 0;
    double win_util_sum = 0;
    long win_util_n = 0;
    std::deque<std::pair<int, int>> history;  // (min nu, max demand) of recent loop 2 windows
    bool l2_prev = false;
    rl::State l2_s{};
    int l2_a = 0;
  };

  const ServiceProfile& service(ServiceId k) const {
    for (const auto& s : spec_.services)
      if (s.service_id == k) return s;
    fail(ErrorCode::Validation, "unknown service " + std::to_string(k));
  }

  std::vector<std::pair<CpeId, int>> active_demands(const SliceRt& s) const {
    std::vector<std::pair<CpeId, int>> d;
    for (auto v : s.members)
      if (active(cpes_[cpe_index_.at(v)])) d.emplace_back(v, s.sizing.demand_rbs);
    return d;
  }

  // A CPE keeps its RB demand while it has backlog or sent traffic within the activity window.
  bool active(const CpeRt& c) const {
    return !c.queue.empty() || (c.last_arrival >= 0 && tick_ - c.last_arrival < spec_.sim.activity_window_ticks);
  }

  double psi(const SliceRt& s) const {
    QueueState q;
    // Backlog still queued counts as expected arrivals, so a slice with waiting packets is never idle.
    q.expected_arrivals_pkts = std::max(s.window.expected(), static_cast<double>(s.occupancy));
    q.buffer_capacity_pkts = s.service.buffer_capacity_pkts;
    q.buffer_threshold_pkts = s.service.buffer_threshold_pkts;
    return queue_status(q);
  }

  rl::State loop1_state(const SliceRt& s, int demand) const {
    rl::Loop1Obs o;
    o.demand_rbs = demand;
    o.pool_rbs = s.alloc.rb_pool;
    o.omega = s.alloc.omega;
    o.omega_max = s.service.buffer_capacity_pkts / s.service.buffer_threshold_pkts;
    o.psi = psi(s);
    o.B = s.service.buffer_threshold_pkts;
    o.B_cap = s.service.buffer_capacity_pkts;
    return rl::encode_state(o);
  }

  rl::State loop2_state(const SliceRt& s) const {
    const auto& b = budgets_[s.alloc.vodu];
    rl::Loop2Obs o;
    o.free_rbs = b.rb_budget - b.granted();
    o.total_rbs = std::max(1, b.rb_budget);
    o.mean_util = s.win_util_n > 0 ? s.win_util_sum / s.win_util_n : 0.0;
    o.grant_rbs = s.alloc.rb_pool;
    o.vodu_budget = std::max(1, b.rb_budget);
    return rl::encode_state(o);
  }

  void allocate(SliceRt& s, const Loop1Decision& d) {
    const auto demands = active_demands(s);
    s.alloc = apply_allocation(s.alloc, d, demands);
    s.offered_bps = 0;
    for (auto v : s.members) cpes_[cpe_index_[v]].rate_bps = 0;
    for (const auto& a : s.alloc.cpe_allocs) {
      auto& c = cpes_[cpe_index_[a.cpe]];
      if (!a.y) {
        c.rate_bps = 0;
        continue;
      }
      c.channel = sample_channel(c.desc.csi_gain, spec_.topology.csi_error_std, channel_rng_);
      const double snr = compute_snr(true, c.channel, c.desc.tx_power_w, c.desc.noise_w, c.desc.distance_m,
                                     spec_.topology.pathloss_exponent);
      c.rate_bps = effective_rate_bps(a.rbs, snr, spec_.rb);
      s.offered_bps += s.service.arrival_rate_pps * spec_.sim.load_scale * s.sizing.mean_bits;
    }
  }

  void loop1_epoch() {
    const auto& pen = spec_.sim.penalties;
    for (auto& s : slices_) {
      const auto demands = active_demands(s);
      const double phi = epoch_phi(s);
      if (s.l1_prev) {
        const double fh_cap = cpes_[cpe_index_[s.members.empty() ? 0 : s.members.front()]].fronthaul.capacity_bps;
        const double fh_slack = (fh_cap - s.offered_bps) / fh_cap;
        const double excl_slack = s.alloc.granted() > 0 ? 0.0 : 1.0;
        const double nu = s.alloc.rb_pool > 0 ? static_cast<double>(s.alloc.demand_nu) / s.alloc.rb_pool
                                              : (s.alloc.demand_nu < 0 ? -1.0 : 0.0);
        const double r = reward_loop1(phi, fh_slack, excl_slack, nu, pen);
        s.win_rsc_sum += r;
        ++s.win_rsc_n;
        const auto s2 = loop1_state(s, demand_sum(demands));
        ctl_.observe({Role::Loop1, s.alloc.slice, s.l1_s, s.l1_a, r, s2});
        if (opt_.loop1_csv)
          *opt_.loop1_csv << csv::row(metrics_.loop1_epochs, s.alloc.slice, s.alloc.omega, s.alloc.nu, phi, r,
                                      action_name(s.alloc.last_action))
                          << '\n';
      }
      s.alloc.last_phi = phi;
      s.ep_samples = s.ep_ok = 0;

      const double util = s.alloc.rb_pool > 0 ? static_cast<double>(s.alloc.granted()) / s.alloc.rb_pool : 1.0;
      const double B = s.service.buffer_threshold_pkts, Bc = s.service.buffer_capacity_pkts;
      const auto rule = select_action(psi(s), B, Bc, phi, util);
      const auto st = loop1_state(s, demand_sum(demands));
      const auto a = static_cast<Action>(ctl_.loop1(st, rule.action));
      allocate(s, {a, omega_for(a, B, Bc)});
      s.l1_prev = true;
      s.l1_s = st;
      s.l1_a = static_cast<int>(a);
      s.win_min_nu = std::min(s.win_min_nu, s.alloc.demand_nu);
      // Demand as first-fit sees it: every active CPE at the current scaling.
      int want = s.alloc.total_demand();
      if (s.alloc.omega > 1.0) {
        want = 0;
        for (const auto& c : s.alloc.cpe_allocs) want += static_cast<int>(std::floor(s.alloc.omega * c.demand));
      }
      s.win_max_demand = std::max(s.win_max_demand, want);
    }
    ++metrics_.loop1_epochs;
    metrics_.capacity_violations += check_capacity();
  }

  static int demand_sum(const std::vector<std::pair<CpeId, int>>& d) {
    int s = 0;
    for (const auto& [v, n] : d) s += n;
    return s;
  }

  // Delay satisfaction of the closing epoch; CPEs left waiting without RBs count as misses.
  double epoch_phi(const SliceRt& s) const {
    long n = s.ep_samples, ok = s.ep_ok;
    for (const auto& a : s.alloc.cpe_allocs)
      if (!a.y && !cpes_[cpe_index_.at(a.cpe)].queue.empty()) ++n;
    return n > 0 ? static_cast<double>(ok) / n : 1.0;
  }

  // Generated traffic, or the recorded trace when one is configured.
  std::vector<ArrivalEvent> tick_events() {
    if (!replaying_) return generate_arrivals(seed_, tick_, traffic_);
    std::vector<ArrivalEvent> out;
    while (replay_pos_ < replay_.size() && replay_[replay_pos_].tick_ms <= tick_) {
      if (replay_[replay_pos_].tick_ms == tick_) out.push_back(replay_[replay_pos_]);
      ++replay_pos_;
    }
    return out;
  }

  void arrivals() {
    auto events = tick_events();
    std::vector<int> per_cpe(cpes_.size(), 0);
    for (const auto& e : events) {
      auto& c = cpes_[cpe_index_[e.cpe_id]];
      auto& s = slices_[c.slice];
      ++per_cpe[cpe_index_[e.cpe_id]];
      ++c.hour_arrivals;
      if (s.occupancy >= static_cast<int>(s.service.buffer_capacity_pkts)) {
        auto& st = metrics_.slices[c.slice];
        ++st.samples;
        ++st.dropped;
        ++s.ep_samples;
        continue;
      }
      c.queue.push_back({tick_, e.bits});
      c.last_arrival = tick_;
      ++s.occupancy;
    }
    std::vector<int> per_slice(slices_.size(), 0);
    for (std::size_t i = 0; i < cpes_.size(); ++i) {
      cpes_[i].window.push(per_cpe[i]);
      per_slice[cpes_[i].slice] += per_cpe[i];
    }
    for (std::size_t k = 0; k < slices_.size(); ++k) slices_[k].window.push(per_slice[k]);
  }

  void serve() {
    std::map<OruId, double> cohort;
    for (auto& c : cpes_)
      if (c.rate_bps > 0)
        for (const auto& p : c.queue) cohort[c.desc.serving_oru] += p.bits;
    for (auto& c : cpes_) {
      if (!(c.rate_bps > 0)) continue;
      ++c.hour_alloc_ticks;
      c.hour_rate_sum += c.rate_bps;
      if (c.queue.empty()) continue;
      auto& s = slices_[c.slice];
      auto& st = metrics_.slices[c.slice];
      const double mu = c.rate_bps / s.sizing.mean_bits;
      const double lam = s.service.arrival_rate_pps * spec_.sim.load_scale;
      std::optional<double> q_ms;
      if (spec_.sim.queue_mode == QueueMode::PaperLiteral ? mu != lam : mu > lam)
        q_ms = 1e3 * queueing_delay({lam, mu, 0, 0, s.service.buffer_capacity_pkts, s.service.buffer_threshold_pkts},
                                    spec_.sim.queue_mode);
      double sent_bits = 0;
      while (!c.queue.empty()) {
        const auto p = c.queue.front();
        c.queue.pop_front();
        --s.occupancy;
        sent_bits += p.bits;
        const double wait_ms = static_cast<double>(tick_ - p.arrival_tick) * spec_.sim.tick_ms;
        bool ok = false;
        double delay = std::numeric_limits<double>::infinity();
        if (q_ms) {
          const auto d = delay_breakdown(sent_bits, c.rate_bps, c.fronthaul, *q_ms, cohort[c.desc.serving_oru]);
          delay = wait_ms + d.end_to_end_ms;
          ok = delay_met({true, delay, s.service.delay_budget_ms});
        }
        ++st.samples;
        ++s.ep_samples;
        if (ok) {
          ++st.satisfied;
          ++s.ep_ok;
        }
        if (std::isfinite(delay)) st.delay_sum_ms += delay;
      }
    }
  }

  void loop2_epoch() {
    const auto& sc = spec_.sim;
    const long epoch = metrics_.loop2_epochs;
    for (std::size_t d = 0; d < budgets_.size(); ++d) {
      auto& b = budgets_[d];
      std::vector<std::pair<bool, int>> allocs;
      for (auto& s : slices_)
        if (s.alloc.vodu == b.vodu) allocs.emplace_back(true, s.alloc.rb_pool);
      const double util = b.rb_budget > 0 ? rb_utilization(allocs, b.rb_budget) : 0.0;
      b.utilization.push_back(util);
      metrics_.vodu_util_sum[d] += util;
      ++metrics_.vodu_util_n[d];
      for (auto& s : slices_) {
        if (s.alloc.vodu != b.vodu) continue;
        s.win_util_sum += util;
        ++s.win_util_n;
      }
    }
    for (auto& s : slices_) {
      auto& b = budgets_[s.alloc.vodu];
      s.history.emplace_back(s.win_min_nu == INT_MAX ? s.alloc.demand_nu : s.win_min_nu, s.win_max_demand);
      while (static_cast<int>(s.history.size()) > std::max(1, sc.loop2_history_epochs)) s.history.pop_front();
      int nu = INT_MAX, demand = 0;
      for (const auto& [n, dm] : s.history) {
        nu = std::min(nu, n);
        demand = std::max(demand, dm);
      }
      const double mean_util = s.win_util_n > 0 ? s.win_util_sum / s.win_util_n : 0.0;
      const double r_sc = s.win_rsc_n > 0 ? s.win_rsc_sum / s.win_rsc_n : 0.0;
      const double budget_slack =
          b.rb_budget > 0 ? static_cast<double>(b.rb_budget - b.granted() + std::min(0, nu)) / b.rb_budget : 0.0;
      int placements = 0;
      for (const auto& p : spec_.topology.slice_map) placements += p.slice == s.alloc.slice ? 1 : 0;
      const double r_sd = reward_loop2(mean_util, 1.0 - placements, budget_slack, sc.penalties);
      const double r_s = main_reward(r_sd, r_sc, sc.phi_dis);
      const auto st = loop2_state(s);
      if (s.l2_prev) {
        ctl_.observe({Role::Loop2, s.alloc.slice, s.l2_s, s.l2_a, r_s, st});
        metrics_.loop2_rewards.push_back(r_s);
      }
      const int grant = b.grant_of(s.alloc.slice);
      const Action rule = select_vodu_action(nu, grant);
      const auto a = static_cast<Action>(ctl_.loop2(st, rule));
      b = apply_vodu_action(b, s.alloc.slice, a, s.alloc.omega, demand);
      if (opt_.loop2_csv)
        *opt_.loop2_csv << csv::row(epoch, b.vodu, s.alloc.slice, b.grant_of(s.alloc.slice), mean_util, r_sd, r_s, action_name(a))
                        << '\n';
      s.l2_prev = true;
      s.l2_s = st;
      s.l2_a = static_cast<int>(a);
      s.win_min_nu = INT_MAX;
      s.win_max_demand = 0;
      s.win_rsc_sum = s.win_util_sum = 0;
      s.win_rsc_n = s.win_util_n = 0;
    }
    // Trimming can shrink neighbours, so pools are refreshed after every slice has acted.
    for (auto& s : slices_) {
      const int g = budgets_[s.alloc.vodu].grant_of(s.alloc.slice);
      if (g != s.alloc.rb_pool) {
        s.alloc.rb_pool = g;
        allocate(s, {s.alloc.last_action, s.alloc.omega});
      }
    }
    int total = 0;
    for (const auto& b : budgets_) total += b.granted();
    hour_rb_sum_ += total;
    ++hour_rb_n_;
    ++metrics_.loop2_epochs;
    metrics_.capacity_violations += check_capacity();
  }

  // ---- loop 3 ----

  void prepare_energy() {
    const int hours = std::max(1, spec_.sim.hours) + spec_.sim.horizon_hours;
    std::vector<TracePoint> solar;
    if (!spec_.energy.solar_trace.empty())
      solar = read_solar_trace(spec_.resolve(spec_.energy.solar_trace));
    else
      solar = synthetic_solar(hours, spec_.energy.solar_peak_w, spec_.energy.solar_cloud_jitter, seed_);
    solar_kwh_ = hourly_kwh(solar, hours);
    if (!spec_.energy.server_trace.empty())
      for (const auto& [id, series] : read_server_trace(spec_.resolve(spec_.energy.server_trace)))
        server_base_w_[id] = hourly_kwh(series, hours);
    storage_kwh_ = spec_.energy.initial_storage_kwh;
  }

  double hour_demand_kwh(int hour) {
    const double hour_s = ticks_per_hour() * spec_.sim.tick_ms * 1e-3;
    std::vector<ServerPower> servers;
    for (const auto& sv : spec_.topology.servers) {
      ServerPower p;
      p.base_w = sv.base_power_w;
      auto it = server_base_w_.find(sv.id);
      if (it != server_base_w_.end()) p.base_w = 1000.0 * it->second[static_cast<std::size_t>(hour) % it->second.size()];
      p.vnf_w = sv.vnf_power_w;
      p.vnf_count = std::max<int>(1, static_cast<int>(sv.vnf_power_w.size()));
      for (const auto& c : cpes_) {
        const auto& s = slices_[c.slice];
        const bool hosted =
            sv.serves_all_cpes || std::find(sv.hosted_vodus.begin(), sv.hosted_vodus.end(), s.alloc.vodu) != sv.hosted_vodus.end();
        if (!hosted) continue;
        CpeLoad l;
        l.y = c.hour_alloc_ticks > 0;
        l.lambda_pps = c.hour_arrivals / hour_s;
        l.mu_pps = l.y ? (c.hour_rate_sum / c.hour_alloc_ticks) / s.sizing.mean_bits : 1.0;
        p.cpe_share.push_back(l);
      }
      servers.push_back(std::move(p));
    }
    return consumption_kwh(total_power(servers), 1.0);
  }

  void loop3_hour() {
    const int hour = static_cast<int>(metrics_.ledger.size());
    const double demand = hour_demand_kwh(hour);
    const double rb_mean = hour_rb_n_ > 0 ? hour_rb_sum_ / hour_rb_n_ : 0.0;
    HorizonObjective f;
    const int J = std::max(1, spec_.sim.horizon_hours);
    for (int j = 0; j < J; ++j) {
      f.solar_kwh.push_back(solar_kwh_[static_cast<std::size_t>(hour + j) % solar_kwh_.size()]);
      f.demand_kwh.push_back(demand);
      f.rb_mean.push_back(rb_mean);
    }
    f.initial_level_kwh = storage_kwh_;
    f.limits = spec_.energy.limits;
    f.prices = spec_.prices;
    auto sol = solve_hour(hour, f, spec_.sim.mm);
    if (!sol.ledger.feasible)
      fail(ErrorCode::Infeasible, "hour " + std::to_string(hour) + ": energy demand " + std::to_string(demand) +
                                      " kWh exceeds grid, solar and storage limits");
    storage_kwh_ = sol.ledger.level_after_kwh;
    metrics_.ledger.push_back(sol.ledger);
    metrics_.hourly_rb_mean.push_back(rb_mean);
    metrics_.solutions.push_back(std::move(sol));
    for (auto& c : cpes_) {
      c.hour_arrivals = c.hour_alloc_ticks = 0;
      c.hour_rate_sum = 0;
    }
    hour_rb_sum_ = 0;
    hour_rb_n_ = 0;
    if (opt_.forecast) forecast_step();
  }

  // Continual forecaster over the hourly objective; trains once a window of history exists.
  void forecast_step() {
    const auto& cfg = spec_.cl;
    std::vector<double> series;
    for (const auto& s : metrics_.solutions) series.push_back(s.F);
    if (static_cast<int>(series.size()) < cfg.window + 1) return;
    if (!forecaster_) {
      cl::ClConfig c = cfg;
      c.seed = seed_;
      forecaster_.emplace(c);
      forecaster_->fit_initial(series);
      fed_ = series.size();
    } else if (series.size() - fed_ >= static_cast<std::size_t>(cfg.increment)) {
      forecaster_->update_increment(std::vector<double>(series.begin() + static_cast<long>(fed_), series.end()));
      fed_ = series.size();
    }
    const int tau = std::min(opt_.forecast_tau, cfg.max_tau);
    const auto f = forecaster_->predict(series, tau);
    const auto p = cl::persistence_forecast(series, tau);
    for (int h = 0; h < tau; ++h) metrics_.forecasts.push_back({static_cast<int>(series.size()) - 1, h + 1, f[h], p[h]});
  }

  const ScenarioSpec& spec_;
  std::uint64_t seed_;
  Controller& ctl_;
  SimOptions opt_;
  Rng channel_rng_;
  TrafficProfile traffic_;
  std::vector<VoduBudget> budgets_;
  std::vector<CpeRt> cpes_;
  std::vector<SliceRt> slices_;
  std::map<CpeId, std::size_t> cpe_index_;
  std::map<SliceId, std::size_t> slice_index_;
  std::int64_t tick_ = 0;
  RunMetrics metrics_;
  double hour_rb_sum_ = 0;
  long hour_rb_n_ = 0;
  std::vector<double> solar_kwh_;
  std::map<int, std::vector<double>> server_base_w_;
  double storage_kwh_ = 0;
  std::optional<cl::Forecaster> forecaster_;
  std::size_t fed_ = 0;
  std::vector<ArrivalEvent> replay_;
  std::size_t replay_pos_ = 0;
  bool replaying_ = false;
};

}  // namespace fwa
