#pragma once

// Traffic generation, arrival-rate estimation and queue math.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/domain.hpp"

namespace fwa {

struct QueueState {
  double arrival_rate_pps = 0;
  double service_rate_pps = 0;
  double occupancy_pkts = 0;
  double expected_arrivals_pkts = 0;  // E[lambda] over the estimation window
  double buffer_capacity_pkts = 20;
  double buffer_threshold_pkts = 16;
};

struct ArrivalEvent {
  std::int64_t tick_ms = 0;
  CpeId cpe_id = 0;
  ServiceId service_id = 0;
  double bits = 0;

  bool operator==(const ArrivalEvent& o) const {
    return tick_ms == o.tick_ms && cpe_id == o.cpe_id && service_id == o.service_id && bits == o.bits;
  }
};

struct CpeTraffic {
  CpeId cpe = 0;
  ServiceId service = 0;
  double mean_per_tick = 0;
  double bits_min = 1e6;
  double bits_max = 1e6;
};

struct TrafficProfile {
  std::vector<CpeTraffic> sources;
};

inline TrafficProfile make_traffic_profile(const Topology& t, const std::vector<ServiceProfile>& services,
                                           double tick_ms = 1.0, double load_scale = 1.0) {
  TrafficProfile p;
  for (const auto& c : t.cpes) {
    auto it = std::find_if(services.begin(), services.end(), [&](const auto& s) { return s.service_id == c.service; });
    require(it != services.end(), ErrorCode::Validation, "traffic: cpe " + std::to_string(c.id) + " has unknown service");
    p.sources.push_back({c.id, c.service, load_scale * it->arrival_rate_pps * tick_ms * 1e-3, it->packet_bits_min,
                         it->packet_bits_max});
  }
  return p;
}

// Arrivals of one tick. A pure function of (seed, tick, profile).
inline std::vector<ArrivalEvent> generate_arrivals(std::uint64_t seed, std::int64_t tick_ms, const TrafficProfile& profile) {
  std::vector<ArrivalEvent> out;
  Rng rng = make_stream(seed, "traffic", static_cast<std::uint64_t>(tick_ms));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& s : profile.sources) {
    if (!(s.mean_per_tick > 0)) continue;
    // Knuth's product method; means per tick are small.
    const double limit = std::exp(-s.mean_per_tick);
    int k = 0;
    for (double prod = u(rng); prod > limit; prod *= u(rng)) ++k;
    for (int i = 0; i < k; ++i) {
      const double bits = s.bits_min + (s.bits_max - s.bits_min) * u(rng);
      out.push_back({tick_ms, s.cpe, s.service, std::round(bits)});
    }
  }
  return out;
}

inline double queue_status(const QueueState& q) {
  return std::max(q.buffer_capacity_pkts - q.expected_arrivals_pkts, q.buffer_threshold_pkts);
}

enum class QueueMode { Stable, PaperLiteral };

// Mean queueing delay in the reciprocal unit of the rates (seconds for pps).
inline double queueing_delay(const QueueState& q, QueueMode mode = QueueMode::Stable) {
  const double lam = q.arrival_rate_pps, mu = q.service_rate_pps;
  if (lam == mu) fail(ErrorCode::CriticalQueue, "critically loaded queue");
  if (mode == QueueMode::PaperLiteral) return 1.0 / (lam - mu);
  if (mu < lam) fail(ErrorCode::CriticalQueue, "critically loaded queue: arrival rate exceeds service rate");
  return 1.0 / (mu - lam);
}

// Sliding count of arrivals over the last `window` ticks.
class ArrivalWindow {
 public:
  explicit ArrivalWindow(int window = 100) : counts_(static_cast<std::size_t>(std::max(1, window)), 0) {}

  void push(int arrivals) {
    sum_ += arrivals - counts_[pos_];
    counts_[pos_] = arrivals;
    pos_ = (pos_ + 1) % counts_.size();
  }
  double expected() const { return static_cast<double>(sum_); }
  double rate_pps(double tick_ms = 1.0) const { return sum_ / (counts_.size() * tick_ms * 1e-3); }
  int window() const { return static_cast<int>(counts_.size()); }

 private:
  std::vector<int> counts_;
  std::size_t pos_ = 0;
  long sum_ = 0;
};

// Service rate R so that mean queueing plus worst-case transmission delay meets target_s:
// o_mean/(R - lambda*o_mean) + o_max/R = target_s (larger root).
inline double required_rate_bps(double mean_bits, double max_bits, double lambda_pps, double target_s) {
  require(target_s > 0, ErrorCode::InvalidArgument, "required_rate_bps: target must be positive");
  const double a = target_s;
  const double b = -(target_s * lambda_pps * mean_bits + mean_bits + max_bits);
  const double c = max_bits * lambda_pps * mean_bits;
  return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

namespace trace {

inline void write_arrivals(const std::string& path, const std::vector<ArrivalEvent>& events) {
  csv::Writer w(path, "tick_ms,cpe_id,service_id,bits");
  for (const auto& e : events) w.line(csv::row(e.tick_ms, e.cpe_id, e.service_id, e.bits));
}

inline std::vector<ArrivalEvent> read_arrivals(const std::string& path) {
  auto t = csv::read(path);
  const int ct = t.column("tick_ms"), cc = t.column("cpe_id"), cs = t.column("service_id"), cb = t.column("bits");
  require(ct >= 0 && cc >= 0 && cs >= 0 && cb >= 0, ErrorCode::Parse, path + ": expected header tick_ms,cpe_id,service_id,bits");
  std::vector<ArrivalEvent> out;
  for (const auto& r : t.rows) {
    out.push_back({static_cast<std::int64_t>(csv::to_double(r[ct], path)), static_cast<int>(csv::to_double(r[cc], path)),
                   static_cast<int>(csv::to_double(r[cs], path)), csv::to_double(r[cb], path)});
    require(out.back().bits >= 1e6 && out.back().bits <= 1e9, ErrorCode::Validation, path + ": packet size outside [1 Mb, 1 Gb]");
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.tick_ms < b.tick_ms; });
  return out;
}

}  // namespace trace
}  // namespace fwa
