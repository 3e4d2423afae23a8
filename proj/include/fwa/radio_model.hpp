#pragma once

// Closed-form link math: SNR, rate, RB sizing, delay components, satisfaction, utilization.

#include <cmath>
#include <utility>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/domain.hpp"

namespace fwa {

struct ChannelSample {
  double estimated_csi = 1.0;  // |h~|
  double csi_error = 0.0;      // epsilon
  double realized_csi() const { return estimated_csi + csi_error; }
  double gain() const { return realized_csi() * realized_csi(); }
};

inline ChannelSample sample_channel(double estimated_csi, double error_std, Rng& rng) {
  ChannelSample c{estimated_csi, 0.0};
  if (error_std > 0) c.csi_error = std::normal_distribution<double>(0.0, error_std)(rng);
  return c;
}

inline double compute_snr(bool allocated, const ChannelSample& ch, double tx_power_w, double noise_w,
                          double distance_m, double pathloss_exp) {
  require(noise_w > 0, ErrorCode::InvalidArgument, "compute_snr: noise must be positive");
  require(distance_m > 0, ErrorCode::InvalidArgument, "compute_snr: distance must be positive");
  if (!allocated) return 0.0;
  return ch.gain() * tx_power_w / (noise_w * std::pow(distance_m, pathloss_exp));
}

inline double compute_data_rate(double fraction, double bandwidth_hz, double snr) {
  require(fraction >= 0 && fraction <= 1, ErrorCode::InvalidArgument, "compute_data_rate: fraction outside [0,1]");
  return fraction * bandwidth_hz * std::log2(1.0 + snr);
}

// Bits carried by one RB per OFDM symbol, summed over carriers.
inline double rb_bits_per_symbol(const RbConfig& rb) {
  double s = 0.0;
  for (const auto& c : rb.carriers)
    s += c.layers * c.modulation_order * c.scaling * 12.0 * rb.max_code_rate * (1.0 - c.overhead);
  return s;
}

inline double per_rb_throughput_bps(const RbConfig& rb) { return rb_bits_per_symbol(rb) / rb.symbol_duration_s(); }

inline double rbs_throughput_bps(int rbs, const RbConfig& rb) { return rbs * per_rb_throughput_bps(rb); }

// Largest RB count whose 5G peak throughput does not exceed the target rate.
inline int required_rbs(double target_rate_bps, const RbConfig& rb) {
  require(target_rate_bps >= 0, ErrorCode::InvalidArgument, "required_rbs: negative rate");
  const double denom = rb_bits_per_symbol(rb);
  require(denom > 0, ErrorCode::InvalidArgument, "required_rbs: zero throughput denominator");
  const double mbps = target_rate_bps * 1e-6;
  return static_cast<int>(std::floor(1e6 * mbps * rb.symbol_duration_s() / denom));
}

// Rate actually delivered on n RBs: the 5G peak rate capped by the Shannon rate of the link.
inline double effective_rate_bps(int rbs, double snr, const RbConfig& rb, double fraction = 1.0) {
  if (rbs <= 0) return 0.0;
  return std::min(rbs_throughput_bps(rbs, rb), compute_data_rate(fraction, rbs * rb.rb_bandwidth_hz, snr));
}

struct DelayBreakdown {
  double queueing_ms = 0;
  double wireless_tx_ms = 0;
  double fronthaul_tx_ms = 0;
  double propagation_ms = 0;
  double end_to_end_ms = 0;
};

inline double propagation_ms(const FronthaulLink& f) { return 1e3 * f.fiber_length_m / f.propagation_speed_mps; }

inline DelayBreakdown delay_breakdown(double packet_bits, double rate_bps, const FronthaulLink& fronthaul,
                                      double queueing_ms, double cohort_bits) {
  if (!(rate_bps > 0)) fail(ErrorCode::StarvedCpe, "starved CPE: zero rate");
  require(fronthaul.capacity_bps > 0, ErrorCode::InvalidArgument, "delay_breakdown: fronthaul capacity must be positive");
  DelayBreakdown d;
  d.queueing_ms = queueing_ms;
  d.wireless_tx_ms = 1e3 * packet_bits / rate_bps;
  d.fronthaul_tx_ms = 1e3 * cohort_bits / fronthaul.capacity_bps;
  d.propagation_ms = propagation_ms(fronthaul);
  d.end_to_end_ms = d.queueing_ms + d.wireless_tx_ms + d.fronthaul_tx_ms + d.propagation_ms;
  return d;
}

struct SatSample {
  bool allocated = true;
  double delay_ms = 0;
  double budget_ms = 0;
};

inline bool delay_met(const SatSample& s) { return s.allocated && s.delay_ms <= s.budget_ms; }

inline double delay_satisfaction(const std::vector<SatSample>& samples) {
  if (samples.empty()) return 1.0;
  int ok = 0;
  for (const auto& s : samples) ok += delay_met(s) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(samples.size());
}

// Values above 1 mean over-allocation and are returned as-is.
inline double rb_utilization(const std::vector<std::pair<bool, int>>& slice_allocs, int vodu_rb) {
  require(vodu_rb > 0, ErrorCode::InvalidArgument, "rb_utilization: vO-DU budget must be positive");
  double s = 0;
  for (const auto& [x, grant] : slice_allocs)
    if (x) s += grant;
  return s / vodu_rb;
}

}  // namespace fwa
