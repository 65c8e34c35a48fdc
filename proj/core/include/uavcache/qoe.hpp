#pragma once

// Latency-based MOS model and the rate thresholds derived from it.
//
// Rates are spectral efficiencies (bps/Hz). Bit quantities are converted to
// time by dividing by bandwidth * efficiency exactly once, here.

#include "uavcache/channel.hpp"

namespace uavcache {

struct QoeParams {
  double d_hat_s = 24.0;       // max tolerable latency
  double d_ul_s = 5.0;         // BS -> UAV backhaul latency
  double d_th = 0.6;           // MOS threshold
  double content_bits = 1.5e8; // L
  double bandwidth_hz = 1.0e8; // W, mirrors RadioParams::bandwidth_hz
  double u_dl_max = 0.0;       // best-case spectral efficiency
  double delta_t_s = 0.0;      // slot duration

  /// L / (W * u_dl_max): the fastest possible delivery.
  double min_latency_s() const { return content_bits / (bandwidth_hz * u_dl_max); }
  void validate() const;
};

/// Peak spectral efficiency for a user directly below a UAV at p_max.
double u_dl_max(const RadioParams& radio, double p_max_mw);

/// Builds QoE parameters with u_dl_max and the slot duration derived from
/// the radio setup: delta_t = D_hat - D_th (D_hat - L / (W u_dl_max)).
QoeParams make_qoe_params(const RadioParams& radio, double p_max_mw, double d_hat_s,
                          double d_ul_s, double d_th, double content_bits);

double mos(double latency_s, const QoeParams& q);

/// Latency to push one content file at `rate` (bps/Hz). Throws
/// std::domain_error for rate <= 0 (the user is not being served).
double edge_latency(double rate, bool cached, const QoeParams& q);

/// Minimum rate (bps/Hz) that keeps the MOS at or above D_th. Throws
/// std::domain_error if the QoE target cannot be met.
double required_rate(bool cached, const QoeParams& q);

/// Transmit power (mW) that delivers `rate_bps` (bits/s, not bps/Hz) over a
/// link with the given gain under fixed interference.
double power_for_rate(double rate_bps, const LinkGain& gain, double interference_mw,
                      const QoeParams& q, const RadioParams& radio);

}  // namespace uavcache
