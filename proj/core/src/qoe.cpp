#include "uavcache/qoe.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uavcache {

void QoeParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("QoeParams: ") + what);
  };
  require(bandwidth_hz > 0.0 && content_bits > 0.0, "bandwidth and content size must be positive");
  require(u_dl_max > 0.0, "u_dl_max must be positive");
  require(d_hat_s > min_latency_s(), "D_hat must exceed L / (W u_dl_max)");
  require(d_th > 0.0 && d_th < 1.0, "D_th must lie in (0, 1)");
  require(d_ul_s >= 0.0, "D_ul must be non-negative");
  require(delta_t_s > 0.0, "slot duration must be positive");
}

double u_dl_max(const RadioParams& radio, double p_max_mw) {
  const double g = radio.altitude_m;
  const double snr = p_max_mw * radio.los_constant() / (g * g * radio.noise_mw());
  return std::log2(1.0 + snr);
}

QoeParams make_qoe_params(const RadioParams& radio, double p_max_mw, double d_hat_s,
                          double d_ul_s, double d_th, double content_bits) {
  QoeParams q;
  q.d_hat_s = d_hat_s;
  q.d_ul_s = d_ul_s;
  q.d_th = d_th;
  q.content_bits = content_bits;
  q.bandwidth_hz = radio.bandwidth_hz;
  q.u_dl_max = u_dl_max(radio, p_max_mw);
  q.delta_t_s = d_hat_s - d_th * (d_hat_s - q.min_latency_s());
  q.validate();
  return q;
}

double mos(double latency_s, const QoeParams& q) {
  return (q.d_hat_s - latency_s) / (q.d_hat_s - q.min_latency_s());
}

double edge_latency(double rate, bool cached, const QoeParams& q) {
  if (!(rate > 0.0)) throw std::domain_error("edge_latency: user is not served");
  const double air = q.content_bits / (q.bandwidth_hz * rate);
  return cached ? air : q.d_ul_s + air;
}

double required_rate(bool cached, const QoeParams& q) {
  double budget = q.d_hat_s - q.d_th * (q.d_hat_s - q.min_latency_s());
  if (!cached) budget -= q.d_ul_s;
  if (!(budget > 0.0)) {
    throw std::domain_error("required_rate: latency budget is not positive, QoE target unreachable");
  }
  return q.content_bits / (q.bandwidth_hz * budget);
}

double power_for_rate(double rate_bps, const LinkGain& gain, double interference_mw,
                      const QoeParams& q, const RadioParams& radio) {
  return (std::exp2(rate_bps / q.bandwidth_hz) - 1.0) * (radio.noise_mw() + interference_mw) /
         gain.gain;
}

}  // namespace uavcache
