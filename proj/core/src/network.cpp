#include "uavcache/network.hpp"

#include <stdexcept>

namespace uavcache {

void finalize(NetworkConfig& config) {
  config.radio.validate();
  if (config.users == 0 || config.uavs == 0) {
    throw std::invalid_argument("NetworkConfig: need at least one user and one UAV");
  }
  const PowerLimits& pw = config.power;
  if (!(pw.p_min > 0.0 && pw.p_min <= pw.p_max())) {
    throw std::invalid_argument("NetworkConfig: require 0 < p_min <= p_hat - p_circuit");
  }
  if (!(config.e_max_m > 0.0 && config.d_min_m >= 0.0 && config.area_width_m > 0.0 &&
        config.area_height_m > 0.0)) {
    throw std::invalid_argument("NetworkConfig: geometry limits must be positive");
  }
  if (config.lyapunov.v < 0.0 || config.lyapunov.rho < 0.0) {
    throw std::invalid_argument("NetworkConfig: V and rho must be non-negative");
  }
  config.qoe = make_qoe_params(config.radio, pw.p_max(), config.qoe.d_hat_s, config.qoe.d_ul_s,
                               config.qoe.d_th, config.qoe.content_bits);
  config.lyapunov.phi = static_cast<double>(config.uavs) / static_cast<double>(config.users);
}

NetworkConfig default_network(std::size_t users, std::size_t uavs) {
  NetworkConfig config;
  config.users = users;
  config.uavs = uavs;
  finalize(config);
  return config;
}

}  // namespace uavcache
