#pragma once

// Physical setup of one experiment and the per-slot state of the fleet.

#include <cstddef>
#include <vector>

#include "uavcache/channel.hpp"
#include "uavcache/qoe.hpp"

namespace uavcache {

/// UAV power budget in mW.
struct PowerLimits {
  double p_tilde = 450.0;   // time-average total power cap
  double p_hat = 500.0;     // instantaneous total power cap
  double p_circuit = 20.0;  // circuit power per slot
  double p_min = 1.0;       // transmit power floor

  double p_max() const { return p_hat - p_circuit; }
};

struct LyapunovParams {
  double v = 0.01;    // penalty weight
  double rho = 0.1;   // power trade-off weight
  double phi = 0.08;  // J / N
};

struct NetworkConfig {
  RadioParams radio;
  QoeParams qoe;
  PowerLimits power;
  LyapunovParams lyapunov;
  double e_max_m = 250.0;   // max flight distance per slot
  double d_min_m = 50.0;    // UAV safety distance
  double area_width_m = 500.0;
  double area_height_m = 500.0;
  std::size_t users = 50;
  std::size_t uavs = 4;

  double los_radius() const { return los_coverage_radius(radio); }
  bool inside(const Position2D& p) const {
    return p.x >= 0.0 && p.x <= area_width_m && p.y >= 0.0 && p.y <= area_height_m;
  }
};

/// Builds a config with the default constants for N users and J UAVs:
/// derives u_dl_max, the slot duration and phi = J / N.
NetworkConfig default_network(std::size_t users, std::size_t uavs);

/// Recomputes the derived fields (qoe.u_dl_max, qoe.delta_t_s, phi) after
/// any primitive field changed, then validates.
void finalize(NetworkConfig& config);

struct FleetState {
  std::vector<Position2D> uavs;
  std::vector<double> powers_mw;
  std::vector<Position2D> users;
};

}  // namespace uavcache
