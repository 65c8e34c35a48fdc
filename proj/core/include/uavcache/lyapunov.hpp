#pragma once

// Virtual queues of the drift-plus-penalty scheme, the closed-form
// auxiliary tier and the greedy content-placement tier.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uavcache/network.hpp"

namespace uavcache {

/// Raw signed queues; read sites apply [.]^+.
struct VirtualQueues {
  std::vector<double> q;  // per user, QoE rate debt
  std::vector<double> z;  // per user, auxiliary rate debt
  std::vector<double> h;  // per UAV, power debt (mW)
};

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// Queues drawn uniformly from [0, 1].
VirtualQueues initial_queues(std::size_t users, std::size_t uavs, std::mt19937_64& rng);

/// One slot of queue evolution. Throws std::invalid_argument on size mismatch.
VirtualQueues update_queues(const VirtualQueues& qs, std::span<const double> c_th,
                            std::span<const double> rates, std::span<const double> p_tot,
                            std::span<const double> gamma, const LyapunovParams& params,
                            std::span<const double> p_tilde);

/// Minimizer of -V log2(1 + g) + [Z]^+ g over [0, u_max], per user.
std::vector<double> aut_solve(std::span<const double> z, double v, double u_max);

/// J x N placement: entry (j, i) = 1 when UAV j caches the file of user i.
using Placement = Eigen::MatrixXi;

/// Each UAV caches the file of the candidate (horizontal distance < e_max)
/// with the largest [Q_i]^+ (p(beta) - p(alpha)); nearest user when no
/// candidate exists. Ties go to the lowest user index. Geometry and
/// interference are taken from `fleet`.
Placement cpt_place(std::span<const double> q, const FleetState& fleet,
                    const NetworkConfig& config);

/// True when some UAV within e_max of user i caches its file.
std::vector<bool> cached_flags(const Placement& b, std::span<const Position2D> uavs,
                               std::span<const Position2D> users, const NetworkConfig& config);

/// Per-user rate threshold C_th for the given placement.
std::vector<double> rate_thresholds(const Placement& b, std::span<const Position2D> uavs,
                                    std::span<const Position2D> users,
                                    const NetworkConfig& config);

/// Right-hand side of the drift-plus-penalty bound for one slot.
/// `powers_mw` are transmit powers (circuit power added internally).
double drift_penalty_upper_bound(const VirtualQueues& qs, std::span<const double> c_th,
                                 std::span<const double> gamma,
                                 std::span<const double> powers_mw,
                                 std::span<const double> rates, const NetworkConfig& config);

struct StabilityMetrics {
  double s_q = 0.0;
  double s_z = 0.0;
  double s_h = 0.0;
};

/// max_i [Q_i]^+ / t and likewise for Z and H. Requires t >= 1.
StabilityMetrics stability_metrics(const VirtualQueues& qs, std::size_t t);

}  // namespace uavcache
