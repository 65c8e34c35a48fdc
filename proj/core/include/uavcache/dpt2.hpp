#pragma once

// Delivery, power and trajectory tier: max-weight delivery, SCA trajectory
// and SCA power programs, iterated until the slot objective settles.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uavcache/lyapunov.hpp"
#include "uavcache/network.hpp"
#include "uavcache/solver.hpp"

namespace uavcache {

struct SlotDecision {
  Placement b;                  // J x N
  Eigen::MatrixXi s;            // N x J
  std::vector<double> p_mw;     // per UAV
  std::vector<Position2D> x;    // per UAV
  std::vector<double> gamma;    // per user
};

struct ScaLocalPoint {
  std::vector<Position2D> x_r;
  std::vector<double> p_r;
};

/// [Q_i]^+ + [Z_i]^+.
std::vector<double> rate_weights(const VirtualQueues& qs);

/// N x J weights w_i * R_ij(X, P); pairs beyond the LoS radius are -inf.
Eigen::MatrixXd delivery_costs(const VirtualQueues& qs, std::span<const Position2D> x,
                               std::span<const double> p, std::span<const Position2D> users,
                               const NetworkConfig& config);

/// Serving UAV per user (-1 when unassigned). Throws on malformed S.
std::vector<int> serving_uav(const Eigen::MatrixXi& s);

/// Per-user rates under S with every UAV interfering.
std::vector<double> slot_rates(const Eigen::MatrixXi& s, std::span<const Position2D> x,
                               std::span<const double> p, std::span<const Position2D> users,
                               const NetworkConfig& config);

/// sum_j (V rho + [H_j]^+) p_j - sum_i w_i u_i: the quantity each SCA
/// iteration decreases.
double dpt2_objective(const VirtualQueues& qs, const Eigen::MatrixXi& s,
                      std::span<const Position2D> x, std::span<const double> p,
                      std::span<const Position2D> users, const NetworkConfig& config);

// First-order bounds used by the convex surrogates. Each is tight at its
// expansion point.
namespace bounds {

/// Expansion of log2(n0 + sum_k c_k / (g^2 + d_k)) in the squared
/// horizontal distances d_k = |x_k - u|^2, with c_k = p_k * los_constant.
struct SignalExpansion {
  std::vector<double> c;    // per UAV
  std::vector<double> d_r;  // squared distances at the expansion point
  double d0 = 0.0;          // log2 value at the expansion point
  std::vector<double> e;    // slopes, non-negative

  SignalExpansion(const Position2D& user, std::span<const Position2D> x_r,
                  std::span<const double> p, const RadioParams& radio);
  /// Lower bound on the log-sum term at UAV positions x.
  double lower(const Position2D& user, std::span<const Position2D> x) const;
};

/// True log2(n0 + sum_k c_k / (g^2 + d_k)) at positions x, k in `include`
/// (all UAVs when `skip` < 0, otherwise all but `skip`).
double log_received(const Position2D& user, std::span<const Position2D> x,
                    std::span<const double> p, int skip, const RadioParams& radio);

/// -|a_r|^2 + 2 a_r^T a <= |a|^2, for a = x - u.
double sq_distance_lower(const Position2D& x_r, const Position2D& u, const Position2D& x);

/// -|z_r|^2 + 2 z_r^T z <= |z|^2, for z = x_j - x_k.
double separation_lower(const Position2D& xj_r, const Position2D& xk_r, const Position2D& xj,
                        const Position2D& xk);

/// Upper bound on log2(n0 + sum_{k != j} p_k h_k) linearized at p_r.
double interference_log_upper(std::span<const double> h, std::span<const double> p_r,
                              std::span<const double> p, std::size_t serving, double n0);

/// Rate lower bound used by the trajectory program (slacks at their best
/// value, B_ik = sq_distance_lower).
double trajectory_rate_lower(const Position2D& user, std::size_t serving,
                             std::span<const Position2D> x_r, std::span<const double> p,
                             std::span<const Position2D> x, const RadioParams& radio);

/// Rate lower bound used by the power program.
double power_rate_lower(std::span<const double> h, std::size_t serving,
                        std::span<const double> p_r, std::span<const double> p, double n0);

}  // namespace bounds

/// Trajectory program around `local` for fixed S and powers local.p_r.
/// Layout: [x_0, y_0, ..., x_{J-1}, y_{J-1}], eta_i for served users in
/// ascending user order, then B_ik for each served user and every
/// non-serving k (k ascending). `c_th_floor` empty disables the QoE floor.
struct TrajectoryProgram {
  ConvexProgram program;
  std::vector<std::size_t> served;  // user index per eta slot
};
TrajectoryProgram build_trajectory_program(const ScaLocalPoint& local, const Eigen::MatrixXi& s,
                                           const VirtualQueues& qs,
                                           std::span<const Position2D> users,
                                           std::span<const Position2D> x_prev,
                                           std::span<const double> c_th_floor,
                                           const NetworkConfig& config);

/// Power program around `local` for fixed S and positions local.x_r.
/// Layout: [p_0 .. p_{J-1}], eta_i for served users in ascending order.
struct PowerProgram {
  ConvexProgram program;
  std::vector<std::size_t> served;
};
PowerProgram build_power_program(const ScaLocalPoint& local, const Eigen::MatrixXi& s,
                                 const VirtualQueues& qs, std::span<const Position2D> users,
                                 std::span<const double> c_th_floor, const NetworkConfig& config);

struct Dpt2Options {
  int r_max = 200;
  double rel_tol = 1e-4;
  double solver_tol = 1e-6;
  int solver_max_iter = 500;
  bool optimize_trajectory = true;
  bool optimize_power = true;
  bool optimize_delivery = true;  // false keeps `fixed_delivery`
};

struct Dpt2Result {
  SlotDecision decision;
  std::vector<double> objective_trace;  // accepted objective after each iteration
  int iterations = 0;
  bool converged = false;
  int solver_failures = 0;        // infeasible or non-converged subproblems
  int safeguard_rejections = 0;   // sub-steps that raised the objective
  double max_raw_increase = 0.0;  // largest relative rise of a raw sub-step (r >= 1)
  bool floor_dropped = false;
};

/// Runs the alternating SCA loop for one slot, warm-started at
/// (x_prev, p_prev). `fixed_delivery` is used when options.optimize_delivery
/// is false (N x J, may be empty otherwise).
Dpt2Result algorithm1(const VirtualQueues& qs, const Placement& b, std::span<const double> c_th,
                      std::span<const Position2D> x_prev, std::span<const double> p_prev,
                      std::span<const Position2D> users, const NetworkConfig& config,
                      const Dpt2Options& options = {},
                      const Eigen::MatrixXi& fixed_delivery = Eigen::MatrixXi());

}  // namespace uavcache
