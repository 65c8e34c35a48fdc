#pragma once

// Air-to-ground channel: LoS probability, path loss, LoS gain approximation,
// coverage radius and Shannon rates with co-channel interference.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace uavcache {

struct Position2D {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(const Position2D& a, const Position2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(const Position2D& a, const Position2D& b) {
  return std::sqrt(squared_distance(a, b));
}

/// Radio environment shared by every UAV. Angles in degrees, powers in mW.
struct RadioParams {
  double a = 12.08;                 // environment constant
  double b = 0.11;                  // environment constant
  double eta_los_db = 2.3;          // LoS excess loss
  double eta_nlos_db = 23.0;        // NLoS excess loss
  double carrier_hz = 4.9e9;
  double light_speed = 3.0e8;
  double theta_th_deg = 70.0;       // elevation threshold for LoS operation
  double noise_psd_mw_per_hz = 3.9810717055349565e-18;  // -174 dBm/Hz
  double bandwidth_hz = 1.0e8;
  double altitude_m = 200.0;

  double wavelength() const { return light_speed / carrier_hz; }
  double noise_mw() const { return noise_psd_mw_per_hz * bandwidth_hz; }
  /// G_LoS * wavelength^2 / (16 pi^2): gain = los_constant / d^2.
  double los_constant() const;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Converts a dBm/Hz noise density to mW/Hz.
double dbm_per_hz_to_mw(double dbm_per_hz);

struct LinkGain {
  double gain = 0.0;      // linear power ratio
  double distance = 0.0;  // 3D meters
};

double los_probability(double horizontal_m, const RadioParams& radio);

/// Probability-weighted path loss in dB. Validation reference only; the
/// optimizer works with los_gain.
double path_loss_db(double horizontal_m, const RadioParams& radio);

/// Free-space LoS gain at 3D distance `d3`. Throws std::domain_error when
/// d3 < altitude (impossible at fixed altitude).
LinkGain los_gain(double d3, const RadioParams& radio);

/// Gain between a UAV and a user given their horizontal separation.
double gain_horizontal(double horizontal_sq_m2, const RadioParams& radio);

/// Largest horizontal distance with elevation >= theta_th: g / tan(theta_th).
double los_coverage_radius(const RadioParams& radio);

/// Gain matrix, users x UAVs.
Eigen::MatrixXd gain_matrix(std::span<const Position2D> uavs,
                            std::span<const Position2D> users,
                            const RadioParams& radio);

/// Spectral efficiency of user i served by UAV j while every other UAV
/// interferes at its configured power.
double link_rate(std::size_t user, std::size_t uav, const Eigen::MatrixXd& gains,
                 std::span<const double> powers_mw, const RadioParams& radio);

/// Per-user rate (bps/Hz). `delivery` is users x UAVs binary; unassigned
/// users get 0. Throws std::invalid_argument on dimension mismatch.
std::vector<double> achievable_rates(std::span<const Position2D> uavs,
                                     std::span<const Position2D> users,
                                     const Eigen::MatrixXi& delivery,
                                     std::span<const double> powers_mw,
                                     const RadioParams& radio);

}  // namespace uavcache
