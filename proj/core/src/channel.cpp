#include "uavcache/channel.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace uavcache {

namespace {
constexpr double kPi = std::numbers::pi;
}

double dbm_per_hz_to_mw(double dbm_per_hz) { return std::pow(10.0, dbm_per_hz / 10.0); }

double RadioParams::los_constant() const {
  const double g_los = std::pow(10.0, -eta_los_db / 10.0);
  const double lambda = wavelength();
  return g_los * lambda * lambda / (16.0 * kPi * kPi);
}

void RadioParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("RadioParams: ") + what);
  };
  require(a > 0.0, "a must be positive");
  require(b > 0.0, "b must be positive");
  require(carrier_hz > 0.0, "carrier_hz must be positive");
  require(light_speed > 0.0, "light_speed must be positive");
  require(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
  require(altitude_m > 0.0, "altitude_m must be positive");
  require(noise_psd_mw_per_hz > 0.0, "noise density must be positive");
  require(theta_th_deg > 0.0 && theta_th_deg < 90.0, "theta_th_deg must lie in (0, 90)");
}

double los_probability(double horizontal_m, const RadioParams& radio) {
  if (horizontal_m < 0.0) throw std::invalid_argument("los_probability: negative distance");
  const double elevation_deg = 180.0 / kPi * std::atan2(radio.altitude_m, horizontal_m);
  return 1.0 / (1.0 + radio.a * std::exp(-radio.b * (elevation_deg - radio.a)));
}

double path_loss_db(double horizontal_m, const RadioParams& radio) {
  const double pr = los_probability(horizontal_m, radio);
  const double d3 = std::hypot(radio.altitude_m, horizontal_m);
  return 20.0 * std::log10(4.0 * kPi / radio.wavelength()) + 20.0 * std::log10(d3) +
         pr * radio.eta_los_db + (1.0 - pr) * radio.eta_nlos_db;
}

LinkGain los_gain(double d3, const RadioParams& radio) {
  if (!(d3 >= radio.altitude_m)) {
    throw std::domain_error("los_gain: 3D distance below flight altitude");
  }
  return {radio.los_constant() / (d3 * d3), d3};
}

double gain_horizontal(double horizontal_sq_m2, const RadioParams& radio) {
  return radio.los_constant() / (radio.altitude_m * radio.altitude_m + horizontal_sq_m2);
}

double los_coverage_radius(const RadioParams& radio) {
  return radio.altitude_m / std::tan(radio.theta_th_deg * kPi / 180.0);
}

Eigen::MatrixXd gain_matrix(std::span<const Position2D> uavs,
                            std::span<const Position2D> users,
                            const RadioParams& radio) {
  Eigen::MatrixXd gains(static_cast<Eigen::Index>(users.size()),
                        static_cast<Eigen::Index>(uavs.size()));
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = 0; j < uavs.size(); ++j) {
      gains(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          gain_horizontal(squared_distance(uavs[j], users[i]), radio);
    }
  }
  return gains;
}

double link_rate(std::size_t user, std::size_t uav, const Eigen::MatrixXd& gains,
                 std::span<const double> powers_mw, const RadioParams& radio) {
  const auto i = static_cast<Eigen::Index>(user);
  double interference = 0.0;
  for (std::size_t k = 0; k < powers_mw.size(); ++k) {
    if (k != uav) interference += powers_mw[k] * gains(i, static_cast<Eigen::Index>(k));
  }
  const double signal = powers_mw[uav] * gains(i, static_cast<Eigen::Index>(uav));
  return std::log2(1.0 + signal / (radio.noise_mw() + interference));
}

std::vector<double> achievable_rates(std::span<const Position2D> uavs,
                                     std::span<const Position2D> users,
                                     const Eigen::MatrixXi& delivery,
                                     std::span<const double> powers_mw,
                                     const RadioParams& radio) {
  if (delivery.rows() != static_cast<Eigen::Index>(users.size()) ||
      delivery.cols() != static_cast<Eigen::Index>(uavs.size()) ||
      powers_mw.size() != uavs.size()) {
    throw std::invalid_argument("achievable_rates: dimension mismatch");
  }
  const Eigen::MatrixXd gains = gain_matrix(uavs, users, radio);
  std::vector<double> rates(users.size(), 0.0);
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = 0; j < uavs.size(); ++j) {
      if (delivery(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0) {
        rates[i] += link_rate(i, j, gains, powers_mw, radio);
      }
    }
  }
  return rates;
}

}  // namespace uavcache
