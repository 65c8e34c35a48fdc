#include "uavcache/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace uavcache {

VirtualQueues initial_queues(std::size_t users, std::size_t uavs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VirtualQueues qs;
  qs.q.resize(users);
  qs.z.resize(users);
  qs.h.resize(uavs);
  for (double& v : qs.q) v = unit(rng);
  for (double& v : qs.z) v = unit(rng);
  for (double& v : qs.h) v = unit(rng);
  return qs;
}

VirtualQueues update_queues(const VirtualQueues& qs, std::span<const double> c_th,
                            std::span<const double> rates, std::span<const double> p_tot,
                            std::span<const double> gamma, const LyapunovParams& params,
                            std::span<const double> p_tilde) {
  const std::size_t n = qs.q.size();
  const std::size_t j = qs.h.size();
  if (qs.z.size() != n || c_th.size() != n || rates.size() != n || gamma.size() != n ||
      p_tot.size() != j || p_tilde.size() != j) {
    throw std::invalid_argument("update_queues: size mismatch");
  }
  VirtualQueues next = qs;
  for (std::size_t i = 0; i < n; ++i) {
    next.q[i] += params.phi * c_th[i] - rates[i];
    next.z[i] += gamma[i] - rates[i];
  }
  for (std::size_t k = 0; k < j; ++k) next.h[k] += p_tot[k] - p_tilde[k];
  return next;
}

std::vector<double> aut_solve(std::span<const double> z, double v, double u_max) {
  if (!(u_max > 0.0)) throw std::invalid_argument("aut_solve: u_max must be positive");
  std::vector<double> gamma(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zp = positive_part(z[i]);
    if (zp == 0.0) {
      gamma[i] = u_max;
    } else {
      gamma[i] = std::min(positive_part(v / (zp * std::numbers::ln2) - 1.0), u_max);
    }
  }
  return gamma;
}

Placement cpt_place(std::span<const double> q, const FleetState& fleet,
                    const NetworkConfig& config) {
  const std::size_t n = fleet.users.size();
  const std::size_t jn = fleet.uavs.size();
  if (q.size() != n || fleet.powers_mw.size() != jn) {
    throw std::invalid_argument("cpt_place: size mismatch");
  }
  Placement b = Placement::Zero(static_cast<Eigen::Index>(jn), static_cast<Eigen::Index>(n));
  if (n == 0) return b;

  const double alpha = required_rate(true, config.qoe);
  const double beta = required_rate(false, config.qoe);
  // p(beta) - p(alpha) = (2^beta - 2^alpha)(n0 + I) / h
  const double rate_gap = std::exp2(beta) - std::exp2(alpha);
  const Eigen::MatrixXd gains = gain_matrix(fleet.uavs, fleet.users, config.radio);
  const double n0 = config.radio.noise_mw();

  for (std::size_t j = 0; j < jn; ++j) {
    std::size_t best = n;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(distance(fleet.uavs[j], fleet.users[i]) < config.e_max_m)) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      double interference = 0.0;
      for (std::size_t k = 0; k < jn; ++k) {
        if (k != j) interference += fleet.powers_mw[k] * gains(ii, static_cast<Eigen::Index>(k));
      }
      const double score =
          positive_part(q[i]) * rate_gap * (n0 + interference) / gains(ii, static_cast<Eigen::Index>(j));
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best == n) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(fleet.uavs[j], fleet.users[i]);
        if (d < nearest) {
          nearest = d;
          best = i;
        }
      }
    }
    b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(best)) = 1;
  }
  return b;
}

std::vector<bool> cached_flags(const Placement& b, std::span<const Position2D> uavs,
                               std::span<const Position2D> users, const NetworkConfig& config) {
  if (b.rows() != static_cast<Eigen::Index>(uavs.size()) ||
      b.cols() != static_cast<Eigen::Index>(users.size())) {
    throw std::invalid_argument("cached_flags: placement shape mismatch");
  }
  std::vector<bool> cached(users.size(), false);
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = 0; j < uavs.size(); ++j) {
      if (b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) != 0 &&
          distance(uavs[j], users[i]) < config.e_max_m) {
        cached[i] = true;
        break;
      }
    }
  }
  return cached;
}

std::vector<double> rate_thresholds(const Placement& b, std::span<const Position2D> uavs,
                                    std::span<const Position2D> users,
                                    const NetworkConfig& config) {
  const double hit = required_rate(true, config.qoe);
  const double miss = required_rate(false, config.qoe);
  const std::vector<bool> cached = cached_flags(b, uavs, users, config);
  std::vector<double> c_th(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) c_th[i] = cached[i] ? hit : miss;
  return c_th;
}

double drift_penalty_upper_bound(const VirtualQueues& qs, std::span<const double> c_th,
                                 std::span<const double> gamma,
                                 std::span<const double> powers_mw,
                                 std::span<const double> rates, const NetworkConfig& config) {
  const std::size_t n = qs.q.size();
  const std::size_t jn = qs.h.size();
  if (c_th.size() != n || gamma.size() != n || rates.size() != n || powers_mw.size() != jn) {
    throw std::invalid_argument("drift_penalty_upper_bound: size mismatch");
  }
  const double v = config.lyapunov.v;
  const double rho = config.lyapunov.rho;
  const PowerLimits& pw = config.power;
  const double u_max = config.qoe.u_dl_max;

  double bound = static_cast<double>(n) * u_max * u_max +
                 static_cast<double>(jn) * pw.p_hat * pw.p_hat / 2.0;
  for (std::size_t j = 0; j < jn; ++j) {
    const double h = positive_part(qs.h[j]);
    bound += -h * (pw.p_tilde - pw.p_circuit) + v * rho * pw.p_circuit +
             (v * rho + h) * powers_mw[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double q = positive_part(qs.q[i]);
    const double z = positive_part(qs.z[i]);
    bound += q * config.lyapunov.phi * c_th[i] - v * std::log2(1.0 + gamma[i]) + z * gamma[i] -
             (q + z) * rates[i];
  }
  return bound;
}

StabilityMetrics stability_metrics(const VirtualQueues& qs, std::size_t t) {
  if (t == 0) throw std::invalid_argument("stability_metrics: t must be >= 1");
  auto peak = [t](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, positive_part(x));
    return m / static_cast<double>(t);
  };
  return {peak(qs.q), peak(qs.z), peak(qs.h)};
}

}  // namespace uavcache
