#include "uavcache/paoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace uavcache {

double PaoiParams::arrival(std::size_t q) const {
  if (q == 0) throw std::invalid_argument("PaoiParams::arrival: intervals start at 1");
  return vartheta_w[std::min(q - 1, vartheta_w.size() - 1)];
}

double PaoiParams::probability(std::size_t user) const {
  if (user >= users) throw std::out_of_range("PaoiParams::probability: no such user");
  return request_prob.empty() ? 1.0 / static_cast<double>(users) : request_prob[user];
}

void PaoiParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("PaoiParams: ") + what);
  };
  require(n_c > 0.0, "n_c must be positive");
  require(packet_bits >= 0.0 && content_bits > 0.0, "packet and content sizes");
  require(!vartheta_w.empty(), "vartheta_w must not be empty");
  require(std::all_of(vartheta_w.begin(), vartheta_w.end(), [](double v) { return v >= 0.0; }),
          "vartheta_w must be non-negative");
  require(users > 0 && uavs > 0, "need users and UAVs");
  require(interval_s > 0.0 && delta_t_s >= 0.0, "time units");
  if (!request_prob.empty()) {
    require(request_prob.size() == users, "one request probability per user");
    double total = 0.0;
    for (double p : request_prob) {
      require(p >= 0.0, "request probabilities must be non-negative");
      total += p;
    }
    require(std::abs(total - 1.0) < 1e-9, "request probabilities must sum to 1");
  }
}

double preprocessing_packets(double bits_per_s, double packet_bits, double interval_s) {
  if (!(packet_bits > 0.0)) throw std::invalid_argument("preprocessing_packets: packet size");
  return bits_per_s * interval_s / packet_bits;
}

std::int64_t queue_step(std::int64_t accumulated, std::int64_t arrivals, std::int64_t n_c) {
  return std::max<std::int64_t>(accumulated + arrivals - n_c, 0);
}

std::vector<double> accumulated_intensity(const PaoiParams& params, std::size_t q_max) {
  if (q_max == 0) throw std::invalid_argument("accumulated_intensity: q_max must be >= 1");
  std::vector<double> a(q_max, 0.0);
  for (std::size_t q = 2; q <= q_max; ++q) {
    const double total = params.arrival(q - 1) + a[q - 2];
    a[q - 1] = std::max(0.0, total - params.n_c * (1.0 - std::exp(-total)));
  }
  return a;
}

double BacklogPmf::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < pmf.size(); ++n) m += static_cast<double>(n) * pmf[n];
  return m;
}

namespace {

std::vector<double> poisson_pmf(double lambda, std::size_t kmax) {
  std::vector<double> p(kmax + 1, 0.0);
  if (lambda == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double log_l = std::log(lambda);
  for (std::size_t k = 0; k <= kmax; ++k) {
    const double kd = static_cast<double>(k);
    p[k] = std::exp(kd * log_l - lambda - std::lgamma(kd + 1.0));
  }
  return p;
}

BacklogPmf pmf_at(const PaoiParams& params, std::size_t q, std::size_t truncation, long n_c) {
  std::vector<double> f{1.0};
  double lost = 0.0;
  for (std::size_t s = 1; s < q; ++s) {
    const std::vector<double> pois = poisson_pmf(params.arrival(s), truncation);
    std::vector<double> sum(std::min(f.size() + pois.size() - 1, truncation + 1), 0.0);
    for (std::size_t a = 0; a < f.size(); ++a) {
      if (f[a] == 0.0) continue;
      for (std::size_t z = 0; z < pois.size() && a + z < sum.size(); ++z) sum[a + z] += f[a] * pois[z];
    }
    std::vector<double> next(sum.size() > static_cast<std::size_t>(n_c) ? sum.size() - n_c : 1, 0.0);
    for (std::size_t v = 0; v < sum.size(); ++v) {
      const long shifted = static_cast<long>(v) - n_c;
      next[shifted > 0 ? static_cast<std::size_t>(shifted) : 0] += sum[v];
    }
    f = std::move(next);
  }
  double total = 0.0;
  for (double v : f) total += v;
  lost = std::max(0.0, 1.0 - total);
  f.resize(truncation + 1, 0.0);
  return {std::move(f), lost};
}

}  // namespace

BacklogPmf exact_pmf(const PaoiParams& params, std::size_t q, std::size_t truncation) {
  params.validate();
  if (q == 0) throw std::invalid_argument("exact_pmf: q must be >= 1");
  const double n_c = params.n_c;
  if (std::abs(n_c - std::round(n_c)) > 1e-12) {
    throw std::invalid_argument("exact_pmf: n_c must be an integer");
  }
  const long nc = std::lround(n_c);
  if (truncation != 0) return pmf_at(params, q, truncation, nc);

  double mass = 0.0;
  for (std::size_t s = 1; s < q; ++s) mass += params.arrival(s);
  auto cut = static_cast<std::size_t>(std::ceil(mass + 10.0 * std::sqrt(mass) + n_c + 30.0));
  for (int attempt = 0; attempt < 8; ++attempt) {
    BacklogPmf out = pmf_at(params, q, cut, nc);
    if (out.mass_deficit < 1e-12) return out;
    cut *= 2;
  }
  return pmf_at(params, q, cut, nc);
}

std::vector<std::vector<std::uint64_t>> simulate_backlog(const PaoiParams& params,
                                                         std::size_t q_max, std::size_t runs,
                                                         std::uint64_t seed) {
  params.validate();
  const auto nc = static_cast<std::int64_t>(std::llround(params.n_c));
  std::vector<std::vector<std::uint64_t>> hist(q_max);
  std::vector<std::poisson_distribution<std::int64_t>> arrivals;
  for (std::size_t s = 1; s <= q_max; ++s) {
    arrivals.emplace_back(std::max(params.arrival(s), std::numeric_limits<double>::min()));
  }
  std::mt19937_64 rng(seed);
  for (std::size_t run = 0; run < runs; ++run) {
    std::int64_t backlog = 0;  // N_a^1 = 0
    for (std::size_t q = 1; q <= q_max; ++q) {
      if (q > 1) {
        const std::int64_t w = params.arrival(q - 1) > 0.0 ? arrivals[q - 2](rng) : 0;
        backlog = queue_step(backlog, w, nc);
      }
      auto& row = hist[q - 1];
      const auto idx = static_cast<std::size_t>(backlog);
      if (row.size() <= idx) row.resize(idx + 1, 0);
      ++row[idx];
    }
  }
  return hist;
}

double expected_edge_arrival(const PaoiParams& params) {
  return (params.packet_bits + params.content_bits) * static_cast<double>(params.users) *
         params.delta_t_s / (2.0 * static_cast<double>(params.uavs) * params.content_bits);
}

double measured_edge_arrival(const PaoiParams& params, std::size_t slots, double total_served) {
  if (!(total_served > 0.0)) return std::numeric_limits<double>::infinity();
  return static_cast<double>(params.users) * (params.packet_bits + params.content_bits) *
         static_cast<double>(slots) * params.delta_t_s / (2.0 * params.content_bits * total_served);
}

double paoi_with_edge(const PaoiParams& params, std::size_t q, std::size_t m, std::size_t user,
                      double vartheta_a, double edge_s) {
  if (q == 0 || m == 0) throw std::invalid_argument("expected_paoi: q and m start at 1");
  double intervals = 1.0 / params.n_c;
  if (q > 1) intervals += vartheta_a / params.n_c;
  if (m > 1) {
    const double lambda = params.arrival(q) * params.probability(user);
    if (!(lambda > 0.0)) {
      throw std::domain_error("expected_paoi: user receives no arrivals at this interval");
    }
    intervals += 1.0 / lambda;
  }
  return intervals * params.interval_s + edge_s;
}

double expected_paoi(const PaoiParams& params, std::size_t q, std::size_t m, std::size_t user,
                     double vartheta_a) {
  return paoi_with_edge(params, q, m, user, vartheta_a, expected_edge_arrival(params));
}

}  // namespace uavcache
