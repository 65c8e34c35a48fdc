#pragma once

// Peak age of information: preprocessing-queue evolution, the Poisson
// approximation of the backlog, its exact PMF, a Monte-Carlo oracle and the
// closed-form expected PAoI.
//
// Time is counted in preprocessing intervals of `interval_s` seconds.

#include <cstdint>
#include <cstddef>
#include <vector>

namespace uavcache {

struct PaoiParams {
  double packet_bits = 40000.0;       // l
  double content_bits = 1.5e8;        // L
  double n_c = 25.0;                  // packets preprocessed per interval
  std::vector<double> vartheta_w{25.0};  // new-arrival intensity for q = 1, 2, ...; last entry repeats
  std::vector<double> request_prob;   // Pr_i; empty means uniform
  std::size_t users = 30;
  std::size_t uavs = 5;
  double delta_t_s = 0.0;             // communication slot duration
  double interval_s = 1.0;

  double arrival(std::size_t q) const;  // vartheta_w^q, q >= 1
  double probability(std::size_t user) const;
  void validate() const;
};

/// n_c for a preprocessor that clears `bits_per_s` using packets of `packet_bits`.
double preprocessing_packets(double bits_per_s, double packet_bits, double interval_s);

/// [accumulated + arrivals - n_c]^+.
std::int64_t queue_step(std::int64_t accumulated, std::int64_t arrivals, std::int64_t n_c);

/// Poisson-approximated backlog intensities; element q - 1 holds vartheta_a^q.
std::vector<double> accumulated_intensity(const PaoiParams& params, std::size_t q_max);

struct BacklogPmf {
  std::vector<double> pmf;  // P(N_a^q = n), n = 0 .. truncation
  double mass_deficit = 0.0;
  double mean() const;
};

/// Exact PMF of the backlog at interval q. `truncation` 0 picks
/// mean + 10 sqrt(mean) + n_c + 30 over the cumulative arrival mass and grows
/// it until the deficit is below 1e-12. Requires an integer n_c.
BacklogPmf exact_pmf(const PaoiParams& params, std::size_t q, std::size_t truncation = 0);

/// Histogram of N_a^q over `runs` simulated queues, one row per q = 1..q_max.
std::vector<std::vector<std::uint64_t>> simulate_backlog(const PaoiParams& params,
                                                         std::size_t q_max, std::size_t runs,
                                                         std::uint64_t seed);

/// (l + L) N delta_t / (2 J L), seconds.
double expected_edge_arrival(const PaoiParams& params);

/// Edge arrival duration implied by a measured assignment count:
/// N (l + L) T delta_t / (2 L total_served); +inf when nothing was served.
double measured_edge_arrival(const PaoiParams& params, std::size_t slots, double total_served);

/// Expected PAoI (seconds) of packet m generated at interval q for `user`,
/// with an explicit edge-arrival term. The inter-generation term 1 / lambda
/// is present for m > 1 only; the backlog term uses vartheta_a^q (0 at q = 1).
/// Throws std::domain_error when m > 1 and lambda_i^q = 0.
double paoi_with_edge(const PaoiParams& params, std::size_t q, std::size_t m, std::size_t user,
                      double vartheta_a, double edge_s);

double expected_paoi(const PaoiParams& params, std::size_t q, std::size_t m, std::size_t user,
                     double vartheta_a);

}  // namespace uavcache
