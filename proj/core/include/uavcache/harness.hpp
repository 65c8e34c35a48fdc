#pragma once

// Slot-level simulation of the proposed scheme and the five baselines,
// repeated over seeds, with metrics and CSV output.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "uavcache/dpt2.hpp"
#include "uavcache/lyapunov.hpp"
#include "uavcache/network.hpp"
#include "uavcache/paoi.hpp"

namespace uavcache {

enum class Algorithm { kF2e2cp, kSuwpc, kSupc, kCtjo, kCtuc, kCtwuc };

std::string to_string(Algorithm algo);
/// Accepts the lower-case names used on the command line. Throws
/// std::invalid_argument for anything else.
Algorithm parse_algorithm(std::string_view name);
const std::array<Algorithm, 6>& all_algorithms();

struct ExperimentConfig {
  NetworkConfig network = default_network(50, 4);
  std::size_t slots = 500;
  std::size_t reps = 15;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::kF2e2cp};
  int r_max = 200;
  double user_speed_mps = 1.0;
  double circle_speed_mps = 10.0;
  double packet_bits = 40000.0;     // l = 5000 bytes
  double preprocess_bps = 1.0e6;    // preprocessing speed in bits/s
  double vartheta_w = 25.0;         // new packets per interval
  std::size_t paoi_q = 100;         // interval at which the PAoI is reported
  double paoi_interval_s = 1.0;
  unsigned threads = 0;             // 0: one per hardware thread

  /// Re-derives dependent network fields and validates everything.
  void finalize();
  PaoiParams paoi() const;
};

/// Applies `key = value` lines (# starts a comment). Unknown keys and
/// malformed values throw std::invalid_argument naming the line.
void apply_config_text(ExperimentConfig& config, std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
const std::vector<std::string>& config_keys();

/// Independent stream for (seed, rep, purpose).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t purpose);

struct UserField {
  std::vector<Position2D> pos;
  std::vector<Position2D> waypoint;
};

UserField initial_users(const NetworkConfig& net, std::mt19937_64& rng);

/// Random waypoint: each user walks at most speed * delta_t toward its
/// waypoint and draws a new one on arrival.
void user_mobility_step(UserField& users, const NetworkConfig& net, double speed_mps,
                        std::mt19937_64& rng);

/// Uniform positions resampled until every pair is at least d_min apart.
std::vector<Position2D> initial_uav_positions(const NetworkConfig& net, std::mt19937_64& rng);

/// UAV positions on the circular baseline trajectories after `slot` slots.
std::vector<Position2D> circle_positions(const NetworkConfig& net, double speed_mps,
                                         std::size_t slot);
struct Circle {
  Position2D centre;
  double radius = 0.0;
};
std::vector<Circle> baseline_circles(const NetworkConfig& net);

/// Each UAV in turn serves a uniformly chosen free user inside its LoS radius.
Eigen::MatrixXi random_delivery(std::span<const Position2D> uavs,
                                std::span<const Position2D> users, const NetworkConfig& net,
                                std::mt19937_64& rng);

struct SlotRecord {
  std::size_t t = 0;
  std::vector<int> serve;            // per user, -1 when idle
  std::vector<double> p_mw;          // per UAV transmit power
  std::vector<Position2D> x;         // per UAV
  std::vector<Position2D> users;
  std::vector<double> u;             // per user rate
  std::vector<double> c_th;
  StabilityMetrics stability;
  int sca_iterations = 0;
  int safeguard_rejections = 0;
  double max_raw_increase = 0.0;
  int solver_failures = 0;
  bool floor_dropped = false;
  std::vector<double> objective_trace;
};

struct RunSummary {
  double profit = 0.0;
  double total_power_mw = 0.0;
  double energy_eff = 0.0;
  double jain = 0.0;
  double served_total = 0.0;
  double epaoi_theory_s = 0.0;
  double epaoi_empirical_s = 0.0;
};

struct RunTrace {
  Algorithm algo = Algorithm::kF2e2cp;
  std::size_t rep = 0;
  std::vector<SlotRecord> slots;
  RunSummary summary;
};

RunTrace run_algorithm(const ExperimentConfig& config, Algorithm algo, std::size_t rep);
RunTrace run_f2e2cp(const ExperimentConfig& config, std::size_t rep);
/// Throws std::invalid_argument for Algorithm::kF2e2cp.
RunTrace run_benchmark(const ExperimentConfig& config, std::size_t rep, Algorithm algo);

/// Jain index of the given values; 0 when all are zero.
double jain_index(std::span<const double> values);
RunSummary metrics(const RunTrace& trace, const ExperimentConfig& config);
RunSummary average(std::span<const RunSummary> runs);

struct AlgorithmSummary {
  Algorithm algo = Algorithm::kF2e2cp;
  std::size_t reps = 0;
  RunSummary mean;
};

struct ExperimentResult {
  std::vector<RunTrace> runs;  // algorithm-major, then rep
  std::vector<AlgorithmSummary> summaries;
};

/// Runs every configured algorithm for every rep; reps run concurrently.
/// Writes trace.csv and summary.csv into `out_dir` unless it is empty.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir = {});

void write_trace_csv(std::ostream& os, const std::vector<RunTrace>& runs);
void write_summary_csv(std::ostream& os, const std::vector<AlgorithmSummary>& summaries);

}  // namespace uavcache
