#include "uavcache/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavcache {

namespace {

enum Stream : std::uint64_t { kUavInit = 0, kUsers = 1, kQueues = 2, kDelivery = 3, kPowerInit = 4 };

Position2D uniform_point(const NetworkConfig& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, net.area_width_m);
  std::uniform_real_distribution<double> uy(0.0, net.area_height_m);
  const double x = ux(rng);
  return {x, uy(rng)};
}

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kF2e2cp: return "f2e2cp";
    case Algorithm::kSuwpc: return "suwpc";
    case Algorithm::kSupc: return "supc";
    case Algorithm::kCtjo: return "ctjo";
    case Algorithm::kCtuc: return "ctuc";
    case Algorithm::kCtwuc: return "ctwuc";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

const std::array<Algorithm, 6>& all_algorithms() {
  static const std::array<Algorithm, 6> all{Algorithm::kF2e2cp, Algorithm::kSuwpc,
                                            Algorithm::kSupc,   Algorithm::kCtjo,
                                            Algorithm::kCtuc,   Algorithm::kCtwuc};
  return all;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

UserField initial_users(const NetworkConfig& net, std::mt19937_64& rng) {
  UserField f;
  f.pos.resize(net.users);
  f.waypoint.resize(net.users);
  for (std::size_t i = 0; i < net.users; ++i) {
    f.pos[i] = uniform_point(net, rng);
    f.waypoint[i] = uniform_point(net, rng);
  }
  return f;
}

void user_mobility_step(UserField& users, const NetworkConfig& net, double speed_mps,
                        std::mt19937_64& rng) {
  const double step = speed_mps * net.qoe.delta_t_s;
  if (!(step > 0.0)) return;
  for (std::size_t i = 0; i < users.pos.size(); ++i) {
    double left = step;
    for (int leg = 0; leg < 8 && left > 0.0; ++leg) {
      Position2D& p = users.pos[i];
      const Position2D w = users.waypoint[i];
      const double d = distance(p, w);
      if (d <= left) {
        p = w;
        left -= d;
        users.waypoint[i] = uniform_point(net, rng);
      } else {
        p.x += (w.x - p.x) * left / d;
        p.y += (w.y - p.y) * left / d;
        left = 0.0;
      }
    }
  }
}

std::vector<Position2D> initial_uav_positions(const NetworkConfig& net, std::mt19937_64& rng) {
  std::vector<Position2D> x;
  for (std::size_t j = 0; j < net.uavs; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      const Position2D c = uniform_point(net, rng);
      placed = std::all_of(x.begin(), x.end(),
                           [&](const Position2D& o) { return distance(o, c) >= net.d_min_m; });
      if (placed) x.push_back(c);
    }
    if (!placed) throw std::runtime_error("initial_uav_positions: cannot honour d_min in the area");
  }
  return x;
}

std::vector<Circle> baseline_circles(const NetworkConfig& net) {
  const double spacing = net.area_width_m / static_cast<double>(net.uavs);
  const double radius = std::min(spacing / 2.0, net.area_height_m / 2.0);
  std::vector<Circle> circles(net.uavs);
  for (std::size_t k = 0; k < net.uavs; ++k) {
    circles[k] = {{(static_cast<double>(k) + 0.5) * spacing, net.area_height_m / 2.0}, radius};
  }
  return circles;
}

std::vector<Position2D> circle_positions(const NetworkConfig& net, double speed_mps,
                                         std::size_t slot) {
  const std::vector<Circle> circles = baseline_circles(net);
  std::vector<Position2D> x(circles.size());
  for (std::size_t k = 0; k < circles.size(); ++k) {
    const double angle =
        speed_mps * net.qoe.delta_t_s * static_cast<double>(slot) / circles[k].radius;
    x[k] = {circles[k].centre.x + circles[k].radius * std::cos(angle),
            circles[k].centre.y + circles[k].radius * std::sin(angle)};
  }
  return x;
}

Eigen::MatrixXi random_delivery(std::span<const Position2D> uavs,
                                std::span<const Position2D> users, const NetworkConfig& net,
                                std::mt19937_64& rng) {
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(users.size()),
                                            static_cast<Eigen::Index>(uavs.size()));
  std::vector<bool> taken(users.size(), false);
  const double radius = net.los_radius();
  for (std::size_t j = 0; j < uavs.size(); ++j) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (!taken[i] && distance(uavs[j], users[i]) <= radius) pool.push_back(i);
    }
    if (pool.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t i = pool[pick(rng)];
    taken[i] = true;
    s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1;
  }
  return s;
}

RunTrace run_algorithm(const ExperimentConfig& config, Algorithm algo, std::size_t rep) {
  const NetworkConfig& net = config.network;
  const std::size_t n = net.users;
  const std::size_t jn = net.uavs;
  const bool circular =
      algo == Algorithm::kCtjo || algo == Algorithm::kCtuc || algo == Algorithm::kCtwuc;
  const bool full_power = algo == Algorithm::kSupc || algo == Algorithm::kCtuc;

  std::mt19937_64 uav_rng = make_stream(config.seed, rep, kUavInit);
  std::mt19937_64 user_rng = make_stream(config.seed, rep, kUsers);
  std::mt19937_64 queue_rng = make_stream(config.seed, rep, kQueues);
  std::mt19937_64 delivery_rng = make_stream(config.seed, rep, kDelivery);
  std::mt19937_64 power_rng = make_stream(config.seed, rep, kPowerInit);

  UserField users = initial_users(net, user_rng);
  VirtualQueues qs = initial_queues(n, jn, queue_rng);
  std::vector<Position2D> x =
      circular ? circle_positions(net, config.circle_speed_mps, 0) : initial_uav_positions(net, uav_rng);
  std::vector<double> p(jn);
  std::uniform_real_distribution<double> unit_power(net.power.p_min, net.power.p_max());
  for (double& v : p) v = unit_power(power_rng);
  if (full_power) std::fill(p.begin(), p.end(), net.power.p_max());

  Dpt2Options options;
  options.r_max = config.r_max;
  const std::vector<double> p_tilde(jn, net.power.p_tilde);

  RunTrace trace;
  trace.algo = algo;
  trace.rep = rep;
  trace.slots.reserve(config.slots);
  for (std::size_t t = 1; t <= config.slots; ++t) {
    user_mobility_step(users, net, config.user_speed_mps, user_rng);
    const std::vector<double> gamma = aut_solve(qs.z, net.lyapunov.v, net.qoe.u_dl_max);
    const FleetState fleet{x, p, users.pos};
    const Placement b = algo == Algorithm::kCtwuc
                            ? Placement::Zero(static_cast<Eigen::Index>(jn), static_cast<Eigen::Index>(n))
                            : cpt_place(qs.q, fleet, net);
    const std::vector<double> c_th = rate_thresholds(b, x, users.pos, net);

    const std::vector<Position2D> x_start = circular ? circle_positions(net, config.circle_speed_mps, t) : x;
    Dpt2Options opt = options;
    Eigen::MatrixXi fixed;
    switch (algo) {
      case Algorithm::kF2e2cp:
        break;
      case Algorithm::kSuwpc:
      case Algorithm::kCtwuc:
        opt.optimize_trajectory = false;
        opt.optimize_delivery = false;
        fixed = random_delivery(x_start, users.pos, net, delivery_rng);
        break;
      case Algorithm::kSupc:
        opt.optimize_trajectory = false;
        opt.optimize_delivery = false;
        opt.optimize_power = false;
        fixed = random_delivery(x_start, users.pos, net, delivery_rng);
        break;
      case Algorithm::kCtjo:
        opt.optimize_trajectory = false;
        break;
      case Algorithm::kCtuc:
        opt.optimize_trajectory = false;
        opt.optimize_power = false;
        break;
    }
    Dpt2Result res = algorithm1(qs, b, c_th, x_start, p, users.pos, net, opt, fixed);
    res.decision.gamma = gamma;

    const std::vector<double> u =
        slot_rates(res.decision.s, res.decision.x, res.decision.p_mw, users.pos, net);
    std::vector<double> p_tot(jn);
    for (std::size_t k = 0; k < jn; ++k) p_tot[k] = res.decision.p_mw[k] + net.power.p_circuit;
    qs = update_queues(qs, c_th, u, p_tot, gamma, net.lyapunov, p_tilde);

    SlotRecord rec;
    rec.t = t;
    rec.serve = serving_uav(res.decision.s);
    rec.p_mw = res.decision.p_mw;
    rec.x = res.decision.x;
    rec.users = users.pos;
    rec.u = u;
    rec.c_th = c_th;
    rec.stability = stability_metrics(qs, t);
    rec.sca_iterations = res.iterations;
    rec.safeguard_rejections = res.safeguard_rejections;
    rec.max_raw_increase = res.max_raw_increase;
    rec.solver_failures = res.solver_failures;
    rec.floor_dropped = res.floor_dropped;
    rec.objective_trace = std::move(res.objective_trace);
    trace.slots.push_back(std::move(rec));

    x = res.decision.x;
    p = res.decision.p_mw;
  }
  trace.summary = metrics(trace, config);
  return trace;
}

RunTrace run_f2e2cp(const ExperimentConfig& config, std::size_t rep) {
  return run_algorithm(config, Algorithm::kF2e2cp, rep);
}

RunTrace run_benchmark(const ExperimentConfig& config, std::size_t rep, Algorithm algo) {
  if (algo == Algorithm::kF2e2cp) {
    throw std::invalid_argument("run_benchmark: f2e2cp is not a benchmark");
  }
  return run_algorithm(config, algo, rep);
}

}  // namespace uavcache
