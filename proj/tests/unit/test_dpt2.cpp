#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "uavcache/dpt2.hpp"

using namespace uavcache;

namespace {

struct Instance {
  NetworkConfig net;
  std::vector<Position2D> users;
  std::vector<Position2D> x;
  std::vector<double> p;
  VirtualQueues qs;
  Eigen::MatrixXi s;
};

// Hand-written rate of user i served by UAV j.
double true_rate(const Instance& in, std::size_t i, std::size_t j, std::span<const Position2D> x,
                 std::span<const double> p) {
  const double k = in.net.radio.los_constant();
  const double g2 = in.net.radio.altitude_m * in.net.radio.altitude_m;
  double sig = 0.0;
  double intf = in.net.radio.noise_mw();
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double dx = x[m].x - in.users[i].x;
    const double dy = x[m].y - in.users[i].y;
    const double rx = p[m] * k / (g2 + dx * dx + dy * dy);
    (m == j ? sig : intf) += rx;
  }
  return std::log2(1.0 + sig / intf);
}

Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t jn) {
  std::uniform_real_distribution<double> pos(0.0, 500.0), pw(1.0, 480.0), q(-0.2, 1.5);
  Instance in;
  in.net = default_network(n, jn);
  for (std::size_t j = 0; j < jn; ++j) {
    in.x.push_back({pos(rng), pos(rng)});
    in.p.push_back(pw(rng));
  }
  for (std::size_t i = 0; i < n; ++i) {
    // users near some UAV so LoS pairs exist
    const Position2D c = in.x[i % jn];
    std::uniform_real_distribution<double> off(-45.0, 45.0);
    in.users.push_back({std::clamp(c.x + off(rng), 0.0, 500.0), std::clamp(c.y + off(rng), 0.0, 500.0)});
    in.qs.q.push_back(q(rng));
    in.qs.z.push_back(q(rng));
  }
  for (std::size_t j = 0; j < jn; ++j) in.qs.h.push_back(q(rng));
  in.s = Eigen::MatrixXi::Zero(static_cast<int>(n), static_cast<int>(jn));
  for (std::size_t j = 0; j < std::min(n, jn); ++j) in.s(static_cast<int>(j), static_cast<int>(j)) = 1;
  return in;
}

}  // namespace

TEST(DeliveryCosts, ZeroQueuesGiveZeroWeights) {
  std::mt19937_64 rng(1);
  Instance in = random_instance(rng, 4, 2);
  for (double& v : in.qs.q) v = -std::abs(v);
  for (double& v : in.qs.z) v = 0.0;
  in.users = {in.x[0], in.x[1], in.x[0], in.x[1]};
  const Eigen::MatrixXd c = delivery_costs(in.qs, in.x, in.p, in.users, in.net);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (std::isfinite(c(i, j))) EXPECT_EQ(c(i, j), 0.0);
    }
  }
  EXPECT_EQ(c(0, 0), 0.0);
}

TEST(DeliveryCosts, UserOutOfRangeStaysIdle) {
  std::mt19937_64 rng(2);
  Instance in = random_instance(rng, 3, 2);
  in.x = {{0.0, 0.0}, {500.0, 0.0}};
  in.users = {{10.0, 10.0}, {250.0, 400.0}, {490.0, 5.0}};
  in.qs.q = {1.0, 5.0, 1.0};
  const Eigen::MatrixXd c = delivery_costs(in.qs, in.x, in.p, in.users, in.net);
  EXPECT_FALSE(std::isfinite(c(1, 0)));
  EXPECT_FALSE(std::isfinite(c(1, 1)));
  EXPECT_EQ(solve_assignment(c).row(1).sum(), 0);
}

TEST(DeliveryCosts, RandomInstanceReevaluated) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const Instance in = random_instance(rng, 5, 3);
    const Eigen::MatrixXd c = delivery_costs(in.qs, in.x, in.p, in.users, in.net);
    const double r = in.net.los_radius();
    for (std::size_t i = 0; i < 5; ++i) {
      const double w = std::max(in.qs.q[i], 0.0) + std::max(in.qs.z[i], 0.0);
      for (std::size_t j = 0; j < 3; ++j) {
        if (std::hypot(in.x[j].x - in.users[i].x, in.x[j].y - in.users[i].y) > r) {
          EXPECT_FALSE(std::isfinite(c(static_cast<int>(i), static_cast<int>(j))));
        } else {
          EXPECT_NEAR(c(static_cast<int>(i), static_cast<int>(j)), w * true_rate(in, i, j, in.x, in.p), 1e-10);
        }
      }
    }
  }
}

TEST(ServingUav, RejectsDoubleService) {
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(2, 2);
  s(0, 0) = s(1, 0) = 1;
  EXPECT_THROW(serving_uav(s), std::invalid_argument);
  s(1, 0) = 0;
  s(0, 1) = 1;
  EXPECT_THROW(serving_uav(s), std::invalid_argument);
}

TEST(TrajectoryBounds, TightAtExpansionPoint) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const Instance in = random_instance(rng, 3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const double lb = bounds::trajectory_rate_lower(in.users[i], i, in.x, in.p, in.x, in.net.radio);
      EXPECT_NEAR(lb, true_rate(in, i, i, in.x, in.p), 1e-9);
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        const double d2 = std::pow(in.x[a].x - in.x[b].x, 2) + std::pow(in.x[a].y - in.x[b].y, 2);
        EXPECT_NEAR(bounds::separation_lower(in.x[a], in.x[b], in.x[a], in.x[b]), d2, 1e-9 * std::max(1.0, d2));
      }
    }
  }
}

TEST(TrajectoryBounds, BelowTrueValues) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> step(0.0, 60.0);
  for (int rep = 0; rep < 500; ++rep) {
    const Instance in = random_instance(rng, 3, 3);
    std::vector<Position2D> x = in.x;
    for (auto& v : x) v = {v.x + step(rng), v.y + step(rng)};
    for (std::size_t i = 0; i < 3; ++i) {
      const double lb = bounds::trajectory_rate_lower(in.users[i], i, in.x, in.p, x, in.net.radio);
      EXPECT_LE(lb, true_rate(in, i, i, x, in.p) + 1e-9);
      const double d2 = std::pow(x[i].x - in.users[i].x, 2) + std::pow(x[i].y - in.users[i].y, 2);
      EXPECT_LE(bounds::sq_distance_lower(in.x[i], in.users[i], x[i]), d2 + 1e-9 * std::max(1.0, d2));
    }
  }
}

TEST(PowerBounds, SingleUavIsExact) {
  const std::vector<double> h{3e-10};
  const std::vector<double> p_r{100.0};
  const double n0 = RadioParams{}.noise_mw();
  for (double p : {1.0, 50.0, 480.0}) {
    const std::vector<double> pv{p};
    EXPECT_NEAR(bounds::power_rate_lower(h, 0, p_r, pv, n0), std::log2(1.0 + p * h[0] / n0), 1e-12);
  }
}

TEST(PowerBounds, TightAndValid) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pw(1.0, 480.0);
  for (int rep = 0; rep < 500; ++rep) {
    const Instance in = random_instance(rng, 3, 3);
    const Eigen::MatrixXd g = gain_matrix(in.x, in.users, in.net.radio);
    std::vector<double> p{pw(rng), pw(rng), pw(rng)};
    for (std::size_t i = 0; i < 3; ++i) {
      const std::vector<double> h{g(static_cast<int>(i), 0), g(static_cast<int>(i), 1), g(static_cast<int>(i), 2)};
      const double n0 = in.net.radio.noise_mw();
      EXPECT_NEAR(bounds::power_rate_lower(h, i, in.p, in.p, n0), true_rate(in, i, i, in.x, in.p), 1e-9);
      EXPECT_LE(bounds::power_rate_lower(h, i, in.p, p, n0), true_rate(in, i, i, in.x, p) + 1e-9);
    }
  }
}

TEST(Programs, OraclesPassFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Instance in = random_instance(rng, 4, 3);
    const std::vector<double> floor(4, 0.1);
    const TrajectoryProgram tp =
        build_trajectory_program({in.x, in.p}, in.s, in.qs, in.users, in.x, floor, in.net);
    const PowerProgram pp = build_power_program({in.x, in.p}, in.s, in.qs, in.users, floor, in.net);
    for (const ConvexProgram* prog : {&tp.program, &pp.program}) {
      for (int k = 0; k < 5; ++k) {
        Vector z = prog->start;
        for (int d = 0; d < z.size(); ++d) z(d) += 0.5 * nd(rng);
        EXPECT_LT(check_gradient(prog->objective, z), 1e-5);
        for (const Oracle& o : prog->constraints) {
          if (!std::isfinite(o.eval(z, nullptr, nullptr))) continue;
          EXPECT_LT(check_gradient(o, z), 1e-5);
          if (o.has_hessian) EXPECT_LT(check_hessian(o, z), 1e-5);
        }
      }
    }
  }
}

TEST(Algorithm1, SingleUserUnderUavKeepsPositionAndBalancesPower) {
  NetworkConfig net = default_network(1, 1);
  VirtualQueues qs{{0.2}, {0.0}, {0.0}};
  const std::vector<Position2D> users{{250.0, 250.0}};
  const std::vector<Position2D> x{{250.0, 250.0}};
  const std::vector<double> p{40.0};
  Placement b = Placement::Ones(1, 1);
  const std::vector<double> c_th{required_rate(true, net.qoe)};
  const Dpt2Result res = algorithm1(qs, b, c_th, x, p, users, net);
  EXPECT_NEAR(res.decision.x[0].x, 250.0, 1e-3);
  EXPECT_NEAR(res.decision.x[0].y, 250.0, 1e-3);
  EXPECT_EQ(res.decision.s(0, 0), 1);

  const double g = net.radio.los_constant() / (200.0 * 200.0);
  const double n0 = net.radio.noise_mw();
  const double vr = net.lyapunov.v * net.lyapunov.rho;
  double best_p = 0.0;
  double best = 1e300;
  for (double q = 1.0; q <= 480.0; q += 0.01) {
    const double f = vr * q - 0.2 * std::log2(1.0 + q * g / n0);
    if (f < best) {
      best = f;
      best_p = q;
    }
  }
  EXPECT_NEAR(res.decision.p_mw[0], best_p, 0.05);
}

TEST(Algorithm1, IdleQueuesDrivePowerToFloor) {
  std::mt19937_64 rng(8);
  Instance in = random_instance(rng, 4, 3);
  for (double& v : in.qs.q) v = 0.0;
  for (double& v : in.qs.z) v = -1.0;
  for (double& v : in.qs.h) v = 0.0;
  const std::vector<double> c_th(4, 0.2);
  const Dpt2Result res = algorithm1(in.qs, Placement::Zero(3, 4), c_th, in.x, in.p, in.users, in.net);
  EXPECT_EQ(res.decision.s.sum(), 0);
  for (double v : res.decision.p_mw) EXPECT_EQ(v, in.net.power.p_min);
}

TEST(Algorithm1, ObjectiveNeverRises) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    Instance in = random_instance(rng, 3, 2);
    in.x[1] = {std::fmod(in.x[0].x + 150.0, 500.0), in.x[0].y};
    const std::vector<double> c_th(3, 0.15458841495534119);
    const Dpt2Result res = algorithm1(in.qs, Placement::Zero(2, 3), c_th, in.x, in.p, in.users, in.net);
    for (std::size_t k = 1; k < res.objective_trace.size(); ++k) {
      EXPECT_LE(res.objective_trace[k],
                res.objective_trace[k - 1] + 1e-6 * std::max(1.0, std::abs(res.objective_trace[k - 1])));
    }
    EXPECT_LE(res.max_raw_increase, 1e-6);
    // decision stays inside the physical limits
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_LE(std::hypot(res.decision.x[j].x - in.x[j].x, res.decision.x[j].y - in.x[j].y),
                in.net.e_max_m + 1e-6);
      EXPECT_GE(res.decision.p_mw[j], in.net.power.p_min);
      EXPECT_LE(res.decision.p_mw[j], in.net.power.p_max());
    }
    EXPECT_GE(std::hypot(res.decision.x[0].x - res.decision.x[1].x, res.decision.x[0].y - res.decision.x[1].y),
              in.net.d_min_m - 1e-6);
  }
}

TEST(Algorithm1, FixedDeliveryIsKept) {
  std::mt19937_64 rng(10);
  Instance in = random_instance(rng, 3, 2);
  Dpt2Options opt;
  opt.optimize_delivery = false;
  opt.optimize_trajectory = false;
  const std::vector<double> c_th(3, 0.15);
  const Dpt2Result res = algorithm1(in.qs, Placement::Zero(2, 3), c_th, in.x, in.p, in.users, in.net, opt, in.s);
  EXPECT_EQ(res.decision.s, in.s);
  EXPECT_THROW(algorithm1(in.qs, Placement::Zero(2, 3), c_th, in.x, in.p, in.users, in.net, opt,
                          Eigen::MatrixXi::Zero(2, 2)),
               std::invalid_argument);
}
