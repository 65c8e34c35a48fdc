#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "uavcache/harness.hpp"

using namespace uavcache;

namespace {

ExperimentConfig tiny(std::size_t n, std::size_t j, std::size_t t, Algorithm a) {
  ExperimentConfig c;
  c.network = default_network(n, j);
  c.slots = t;
  c.reps = 1;
  c.seed = 3;
  c.algorithms = {a};
  c.threads = 1;
  c.finalize();
  return c;
}

std::string trace_text(const std::vector<RunTrace>& runs) {
  std::ostringstream os;
  write_trace_csv(os, runs);
  return os.str();
}

}  // namespace

TEST(Mobility, StandingStill) {
  const NetworkConfig net = default_network(20, 2);
  std::mt19937_64 rng(1);
  UserField f = initial_users(net, rng);
  const std::vector<Position2D> before = f.pos;
  user_mobility_step(f, net, 0.0, rng);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(f.pos[i].x, before[i].x);
    EXPECT_EQ(f.pos[i].y, before[i].y);
  }
}

TEST(Mobility, SpeedCapAndContainment) {
  const NetworkConfig net = default_network(10, 2);
  std::mt19937_64 rng(2);
  UserField f = initial_users(net, rng);
  const double cap = 3.0 * net.qoe.delta_t_s;
  for (int step = 0; step < 10000; ++step) {
    const std::vector<Position2D> before = f.pos;
    user_mobility_step(f, net, 3.0, rng);
    for (std::size_t i = 0; i < f.pos.size(); ++i) {
      ASSERT_LE(distance(before[i], f.pos[i]), cap + 1e-9);
      ASSERT_TRUE(net.inside(f.pos[i]));
    }
  }
}

TEST(InitialUavs, SafetyDistance) {
  const NetworkConfig net = default_network(10, 6);
  std::mt19937_64 rng(3);
  const std::vector<Position2D> x = initial_uav_positions(net, rng);
  for (std::size_t a = 0; a < x.size(); ++a) {
    EXPECT_TRUE(net.inside(x[a]));
    for (std::size_t b = a + 1; b < x.size(); ++b) EXPECT_GE(distance(x[a], x[b]), net.d_min_m);
  }
}

TEST(RandomDelivery, OneToOneInsideLos) {
  const NetworkConfig net = default_network(30, 4);
  std::mt19937_64 rng(4);
  const UserField f = initial_users(net, rng);
  const std::vector<Position2D> x = initial_uav_positions(net, rng);
  const Eigen::MatrixXi s = random_delivery(x, f.pos, net, rng);
  EXPECT_LE(s.rowwise().sum().maxCoeff(), 1);
  EXPECT_LE(s.colwise().sum().maxCoeff(), 1);
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      if (s(i, j) != 0) EXPECT_LE(distance(x[j], f.pos[i]), net.los_radius());
}

TEST(Jain, Extremes) {
  const std::vector<double> equal(5, 2.5);
  EXPECT_NEAR(jain_index(equal), 1.0, 1e-15);
  std::vector<double> one(8, 0.0);
  one[3] = 4.0;
  EXPECT_NEAR(jain_index(one), 1.0 / 8.0, 1e-15);
  EXPECT_EQ(jain_index(std::vector<double>(4, 0.0)), 0.0);
}

TEST(Metrics, RecomputedFromTrace) {
  const ExperimentConfig c = tiny(6, 2, 6, Algorithm::kF2e2cp);
  const RunTrace tr = run_algorithm(c, Algorithm::kF2e2cp, 0);
  std::vector<double> u(6, 0.0), p(2, 0.0);
  for (const SlotRecord& r : tr.slots) {
    for (int i = 0; i < 6; ++i) u[i] += r.u[i] / 6.0;
    for (int j = 0; j < 2; ++j) p[j] += (r.p_mw[j] + 20.0) / 6.0;
  }
  double profit = 0.0, sum = 0.0, sq = 0.0;
  for (double v : u) {
    profit += std::log2(1.0 + v);
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(tr.summary.profit, profit, 1e-12);
  EXPECT_NEAR(tr.summary.total_power_mw, p[0] + p[1], 1e-9);
  EXPECT_NEAR(tr.summary.energy_eff, tr.summary.profit - 0.1 * tr.summary.total_power_mw, 1e-12);
  EXPECT_NEAR(tr.summary.jain, sum * sum / (6.0 * sq), 1e-12);
}

TEST(Harness, OneSlotByHand) {
  const ExperimentConfig c = tiny(2, 1, 1, Algorithm::kF2e2cp);
  const RunTrace tr = run_algorithm(c, Algorithm::kF2e2cp, 0);
  const NetworkConfig& net = c.network;

  std::mt19937_64 uav_rng = make_stream(c.seed, 0, 0);
  std::mt19937_64 user_rng = make_stream(c.seed, 0, 1);
  std::mt19937_64 queue_rng = make_stream(c.seed, 0, 2);
  std::mt19937_64 power_rng = make_stream(c.seed, 0, 4);
  UserField users = initial_users(net, user_rng);
  VirtualQueues qs = initial_queues(2, 1, queue_rng);
  const std::vector<Position2D> x = initial_uav_positions(net, uav_rng);
  std::uniform_real_distribution<double> pw(net.power.p_min, net.power.p_max());
  const std::vector<double> p{pw(power_rng)};
  user_mobility_step(users, net, c.user_speed_mps, user_rng);
  const Placement b = cpt_place(qs.q, FleetState{x, p, users.pos}, net);
  const std::vector<double> c_th = rate_thresholds(b, x, users.pos, net);
  Dpt2Options opt;
  opt.r_max = c.r_max;
  const Dpt2Result res = algorithm1(qs, b, c_th, x, p, users.pos, net, opt);
  const std::vector<double> u = slot_rates(res.decision.s, res.decision.x, res.decision.p_mw, users.pos, net);

  const SlotRecord& r = tr.slots.at(0);
  EXPECT_EQ(r.p_mw, res.decision.p_mw);
  EXPECT_EQ(r.u, u);
  EXPECT_EQ(r.c_th, c_th);
  EXPECT_EQ(r.x[0].x, res.decision.x[0].x);
  EXPECT_EQ(r.users[1].y, users.pos[1].y);

  const std::vector<double> gamma = aut_solve(qs.z, net.lyapunov.v, net.qoe.u_dl_max);
  const std::vector<double> p_tot{res.decision.p_mw[0] + net.power.p_circuit};
  const std::vector<double> p_tilde{net.power.p_tilde};
  const VirtualQueues next = update_queues(qs, c_th, u, p_tot, gamma, net.lyapunov, p_tilde);
  const StabilityMetrics sm = stability_metrics(next, 1);
  EXPECT_EQ(r.stability.s_q, sm.s_q);
  EXPECT_EQ(r.stability.s_z, sm.s_z);
  EXPECT_EQ(r.stability.s_h, sm.s_h);
}

TEST(Baselines, FullPowerIsConstant) {
  for (Algorithm a : {Algorithm::kSupc, Algorithm::kCtuc}) {
    const RunTrace tr = run_algorithm(tiny(8, 2, 5, a), a, 0);
    for (const SlotRecord& r : tr.slots)
      for (double v : r.p_mw) EXPECT_EQ(v, 480.0);
  }
}

TEST(Baselines, CircularFlightStaysOnCircles) {
  const ExperimentConfig c = tiny(8, 3, 6, Algorithm::kCtjo);
  const RunTrace tr = run_algorithm(c, Algorithm::kCtjo, 0);
  const std::vector<Circle> circles = baseline_circles(c.network);
  for (const SlotRecord& r : tr.slots) {
    for (std::size_t k = 0; k < circles.size(); ++k) {
      EXPECT_NEAR(distance(r.x[k], circles[k].centre), circles[k].radius, 1e-9);
    }
  }
  // circles are disjoint and inside the area
  for (std::size_t k = 0; k + 1 < circles.size(); ++k) {
    EXPECT_LE(circles[k].centre.x + circles[k].radius, circles[k + 1].centre.x - circles[k + 1].radius + 1e-9);
  }
}

TEST(Baselines, NoCachingUsesUncachedThreshold) {
  const ExperimentConfig c = tiny(8, 2, 5, Algorithm::kCtwuc);
  const RunTrace tr = run_algorithm(c, Algorithm::kCtwuc, 0);
  for (const SlotRecord& r : tr.slots)
    for (double v : r.c_th) EXPECT_EQ(v, required_rate(false, c.network.qoe));
}

TEST(Baselines, F2e2cpIsNotABenchmark) {
  EXPECT_THROW(run_benchmark(tiny(4, 1, 1, Algorithm::kSuwpc), 0, Algorithm::kF2e2cp), std::invalid_argument);
}

TEST(Experiment, DeterministicCsv) {
  ExperimentConfig c = tiny(8, 2, 4, Algorithm::kF2e2cp);
  c.algorithms = {Algorithm::kF2e2cp, Algorithm::kSuwpc};
  c.reps = 2;
  c.threads = 2;
  const ExperimentResult a = run_experiment(c);
  c.threads = 1;
  const ExperimentResult b = run_experiment(c);
  EXPECT_EQ(trace_text(a.runs), trace_text(b.runs));
}

TEST(Experiment, SingleRepSummaryIsTheRun) {
  const ExperimentConfig c = tiny(6, 2, 4, Algorithm::kSuwpc);
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.summaries.size(), 1u);
  const RunSummary& one = r.runs[0].summary;
  EXPECT_EQ(r.summaries[0].mean.profit, one.profit);
  EXPECT_EQ(r.summaries[0].mean.jain, one.jain);
  const std::vector<RunSummary> twice{one, one};
  EXPECT_EQ(average(twice).energy_eff, one.energy_eff);
}

TEST(Experiment, WritesBothCsvFiles) {
  ExperimentConfig c = tiny(50, 4, 2, Algorithm::kF2e2cp);
  c.algorithms.assign(all_algorithms().begin(), all_algorithms().end());
  const auto dir = std::filesystem::temp_directory_path() / "uavcache_csv_test";
  std::filesystem::remove_all(dir);
  run_experiment(c, dir);
  std::ifstream trace(dir / "trace.csv");
  std::ifstream summary(dir / "summary.csv");
  std::string header;
  std::getline(trace, header);
  EXPECT_EQ(header, "t,rep,algo,entity,id,x,y,p_mw,u_bpshz,SQ,SZ,SH");
  std::getline(summary, header);
  EXPECT_EQ(header, "algo,reps,profit,total_power_mw,energy_eff,jain,epaoi_theory_s,epaoi_empirical_s");
  int rows = 0;
  for (std::string line; std::getline(summary, line);) ++rows;
  EXPECT_EQ(rows, 6);
  std::filesystem::remove_all(dir);
}

TEST(Config, ParsesAndRejects) {
  ExperimentConfig c;
  apply_config_text(c, "# comment\nN = 12\nJ=3\nT = 7\nalgo = suwpc, ctjo\nV = 0.5\n");
  EXPECT_EQ(c.network.users, 12u);
  EXPECT_EQ(c.network.uavs, 3u);
  EXPECT_EQ(c.slots, 7u);
  EXPECT_EQ(c.algorithms.size(), 2u);
  EXPECT_EQ(c.network.lyapunov.v, 0.5);
  EXPECT_NEAR(c.network.lyapunov.phi, 0.25, 1e-15);
  EXPECT_THROW(apply_config_text(c, "N = 3\nbogus = 1\n"), std::invalid_argument);
  EXPECT_THROW(apply_config_text(c, "N = three\n"), std::invalid_argument);
  EXPECT_THROW(apply_config_text(c, "algo = nope\n"), std::invalid_argument);
  EXPECT_THROW(parse_algorithm("F2E2CP"), std::invalid_argument);
  for (Algorithm a : all_algorithms()) EXPECT_EQ(parse_algorithm(to_string(a)), a);
}
