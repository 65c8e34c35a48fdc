#include <benchmark/benchmark.h>

#include <random>

#include "uavcache/dpt2.hpp"
#include "uavcache/harness.hpp"
#include "uavcache/paoi.hpp"
#include "uavcache/solver.hpp"

using namespace uavcache;

namespace {

struct Slot {
  NetworkConfig net;
  VirtualQueues qs;
  std::vector<Position2D> x;
  std::vector<double> p;
  UserField users;
  Placement b;
  std::vector<double> c_th;
};

Slot make_slot(std::size_t n, std::size_t j) {
  Slot s;
  s.net = default_network(n, j);
  std::mt19937_64 rng(7);
  s.users = initial_users(s.net, rng);
  s.qs = initial_queues(n, j, rng);
  s.x = initial_uav_positions(s.net, rng);
  s.p.assign(j, 0.5 * s.net.power.p_max());
  s.b = cpt_place(s.qs.q, FleetState{s.x, s.p, s.users.pos}, s.net);
  s.c_th = rate_thresholds(s.b, s.x, s.users.pos, s.net);
  return s;
}

void BM_Assignment(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(-1.0, 5.0);
  Matrix m(n, n / 2 + 1);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = w(rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(m));
}
BENCHMARK(BM_Assignment)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_PowerProgram(benchmark::State& state) {
  const Slot s = make_slot(30, static_cast<std::size_t>(state.range(0)));
  Eigen::MatrixXi serve = Eigen::MatrixXi::Zero(30, state.range(0));
  for (Eigen::Index k = 0; k < state.range(0); ++k) serve(k, k) = 1;
  const PowerProgram prog = build_power_program({s.x, s.p}, serve, s.qs, s.users.pos, {}, s.net);
  for (auto _ : state) benchmark::DoNotOptimize(solve_convex(prog.program));
}
BENCHMARK(BM_PowerProgram)->Arg(3)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_Algorithm1(benchmark::State& state) {
  const Slot s = make_slot(30, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(algorithm1(s.qs, s.b, s.c_th, s.x, s.p, s.users.pos, s.net));
  }
}
BENCHMARK(BM_Algorithm1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ExactPmf(benchmark::State& state) {
  PaoiParams p;
  p.delta_t_s = 9.703185070067072;
  for (auto _ : state) benchmark::DoNotOptimize(exact_pmf(p, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_ExactPmf)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
