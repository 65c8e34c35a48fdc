#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "uavcache/harness.hpp"

namespace uavcache {

double jain_index(std::span<const double> values) {
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  if (sq == 0.0) return 0.0;
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

RunSummary metrics(const RunTrace& trace, const ExperimentConfig& config) {
  const NetworkConfig& net = config.network;
  const double slots = static_cast<double>(trace.slots.size());
  std::vector<double> u_bar(net.users, 0.0);
  std::vector<double> p_bar(net.uavs, 0.0);
  RunSummary s;
  for (const SlotRecord& rec : trace.slots) {
    for (std::size_t i = 0; i < net.users; ++i) {
      u_bar[i] += rec.u[i];
      if (rec.serve[i] >= 0) s.served_total += 1.0;
    }
    for (std::size_t j = 0; j < net.uavs; ++j) p_bar[j] += rec.p_mw[j] + net.power.p_circuit;
  }
  for (double& v : u_bar) v /= slots;
  for (double& v : p_bar) v /= slots;
  for (double v : u_bar) s.profit += std::log2(1.0 + v);
  for (double v : p_bar) s.total_power_mw += v;
  s.energy_eff = s.profit - net.lyapunov.rho * s.total_power_mw;
  s.jain = jain_index(u_bar);

  const PaoiParams paoi = config.paoi();
  const double backlog = accumulated_intensity(paoi, config.paoi_q).back();
  s.epaoi_theory_s =
      paoi_with_edge(paoi, config.paoi_q, 2, 0, backlog, expected_edge_arrival(paoi));
  s.epaoi_empirical_s = paoi_with_edge(paoi, config.paoi_q, 2, 0, backlog,
                                       measured_edge_arrival(paoi, trace.slots.size(), s.served_total));
  return s;
}

RunSummary average(std::span<const RunSummary> runs) {
  RunSummary m;
  if (runs.empty()) return m;
  for (const RunSummary& r : runs) {
    m.profit += r.profit;
    m.total_power_mw += r.total_power_mw;
    m.energy_eff += r.energy_eff;
    m.jain += r.jain;
    m.served_total += r.served_total;
    m.epaoi_theory_s += r.epaoi_theory_s;
    m.epaoi_empirical_s += r.epaoi_empirical_s;
  }
  const double k = static_cast<double>(runs.size());
  m.profit /= k;
  m.total_power_mw /= k;
  m.energy_eff /= k;
  m.jain /= k;
  m.served_total /= k;
  m.epaoi_theory_s /= k;
  m.epaoi_empirical_s /= k;
  return m;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<RunTrace>& runs) {
  os << "t,rep,algo,entity,id,x,y,p_mw,u_bpshz,SQ,SZ,SH\n";
  for (const RunTrace& run : runs) {
    const std::string head_tail = "," + std::to_string(run.rep) + "," + to_string(run.algo) + ",";
    for (const SlotRecord& rec : run.slots) {
      const std::string head = std::to_string(rec.t) + head_tail;
      os << head << "slot,,,,,," << num(rec.stability.s_q) << ',' << num(rec.stability.s_z) << ','
         << num(rec.stability.s_h) << '\n';
      for (std::size_t j = 0; j < rec.x.size(); ++j) {
        os << head << "uav," << j << ',' << num(rec.x[j].x) << ',' << num(rec.x[j].y) << ','
           << num(rec.p_mw[j]) << ",,,,\n";
      }
      for (std::size_t i = 0; i < rec.users.size(); ++i) {
        os << head << "user," << i << ',' << num(rec.users[i].x) << ',' << num(rec.users[i].y)
           << ",," << num(rec.u[i]) << ",,,\n";
      }
    }
  }
}

void write_summary_csv(std::ostream& os, const std::vector<AlgorithmSummary>& summaries) {
  os << "algo,reps,profit,total_power_mw,energy_eff,jain,epaoi_theory_s,epaoi_empirical_s\n";
  for (const AlgorithmSummary& s : summaries) {
    os << to_string(s.algo) << ',' << s.reps << ',' << num(s.mean.profit) << ','
       << num(s.mean.total_power_mw) << ',' << num(s.mean.energy_eff) << ',' << num(s.mean.jain)
       << ',' << num(s.mean.epaoi_theory_s) << ',' << num(s.mean.epaoi_empirical_s) << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const std::size_t n_algo = config.algorithms.size();
  const std::size_t total = n_algo * config.reps;
  ExperimentResult result;
  result.runs.resize(total);

  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(total)));
  std::vector<std::exception_ptr> errors(total);
  auto work = [&](unsigned worker) {
    for (std::size_t task = worker; task < total; task += workers) {
      try {
        result.runs[task] = run_algorithm(config, config.algorithms[task / config.reps], task % config.reps);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t a = 0; a < n_algo; ++a) {
    std::vector<RunSummary> per_rep;
    for (std::size_t r = 0; r < config.reps; ++r) per_rep.push_back(result.runs[a * config.reps + r].summary);
    result.summaries.push_back({config.algorithms[a], config.reps, average(per_rep)});
  }

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, result.runs); });
    write_file(out_dir / "summary.csv",
               [&](std::ostream& os) { write_summary_csv(os, result.summaries); });
  }
  return result;
}

}  // namespace uavcache
