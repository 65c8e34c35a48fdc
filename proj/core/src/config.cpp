#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "uavcache/harness.hpp"

namespace uavcache {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_count(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<Algorithm> to_algorithms(std::string_view v) {
  if (v == "all") return {all_algorithms().begin(), all_algorithms().end()};
  std::vector<Algorithm> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_algorithm(trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty algorithm list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> m;
    auto real = [&m](const char* key, double ExperimentConfig::*field) {
      m[key] = [field](ExperimentConfig& c, std::string_view v) { c.*field = to_double(v); };
    };
    auto net = [&m](const char* key, auto access) {
      m[key] = [access](ExperimentConfig& c, std::string_view v) { access(c.network) = to_double(v); };
    };
    net("a", [](NetworkConfig& n) -> double& { return n.radio.a; });
    net("b", [](NetworkConfig& n) -> double& { return n.radio.b; });
    net("eta_los", [](NetworkConfig& n) -> double& { return n.radio.eta_los_db; });
    net("eta_nlos", [](NetworkConfig& n) -> double& { return n.radio.eta_nlos_db; });
    net("f_c", [](NetworkConfig& n) -> double& { return n.radio.carrier_hz; });
    net("c", [](NetworkConfig& n) -> double& { return n.radio.light_speed; });
    net("theta_th", [](NetworkConfig& n) -> double& { return n.radio.theta_th_deg; });
    net("W", [](NetworkConfig& n) -> double& { return n.radio.bandwidth_hz; });
    net("g", [](NetworkConfig& n) -> double& { return n.radio.altitude_m; });
    net("D_hat", [](NetworkConfig& n) -> double& { return n.qoe.d_hat_s; });
    net("D_ul", [](NetworkConfig& n) -> double& { return n.qoe.d_ul_s; });
    net("D_th", [](NetworkConfig& n) -> double& { return n.qoe.d_th; });
    net("L", [](NetworkConfig& n) -> double& { return n.qoe.content_bits; });
    net("p_tilde", [](NetworkConfig& n) -> double& { return n.power.p_tilde; });
    net("p_hat", [](NetworkConfig& n) -> double& { return n.power.p_hat; });
    net("p_c", [](NetworkConfig& n) -> double& { return n.power.p_circuit; });
    net("p_min", [](NetworkConfig& n) -> double& { return n.power.p_min; });
    net("e_max", [](NetworkConfig& n) -> double& { return n.e_max_m; });
    net("d_min", [](NetworkConfig& n) -> double& { return n.d_min_m; });
    net("area_width", [](NetworkConfig& n) -> double& { return n.area_width_m; });
    net("area_height", [](NetworkConfig& n) -> double& { return n.area_height_m; });
    net("V", [](NetworkConfig& n) -> double& { return n.lyapunov.v; });
    net("rho", [](NetworkConfig& n) -> double& { return n.lyapunov.rho; });
    m["sigma2_dbm"] = [](ExperimentConfig& c, std::string_view v) {
      c.network.radio.noise_psd_mw_per_hz = dbm_per_hz_to_mw(to_double(v));
    };
    m["N"] = [](ExperimentConfig& c, std::string_view v) { c.network.users = to_count(v); };
    m["J"] = [](ExperimentConfig& c, std::string_view v) { c.network.uavs = to_count(v); };
    m["T"] = [](ExperimentConfig& c, std::string_view v) { c.slots = to_count(v); };
    m["reps"] = [](ExperimentConfig& c, std::string_view v) { c.reps = to_count(v); };
    m["seed"] = [](ExperimentConfig& c, std::string_view v) { c.seed = to_count(v); };
    m["r_max"] = [](ExperimentConfig& c, std::string_view v) {
      c.r_max = static_cast<int>(to_count(v));
    };
    m["threads"] = [](ExperimentConfig& c, std::string_view v) {
      c.threads = static_cast<unsigned>(to_count(v));
    };
    m["paoi_q"] = [](ExperimentConfig& c, std::string_view v) { c.paoi_q = to_count(v); };
    m["algo"] = [](ExperimentConfig& c, std::string_view v) { c.algorithms = to_algorithms(v); };
    real("user_speed", &ExperimentConfig::user_speed_mps);
    real("circle_speed", &ExperimentConfig::circle_speed_mps);
    real("l_bits", &ExperimentConfig::packet_bits);
    real("preprocess_bps", &ExperimentConfig::preprocess_bps);
    real("vartheta_w", &ExperimentConfig::vartheta_w);
    real("paoi_interval", &ExperimentConfig::paoi_interval_s);
    return m;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void ExperimentConfig::finalize() {
  uavcache::finalize(network);
  if (slots == 0 || reps == 0 || r_max <= 0) {
    throw std::invalid_argument("ExperimentConfig: T, reps and r_max must be positive");
  }
  if (algorithms.empty()) throw std::invalid_argument("ExperimentConfig: no algorithm selected");
  if (user_speed_mps < 0.0 || !(circle_speed_mps > 0.0)) {
    throw std::invalid_argument("ExperimentConfig: speeds must be non-negative (circle speed positive)");
  }
  if (paoi_q == 0) throw std::invalid_argument("ExperimentConfig: paoi_q must be >= 1");
  paoi().validate();
}

PaoiParams ExperimentConfig::paoi() const {
  PaoiParams p;
  p.packet_bits = packet_bits;
  p.content_bits = network.qoe.content_bits;
  p.n_c = preprocessing_packets(preprocess_bps, packet_bits, paoi_interval_s);
  p.vartheta_w = {vartheta_w};
  p.users = network.users;
  p.uavs = network.uavs;
  p.delta_t_s = network.qoe.delta_t_s;
  p.interval_s = paoi_interval_s;
  return p;
}

void apply_config_text(ExperimentConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument(where + "unknown key '" + std::string(key) + "'");
    }
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + std::string(key) + ": " + e.what());
    }
  }
  config.finalize();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig config;
  apply_config_text(config, buf.str());
  return config;
}

}  // namespace uavcache
