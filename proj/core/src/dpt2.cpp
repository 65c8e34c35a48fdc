#include "uavcache/dpt2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace uavcache {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

// Interior offset for slack-like start values.
double interior_gap(double scale) { return 1e-10 * std::max(1.0, std::abs(scale)); }

// Start value for eta: just below its upper limit and strictly above the floor.
double eta_start(double upper, double floor) {
  const double gap = interior_gap(upper);
  if (!std::isfinite(floor) || upper - floor > 2.0 * gap) return upper - gap;
  return 0.5 * (upper + floor);
}

// Without a QoE floor eta still needs a finite bound, or a lightly weighted
// eta drifts off to -inf and the barrier has no minimizer.
double eta_lower(double start, double floor) {
  return std::isfinite(floor) ? floor : std::min(start, 0.0) - 1.0;
}

}  // namespace

std::vector<double> rate_weights(const VirtualQueues& qs) {
  std::vector<double> w(qs.q.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = positive_part(qs.q[i]) + positive_part(qs.z[i]);
  return w;
}

Eigen::MatrixXd delivery_costs(const VirtualQueues& qs, std::span<const Position2D> x,
                               std::span<const double> p, std::span<const Position2D> users,
                               const NetworkConfig& config) {
  if (qs.q.size() != users.size() || p.size() != x.size()) {
    throw std::invalid_argument("delivery_costs: size mismatch");
  }
  const std::vector<double> w = rate_weights(qs);
  const Eigen::MatrixXd gains = gain_matrix(x, users, config.radio);
  const double radius = config.los_radius();
  Eigen::MatrixXd c(ix(users.size()), ix(x.size()));
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      c(ix(i), ix(j)) = distance(x[j], users[i]) > radius
                            ? -kInf
                            : w[i] * link_rate(i, j, gains, p, config.radio);
    }
  }
  return c;
}

std::vector<int> serving_uav(const Eigen::MatrixXi& s) {
  std::vector<int> serve(static_cast<std::size_t>(s.rows()), -1);
  std::vector<int> load(static_cast<std::size_t>(s.cols()), 0);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (s(i, j) == 0) continue;
      if (s(i, j) != 1 || serve[static_cast<std::size_t>(i)] >= 0 ||
          ++load[static_cast<std::size_t>(j)] > 1) {
        throw std::invalid_argument("serving_uav: delivery matrix violates the one-to-one rule");
      }
      serve[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
  }
  return serve;
}

std::vector<double> slot_rates(const Eigen::MatrixXi& s, std::span<const Position2D> x,
                               std::span<const double> p, std::span<const Position2D> users,
                               const NetworkConfig& config) {
  if (s.rows() != ix(users.size()) || s.cols() != ix(x.size()) || p.size() != x.size()) {
    throw std::invalid_argument("slot_rates: size mismatch");
  }
  const std::vector<int> serve = serving_uav(s);
  const Eigen::MatrixXd gains = gain_matrix(x, users, config.radio);
  std::vector<double> u(users.size(), 0.0);
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (serve[i] >= 0) u[i] = link_rate(i, static_cast<std::size_t>(serve[i]), gains, p, config.radio);
  }
  return u;
}

double dpt2_objective(const VirtualQueues& qs, const Eigen::MatrixXi& s,
                      std::span<const Position2D> x, std::span<const double> p,
                      std::span<const Position2D> users, const NetworkConfig& config) {
  const double vr = config.lyapunov.v * config.lyapunov.rho;
  double value = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) value += (vr + positive_part(qs.h[j])) * p[j];
  const std::vector<double> w = rate_weights(qs);
  const std::vector<double> u = slot_rates(s, x, p, users, config);
  for (std::size_t i = 0; i < u.size(); ++i) value -= w[i] * u[i];
  return value;
}

namespace bounds {

SignalExpansion::SignalExpansion(const Position2D& user, std::span<const Position2D> x_r,
                                 std::span<const double> p, const RadioParams& radio) {
  const double theta = radio.los_constant();
  const double g2 = radio.altitude_m * radio.altitude_m;
  const std::size_t jn = x_r.size();
  c.resize(jn);
  d_r.resize(jn);
  e.resize(jn);
  double s = radio.noise_mw();
  for (std::size_t k = 0; k < jn; ++k) {
    c[k] = p[k] * theta;
    d_r[k] = squared_distance(x_r[k], user);
    s += c[k] / (g2 + d_r[k]);
  }
  d0 = std::log2(s);
  for (std::size_t k = 0; k < jn; ++k) {
    const double a = g2 + d_r[k];
    e[k] = c[k] / (a * a * s * kLn2);
  }
}

double SignalExpansion::lower(const Position2D& user, std::span<const Position2D> x) const {
  double v = d0;
  for (std::size_t k = 0; k < c.size(); ++k) v -= e[k] * (squared_distance(x[k], user) - d_r[k]);
  return v;
}

double log_received(const Position2D& user, std::span<const Position2D> x,
                    std::span<const double> p, int skip, const RadioParams& radio) {
  const double theta = radio.los_constant();
  const double g2 = radio.altitude_m * radio.altitude_m;
  double s = radio.noise_mw();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (static_cast<int>(k) == skip) continue;
    s += p[k] * theta / (g2 + squared_distance(x[k], user));
  }
  return std::log2(s);
}

double sq_distance_lower(const Position2D& x_r, const Position2D& u, const Position2D& x) {
  const double ax = x_r.x - u.x;
  const double ay = x_r.y - u.y;
  return -(ax * ax + ay * ay) + 2.0 * (ax * (x.x - u.x) + ay * (x.y - u.y));
}

double separation_lower(const Position2D& xj_r, const Position2D& xk_r, const Position2D& xj,
                        const Position2D& xk) {
  const double zx = xj_r.x - xk_r.x;
  const double zy = xj_r.y - xk_r.y;
  return -(zx * zx + zy * zy) + 2.0 * (zx * (xj.x - xk.x) + zy * (xj.y - xk.y));
}

double interference_log_upper(std::span<const double> h, std::span<const double> p_r,
                              std::span<const double> p, std::size_t serving, double n0) {
  double s = n0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (k != serving) s += p_r[k] * h[k];
  }
  double v = std::log2(s);
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (k != serving) v += h[k] / (s * kLn2) * (p[k] - p_r[k]);
  }
  return v;
}

double trajectory_rate_lower(const Position2D& user, std::size_t serving,
                             std::span<const Position2D> x_r, std::span<const double> p,
                             std::span<const Position2D> x, const RadioParams& radio) {
  const SignalExpansion expansion(user, x_r, p, radio);
  const double g2 = radio.altitude_m * radio.altitude_m;
  double s = radio.noise_mw();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k == serving) continue;
    const double denom = g2 + sq_distance_lower(x_r[k], user, x[k]);
    if (!(denom > 0.0)) return -kInf;
    s += expansion.c[k] / denom;
  }
  return expansion.lower(user, x) - std::log2(s);
}

double power_rate_lower(std::span<const double> h, std::size_t serving,
                        std::span<const double> p_r, std::span<const double> p, double n0) {
  double s = n0;
  for (std::size_t k = 0; k < h.size(); ++k) s += p[k] * h[k];
  return std::log2(s) - interference_log_upper(h, p_r, p, serving, n0);
}

}  // namespace bounds

TrajectoryProgram build_trajectory_program(const ScaLocalPoint& local, const Eigen::MatrixXi& s,
                                           const VirtualQueues& qs,
                                           std::span<const Position2D> users,
                                           std::span<const Position2D> x_prev,
                                           std::span<const double> c_th_floor,
                                           const NetworkConfig& config) {
  const std::size_t jn = local.x_r.size();
  if (local.p_r.size() != jn || x_prev.size() != jn || s.cols() != ix(jn) ||
      s.rows() != ix(users.size()) || (!c_th_floor.empty() && c_th_floor.size() != users.size())) {
    throw std::invalid_argument("build_trajectory_program: size mismatch");
  }
  const std::vector<int> serve = serving_uav(s);
  const std::vector<double> w = rate_weights(qs);
  TrajectoryProgram out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (serve[i] >= 0) out.served.push_back(i);
  }
  const int n_u = static_cast<int>(out.served.size());
  const int j_count = static_cast<int>(jn);
  const int eta0 = 2 * j_count;
  const int slack0 = eta0 + n_u;
  const int dim = slack0 + n_u * (j_count - 1);
  // Slack index of (served slot u, UAV k), k != serving UAV j.
  auto slack = [slack0, j_count](int u, int k, int j) {
    return slack0 + u * (j_count - 1) + (k < j ? k : k - 1);
  };

  const RadioParams& radio = config.radio;
  const double g2 = radio.altitude_m * radio.altitude_m;
  const double n0 = radio.noise_mw();

  ConvexProgram& prog = out.program;
  prog.dim = dim;
  prog.lower = Vector::Constant(dim, -kInf);
  prog.upper = Vector::Constant(dim, kInf);
  prog.start = Vector::Zero(dim);
  for (int k = 0; k < j_count; ++k) {
    prog.lower(2 * k) = 0.0;
    prog.upper(2 * k) = config.area_width_m;
    prog.lower(2 * k + 1) = 0.0;
    prog.upper(2 * k + 1) = config.area_height_m;
    prog.start(2 * k) = local.x_r[static_cast<std::size_t>(k)].x;
    prog.start(2 * k + 1) = local.x_r[static_cast<std::size_t>(k)].y;
  }

  Vector objective_grad = Vector::Zero(dim);
  for (int u = 0; u < n_u; ++u) objective_grad(eta0 + u) = -w[out.served[static_cast<std::size_t>(u)]];
  prog.objective.affine = true;
  prog.objective.eval = [objective_grad](const Vector& z, Vector* g, Matrix*) {
    if (g != nullptr) *g = objective_grad;
    return objective_grad.dot(z);
  };

  for (int u = 0; u < n_u; ++u) {
    const std::size_t i = out.served[static_cast<std::size_t>(u)];
    const int j = serve[i];
    const Position2D user = users[i];
    const bounds::SignalExpansion expansion(user, local.x_r, local.p_r, radio);
    const double floor = c_th_floor.empty() ? -kInf : c_th_floor[i];
    const int eta = eta0 + u;
    prog.lower(eta) = floor;

    // eta <= D - sum_k E_k (|x_k - u|^2 - d_k^r) - log2(n0 + sum_{k != j} c_k / (g^2 + B_k))
    std::vector<int> b_index(jn, -1);
    for (int k = 0; k < j_count; ++k) {
      if (k != j) b_index[static_cast<std::size_t>(k)] = slack(u, k, j);
    }
    Oracle rate;
    rate.has_hessian = true;
    rate.eval = [expansion, user, j, eta, b_index, g2, n0, dim, j_count](const Vector& z, Vector* g,
                                                                         Matrix* h) {
      double s = n0;
      for (int k = 0; k < j_count; ++k) {
        if (k == j) continue;
        const double a = g2 + z(b_index[static_cast<std::size_t>(k)]);
        if (!(a > 0.0)) return kInf;
        s += expansion.c[static_cast<std::size_t>(k)] / a;
      }
      double v = z(eta) - expansion.d0 + std::log2(s);
      for (int k = 0; k < j_count; ++k) {
        const double dx = z(2 * k) - user.x;
        const double dy = z(2 * k + 1) - user.y;
        v += expansion.e[static_cast<std::size_t>(k)] *
             (dx * dx + dy * dy - expansion.d_r[static_cast<std::size_t>(k)]);
      }
      if (g != nullptr) {
        g->setZero(dim);
        (*g)(eta) = 1.0;
        for (int k = 0; k < j_count; ++k) {
          const double ek = expansion.e[static_cast<std::size_t>(k)];
          (*g)(2 * k) = 2.0 * ek * (z(2 * k) - user.x);
          (*g)(2 * k + 1) = 2.0 * ek * (z(2 * k + 1) - user.y);
          if (k == j) continue;
          const int bi = b_index[static_cast<std::size_t>(k)];
          const double a = g2 + z(bi);
          (*g)(bi) = -expansion.c[static_cast<std::size_t>(k)] / (a * a * s * kLn2);
        }
      }
      if (h != nullptr) {
        h->setZero(dim, dim);
        for (int k = 0; k < j_count; ++k) {
          const double ek = expansion.e[static_cast<std::size_t>(k)];
          (*h)(2 * k, 2 * k) = 2.0 * ek;
          (*h)(2 * k + 1, 2 * k + 1) = 2.0 * ek;
        }
        for (int k = 0; k < j_count; ++k) {
          if (k == j) continue;
          const int bk = b_index[static_cast<std::size_t>(k)];
          const double ak = g2 + z(bk);
          const double ck = expansion.c[static_cast<std::size_t>(k)];
          (*h)(bk, bk) += 2.0 * ck / (ak * ak * ak * s * kLn2);
          for (int l = 0; l < j_count; ++l) {
            if (l == j) continue;
            const int bl = b_index[static_cast<std::size_t>(l)];
            const double al = g2 + z(bl);
            const double cl = expansion.c[static_cast<std::size_t>(l)];
            (*h)(bk, bl) -= ck * cl / (ak * ak * al * al * s * s * kLn2);
          }
        }
      }
      return v;
    };
    prog.constraints.push_back(std::move(rate));

    // B_ik <= -|x_k^r - u|^2 + 2 (x_k^r - u)^T (x_k - u)
    double interference = n0;
    for (int k = 0; k < j_count; ++k) {
      if (k == j) continue;
      const Position2D xr = local.x_r[static_cast<std::size_t>(k)];
      const int bi = b_index[static_cast<std::size_t>(k)];
      const double lin = bounds::sq_distance_lower(xr, user, xr);
      prog.lower(bi) = -g2;
      prog.start(bi) = lin - interior_gap(lin);
      interference += expansion.c[static_cast<std::size_t>(k)] / (g2 + prog.start(bi));
      Oracle sl;
      sl.affine = true;
      sl.eval = [xr, user, k, bi, dim](const Vector& z, Vector* g, Matrix*) {
        const Position2D xk{z(2 * k), z(2 * k + 1)};
        if (g != nullptr) {
          g->setZero(dim);
          (*g)(bi) = 1.0;
          (*g)(2 * k) = -2.0 * (xr.x - user.x);
          (*g)(2 * k + 1) = -2.0 * (xr.y - user.y);
        }
        return z(bi) - bounds::sq_distance_lower(xr, user, xk);
      };
      prog.constraints.push_back(std::move(sl));
    }
    prog.start(eta) = eta_start(expansion.d0 - std::log2(interference), floor);
    prog.lower(eta) = eta_lower(prog.start(eta), floor);
  }

  // Linearized safety distance for every UAV pair.
  const double dmin2 = config.d_min_m * config.d_min_m;
  for (int a = 0; a < j_count; ++a) {
    for (int b = a + 1; b < j_count; ++b) {
      const Position2D xa = local.x_r[static_cast<std::size_t>(a)];
      const Position2D xb = local.x_r[static_cast<std::size_t>(b)];
      Oracle sep;
      sep.affine = true;
      sep.eval = [xa, xb, a, b, dmin2, dim](const Vector& z, Vector* g, Matrix*) {
        const double zx = xa.x - xb.x;
        const double zy = xa.y - xb.y;
        if (g != nullptr) {
          g->setZero(dim);
          (*g)(2 * a) = -2.0 * zx;
          (*g)(2 * a + 1) = -2.0 * zy;
          (*g)(2 * b) = 2.0 * zx;
          (*g)(2 * b + 1) = 2.0 * zy;
        }
        return dmin2 - bounds::separation_lower(xa, xb, {z(2 * a), z(2 * a + 1)},
                                                {z(2 * b), z(2 * b + 1)});
      };
      prog.constraints.push_back(std::move(sep));
    }
  }

  // |x - centre|^2 <= radius^2 on UAV k.
  auto disk = [dim](int k, Position2D centre, double radius) {
    Oracle o;
    o.has_hessian = true;
    const double r2 = radius * radius;
    o.eval = [k, centre, r2, dim](const Vector& z, Vector* g, Matrix* h) {
      const double dx = z(2 * k) - centre.x;
      const double dy = z(2 * k + 1) - centre.y;
      if (g != nullptr) {
        g->setZero(dim);
        (*g)(2 * k) = 2.0 * dx;
        (*g)(2 * k + 1) = 2.0 * dy;
      }
      if (h != nullptr) {
        h->setZero(dim, dim);
        (*h)(2 * k, 2 * k) = 2.0;
        (*h)(2 * k + 1, 2 * k + 1) = 2.0;
      }
      return dx * dx + dy * dy - r2;
    };
    return o;
  };
  for (int k = 0; k < j_count; ++k) {
    prog.constraints.push_back(disk(k, x_prev[static_cast<std::size_t>(k)], config.e_max_m));
  }
  const double radius = config.los_radius();
  for (std::size_t i : out.served) prog.constraints.push_back(disk(serve[i], users[i], radius));
  return out;
}

PowerProgram build_power_program(const ScaLocalPoint& local, const Eigen::MatrixXi& s,
                                 const VirtualQueues& qs, std::span<const Position2D> users,
                                 std::span<const double> c_th_floor, const NetworkConfig& config) {
  const std::size_t jn = local.x_r.size();
  if (local.p_r.size() != jn || s.cols() != ix(jn) || s.rows() != ix(users.size()) ||
      (!c_th_floor.empty() && c_th_floor.size() != users.size())) {
    throw std::invalid_argument("build_power_program: size mismatch");
  }
  const std::vector<int> serve = serving_uav(s);
  const std::vector<double> w = rate_weights(qs);
  PowerProgram out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (serve[i] >= 0) out.served.push_back(i);
  }
  const int n_u = static_cast<int>(out.served.size());
  const int j_count = static_cast<int>(jn);
  const int dim = j_count + n_u;
  const double n0 = config.radio.noise_mw();
  const Eigen::MatrixXd gains = gain_matrix(local.x_r, users, config.radio);

  ConvexProgram& prog = out.program;
  prog.dim = dim;
  prog.lower = Vector::Constant(dim, -kInf);
  prog.upper = Vector::Constant(dim, kInf);
  prog.start = Vector::Zero(dim);

  Vector objective_grad = Vector::Zero(dim);
  const double vr = config.lyapunov.v * config.lyapunov.rho;
  for (int k = 0; k < j_count; ++k) {
    prog.lower(k) = config.power.p_min;
    prog.upper(k) = config.power.p_max();
    prog.start(k) = local.p_r[static_cast<std::size_t>(k)];
    objective_grad(k) = vr + positive_part(qs.h[static_cast<std::size_t>(k)]);
  }
  for (int u = 0; u < n_u; ++u) objective_grad(j_count + u) = -w[out.served[static_cast<std::size_t>(u)]];
  prog.objective.affine = true;
  prog.objective.eval = [objective_grad](const Vector& z, Vector* g, Matrix*) {
    if (g != nullptr) *g = objective_grad;
    return objective_grad.dot(z);
  };

  for (int u = 0; u < n_u; ++u) {
    const std::size_t i = out.served[static_cast<std::size_t>(u)];
    const int j = serve[i];
    const int eta = j_count + u;
    std::vector<double> h(jn);
    for (std::size_t k = 0; k < jn; ++k) h[k] = gains(ix(i), ix(k));
    // Linearization of log2(n0 + sum_{k != j} p_k h_k) at p_r.
    double s_r = n0;
    for (int k = 0; k < j_count; ++k) {
      if (k != j) s_r += local.p_r[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(k)];
    }
    const double f = std::log2(s_r);
    std::vector<double> slope(jn, 0.0);
    for (int k = 0; k < j_count; ++k) {
      if (k != j) slope[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k)] / (s_r * kLn2);
    }
    const std::vector<double> p_r = local.p_r;
    Oracle rate;
    rate.has_hessian = true;
    rate.eval = [h, slope, p_r, f, n0, eta, dim, j_count](const Vector& z, Vector* g, Matrix* hess) {
      double s = n0;
      double lin = f;
      for (int k = 0; k < j_count; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        s += z(k) * h[kk];
        lin += slope[kk] * (z(k) - p_r[kk]);
      }
      if (!(s > 0.0)) return kInf;
      if (g != nullptr) {
        g->setZero(dim);
        (*g)(eta) = 1.0;
        for (int k = 0; k < j_count; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          (*g)(k) = -h[kk] / (s * kLn2) + slope[kk];
        }
      }
      if (hess != nullptr) {
        hess->setZero(dim, dim);
        const double scale = 1.0 / (s * s * kLn2);
        for (int a = 0; a < j_count; ++a) {
          for (int b = 0; b < j_count; ++b) {
            (*hess)(a, b) = h[static_cast<std::size_t>(a)] * h[static_cast<std::size_t>(b)] * scale;
          }
        }
      }
      return z(eta) - std::log2(s) + lin;
    };
    const double floor = c_th_floor.empty() ? -kInf : c_th_floor[i];
    prog.lower(eta) = floor;
    const double rate_now = bounds::power_rate_lower(h, static_cast<std::size_t>(j), p_r, p_r, n0);
    prog.start(eta) = eta_start(rate_now, floor);
    prog.lower(eta) = eta_lower(prog.start(eta), floor);
    prog.constraints.push_back(std::move(rate));
  }
  return out;
}

namespace {

// kReachable: the UAV can bring the user into LoS range this slot.
// kLos: already in LoS range. kStrict: in range and meeting the QoE floor.
enum class Gate { kReachable, kLos, kStrict };

struct Iterate {
  Eigen::MatrixXi s;
  std::vector<Position2D> x;
  std::vector<double> p;
  double value = 0.0;
};

struct SlotContext {
  const VirtualQueues& qs;
  std::span<const double> c_th;
  std::span<const Position2D> x_prev;
  std::span<const Position2D> users;
  const NetworkConfig& config;
  const Dpt2Options& options;
};

double objective_of(const SlotContext& ctx, const Eigen::MatrixXi& s,
                    std::span<const Position2D> x, std::span<const double> p) {
  return dpt2_objective(ctx.qs, s, x, p, ctx.users, ctx.config);
}

Eigen::MatrixXi assign(const SlotContext& ctx, const Iterate& it, Gate gate) {
  const std::size_t n = ctx.users.size();
  const std::size_t jn = it.x.size();
  const std::vector<double> w = rate_weights(ctx.qs);
  const Eigen::MatrixXd gains = gain_matrix(it.x, ctx.users, ctx.config.radio);
  const double radius = ctx.config.los_radius();
  Eigen::MatrixXd c(ix(n), ix(jn));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < jn; ++j) {
      const double rate = link_rate(i, j, gains, it.p, ctx.config.radio);
      bool ok = false;
      switch (gate) {
        case Gate::kReachable:
          ok = distance(ctx.x_prev[j], ctx.users[i]) <= ctx.config.e_max_m + radius;
          break;
        case Gate::kLos:
          ok = distance(it.x[j], ctx.users[i]) <= radius;
          break;
        case Gate::kStrict:
          ok = distance(it.x[j], ctx.users[i]) <= radius && rate >= ctx.c_th[i];
          break;
      }
      c(ix(i), ix(j)) = ok ? w[i] * rate : -kInf;
    }
  }
  return solve_assignment(c);
}

std::vector<Position2D> solve_trajectory(const SlotContext& ctx, const Iterate& it,
                                         std::span<const double> floor, Dpt2Result& res) {
  const TrajectoryProgram tp = build_trajectory_program({it.x, it.p}, it.s, ctx.qs, ctx.users,
                                                        ctx.x_prev, floor, ctx.config);
  if (tp.served.empty()) return it.x;
  const SolveReport report =
      solve_convex(tp.program, ctx.options.solver_tol, ctx.options.solver_max_iter);
  if (!report.converged) ++res.solver_failures;
  std::vector<Position2D> x(it.x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = {report.point(ix(2 * k)), report.point(ix(2 * k + 1))};
  }
  return x;
}

// Solves the power program; clears `floor_on` when the QoE floor cannot be met.
std::vector<double> solve_power(const SlotContext& ctx, const Iterate& it, bool& floor_on,
                                Dpt2Result& res) {
  const PowerLimits& pw = ctx.config.power;
  const std::vector<int> serve = serving_uav(it.s);
  if (std::none_of(serve.begin(), serve.end(), [](int j) { return j >= 0; })) {
    // Only the linear power cost remains.
    std::vector<double> p = it.p;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double coef = ctx.config.lyapunov.v * ctx.config.lyapunov.rho + positive_part(ctx.qs.h[k]);
      if (coef > 0.0) p[k] = pw.p_min;
    }
    return p;
  }
  SolveReport report;
  bool solved = false;
  if (floor_on) {
    // A lopsided warm start can hide a floor that uniform full power meets,
    // so expand there as well before giving up on the floor.
    const std::vector<double> uniform(it.p.size(), pw.p_max());
    for (const std::vector<double>* p_r : {&it.p, &uniform}) {
      try {
        const PowerProgram pp = build_power_program({it.x, *p_r}, it.s, ctx.qs, ctx.users,
                                                    ctx.c_th, ctx.config);
        report = solve_convex(pp.program, ctx.options.solver_tol, ctx.options.solver_max_iter);
        solved = true;
        break;
      } catch (const InfeasibleStartError&) {
      }
    }
    if (!solved) {
      floor_on = false;
      res.floor_dropped = true;
    }
  }
  if (!solved) {
    const PowerProgram pp = build_power_program({it.x, it.p}, it.s, ctx.qs, ctx.users, {}, ctx.config);
    report = solve_convex(pp.program, ctx.options.solver_tol, ctx.options.solver_max_iter);
  }
  if (!report.converged) ++res.solver_failures;
  std::vector<double> p(it.p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::clamp(report.point(ix(k)), pw.p_min, pw.p_max());
  }
  return p;
}

// Steps every serving UAV straight toward its user, as far as one slot of
// flight allows. Used as the first expansion point when the delivery was
// chosen by reachability: the warm start can sit on the far side of another
// UAV's user, where the linearized distances go negative.
std::vector<Position2D> lead_positions(const SlotContext& ctx, const Eigen::MatrixXi& s) {
  std::vector<Position2D> x(ctx.x_prev.begin(), ctx.x_prev.end());
  const std::vector<int> serve = serving_uav(s);
  for (std::size_t i = 0; i < serve.size(); ++i) {
    if (serve[i] < 0) continue;
    const auto j = static_cast<std::size_t>(serve[i]);
    const double d = distance(ctx.x_prev[j], ctx.users[i]);
    const double step = d > 0.0 ? std::min(1.0, 0.999 * ctx.config.e_max_m / d) : 0.0;
    x[j] = {ctx.x_prev[j].x + step * (ctx.users[i].x - ctx.x_prev[j].x),
            ctx.x_prev[j].y + step * (ctx.users[i].y - ctx.x_prev[j].y)};
  }
  return x;
}

// Accepts a candidate objective unless it rises above the current one.
bool keep(double candidate, Iterate& cur, bool record, Dpt2Result& res) {
  const double scale = std::max(1.0, std::abs(cur.value));
  const double rise = (candidate - cur.value) / scale;
  if (record) res.max_raw_increase = std::max(res.max_raw_increase, rise);
  if (rise > 1e-12) {
    ++res.safeguard_rejections;
    return false;
  }
  cur.value = candidate;
  return true;
}

}  // namespace

Dpt2Result algorithm1(const VirtualQueues& qs, const Placement& b, std::span<const double> c_th,
                      std::span<const Position2D> x_prev, std::span<const double> p_prev,
                      std::span<const Position2D> users, const NetworkConfig& config,
                      const Dpt2Options& options, const Eigen::MatrixXi& fixed_delivery) {
  const std::size_t n = users.size();
  const std::size_t jn = x_prev.size();
  if (qs.q.size() != n || qs.z.size() != n || qs.h.size() != jn || c_th.size() != n ||
      p_prev.size() != jn) {
    throw std::invalid_argument("algorithm1: size mismatch");
  }
  const SlotContext ctx{qs, c_th, x_prev, users, config, options};
  Dpt2Result res;

  Iterate cur;
  cur.x.assign(x_prev.begin(), x_prev.end());
  cur.p.resize(jn);
  for (std::size_t k = 0; k < jn; ++k) {
    cur.p[k] = std::clamp(p_prev[k], config.power.p_min, config.power.p_max());
  }
  if (options.optimize_delivery) {
    cur.s = Eigen::MatrixXi::Zero(ix(n), ix(jn));
  } else {
    if (fixed_delivery.rows() != ix(n) || fixed_delivery.cols() != ix(jn)) {
      throw std::invalid_argument("algorithm1: fixed delivery has the wrong shape");
    }
    serving_uav(fixed_delivery);
    cur.s = fixed_delivery;
  }
  cur.value = objective_of(ctx, cur.s, cur.x, cur.p);
  double previous = cur.value;
  // The QoE floor binds from the first power step on. Until then the warm
  // start powers say nothing about which pairs can meet it.
  bool floor_on = true;
  const std::span<const double> no_floor;

  for (int r = 0; r < options.r_max; ++r) {
    const bool first = r == 0;
    const bool moving_start = first && options.optimize_trajectory;

    if (options.optimize_delivery) {
      Gate gate = Gate::kStrict;
      if (first && options.optimize_trajectory) {
        gate = Gate::kReachable;
      } else if (first && options.optimize_power) {
        gate = Gate::kLos;
      } else if (!floor_on) {
        gate = Gate::kLos;
      }
      const Eigen::MatrixXi s = assign(ctx, cur, gate);
      if (moving_start) {
        cur.s = s;
      } else if (keep(objective_of(ctx, s, cur.x, cur.p), cur, !first, res)) {
        cur.s = s;
      }
    }

    if (options.optimize_trajectory) {
      const std::span<const double> floor = first || !floor_on ? no_floor : c_th;
      std::vector<Position2D> x = cur.x;
      try {
        if (moving_start && options.optimize_delivery) {
          Iterate lead = cur;
          lead.x = lead_positions(ctx, cur.s);
          x = solve_trajectory(ctx, lead, floor, res);
        } else {
          x = solve_trajectory(ctx, cur, floor, res);
        }
      } catch (const InfeasibleStartError&) {
        ++res.solver_failures;
        if (moving_start && options.optimize_delivery) {
          // Fall back to pairs that are already in range at the warm start.
          cur.s = assign(ctx, cur, Gate::kLos);
          try {
            x = solve_trajectory(ctx, cur, floor, res);
          } catch (const InfeasibleStartError&) {
            ++res.solver_failures;
          }
        }
      }
      if (moving_start) {
        cur.x = x;
        cur.value = objective_of(ctx, cur.s, cur.x, cur.p);
      } else if (keep(objective_of(ctx, cur.s, x, cur.p), cur, !first, res)) {
        cur.x = x;
      }
    }

    if (options.optimize_power) {
      const std::vector<double> p = solve_power(ctx, cur, floor_on, res);
      if (first) {
        // The first power step restores the floor and may cost objective.
        cur.p = p;
      } else if (keep(objective_of(ctx, cur.s, cur.x, p), cur, true, res)) {
        cur.p = p;
      }
    }

    cur.value = objective_of(ctx, cur.s, cur.x, cur.p);
    res.objective_trace.push_back(cur.value);
    res.iterations = r + 1;
    if (std::abs(previous - cur.value) <= options.rel_tol * std::max(std::abs(previous), 1e-12)) {
      res.converged = true;
      break;
    }
    previous = cur.value;
  }

  res.decision.b = b;
  res.decision.s = cur.s;
  res.decision.x = cur.x;
  res.decision.p_mw = cur.p;
  return res;
}

}  // namespace uavcache
