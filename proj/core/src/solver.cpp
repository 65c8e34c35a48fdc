#include "uavcache/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace uavcache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGrowth = 20.0;       // barrier parameter multiplier
constexpr double kCentered = 1e-9;     // Newton decrement^2 / 2 at a centered point
constexpr double kLooseCentered = 1e-6;
constexpr double kArmijo = 0.25;

void fd_hessian(const Oracle& o, const Vector& x, Matrix& hess) {
  const Eigen::Index n = x.size();
  hess.resize(n, n);
  Vector gp(n), gm(n);
  Vector xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
    xp(k) = x(k) + h;
    o.eval(xp, &gp, nullptr);
    xp(k) = x(k) - h;
    o.eval(xp, &gm, nullptr);
    xp(k) = x(k);
    hess.col(k) = (gp - gm) / (2.0 * h);
  }
  hess = 0.5 * (hess + hess.transpose()).eval();
}

double evaluate(const Oracle& o, const Vector& x, Vector* grad, Matrix* hess) {
  if (hess == nullptr) return o.eval(x, grad, nullptr);
  const Eigen::Index n = x.size();
  if (o.affine) {
    const double v = o.eval(x, grad, nullptr);
    hess->setZero(n, n);
    return v;
  }
  if (o.has_hessian) {
    hess->setZero(n, n);
    return o.eval(x, grad, hess);
  }
  const double v = o.eval(x, grad, nullptr);
  fd_hessian(o, x, *hess);
  return v;
}

bool inside_box(const ConvexProgram& p, const Vector& x) {
  for (int k = 0; k < p.dim; ++k) {
    if (!(x(k) > p.lower(k)) || !(x(k) < p.upper(k))) return false;
  }
  return true;
}

int finite_bounds(const ConvexProgram& p) {
  int m = 0;
  for (int k = 0; k < p.dim; ++k) {
    if (std::isfinite(p.lower(k))) ++m;
    if (std::isfinite(p.upper(k))) ++m;
  }
  return m;
}

// Barrier function t f(x) - sum log(-g_i(x)) - sum log(box slack); +inf outside.
class Barrier {
 public:
  explicit Barrier(const ConvexProgram& p) : p_(p) {}

  double value(const Vector& x, double t) const {
    if (!inside_box(p_, x)) return kInf;
    double phi = 0.0;
    for (const Oracle& c : p_.constraints) {
      const double g = c.eval(x, nullptr, nullptr);
      if (!(g < 0.0)) return kInf;
      phi -= std::log(-g);
    }
    phi += box_terms(x);
    const double f = p_.objective.eval(x, nullptr, nullptr);
    if (!std::isfinite(f)) return kInf;
    return t * f + phi;
  }

  // Gradient and Hessian of the barrier function; returns its value.
  double derivatives(const Vector& x, double t, Vector& grad, Matrix& hess) const {
    const int n = p_.dim;
    Vector g(n);
    Matrix h(n, n);
    const double f = evaluate(p_.objective, x, &g, &h);
    grad = t * g;
    hess = t * h;
    double phi = t * f;
    for (const Oracle& c : p_.constraints) {
      const double v = evaluate(c, x, &g, &h);
      const double s = -v;
      phi -= std::log(s);
      grad += g / s;
      hess += h / s;
      hess.noalias() += (g * g.transpose()) / (s * s);
    }
    for (int k = 0; k < n; ++k) {
      if (std::isfinite(p_.lower(k))) {
        const double s = x(k) - p_.lower(k);
        grad(k) -= 1.0 / s;
        hess(k, k) += 1.0 / (s * s);
      }
      if (std::isfinite(p_.upper(k))) {
        const double s = p_.upper(k) - x(k);
        grad(k) += 1.0 / s;
        hess(k, k) += 1.0 / (s * s);
      }
    }
    return phi + box_terms(x);
  }

  // Largest step in (0, 1] that keeps x + a d strictly inside the box.
  double box_step(const Vector& x, const Vector& d) const {
    double a = 1.0;
    for (int k = 0; k < p_.dim; ++k) {
      if (d(k) < 0.0 && std::isfinite(p_.lower(k))) {
        a = std::min(a, 0.99 * (x(k) - p_.lower(k)) / -d(k));
      } else if (d(k) > 0.0 && std::isfinite(p_.upper(k))) {
        a = std::min(a, 0.99 * (p_.upper(k) - x(k)) / d(k));
      }
    }
    return a;
  }

 private:
  double box_terms(const Vector& x) const {
    double phi = 0.0;
    for (int k = 0; k < p_.dim; ++k) {
      if (std::isfinite(p_.lower(k))) phi -= std::log(x(k) - p_.lower(k));
      if (std::isfinite(p_.upper(k))) phi -= std::log(p_.upper(k) - x(k));
    }
    return phi;
  }

  const ConvexProgram& p_;
};

Vector newton_direction(const Matrix& hess, const Vector& grad) {
  // Symmetric diagonal scaling first: variables here range from unit-scale
  // rates to squared distances, and an unscaled ridge bends the step badly.
  const Vector d_scale = hess.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix hs = d_scale.asDiagonal() * hess * d_scale.asDiagonal();
  const Vector gs = d_scale.cwiseProduct(grad);
  double ridge = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Matrix h = hs;
    if (ridge > 0.0) h.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
      const Vector d = d_scale.cwiseProduct(llt.solve(-gs));
      if (d.allFinite()) return d;
    }
    ridge = ridge == 0.0 ? 1e-12 : ridge * 10.0;
  }
  return -d_scale.cwiseProduct(gs);
}

struct PathResult {
  Vector x;
  double t = 1.0;
  int iterations = 0;
  bool converged = false;
  bool stopped = false;
};

// Follows the central path from a strictly feasible x. `stop` ends the run
// early (used by phase I once a strictly feasible point is reached).
PathResult central_path(const ConvexProgram& p, Vector x, double tol, int max_iter,
                        const std::function<bool(const Vector&)>& stop) {
  const Barrier barrier(p);
  const int m = static_cast<int>(p.constraints.size()) + finite_bounds(p);
  const double f0 = p.objective.eval(x, nullptr, nullptr);
  PathResult out;
  out.t = m > 0 ? std::max(1e-8, m / std::max(1.0, std::abs(f0))) : 1.0;

  Vector grad(p.dim);
  Matrix hess(p.dim, p.dim);
  while (true) {
    bool centered = false;
    while (out.iterations < max_iter) {
      const double phi = barrier.derivatives(x, out.t, grad, hess);
      const Vector d = newton_direction(hess, grad);
      const double slope = grad.dot(d);
      const double decrement = -slope / 2.0;
      // Past ~1e-14 |phi| the decrement is rounding noise.
      const double noise = 1e-14 * std::abs(phi);
      if (decrement <= std::max(kCentered, noise) || slope >= 0.0) {
        centered = true;
        break;
      }
      double a = barrier.box_step(x, d);
      bool accepted = false;
      Vector trial;
      for (int ls = 0; ls < 60; ++ls) {
        trial = x + a * d;
        const double phi_new = barrier.value(trial, out.t);
        if (std::isfinite(phi_new) && phi_new <= phi + kArmijo * a * slope) {
          accepted = true;
          break;
        }
        a *= 0.5;
      }
      if (!accepted) {
        centered = decrement <= std::max(kLooseCentered, 100.0 * noise);
        break;
      }
      x = trial;
      ++out.iterations;
      if (stop && stop(x)) {
        out.x = x;
        out.stopped = true;
        return out;
      }
    }
    if (m == 0) {
      out.converged = centered;
      break;
    }
    if (out.iterations >= max_iter) break;
    const double f = p.objective.eval(x, nullptr, nullptr);
    if (m / out.t <= tol * std::max(1.0, std::abs(f))) {
      out.converged = centered;
      break;
    }
    out.t *= kGrowth;
  }
  out.x = x;
  return out;
}

void validate(const ConvexProgram& p) {
  if (p.dim <= 0) throw std::invalid_argument("solve_convex: dim must be positive");
  if (p.lower.size() != p.dim || p.upper.size() != p.dim || p.start.size() != p.dim) {
    throw std::invalid_argument("solve_convex: box or start has wrong size");
  }
  if (!p.objective.eval) throw std::invalid_argument("solve_convex: missing objective");
  for (int k = 0; k < p.dim; ++k) {
    if (!(p.lower(k) < p.upper(k))) {
      throw std::invalid_argument("solve_convex: empty box in coordinate " + std::to_string(k));
    }
  }
}

Vector clip_into_box(const ConvexProgram& p, Vector x) {
  for (int k = 0; k < p.dim; ++k) {
    const double lo = p.lower(k);
    const double hi = p.upper(k);
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double margin = 1e-6 * (hi - lo);
      x(k) = std::clamp(x(k), lo + margin, hi - margin);
    } else if (std::isfinite(lo)) {
      x(k) = std::max(x(k), lo + 1e-9 * std::max(1.0, std::abs(lo)));
    } else if (std::isfinite(hi)) {
      x(k) = std::min(x(k), hi - 1e-9 * std::max(1.0, std::abs(hi)));
    }
  }
  return x;
}

double max_constraint(const ConvexProgram& p, const Vector& x) {
  double worst = -kInf;
  for (const Oracle& c : p.constraints) {
    const double g = c.eval(x, nullptr, nullptr);
    if (std::isnan(g)) return kInf;
    worst = std::max(worst, g);
  }
  return worst;
}

// Phase I: minimize s subject to g_i(x) <= s over the box.
Vector restore_feasibility(const ConvexProgram& p, const Vector& x0, int max_iter, int& iterations) {
  const int n = p.dim;
  const double s0 = max_constraint(p, x0);
  if (!std::isfinite(s0)) {
    throw InfeasibleStartError("solve_convex: constraint oracle not finite at the start point");
  }
  ConvexProgram aux;
  aux.dim = n + 1;
  aux.lower.resize(n + 1);
  aux.upper.resize(n + 1);
  aux.lower.head(n) = p.lower;
  aux.upper.head(n) = p.upper;
  aux.lower(n) = -kInf;
  aux.upper(n) = kInf;
  aux.start.resize(n + 1);
  aux.start.head(n) = x0;
  aux.start(n) = s0 + 1.0;
  aux.objective.affine = true;
  aux.objective.eval = [n](const Vector& z, Vector* g, Matrix*) {
    if (g != nullptr) {
      g->setZero(n + 1);
      (*g)(n) = 1.0;
    }
    return z(n);
  };
  for (const Oracle& c : p.constraints) {
    Oracle shifted;
    shifted.affine = c.affine;
    shifted.has_hessian = c.has_hessian;
    shifted.eval = [&c, n](const Vector& z, Vector* g, Matrix* h) {
      const Vector x = z.head(n);
      Vector gx;
      Matrix hx;
      const double v = c.eval(x, g != nullptr ? &gx : nullptr, h != nullptr ? &hx : nullptr);
      if (g != nullptr) {
        g->setZero(n + 1);
        if (gx.size() == n) g->head(n) = gx;
        (*g)(n) = -1.0;
      }
      if (h != nullptr) {
        h->setZero(n + 1, n + 1);
        if (hx.rows() == n) h->topLeftCorner(n, n) = hx;
      }
      return v - z(n);
    };
    aux.constraints.push_back(std::move(shifted));
  }
  PathResult r = central_path(aux, aux.start, 1e-9, max_iter,
                              [n](const Vector& z) { return z(n) < 0.0; });
  iterations = r.iterations;
  const Vector x = r.x.head(n);
  if (!r.stopped || !(max_constraint(p, x) < 0.0) || !inside_box(p, x)) {
    throw InfeasibleStartError("solve_convex: no strictly feasible point found (phase I value " +
                               std::to_string(r.x(n)) + ")");
  }
  return x;
}

double stationarity_residual(const ConvexProgram& p, const Vector& x, double t) {
  if (t <= 0.0) return 0.0;
  const Barrier barrier(p);
  Vector grad(p.dim);
  Matrix hess(p.dim, p.dim);
  barrier.derivatives(x, t, grad, hess);
  return grad.cwiseAbs().maxCoeff() / t;
}

}  // namespace

double constraint_violation(const ConvexProgram& p, const Vector& x) {
  double worst = 0.0;
  for (int k = 0; k < p.dim; ++k) {
    worst = std::max({worst, p.lower(k) - x(k), x(k) - p.upper(k)});
  }
  for (const Oracle& c : p.constraints) {
    const double g = c.eval(x, nullptr, nullptr);
    if (std::isnan(g)) return kInf;
    worst = std::max(worst, g);
  }
  return worst;
}

SolveReport solve_convex(const ConvexProgram& program, double tol, int max_iter) {
  validate(program);
  const Vector& start = program.start;
  const bool start_feasible = constraint_violation(program, start) <= 0.0 &&
                              std::isfinite(program.objective.eval(start, nullptr, nullptr));

  SolveReport report;
  Vector x = clip_into_box(program, start);
  int used = 0;
  if (!(max_constraint(program, x) < 0.0)) {
    x = restore_feasibility(program, x, max_iter, used);
    report.restored = true;
  }
  const PathResult r = central_path(program, x, tol, std::max(1, max_iter - used), nullptr);
  report.point = r.x;
  report.iterations = used + r.iterations;
  report.converged = r.converged;
  report.objective_value = program.objective.eval(report.point, nullptr, nullptr);
  report.stationarity = stationarity_residual(program, report.point, r.t);
  if (start_feasible) {
    const double f_start = program.objective.eval(start, nullptr, nullptr);
    if (f_start < report.objective_value) {
      report.point = start;
      report.objective_value = f_start;
    }
  }
  report.max_constraint_violation = constraint_violation(program, report.point);
  return report;
}

double check_gradient(const Oracle& oracle, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Vector analytic(n);
  oracle.eval(x, &analytic, nullptr);
  double worst = 0.0;
  Vector xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    xp(k) = x(k) + h;
    const double fp = oracle.eval(xp, nullptr, nullptr);
    xp(k) = x(k) - h;
    const double fm = oracle.eval(xp, nullptr, nullptr);
    xp(k) = x(k);
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic(k) - numeric) / (1.0 + std::abs(numeric)));
  }
  return worst;
}

double check_hessian(const Oracle& oracle, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix analytic(n, n);
  Vector g(n);
  evaluate(oracle, x, &g, &analytic);
  double worst = 0.0;
  Vector gp(n), gm(n);
  Vector xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    xp(k) = x(k) + h;
    oracle.eval(xp, &gp, nullptr);
    xp(k) = x(k) - h;
    oracle.eval(xp, &gm, nullptr);
    xp(k) = x(k);
    const Vector numeric = (gp - gm) / (2.0 * h);
    for (Eigen::Index r = 0; r < n; ++r) {
      worst = std::max(worst, std::abs(analytic(r, k) - numeric(r)) / (1.0 + std::abs(numeric(r))));
    }
  }
  return worst;
}

namespace {

// Minimum-cost assignment of every row (rows <= cols), O(n^2 m).
std::vector<int> hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

using Allowed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Best total weight using only allowed pairs; fills the chosen column per row.
double best_weight(const Matrix& w, const Allowed& allowed, std::vector<int>* pick) {
  const int n = static_cast<int>(w.rows());
  const int j = static_cast<int>(w.cols());
  double total = 1.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < j; ++c) {
      if (allowed(r, c)) total += w(r, c);
    }
  }
  const double big = 10.0 * total;
  Matrix cost = Matrix::Zero(n, j + n);  // one zero-cost dummy per row
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < j; ++c) cost(r, c) = allowed(r, c) ? -w(r, c) : big;
  }
  const std::vector<int> cols = hungarian(cost);
  double value = 0.0;
  if (pick != nullptr) pick->assign(n, -1);
  for (int r = 0; r < n; ++r) {
    if (cols[r] < j && allowed(r, cols[r])) {
      value += w(r, cols[r]);
      if (pick != nullptr) (*pick)[r] = cols[r];
    }
  }
  return value;
}

}  // namespace

Eigen::MatrixXi solve_assignment(const Matrix& weights) {
  const Eigen::Index rows = weights.rows();
  const Eigen::Index cols = weights.cols();
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(rows, cols);
  if (rows == 0 || cols == 0) return s;

  // Only rows with at least one selectable entry take part.
  std::vector<Eigen::Index> active;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (std::isfinite(weights(r, c)) && weights(r, c) > 0.0) {
        active.push_back(r);
        break;
      }
    }
  }
  if (active.empty()) return s;
  const int n = static_cast<int>(active.size());
  const int j = static_cast<int>(cols);
  Matrix w(n, j);
  Allowed allowed(n, j);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < j; ++c) {
      const double v = weights(active[r], c);
      allowed(r, c) = std::isfinite(v) && v > 0.0;
      w(r, c) = allowed(r, c) ? v : 0.0;
    }
  }

  const double opt = best_weight(w, allowed, nullptr);
  const double slack = 1e-9 * std::max(1.0, std::abs(opt));
  for (int r = 0; r < n; ++r) {
    bool fixed = false;
    for (int c = 0; c < j && !fixed; ++c) {
      if (!allowed(r, c)) continue;
      Allowed trial = allowed;
      trial.row(r).setConstant(false);
      trial.col(c).setConstant(false);
      trial(r, c) = true;
      if (best_weight(w, trial, nullptr) >= opt - slack) {
        allowed = trial;
        fixed = true;
      }
    }
    if (!fixed) allowed.row(r).setConstant(false);
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < j; ++c) {
      if (allowed(r, c)) s(active[r], c) = 1;
    }
  }
  return s;
}

double assignment_weight(const Matrix& weights, const Eigen::MatrixXi& s) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (s(r, c) != 0) total += weights(r, c);
    }
  }
  return total;
}

}  // namespace uavcache
