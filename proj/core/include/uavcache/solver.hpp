#pragma once

// Small dense convex solver (log-barrier interior point with damped Newton
// steps and a phase-I feasibility restoration) and an exact max-weight
// assignment.

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace uavcache {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Convex function oracle. `eval` returns f(x); when `grad` is non-null it
/// must be filled (size dim); when `hess` is non-null and `has_hessian` is
/// set it must be filled (dim x dim). Returning +inf marks x outside the
/// domain. Without an analytic Hessian the solver differentiates the
/// gradient numerically.
struct Oracle {
  std::function<double(const Vector& x, Vector* grad, Matrix* hess)> eval;
  bool has_hessian = false;
  bool affine = false;
};

/// Minimize objective(x) s.t. every constraint(x) <= 0 and lower <= x <= upper
/// (infinite bounds allowed).
struct ConvexProgram {
  int dim = 0;
  Oracle objective;
  std::vector<Oracle> constraints;
  Vector lower;
  Vector upper;
  Vector start;
};

struct SolveReport {
  Vector point;
  double objective_value = 0.0;
  double max_constraint_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  bool converged = false;
  bool restored = false;  // phase I ran because the start was not strictly feasible
};

class InfeasibleStartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InfeasibleStartError when no strictly feasible point is found,
/// std::invalid_argument on malformed programs.
SolveReport solve_convex(const ConvexProgram& program, double tol = 1e-6, int max_iter = 500);

/// Largest violation of the constraints and box at x (0 when feasible).
double constraint_violation(const ConvexProgram& program, const Vector& x);

/// Central-difference gradient check: max_k |analytic_k - numeric_k| / (1 + |numeric_k|).
double check_gradient(const Oracle& oracle, const Vector& x, double h = 1e-5);

/// Same check for the analytic Hessian against differences of the gradient.
double check_hessian(const Oracle& oracle, const Vector& x, double h = 1e-5);

/// Max-weight assignment on an N x J weight matrix with at most one 1 per
/// row and per column. Entries that are not finite or not positive are never
/// selected. Among optimal assignments the lexicographically smallest one is
/// returned (rows in order, smaller column first, unassigned last).
Eigen::MatrixXi solve_assignment(const Matrix& weights);

/// Total weight of an assignment (selected entries only).
double assignment_weight(const Matrix& weights, const Eigen::MatrixXi& s);

}  // namespace uavcache
