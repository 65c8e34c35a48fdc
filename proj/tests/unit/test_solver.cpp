#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavcache/solver.hpp"

using namespace uavcache;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Oracle quadratic(const Matrix& q, const Vector& c) {
  Oracle o;
  o.has_hessian = true;
  o.eval = [q, c](const Vector& x, Vector* g, Matrix* h) {
    if (g != nullptr) *g = q * x + c;
    if (h != nullptr) *h = q;
    return 0.5 * x.dot(q * x) + c.dot(x);
  };
  return o;
}

Oracle halfspace(const Vector& a, double b) {
  Oracle o;
  o.affine = true;
  o.eval = [a, b](const Vector& x, Vector* g, Matrix*) {
    if (g != nullptr) *g = a;
    return a.dot(x) - b;
  };
  return o;
}

// Enumerates active sets of {a_i x <= b_i} and keeps the best KKT point.
double active_set_optimum(const Matrix& q, const Vector& c, const Matrix& a, const Vector& b) {
  const int n = static_cast<int>(q.rows());
  const int m = static_cast<int>(a.rows());
  double best = kInf;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) act.push_back(i);
    }
    const int k = static_cast<int>(act.size());
    if (k > n) continue;
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = q;
    rhs.head(n) = -c;
    for (int r = 0; r < k; ++r) {
      kkt.block(0, n + r, n, 1) = a.row(act[r]).transpose();
      kkt.block(n + r, 0, 1, n) = a.row(act[r]);
      rhs(n + r) = b(act[r]);
    }
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector x = sol.head(n);
    if (((a * x - b).array() > 1e-9).any()) continue;
    if (k > 0 && (sol.tail(k).array() < -1e-9).any()) continue;
    best = std::min(best, 0.5 * x.dot(q * x) + c.dot(x));
  }
  return best;
}

ConvexProgram unbounded_box(int n) {
  ConvexProgram p;
  p.dim = n;
  p.lower = Vector::Constant(n, -kInf);
  p.upper = Vector::Constant(n, kInf);
  p.start = Vector::Zero(n);
  return p;
}

double brute_force_assignment(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  const int j = static_cast<int>(w.cols());
  double best = 0.0;
  std::vector<int> pick(n, -1);
  std::vector<bool> used(j, false);
  std::function<void(int, double)> rec = [&](int i, double acc) {
    if (i == n) {
      best = std::max(best, acc);
      return;
    }
    rec(i + 1, acc);
    for (int c = 0; c < j; ++c) {
      if (used[c] || !std::isfinite(w(i, c)) || !(w(i, c) > 0.0)) continue;
      used[c] = true;
      rec(i + 1, acc + w(i, c));
      used[c] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

}  // namespace

TEST(SolveConvex, InteriorMinimum) {
  ConvexProgram p = unbounded_box(3);
  p.lower = Vector::Constant(3, -1.0);
  p.upper = Vector::Constant(3, 1.0);
  p.start = Vector::Constant(3, 0.7);
  p.objective = quadratic(Matrix::Identity(3, 3) * 2.0, Vector::Zero(3));
  const SolveReport r = solve_convex(p);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.point.norm(), 1e-5);
}

TEST(SolveConvex, LogPlusLinear) {
  ConvexProgram p = unbounded_box(1);
  p.lower(0) = 0.1;
  p.start(0) = 5.0;
  p.objective.has_hessian = true;
  p.objective.eval = [](const Vector& x, Vector* g, Matrix* h) {
    if (!(x(0) > 0.0)) return kInf;
    if (g != nullptr) *g = Vector::Constant(1, -1.0 / x(0) + 1.0);
    if (h != nullptr) *h = Matrix::Constant(1, 1, 1.0 / (x(0) * x(0)));
    return -std::log(x(0)) + x(0);
  };
  const SolveReport r = solve_convex(p);
  EXPECT_NEAR(r.point(0), 1.0, 1e-5);
}

TEST(SolveConvex, RandomQpsMatchActiveSetEnumeration) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> dims(1, 4);
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = dims(rng);
    const int m = n + 2;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) l(i, j) = nd(rng);
    const Matrix q = l * l.transpose() + 0.1 * Matrix::Identity(n, n);
    Vector c(n), x0(n);
    Matrix a(m, n);
    for (int i = 0; i < n; ++i) c(i) = 3.0 * nd(rng);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
    for (int i = 0; i < n; ++i) x0(i) = nd(rng);
    // x0 is strictly feasible by construction
    Vector b = a * x0;
    for (int i = 0; i < m; ++i) b(i) += 0.2 + std::abs(nd(rng));

    ConvexProgram p = unbounded_box(n);
    p.objective = quadratic(q, c);
    for (int i = 0; i < m; ++i) p.constraints.push_back(halfspace(a.row(i).transpose(), b(i)));
    // start outside so phase I runs half of the time
    p.start = rep % 2 == 0 ? x0 : Vector(x0 + 5.0 * Vector::Ones(n));
    SolveReport r;
    try {
      r = solve_convex(p, 1e-9);
    } catch (const InfeasibleStartError&) {
      FAIL() << "phase I missed a feasible program";
    }
    const double want = active_set_optimum(q, c, a, b);
    ASSERT_TRUE(std::isfinite(want));
    EXPECT_NEAR(r.objective_value, want, 1e-5 * std::max(1.0, std::abs(want))) << "rep " << rep;
    EXPECT_LE(r.max_constraint_violation, 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(SolveConvex, InfeasibleProgramThrows) {
  ConvexProgram p = unbounded_box(1);
  p.objective = quadratic(Matrix::Identity(1, 1), Vector::Zero(1));
  p.constraints.push_back(halfspace(Vector::Constant(1, 1.0), -1.0));  // x <= -1
  p.constraints.push_back(halfspace(Vector::Constant(1, -1.0), -1.0)); // x >= 1
  EXPECT_THROW(solve_convex(p), InfeasibleStartError);
}

TEST(SolveConvex, MalformedProgram) {
  ConvexProgram p = unbounded_box(2);
  p.objective = quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  p.lower(0) = 1.0;
  p.upper(0) = 0.0;
  EXPECT_THROW(solve_convex(p), std::invalid_argument);
  ConvexProgram q = unbounded_box(2);
  EXPECT_THROW(solve_convex(q), std::invalid_argument);
}

TEST(SolveConvex, NumericHessianFallback) {
  // min exp(x) + exp(-y) + (x - y)^2 / 2 without an analytic Hessian
  ConvexProgram p = unbounded_box(2);
  p.lower = Vector::Constant(2, -3.0);
  p.upper = Vector::Constant(2, 3.0);
  p.objective.eval = [](const Vector& x, Vector* g, Matrix*) {
    if (g != nullptr) {
      g->resize(2);
      (*g)(0) = std::exp(x(0)) + (x(0) - x(1));
      (*g)(1) = -std::exp(-x(1)) - (x(0) - x(1));
    }
    return std::exp(x(0)) + std::exp(-x(1)) + 0.5 * (x(0) - x(1)) * (x(0) - x(1));
  };
  const SolveReport r = solve_convex(p);
  EXPECT_TRUE(r.converged);
  // symmetric optimum x = -y with e^x + 2x = 0
  EXPECT_NEAR(r.point(0), -r.point(1), 1e-5);
  EXPECT_NEAR(std::exp(r.point(0)) + 2.0 * r.point(0), 0.0, 1e-5);
}

TEST(CheckGradient, LinearAndQuadratic) {
  Vector a(3);
  a << 1.0, -2.0, 0.5;
  EXPECT_LT(check_gradient(halfspace(a, 3.0), Vector::Constant(3, 10.0)), 1e-9);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Oracle sq = quadratic(Matrix::Identity(3, 3) * 2.0, Vector::Zero(3));
  for (int k = 0; k < 20; ++k) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x(i) = 5.0 * nd(rng);
    EXPECT_LT(check_gradient(sq, x), 1e-6);
    EXPECT_LT(check_hessian(sq, x), 1e-6);
  }
}

TEST(CheckGradient, FlagsWrongGradient) {
  Oracle bad;
  bad.eval = [](const Vector& x, Vector* g, Matrix*) {
    if (g != nullptr) *g = x;  // true gradient is 2x
    return x.squaredNorm();
  };
  EXPECT_GT(check_gradient(bad, Vector::Constant(2, 1.0)), 0.1);
}

TEST(Assignment, Trivial) {
  Matrix w(1, 1);
  w << 5.0;
  const Eigen::MatrixXi s = solve_assignment(w);
  EXPECT_EQ(s(0, 0), 1);
  EXPECT_EQ(assignment_weight(w, s), 5.0);
}

TEST(Assignment, DiagonalDominance) {
  Matrix w(3, 3);
  w << 10, 1, 1, 1, 10, 1, 1, 1, 10;
  EXPECT_EQ(solve_assignment(w), Eigen::MatrixXi::Identity(3, 3));
}

TEST(Assignment, ExcludesNonPositiveAndNonFinite) {
  Matrix w(2, 2);
  w << -1.0, -kInf, 0.0, std::nan("");
  EXPECT_EQ(solve_assignment(w).sum(), 0);
}

TEST(Assignment, LexicographicTieBreak) {
  Matrix w = Matrix::Constant(3, 2, 1.0);
  const Eigen::MatrixXi s = solve_assignment(w);
  EXPECT_EQ(s(0, 0), 1);
  EXPECT_EQ(s(1, 1), 1);
  EXPECT_EQ(s.row(2).sum(), 0);
}

TEST(Assignment, MatchesEnumeration) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.5, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    Matrix w(5, 4);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) w(i, j) = u(rng) < 0.0 ? -kInf : u(rng);
    const Eigen::MatrixXi s = solve_assignment(w);
    EXPECT_LE(s.rowwise().sum().maxCoeff(), 1);
    EXPECT_LE(s.colwise().sum().maxCoeff(), 1);
    EXPECT_NEAR(assignment_weight(w, s), brute_force_assignment(w), 1e-9);
  }
}
