#include "ahl/errors.hpp"
#include "ahl/qp.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <optional>

using namespace ahl;
using namespace ahl::qp;

namespace {

using ColMatrix = Eigen::MatrixXd;

struct Candidate {
  Vector x;
  double objective = std::numeric_limits<double>::infinity();
};

// Equality-constrained stationary point of ½xᵀ(H + νI)x + gᵀx with A_S x = c_S.
std::optional<std::pair<Vector, Vector>> kkt_solve(const QpProblem& p, const std::vector<Index>& set, double nu) {
  const Index n = p.dim();
  const Index m = static_cast<Index>(set.size());
  ColMatrix k = ColMatrix::Zero(n + m, n + m);
  Vector rhs(n + m);
  k.topLeftCorner(n, n) = p.hessian + nu * ColMatrix::Identity(n, n);
  rhs.head(n) = -p.linear;
  for (Index i = 0; i < m; ++i) {
    k.block(0, n + i, n, 1) = p.ineq_lhs.row(set[static_cast<std::size_t>(i)]).transpose();
    k.block(n + i, 0, 1, n) = p.ineq_lhs.row(set[static_cast<std::size_t>(i)]);
    rhs[n + i] = p.ineq_rhs[set[static_cast<std::size_t>(i)]];
  }
  Eigen::FullPivLU<ColMatrix> lu(k);
  if (!lu.isInvertible()) return std::nullopt;
  const Vector sol = lu.solve(rhs);
  return std::make_pair(Vector(sol.head(n)), Vector(sol.tail(m)));
}

bool acceptable(const QpProblem& p, const Vector& x, const Vector& lambda, double tol) {
  if (lambda.size() > 0 && lambda.minCoeff() < -tol) return false;
  if (p.constraints() > 0 && ((p.ineq_lhs * x - p.ineq_rhs).array() > tol).any()) return false;
  if (p.ball_radius && x.norm() > *p.ball_radius + tol) return false;
  return true;
}

// Enumerates every active set of the linear constraints, with the ball either
// inactive (ν = 0) or active (ν found by scanning and bisection on ‖x(ν)‖ = r),
// and keeps the best point that satisfies all KKT sign and feasibility conditions.
Candidate brute_force(const QpProblem& p) {
  const Index m = p.constraints();
  Candidate best;
  const double tol = 1e-9;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Index> set;
    for (Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) set.push_back(i);
    }
    auto consider = [&](const Vector& x, const Vector& lambda, double nu) {
      if (nu < 0.0 || !acceptable(p, x, lambda, tol)) return;
      const double f = objective(p, x);
      if (f < best.objective) best = {x, f};
    };
    if (auto s = kkt_solve(p, set, 0.0)) consider(s->first, s->second, 0.0);
    if (!p.ball_radius) continue;
    const double r = *p.ball_radius;
    auto gap = [&](double nu) -> std::optional<double> {
      auto s = kkt_solve(p, set, nu);
      if (!s) return std::nullopt;
      return s->first.norm() - r;
    };
    double prev_nu = 0.0;
    auto prev_gap = gap(0.0);
    for (double nu = 1e-6; nu < 1e7; nu *= 1.25) {
      auto g = gap(nu);
      if (g && prev_gap && (*g) * (*prev_gap) <= 0.0) {
        double lo = prev_nu, hi = nu;
        double glo = *prev_gap;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          auto gm = gap(mid);
          if (!gm) break;
          if ((*gm) * glo <= 0.0) {
            hi = mid;
          } else {
            lo = mid;
            glo = *gm;
          }
        }
        const double root = 0.5 * (lo + hi);
        if (auto s = kkt_solve(p, set, root)) consider(s->first, s->second, root);
      }
      prev_nu = nu;
      prev_gap = g;
    }
  }
  return best;
}

QpProblem random_problem(Rng& rng, Index n, Index m, bool ball, bool singular) {
  QpProblem p;
  const Matrix f = test::gaussian(singular ? n - 1 : n + 1, n, rng);
  p.hessian = f.transpose() * f;
  p.linear = 2.0 * test::gaussian(n, 1, rng);
  p.ineq_lhs = test::gaussian(m, n, rng);
  // feasible by construction: a point inside the ball with slack on every row
  const Vector inside = 0.5 * test::unit_vector(n, rng);
  std::uniform_real_distribution<double> slack(0.0, 0.5);
  p.ineq_rhs = p.ineq_lhs * inside;
  for (Index i = 0; i < m; ++i) p.ineq_rhs[i] += slack(rng);
  if (ball) p.ball_radius = 1.0;
  return p;
}

}  // namespace

TEST(Qp, UnconstrainedIsNewtonStep) {
  QpProblem p;
  p.hessian = Matrix::Identity(3, 3) * 2.0;
  p.linear = Eigen::Vector3d(-2, 4, 0);
  p.ineq_lhs = Matrix(0, 3);
  p.ineq_rhs = Vector(0);
  const auto r = solve(p);
  EXPECT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LT((r.x - Eigen::Vector3d(1, -2, 0)).norm(), 1e-12);
}

TEST(Qp, BallProjectsOutsideMinimizer) {
  QpProblem p;
  p.hessian = Matrix::Identity(2, 2);
  p.linear = Eigen::Vector2d(-3, -4);  // unconstrained minimizer (3, 4)
  p.ineq_lhs = Matrix(0, 2);
  p.ineq_rhs = Vector(0);
  p.ball_radius = 1.0;
  const auto r = solve(p);
  EXPECT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LT((r.x - Eigen::Vector2d(0.6, 0.8)).norm(), 1e-9);
  EXPECT_NEAR(r.ball_multiplier, 4.0, 1e-6);
}

TEST(Qp, HalfSpaceClipsMinimizer) {
  QpProblem p;
  p.hessian = Matrix::Identity(2, 2);
  p.linear = Eigen::Vector2d(-1, -1);
  p.ineq_lhs = Matrix(1, 2);
  p.ineq_lhs << 1, 0;
  p.ineq_rhs = Vector::Constant(1, 0.25);
  const auto r = solve(p);
  EXPECT_LT((r.x - Eigen::Vector2d(0.25, 1.0)).norm(), 1e-12);
  EXPECT_NEAR(r.multipliers[0], 0.75, 1e-12);
}

TEST(Qp, ContradictoryConstraintsAreInfeasible) {
  QpProblem p;
  p.hessian = Matrix::Identity(1, 1);
  p.linear = Vector::Zero(1);
  p.ineq_lhs = Matrix(2, 1);
  p.ineq_lhs << 1, -1;
  p.ineq_rhs = Eigen::Vector2d(-1, -1);  // x ≤ −1 and x ≥ 1
  EXPECT_EQ(solve(p).status, QpStatus::kInfeasible);
}

TEST(Qp, HalfSpaceOutsideBallIsInfeasible) {
  QpProblem p;
  p.hessian = Matrix::Identity(2, 2);
  p.linear = Vector::Zero(2);
  p.ineq_lhs = Matrix(1, 2);
  p.ineq_lhs << -1, 0;
  p.ineq_rhs = Vector::Constant(1, -2.0);  // x₀ ≥ 2
  p.ball_radius = 1.0;
  EXPECT_EQ(solve(p).status, QpStatus::kInfeasible);
}

TEST(Qp, ShapeMismatchThrows) {
  QpProblem p;
  p.hessian = Matrix::Identity(2, 2);
  p.linear = Vector::Zero(3);
  p.ineq_lhs = Matrix(0, 3);
  p.ineq_rhs = Vector(0);
  EXPECT_THROW(solve(p), InvalidInput);
}

TEST(Qp, StatusNames) {
  EXPECT_EQ(to_string(QpStatus::kOptimal), "optimal");
  EXPECT_EQ(to_string(QpStatus::kInfeasible), "infeasible");
}

// ---- properties -------------------------------------------------------------

TEST(QpProperty, KktResidualsAndBruteForceAgreement) {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    Rng rng(seed);
    const Index n = 1 + static_cast<Index>(seed % 4);
    const Index m = static_cast<Index>(seed % 7);
    const bool ball = seed % 3 != 0;
    const QpProblem p = random_problem(rng, n, m, ball, false);
    const auto r = solve(p);
    ASSERT_EQ(r.status, QpStatus::kOptimal) << "seed " << seed;
    EXPECT_LE(r.kkt.stationarity, 1e-6) << "seed " << seed;
    EXPECT_LE(r.kkt.primal, 1e-6) << "seed " << seed;
    EXPECT_LE(r.kkt.dual, 1e-6) << "seed " << seed;
    EXPECT_LE(r.kkt.complementarity, 1e-6) << "seed " << seed;

    const Candidate oracle = brute_force(p);
    ASSERT_TRUE(std::isfinite(oracle.objective)) << "seed " << seed;
    EXPECT_NEAR(r.objective, oracle.objective, 1e-6 * (1.0 + std::abs(oracle.objective))) << "seed " << seed;
    EXPECT_LE((r.x - oracle.x).norm(), 1e-5) << "seed " << seed;
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(QpProperty, SingularHessianWithBallStaysOptimal) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed + 1000);
    const Index n = 2 + static_cast<Index>(seed % 3);
    const Index m = static_cast<Index>(seed % 5);
    const QpProblem p = random_problem(rng, n, m, true, true);
    const auto r = solve(p);
    ASSERT_EQ(r.status, QpStatus::kOptimal) << "seed " << seed;
    EXPECT_LE(r.kkt.worst(), 1e-6) << "seed " << seed;
    const Candidate oracle = brute_force(p);
    ASSERT_TRUE(std::isfinite(oracle.objective)) << "seed " << seed;
    EXPECT_NEAR(r.objective, oracle.objective, 1e-6 * (1.0 + std::abs(oracle.objective))) << "seed " << seed;
  }
}
