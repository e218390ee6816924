#pragma once

// Small dense convex QP:
//
//   minimize   ½ xᵀHx + gᵀx
//   subject to A x ≤ c,  and optionally ‖x‖² ≤ r².
//
// For a fixed ball multiplier ν the problem with Hessian H + νI is solved by
// the Goldfarb–Idnani dual active-set method (start unconstrained, add the most
// violated half-space, drop active ones whose multipliers would go negative).
// ν is found by a safeguarded root search on ‖x(ν)‖ = r, which is monotone in ν.

#include "ahl/types.hpp"

#include <optional>
#include <string>

namespace ahl::qp {

struct QpProblem {
  Matrix hessian;  // symmetric positive semidefinite, n × n
  Vector linear;   // n
  Matrix ineq_lhs; // m × n (m may be 0)
  Vector ineq_rhs; // m
  std::optional<double> ball_radius;

  Index dim() const { return linear.size(); }
  Index constraints() const { return ineq_lhs.rows(); }
};

struct QpSettings {
  double kkt_tolerance = 1e-6;
  int max_iterations = 5000;
  // Eigenvalues of H are floored at ridge·max(1, λ_max) so directions H does not
  // see still have a unique (minimum-norm leaning) solution.
  double ridge = 1e-9;
};

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };
std::string to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;     // ‖Hx + g + Aᵀλ + νx‖∞
  double primal = 0.0;           // max violation of A x ≤ c and ‖x‖ ≤ r
  double dual = 0.0;             // max(0, −λ_i, −ν)
  double complementarity = 0.0;  // max |λ_i (A_i x − c_i)|, |ν (‖x‖ − r)|

  double worst() const;
};

struct QpResult {
  QpStatus status = QpStatus::kOptimal;
  Vector x;
  Vector multipliers;            // λ, one per linear constraint
  double ball_multiplier = 0.0;  // ν
  double objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;
};

QpResult solve(const QpProblem& problem, const QpSettings& settings = {});

double objective(const QpProblem& problem, const Eigen::Ref<const Vector>& x);

// Residuals of the point/multiplier triple against the unregularized problem.
KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& multipliers, double ball_multiplier);

}  // namespace ahl::qp
