#include "ahl/qp.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ahl::qp {

namespace {

using ColMatrix = Eigen::MatrixXd;

// H = V diag(λ) Vᵀ with λ floored, plus the constraint matrix in that basis.
struct Spectral {
  ColMatrix v;
  Vector lambda;
  ColMatrix av;  // A V
  Vector vtg;    // Vᵀ g
};

Spectral decompose(const QpProblem& p, double ridge) {
  const Index n = p.dim();
  Eigen::SelfAdjointEigenSolver<ColMatrix> eig(ColMatrix(p.hessian), Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw InvalidInput("eigendecomposition of the QP Hessian failed");
  Spectral s;
  s.v = eig.eigenvectors();
  s.lambda = eig.eigenvalues();
  const double top = n > 0 ? std::max(1.0, s.lambda.maxCoeff()) : 1.0;
  s.lambda = s.lambda.cwiseMax(ridge * top);
  s.av = p.ineq_lhs * s.v;
  s.vtg = s.v.transpose() * p.linear;
  return s;
}

struct Inner {
  Vector x;
  Vector lambda;
  bool feasible = true;
  bool converged = true;
  int iterations = 0;
};

// Goldfarb–Idnani dual active-set method for Q = H + νI, worked in H's
// eigenbasis where Q⁻¹ is diagonal. Starts from the unconstrained minimizer and
// repeatedly adds the most violated constraint, dropping active ones whose
// multipliers would turn negative; the active normals stay linearly independent.
Inner solve_fixed_nu(const Spectral& s, const Vector& rhs, double nu, int max_iterations) {
  const Index m = s.av.rows();
  const Vector inv = (s.lambda.array() + nu).inverse().matrix();
  Inner out;
  out.lambda = Vector::Zero(m);
  Vector y = -inv.cwiseProduct(s.vtg);

  const double inf = std::numeric_limits<double>::infinity();
  const double tol = 1e-13 * (1.0 + (m > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0));
  std::vector<Index> active;
  std::vector<char> is_active(static_cast<std::size_t>(m), 0);
  Vector& lam = out.lambda;

  while (m > 0) {
    Index p = -1;
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const double norm = s.av.row(i).norm();
      const double v = s.av.row(i).dot(y) - rhs[i];
      if (v > tol * std::max(1.0, norm) && v / std::max(norm, 1e-300) > worst) {
        worst = v / std::max(norm, 1e-300);
        p = i;
      }
    }
    if (p < 0) break;
    const Vector ap = s.av.row(p).transpose();
    double lam_p = 0.0;

    while (true) {
      if (++out.iterations > max_iterations) {
        out.converged = false;
        break;
      }
      const Index q = static_cast<Index>(active.size());
      const Vector qi_ap = inv.cwiseProduct(ap);
      Vector z = -qi_ap;  // primal step direction
      Vector r(q);        // rate at which active multipliers fall
      if (q > 0) {
        const ColMatrix n = s.av(active, Eigen::all).transpose();
        const ColMatrix qi_n = inv.asDiagonal() * n;
        const ColMatrix g = n.transpose() * qi_n;
        r = g.ldlt().solve(n.transpose() * qi_ap);
        z += qi_n * r;
      }
      const double curvature = -ap.dot(z);  // aᵀHa ≥ 0
      const bool no_primal_step = curvature <= 1e-14 * ap.dot(qi_ap);

      double t1 = inf;
      Index drop = -1;
      for (Index j = 0; j < q; ++j) {
        if (r[j] > 0.0) {
          const double t = lam[active[static_cast<std::size_t>(j)]] / r[j];
          if (t < t1) {
            t1 = t;
            drop = j;
          }
        }
      }
      const double t2 = no_primal_step ? inf : (ap.dot(y) - rhs[p]) / curvature;
      if (t1 == inf && t2 == inf) {
        out.feasible = false;
        break;
      }
      const double t = std::min(t1, t2);
      if (!no_primal_step) y += t * z;
      for (Index j = 0; j < q; ++j) {
        double& l = lam[active[static_cast<std::size_t>(j)]];
        l = std::max(0.0, l - t * r[j]);
      }
      lam_p += t;

      if (t2 <= t1) {
        active.push_back(p);
        is_active[static_cast<std::size_t>(p)] = 1;
        lam[p] = lam_p;
        break;
      }
      const Index k = active[static_cast<std::size_t>(drop)];
      lam[k] = 0.0;
      is_active[static_cast<std::size_t>(k)] = 0;
      active.erase(active.begin() + drop);
    }
    if (!out.feasible || !out.converged) break;
  }

  out.x = s.v * y;
  return out;
}

}  // namespace

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

double KktResiduals::worst() const { return std::max({stationarity, primal, dual, complementarity}); }

double objective(const QpProblem& p, const Eigen::Ref<const Vector>& x) {
  return 0.5 * x.dot(p.hessian * x) + p.linear.dot(x);
}

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& multipliers, double ball_multiplier) {
  KktResiduals r;
  Vector station = p.hessian * x + p.linear + ball_multiplier * x;
  if (p.constraints() > 0) station += p.ineq_lhs.transpose() * multipliers;
  r.stationarity = station.cwiseAbs().maxCoeff();

  if (p.constraints() > 0) {
    const Vector slack = p.ineq_lhs * x - p.ineq_rhs;
    r.primal = std::max(0.0, slack.maxCoeff());
    r.dual = std::max(0.0, -multipliers.minCoeff());
    r.complementarity = multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  r.dual = std::max(r.dual, -ball_multiplier);
  if (p.ball_radius) {
    const double gap = x.norm() - *p.ball_radius;
    r.primal = std::max(r.primal, gap);
    r.complementarity = std::max(r.complementarity, std::abs(ball_multiplier * gap));
  } else if (ball_multiplier != 0.0) {
    r.dual = std::max(r.dual, std::abs(ball_multiplier));
  }
  return r;
}

QpResult solve(const QpProblem& p, const QpSettings& settings) {
  const Index n = p.dim();
  if (p.hessian.rows() != n || p.hessian.cols() != n) throw InvalidInput("QP Hessian shape mismatch");
  if (p.constraints() > 0 && p.ineq_lhs.cols() != n) throw InvalidInput("QP constraint matrix shape mismatch");
  if (p.ineq_rhs.size() != p.constraints()) throw InvalidInput("QP constraint rhs size mismatch");
  if (p.ball_radius && !(*p.ball_radius > 0.0)) throw InvalidInput("ball radius must be > 0");

  const Spectral s = decompose(p, settings.ridge);
  QpResult result;

  auto finish = [&](Inner inner, double nu) {
    result.x = std::move(inner.x);
    result.multipliers = std::move(inner.lambda);
    result.ball_multiplier = nu;
    result.iterations += inner.iterations;
    if (!inner.feasible) result.status = QpStatus::kInfeasible;
    else if (!inner.converged) result.status = QpStatus::kIterationLimit;
    result.objective = objective(p, result.x);
    result.kkt = kkt_residuals(p, result.x, result.multipliers, nu);
    if (result.status == QpStatus::kOptimal && result.kkt.primal > settings.kkt_tolerance) {
      result.status = QpStatus::kInfeasible;
    }
    return result;
  };

  Inner at_zero = solve_fixed_nu(s, p.ineq_rhs, 0.0, settings.max_iterations);
  if (!at_zero.feasible || !at_zero.converged || !p.ball_radius) return finish(std::move(at_zero), 0.0);

  const double radius = *p.ball_radius;
  if (at_zero.x.norm() <= radius) return finish(std::move(at_zero), 0.0);

  // ‖x(ν)‖ is nonincreasing in ν: bracket the crossing, then regula falsi
  // (Illinois) on φ(ν) = 1/‖x(ν)‖ − 1/r, which is close to linear in ν.
  int used = at_zero.iterations;
  double lo = 0.0;
  double phi_lo = 1.0 / at_zero.x.norm() - 1.0 / radius;
  double hi = std::max(1e-8, 1e-6 * std::max(1.0, s.lambda.maxCoeff()));
  Inner at_hi;
  while (true) {
    at_hi = solve_fixed_nu(s, p.ineq_rhs, hi, settings.max_iterations);
    used += at_hi.iterations;
    if (!at_hi.feasible || !at_hi.converged) {
      result.iterations = used - at_hi.iterations;
      return finish(std::move(at_hi), hi);
    }
    if (at_hi.x.norm() <= radius) break;
    lo = hi;
    phi_lo = 1.0 / at_hi.x.norm() - 1.0 / radius;
    hi *= 4.0;
    if (hi > 1e18) {
      // the linear constraints keep every point outside the ball
      result.iterations = used - at_hi.iterations;
      Inner inner = std::move(at_hi);
      inner.feasible = false;
      return finish(std::move(inner), hi);
    }
  }
  double phi_hi = 1.0 / std::max(at_hi.x.norm(), 1e-300) - 1.0 / radius;

  Inner best = at_hi;
  double best_nu = hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(best.x.norm() - radius) <= 1e-13 * radius) break;
    if (hi - lo <= 1e-15 * hi) break;
    double nu = (phi_hi * lo - phi_lo * hi) / (phi_hi - phi_lo);
    if (!(nu > lo && nu < hi)) nu = 0.5 * (lo + hi);
    Inner trial = solve_fixed_nu(s, p.ineq_rhs, nu, settings.max_iterations);
    used += trial.iterations;
    if (!trial.feasible || !trial.converged) {
      result.iterations = used - trial.iterations;
      return finish(std::move(trial), nu);
    }
    const double phi = 1.0 / trial.x.norm() - 1.0 / radius;
    if (phi >= 0.0) {  // inside the ball
      hi = nu;
      phi_hi = phi;
      best = trial;
      best_nu = nu;
      if (side == 1) phi_lo *= 0.5;
      side = 1;
    } else {
      lo = nu;
      phi_lo = phi;
      if (side == -1) phi_hi *= 0.5;
      side = -1;
    }
  }
  result.iterations = used - best.iterations;
  return finish(std::move(best), best_nu);
}

}  // namespace ahl::qp
