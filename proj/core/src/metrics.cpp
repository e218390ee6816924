#include "ahl/metrics.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ahl::metrics {

Matrix compute_codes(const Matrix& x, const Matrix& centers, const Vector& bias) {
  if (x.cols() != centers.cols()) throw InvalidInput("dimension mismatch between data and centers");
  if (bias.size() != centers.rows()) throw InvalidInput("bias length does not match the number of centers");
  Matrix codes = x * centers.transpose();
  codes.rowwise() -= bias.transpose();
  return codes.cwiseMax(0.0);
}

Vector calibrate_bias(const Matrix& centers, const Matrix& x, double target_rate) {
  if (x.rows() == 0) throw InvalidInput("calibrate_bias requires data");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) throw InvalidInput("target_rate must lie in [0, 1]");
  if (x.cols() != centers.cols()) throw InvalidInput("dimension mismatch between data and centers");

  const Index n = x.rows();
  const Matrix dots = x * centers.transpose();
  Vector bias(centers.rows());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index k = 0; k < centers.rows(); ++k) {
    for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = dots(i, k);
    std::sort(column.begin(), column.end());
    if (target_rate >= 1.0) {
      bias[k] = column.front() - 1e-9 * (1.0 + std::abs(column.front()));
      continue;
    }
    const double h = static_cast<double>(n - 1) * (1.0 - target_rate);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, column.size() - 1);
    bias[k] = column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
  }
  return bias;
}

Codeword binary_quantize(const Eigen::Ref<const Vector>& code) {
  Codeword word(static_cast<std::size_t>((code.size() + 63) / 64), 0);
  for (Index k = 0; k < code.size(); ++k) {
    if (code[k] > 0.0) word[static_cast<std::size_t>(k / 64)] |= std::uint64_t{1} << (k % 64);
  }
  return word;
}

std::vector<Codeword> binary_quantize_rows(const Matrix& codes) {
  std::vector<Codeword> words;
  words.reserve(static_cast<std::size_t>(codes.rows()));
  for (Index i = 0; i < codes.rows(); ++i) words.push_back(binary_quantize(codes.row(i).transpose()));
  return words;
}

double empirical_entropy(std::span<const Codeword> words) {
  if (words.empty()) throw InvalidInput("entropy of an empty sample is undefined");
  std::map<Codeword, std::size_t> counts;
  for (const auto& w : words) ++counts[w];
  const double n = static_cast<double>(words.size());
  double h = 0.0;
  for (const auto& [word, count] : counts) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

std::vector<double> weight_correlations(const Matrix& centers) {
  std::vector<double> out;
  const Index k = centers.rows();
  if (k < 2) return out;
  const Matrix gram = centers * centers.transpose();
  out.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) out.push_back(gram(i, j));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double mean_weight_correlation(const Matrix& centers) {
  const auto corr = weight_correlations(centers);
  if (corr.empty()) return 0.0;
  double s = 0.0;
  for (double v : corr) s += v;
  return s / static_cast<double>(corr.size());
}

void ScpSettings::validate() const {
  if (!(trust_cosine > 0.0 && trust_cosine < 1.0)) throw InvalidInput("trust_cosine must lie in (0, 1)");
  if (max_outer < 1) throw InvalidInput("max_outer must be >= 1");
  if (!(qp_tolerance > 0.0)) throw InvalidInput("qp_tolerance must be > 0");
  if (qp_max_iter < 1) throw InvalidInput("qp_max_iter must be >= 1");
}

Reconstruction reconstruct(const Eigen::Ref<const Vector>& code, const Matrix& centers, const Vector& bias,
                           const ScpSettings& settings) {
  settings.validate();
  const Index k = centers.rows();
  const Index d = centers.cols();
  if (code.size() != k || bias.size() != k) throw InvalidInput("code, centers and bias disagree in length");

  std::vector<Index> active;
  std::vector<Index> inactive;
  for (Index i = 0; i < k; ++i) (code[i] > 0.0 ? active : inactive).push_back(i);

  const Matrix c_on = centers(active, Eigen::all);
  const Vector target = code(active) + bias(active);  // want C¹x ≈ y¹ + b¹

  qp::QpProblem problem;
  problem.hessian = 2.0 * c_on.transpose() * c_on;
  problem.linear = -2.0 * c_on.transpose() * target;
  problem.ineq_lhs = centers(inactive, Eigen::all);
  problem.ineq_rhs = bias(inactive);
  const double constant = target.squaredNorm();
  const qp::QpSettings qp_settings{settings.qp_tolerance, settings.qp_max_iter};

  Reconstruction out;
  auto residual = [&](const Vector& x) { return qp::objective(problem, x) + constant; };

  // initialization: no sphere constraint, then normalize
  const qp::QpResult init = qp::solve(problem, qp_settings);
  if (init.status == qp::QpStatus::kOptimal) out.worst_kkt = init.kkt.worst();
  Vector x0 = init.x;
  if (init.status == qp::QpStatus::kInfeasible) out.diagnostic = "initial problem infeasible";
  if (!(x0.norm() > 1e-12)) {
    // nothing pins x down; lean away from the silent neurons
    x0 = inactive.empty() ? Vector(Vector::Unit(d, 0)) : Vector(-problem.ineq_lhs.colwise().sum().transpose());
    if (!(x0.norm() > 1e-12)) x0 = Vector::Unit(d, 0);
  }
  x0 /= x0.norm();
  out.x_hat = x0;

  const Index m0 = problem.constraints();
  problem.ineq_lhs.conservativeResize(m0 + 1, d);
  problem.ineq_rhs.conservativeResize(m0 + 1);
  problem.ball_radius = 1.0;

  Vector prev = x0;
  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    problem.ineq_lhs.row(m0) = -(prev / prev.norm()).transpose();
    problem.ineq_rhs[m0] = -settings.trust_cosine;
    const qp::QpResult sub = qp::solve(problem, qp_settings);
    if (sub.status == qp::QpStatus::kOptimal) out.worst_kkt = std::max(out.worst_kkt, sub.kkt.worst());
    if (sub.status == qp::QpStatus::kInfeasible) {
      if (outer == 1) {
        out.infeasible = true;
        out.diagnostic = "subproblem infeasible at outer iteration 1; returning initialization";
        out.x_hat = x0;
        return out;
      }
      break;
    }
    out.outer_iterations = outer;
    out.outer_objectives.push_back(residual(sub.x));
    const double step = (sub.x - prev).norm();
    prev = sub.x;
    if (step < settings.step_tolerance) break;
  }
  if (out.outer_iterations > 0) out.x_hat = prev / prev.norm();
  return out;
}

double nearest_center_error(const Eigen::Ref<const Vector>& x, const Matrix& centers) {
  if (centers.rows() == 0) throw InvalidInput("no centers");
  if (x.size() != centers.cols()) throw InvalidInput("dimension mismatch in nearest_center_error");
  return 1.0 - (centers * x).maxCoeff();
}

ReconstructionSummary mean_reconstruction_error(const Matrix& x, const Matrix& centers, const Vector& bias,
                                                const ScpSettings& settings) {
  const Matrix codes = compute_codes(x, centers, bias);
  ReconstructionSummary summary;
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const Reconstruction rec = reconstruct(codes.row(i).transpose(), centers, bias, settings);
    total += reconstruction_error(x.row(i).transpose(), rec.x_hat);
    if (rec.infeasible) ++summary.infeasible;
    ++summary.evaluated;
  }
  summary.mean_error = summary.evaluated > 0 ? total / static_cast<double>(summary.evaluated) : 0.0;
  return summary;
}

}  // namespace ahl::metrics
