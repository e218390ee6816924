#pragma once

// Structure of activation codes y = max(0, Cx − b): binary-codeword entropy,
// pairwise weight correlations, bias calibration to a target firing rate, and
// reconstruction of x from its code.

#include "ahl/qp.hpp"
#include "ahl/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ahl::metrics {

// Activation codes of every row of `x` against (centers, bias); N × K, nonnegative.
Matrix compute_codes(const Matrix& x, const Matrix& centers, const Vector& bias);

// b_k = (1 − target_rate)-quantile (linear interpolation) of {c_k·x_i}; for
// target_rate = 1 the bias sits just below the smallest dot product.
Vector calibrate_bias(const Matrix& centers, const Matrix& x, double target_rate);

// Bit k set iff a_k > 0, packed little-endian into 64-bit words.
using Codeword = std::vector<std::uint64_t>;
Codeword binary_quantize(const Eigen::Ref<const Vector>& code);
std::vector<Codeword> binary_quantize_rows(const Matrix& codes);

// Plug-in Shannon entropy (bits) of the observed codeword frequencies.
double empirical_entropy(std::span<const Codeword> words);

// All K(K−1)/2 pairwise dot products of the rows, ascending.
std::vector<double> weight_correlations(const Matrix& centers);
double mean_weight_correlation(const Matrix& centers);

struct ScpSettings {
  double trust_cosine = 0.99;
  int max_outer = 4;
  double step_tolerance = 1e-4;
  double qp_tolerance = 1e-6;
  int qp_max_iter = 5000;

  void validate() const;
};

struct Reconstruction {
  Vector x_hat;                          // unit norm
  std::vector<double> outer_objectives;  // ‖y¹ − (C¹x − b¹)‖² per outer iterate
  int outer_iterations = 0;
  bool infeasible = false;  // a subproblem had no feasible point; x_hat is the initialization
  std::string diagnostic;
  double worst_kkt = 0.0;  // largest KKT residual over the QP solves that reached optimality
};

// Recovers a unit vector consistent with `code`: least squares on the active
// neurons, inactive neurons as half-space constraints, the sphere handled by
// sequential convex programming (ball + trust half-space around the previous iterate).
Reconstruction reconstruct(const Eigen::Ref<const Vector>& code, const Matrix& centers, const Vector& bias,
                           const ScpSettings& settings = {});

inline double reconstruction_error(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_hat) {
  return 1.0 - x.dot(x_hat);
}

// 1 − max_k c_k·x.
double nearest_center_error(const Eigen::Ref<const Vector>& x, const Matrix& centers);

struct ReconstructionSummary {
  double mean_error = 0.0;
  Index evaluated = 0;
  Index infeasible = 0;
};

// Mean of reconstruction_error over the rows of x (codes formed with centers/bias).
ReconstructionSummary mean_reconstruction_error(const Matrix& x, const Matrix& centers, const Vector& bias,
                                                const ScpSettings& settings = {});

}  // namespace ahl::metrics
