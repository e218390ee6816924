#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>

namespace ahl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr double kUnitNormTolerance = 1e-6;

// Dense row-major matrix whose rows all have unit L2 norm. Holds data points,
// learned weights and cluster centers.
class UnitRowMatrix {
 public:
  UnitRowMatrix() = default;

  // Checks every row is unit-norm within `tolerance`; throws InvalidInput otherwise.
  static UnitRowMatrix validated(Matrix rows, double tolerance = kUnitNormTolerance);

  // Divides every row by its norm. Rows with norm below `min_norm` are rejected.
  static UnitRowMatrix normalized(Matrix rows, double min_norm = 1e-12);

  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  bool empty() const { return data_.rows() == 0; }

  auto row(Index i) const { return data_.row(i); }
  const Matrix& matrix() const { return data_; }

  // Gives up the storage; the caller becomes responsible for the invariant.
  Matrix release() && { return std::move(data_); }

 private:
  explicit UnitRowMatrix(Matrix m) : data_(std::move(m)) {}
  Matrix data_;
};

// Largest |‖row‖ − 1| over all rows; 0 for an empty matrix.
double max_unit_norm_deviation(const Matrix& m);

}  // namespace ahl
