#include "ahl/types.hpp"

#include "ahl/errors.hpp"

#include <cmath>
#include <string>

namespace ahl {

UnitRowMatrix UnitRowMatrix::validated(Matrix rows, double tolerance) {
  for (Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (!(std::abs(n - 1.0) <= tolerance)) {
      throw InvalidInput("row " + std::to_string(i) + " has norm " + std::to_string(n) +
                         ", expected 1");
    }
  }
  return UnitRowMatrix(std::move(rows));
}

UnitRowMatrix UnitRowMatrix::normalized(Matrix rows, double min_norm) {
  for (Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (!(n >= min_norm)) {
      throw InvalidInput("row " + std::to_string(i) + " cannot be normalized (norm " +
                         std::to_string(n) + ")");
    }
    rows.row(i) /= n;
  }
  return UnitRowMatrix(std::move(rows));
}

double max_unit_norm_deviation(const Matrix& m) {
  double worst = 0.0;
  for (Index i = 0; i < m.rows(); ++i) worst = std::max(worst, std::abs(m.row(i).norm() - 1.0));
  return worst;
}

}  // namespace ahl
