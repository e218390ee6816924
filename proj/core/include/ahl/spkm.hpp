#pragma once

// Batch spherical K-means (cosine similarity, unit-norm centers), seeded with
// centers drawn uniformly from the data without replacement.

#include "ahl/types.hpp"

#include <cstdint>
#include <vector>

namespace ahl::spkm {

struct SpkmModel {
  UnitRowMatrix centers;
  double objective = 0.0;  // mean over points of the max cosine to a center
  int iterations = 0;      // of the winning restart
  std::vector<double> objective_trace;  // per iteration, winning restart
};

inline constexpr int kMaxIterations = 300;

SpkmModel spkm_fit(const UnitRowMatrix& x_rows, Index k_requested, int restarts, std::uint64_t seed);

// argmax_k centers_k · x, lowest index on ties.
Index assign(const Eigen::Ref<const Vector>& x, const Matrix& centers);
inline Index assign(const Eigen::Ref<const Vector>& x, const SpkmModel& model) {
  return assign(x, model.centers.matrix());
}

}  // namespace ahl::spkm
