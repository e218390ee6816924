#include "ahl/spkm.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace ahl::spkm {

namespace {

struct RunResult {
  Matrix centers;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Max-cosine assignment for every point; returns the mean max cosine.
double assign_all(const Matrix& x, const Matrix& centers, std::vector<Index>& labels) {
  const Matrix sims = x * centers.transpose();
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    double best_v = sims(i, 0);
    for (Index k = 1; k < sims.cols(); ++k) {
      if (sims(i, k) > best_v) {
        best_v = sims(i, k);
        best = k;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    total += best_v;
  }
  return total / static_cast<double>(x.rows());
}

RunResult run_once(const Matrix& x, Index k_requested, std::mt19937_64& rng) {
  const Index n = x.rows();
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  // partial Fisher-Yates: first k entries form a uniform sample without replacement
  for (Index i = 0; i < k_requested; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  Matrix centers(k_requested, x.cols());
  for (Index k = 0; k < k_requested; ++k) centers.row(k) = x.row(pool[static_cast<std::size_t>(k)]);

  RunResult run;
  std::vector<Index> labels(static_cast<std::size_t>(n), -1);
  std::vector<Index> previous;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double obj = assign_all(x, centers, labels);
    run.trace.push_back(obj);
    run.iterations = it;
    if (labels == previous) break;

    Matrix sums = Matrix::Zero(centers.rows(), x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(centers.rows()), 0);
    for (Index i = 0; i < n; ++i) {
      const Index l = labels[static_cast<std::size_t>(i)];
      sums.row(l) += x.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    std::vector<Index> keep;
    for (Index k = 0; k < centers.rows(); ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0) continue;  // empty cluster: drop
      const double norm = sums.row(k).norm();
      // members that cancel out exactly leave the previous center in place
      if (norm > 0.0) centers.row(k) = sums.row(k) / norm;
      keep.push_back(k);
    }
    if (static_cast<Index>(keep.size()) != centers.rows()) {
      std::vector<Index> remap(static_cast<std::size_t>(centers.rows()), -1);
      for (std::size_t p = 0; p < keep.size(); ++p) remap[static_cast<std::size_t>(keep[p])] = static_cast<Index>(p);
      for (Index& l : labels) l = remap[static_cast<std::size_t>(l)];
      centers = Matrix(centers(keep, Eigen::all));
    }
    previous = labels;
  }
  run.objective = run.trace.back();
  run.centers = std::move(centers);
  return run;
}

}  // namespace

SpkmModel spkm_fit(const UnitRowMatrix& x_rows, Index k_requested, int restarts, std::uint64_t seed) {
  if (x_rows.empty()) throw InvalidInput("spkm_fit requires at least one point");
  if (k_requested < 1) throw InvalidInput("k_requested must be >= 1");
  if (k_requested > x_rows.rows()) {
    throw InvalidInput("k_requested (" + std::to_string(k_requested) + ") exceeds the number of points (" +
                       std::to_string(x_rows.rows()) + ")");
  }
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");

  std::mt19937_64 rng(seed);
  RunResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    RunResult run = run_once(x_rows.matrix(), k_requested, rng);
    if (!have_best || run.objective > best.objective) {
      best = std::move(run);
      have_best = true;
    }
  }

  SpkmModel model;
  model.centers = UnitRowMatrix::normalized(std::move(best.centers));
  model.objective = best.objective;
  model.iterations = best.iterations;
  model.objective_trace = std::move(best.trace);
  return model;
}

Index assign(const Eigen::Ref<const Vector>& x, const Matrix& centers) {
  if (centers.rows() == 0) throw InvalidInput("assign requires at least one center");
  if (x.size() != centers.cols()) throw InvalidInput("dimension mismatch in assign");
  Index best = 0;
  double best_v = centers.row(0).dot(x);
  for (Index k = 1; k < centers.rows(); ++k) {
    const double v = centers.row(k).dot(x);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

}  // namespace ahl::spkm
