#pragma once

// Linear one-vs-rest SVM trained with Pegasos (stochastic subgradient on the
// regularized hinge loss, step 1/(λt), projection onto the 1/√λ ball). Features
// are standardized per dimension and a constant 1 is appended so the bias is
// learned as an ordinary weight.

#include "ahl/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ahl::svm {

struct SvmModel {
  std::vector<int> classes;  // ascending; row c of weights scores classes[c]
  Matrix weights;            // classes × dim, on standardized features
  Vector bias;               // classes
  double lambda = 0.0;
  int epochs = 0;
  Vector feature_mean;
  Vector feature_scale;      // divide by this after subtracting the mean

  Index dim() const { return weights.cols(); }
  Matrix standardize(const Matrix& features) const;
  Matrix scores(const Matrix& features) const;  // n × classes
};

inline constexpr double kStandardizeEpsilon = 1e-8;

SvmModel svm_train(const Matrix& features, std::span<const int> labels, double lambda, int epochs,
                   std::uint64_t seed);

// argmax over class scores, lowest class index on ties.
std::vector<int> svm_predict(const SvmModel& model, const Matrix& features);

double error_rate(std::span<const int> predicted, std::span<const int> truth);

// Σ over classes of λ/2‖(w, b)‖² + mean hinge, on the model's standardization.
double hinge_objective(const SvmModel& model, const Matrix& features, std::span<const int> labels);

inline const std::vector<double> kDefaultLambdas = {1e-5, 1e-4, 1e-3, 1e-2};

struct LambdaSelection {
  std::vector<double> lambdas;
  std::vector<double> validation_errors;
  double selected = 0.0;
  SvmModel model;  // retrained on all data with `selected`
};

// Holds out a seeded `holdout` fraction, picks the λ with the lowest validation
// error (smallest λ on ties), then retrains on everything.
LambdaSelection svm_train_selected(const Matrix& features, std::span<const int> labels,
                                   const std::vector<double>& lambdas, int epochs, std::uint64_t seed,
                                   double holdout = 0.1);

}  // namespace ahl::svm
