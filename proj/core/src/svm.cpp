#include "ahl/svm.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ahl::svm {

namespace {

void check_labels(const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw InvalidInput("svm needs at least one sample");
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw InvalidInput("got " + std::to_string(labels.size()) + " labels for " + std::to_string(features.rows()) +
                       " samples");
  }
}

// Pegasos for one binary problem on augmented rows. The iterate is kept as
// scale·v so the (1 − 1/t) shrink costs O(1).
Vector pegasos(const Matrix& z, const std::vector<double>& y, double lambda, int epochs,
               const std::vector<std::vector<Index>>& orders) {
  const Index dim = z.cols();
  Vector v = Vector::Zero(dim);
  double scale = 1.0;
  double v_sq = 0.0;
  Vector average = Vector::Zero(dim);
  int averaged = 0;
  const int tail_start = epochs / 2;
  const double radius_sq = 1.0 / lambda;
  std::uint64_t t = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (Index i : orders[static_cast<std::size_t>(epoch)]) {
      ++t;
      const double step = 1.0 / (lambda * static_cast<double>(t));
      const double margin = y[static_cast<std::size_t>(i)] * scale * v.dot(z.row(i));
      if (t == 1) {
        v.setZero();
        v_sq = 0.0;
        scale = 1.0;
      } else {
        scale *= 1.0 - 1.0 / static_cast<double>(t);
      }
      if (margin < 1.0) {
        const double coef = step * y[static_cast<std::size_t>(i)] / scale;
        const double vx = v.dot(z.row(i));
        v_sq += 2.0 * coef * vx + coef * coef * z.row(i).squaredNorm();
        v.noalias() += coef * z.row(i).transpose();
      }
      const double w_sq = scale * scale * std::max(0.0, v_sq);
      if (w_sq > radius_sq) scale *= std::sqrt(radius_sq / w_sq);
      if (scale < 1e-9) {
        v *= scale;
        v_sq = v.squaredNorm();
        scale = 1.0;
      }
    }
    if (epoch >= tail_start) {
      average += scale * v;
      ++averaged;
    }
  }
  return average / static_cast<double>(averaged);
}

}  // namespace

Matrix SvmModel::standardize(const Matrix& features) const {
  if (features.cols() != feature_mean.size()) {
    throw InvalidInput("feature dimension " + std::to_string(features.cols()) + " does not match model dimension " +
                       std::to_string(feature_mean.size()));
  }
  Matrix z = features.rowwise() - feature_mean.transpose();
  z.array().rowwise() /= feature_scale.transpose().array();
  return z;
}

Matrix SvmModel::scores(const Matrix& features) const {
  Matrix s = standardize(features) * weights.transpose();
  s.rowwise() += bias.transpose();
  return s;
}

SvmModel svm_train(const Matrix& features, std::span<const int> labels, double lambda, int epochs,
                   std::uint64_t seed) {
  check_labels(features, labels);
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");

  SvmModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw InvalidInput("svm needs at least two classes");
  model.lambda = lambda;
  model.epochs = epochs;

  const Index n = features.rows();
  const Index d = features.cols();
  model.feature_mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - model.feature_mean.transpose();
  model.feature_scale =
      ((centered.colwise().squaredNorm() / static_cast<double>(n)).array().sqrt() + kStandardizeEpsilon)
          .transpose()
          .matrix();

  Matrix z(n, d + 1);
  z.leftCols(d) = model.standardize(features);
  z.col(d).setOnes();

  // one presentation order per epoch, shared by every class
  Rng rng(seed);
  std::vector<std::vector<Index>> orders(static_cast<std::size_t>(epochs));
  for (auto& order : orders) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
  }

  const auto n_classes = static_cast<Index>(model.classes.size());
  model.weights.resize(n_classes, d);
  model.bias.resize(n_classes);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Index c = 0; c < n_classes; ++c) {
    for (Index i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == model.classes[static_cast<std::size_t>(c)]
                                           ? 1.0
                                           : -1.0;
    }
    const Vector w = pegasos(z, y, lambda, epochs, orders);
    model.weights.row(c) = w.head(d).transpose();
    model.bias[c] = w[d];
  }
  return model;
}

std::vector<int> svm_predict(const SvmModel& model, const Matrix& features) {
  const Matrix s = model.scores(features);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Index i = 0; i < s.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double error_rate(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvalidInput("prediction and truth lengths differ");
  if (truth.empty()) throw InvalidInput("error rate of an empty set is undefined");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double hinge_objective(const SvmModel& model, const Matrix& features, std::span<const int> labels) {
  check_labels(features, labels);
  const Matrix s = model.scores(features);
  double total = 0.0;
  for (Index c = 0; c < s.cols(); ++c) {
    double hinge = 0.0;
    for (Index i = 0; i < s.rows(); ++i) {
      const double y = labels[static_cast<std::size_t>(i)] == model.classes[static_cast<std::size_t>(c)] ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * s(i, c));
    }
    const double reg = model.weights.row(c).squaredNorm() + model.bias[c] * model.bias[c];
    total += 0.5 * model.lambda * reg + hinge / static_cast<double>(s.rows());
  }
  return total;
}

LambdaSelection svm_train_selected(const Matrix& features, std::span<const int> labels,
                                   const std::vector<double>& lambdas, int epochs, std::uint64_t seed,
                                   double holdout) {
  check_labels(features, labels);
  if (lambdas.empty()) throw InvalidInput("lambda sweep is empty");
  if (!(holdout > 0.0 && holdout < 1.0)) throw InvalidInput("holdout fraction must lie in (0, 1)");

  const Index n = features.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed ^ 0x5bd1e995u);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::max<Index>(1, static_cast<Index>(std::llround(holdout * static_cast<double>(n))));
  if (n_val >= n) throw InvalidInput("not enough samples for a validation split");
  std::vector<Index> val(order.begin(), order.begin() + n_val);
  std::vector<Index> fit(order.begin() + n_val, order.end());
  std::sort(val.begin(), val.end());
  std::sort(fit.begin(), fit.end());

  const Matrix x_fit = features(fit, Eigen::all);
  const Matrix x_val = features(val, Eigen::all);
  std::vector<int> y_fit;
  std::vector<int> y_val;
  for (Index i : fit) y_fit.push_back(labels[static_cast<std::size_t>(i)]);
  for (Index i : val) y_val.push_back(labels[static_cast<std::size_t>(i)]);

  LambdaSelection out;
  out.lambdas = lambdas;
  double best = 2.0;
  for (double lambda : lambdas) {
    const SvmModel m = svm_train(x_fit, y_fit, lambda, epochs, seed);
    const double err = error_rate(svm_predict(m, x_val), y_val);
    out.validation_errors.push_back(err);
    if (err < best || (err == best && lambda < out.selected)) {
      best = err;
      out.selected = lambda;
    }
  }
  out.model = svm_train(features, labels, out.selected, epochs, seed);
  return out;
}

}  // namespace ahl::svm
