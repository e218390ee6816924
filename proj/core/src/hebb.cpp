#include "ahl/hebb.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ahl::hebb {

namespace {

constexpr double kRateDecay = 0.99;
constexpr double kRateGain = 0.01;
constexpr double kBiasGain = 0.01;
constexpr double kCorrDecay = 0.9999;
constexpr double kCorrGain = 0.0001;

void require_dim(const LearnerState& state, Index n) {
  if (n != state.dim()) {
    throw InvalidInput("input has dimension " + std::to_string(n) + ", learner expects " +
                       std::to_string(state.dim()));
  }
}

void keep_neurons(LearnerState& state, const std::vector<Index>& keep) {
  state.w = Matrix(state.w(keep, Eigen::all));
  state.b = Vector(state.b(keep));
  state.r = Vector(state.r(keep));
  state.e = Vector(state.e(keep));
  state.c = Matrix(state.c(keep, keep));
}

void renormalize_rows(Matrix& w, const std::vector<Index>& rows) {
  for (Index k : rows) {
    const double n = w.row(k).norm();
    if (n > 0.0) w.row(k) /= n;
  }
}

}  // namespace

std::string to_string(NormMode mode) {
  return mode == NormMode::kExplicitRenormalize ? "explicit-renormalize" : "decay-approximation";
}

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "explicit-renormalize") return NormMode::kExplicitRenormalize;
  if (s == "decay-approximation") return NormMode::kDecayApproximation;
  throw InvalidInput("unknown norm_mode '" + s + "'");
}

void LearnerConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(eta > 0.0)) throw InvalidInput("eta must be > 0");
  if (!in_unit(a_bias)) throw InvalidInput("a_bias must lie in [0, 1]");
  if (!std::isfinite(a_t)) throw InvalidInput("a_t must be finite");
  if (!in_unit(rho_t)) throw InvalidInput("rho_t must lie in [0, 1]");
  if (!in_unit(rho_u)) throw InvalidInput("rho_u must lie in [0, 1]");
  if (k_w < 1) throw InvalidInput("k_w must be >= 1");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (prune_period < 1) throw InvalidInput("prune_period must be >= 1");
  if (!(competition_factor > 0.0 && competition_factor <= 1.0)) {
    throw InvalidInput("competition_factor must lie in (0, 1]");
  }
}

LearnerState LearnerState::initial(const Eigen::Ref<const Vector>& first_row, const LearnerConfig& config) {
  LearnerState s;
  s.w = first_row.transpose();
  s.b = Vector::Zero(1);
  s.r = Vector::Constant(1, config.a_bias);
  s.e = Vector::Zero(1);
  s.c = Matrix::Zero(1, 1);
  return s;
}

SparseCode activate(const LearnerState& state, const Eigen::Ref<const Vector>& x) {
  require_dim(state, x.size());
  SparseCode code;
  code.similarity = state.w * x;
  code.a = (code.similarity - state.b).cwiseMax(0.0);
  for (Index i = 0; i < code.a.size(); ++i) {
    if (code.a[i] > 0.0) code.support.push_back(i);
  }
  return code;
}

bool maybe_add_neuron(LearnerState& state, const Eigen::Ref<const Vector>& x, const SparseCode& code,
                      const LearnerConfig& config) {
  require_dim(state, x.size());
  if (code.size() != state.k()) throw InvalidInput("code does not match the current neuron count");

  const double max_similarity =
      code.size() == 0 ? -std::numeric_limits<double>::infinity() : code.similarity.maxCoeff();
  if (!(code.total() < config.a_t && max_similarity < config.rho_t)) return false;

  const Index k = state.k();
  state.w.conservativeResize(k + 1, Eigen::NoChange);
  state.w.row(k) = x.transpose();
  state.b.conservativeResize(k + 1);
  state.b[k] = 0.0;
  state.r.conservativeResize(k + 1);
  state.r[k] = config.a_bias;
  state.e.conservativeResize(k + 1);
  state.e[k] = 0.0;
  state.c.conservativeResize(k + 1, k + 1);
  state.c.row(k).setZero();
  state.c.col(k).setZero();
  return true;
}

std::vector<Index> select_winners(const LearnerState& state, const SparseCode& code, int k_w) {
  const Index k = code.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  const Index take = std::min<Index>(k, k_w);
  auto better = [&](Index i, Index j) {
    if (code.a[i] != code.a[j]) return code.a[i] > code.a[j];
    const double pi = code.similarity[i] - state.b[i];
    const double pj = code.similarity[j] - state.b[j];
    if (pi != pj) return pi > pj;
    return i < j;
  };
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);
  order.resize(static_cast<std::size_t>(take));
  return order;
}

void hebbian_update(LearnerState& state, const Eigen::Ref<const Vector>& x, const SparseCode& code,
                    const LearnerConfig& config) {
  require_dim(state, x.size());
  const std::vector<Index> winners = select_winners(state, code, config.k_w);
  const Index d = state.dim();
  const double slack = 1.0 - config.competition_factor;

  // Per-winner masked increment, decided on the pre-update weights.
  Matrix delta = Matrix::Zero(static_cast<Index>(winners.size()), d);
  for (Index j = 0; j < d; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    if (winners.size() == 1) {
      delta(0, j) = config.eta * xj;
      continue;
    }
    double w_max = -std::numeric_limits<double>::infinity();
    double w_min = std::numeric_limits<double>::infinity();
    for (Index k : winners) {
      w_max = std::max(w_max, state.w(k, j));
      w_min = std::min(w_min, state.w(k, j));
    }
    // factor·extreme when the extreme has the Hebbian sign; mirrored otherwise
    // so the extreme synapse itself always qualifies.
    const double upper_cut = w_max - slack * std::abs(w_max);
    const double lower_cut = w_min + slack * std::abs(w_min);
    for (std::size_t u = 0; u < winners.size(); ++u) {
      const double wkj = state.w(winners[u], j);
      if ((xj > 0.0 && wkj >= upper_cut) || (xj < 0.0 && wkj <= lower_cut)) {
        delta(static_cast<Index>(u), j) = config.eta * xj;
      }
    }
  }

  for (std::size_t u = 0; u < winners.size(); ++u) {
    auto row = state.w.row(winners[u]);
    const auto inc = delta.row(static_cast<Index>(u));
    if (config.norm_mode == NormMode::kExplicitRenormalize) {
      row += inc;
    } else {
      // w ← w + η x_m − η (w·x_m) w, with η already folded into inc
      const double proj = row.dot(inc);
      row = row + inc - proj * row;
    }
  }
  if (config.norm_mode == NormMode::kExplicitRenormalize) renormalize_rows(state.w, winners);
}

void update_bias(LearnerState& state, const SparseCode& code, const LearnerConfig& config) {
  if (!config.allow_bias) return;
  if (code.size() != state.k()) throw InvalidInput("code does not match the current neuron count");
  for (Index i = 0; i < state.k(); ++i) {
    const double fired = code.a[i] > 0.0 ? 1.0 : 0.0;
    state.r[i] = kRateDecay * state.r[i] + kRateGain * fired;
  }
  state.b.array() += kBiasGain * (state.r.array() - config.a_bias);
}

void update_correlation(LearnerState& state, const SparseCode& code) {
  if (code.size() != state.k()) throw InvalidInput("code does not match the current neuron count");
  state.c.triangularView<Eigen::StrictlyUpper>() *= kCorrDecay;
  const auto& s = code.support;
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (std::size_t q = p + 1; q < s.size(); ++q) {
      state.c(s[p], s[q]) += kCorrGain * code.a[s[p]] * code.a[s[q]];
    }
  }
  state.e = kCorrDecay * state.e + kCorrGain * code.a.cwiseAbs2();
}

Matrix normalized_correlation(const LearnerState& state) {
  const Index k = state.k();
  Matrix cn = Matrix::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  for (Index j = 0; j < k; ++j) {
    if (!(state.e[j] > kPruneEpsilon)) continue;
    for (Index l = j + 1; l < k; ++l) {
      if (!(state.e[l] > kPruneEpsilon)) continue;
      cn(j, l) = state.c(j, l) / (std::sqrt(state.e[j]) * std::sqrt(state.e[l]));
    }
  }
  return cn;
}

std::vector<Index> prune(LearnerState& state, const LearnerConfig& config) {
  const Matrix cn = normalized_correlation(state);
  const Index k = state.k();
  std::vector<char> alive(static_cast<std::size_t>(k), 1);
  std::vector<Index> removed;

  while (true) {
    double best = -std::numeric_limits<double>::infinity();
    Index best_k = -1;
    for (Index j = 0; j < k; ++j) {
      if (!alive[j]) continue;
      for (Index l = j + 1; l < k; ++l) {
        if (!alive[l]) continue;
        const double v = cn(j, l);
        if (!std::isnan(v) && v > best) {
          best = v;
          best_k = l;
        }
      }
    }
    if (best_k < 0 || !(best > config.rho_u)) break;
    alive[best_k] = 0;
    removed.push_back(best_k);
  }

  if (!removed.empty()) {
    std::vector<Index> keep;
    for (Index i = 0; i < k; ++i) {
      if (alive[i]) keep.push_back(i);
    }
    keep_neurons(state, keep);
  }
  return removed;
}

StepResult train_step(LearnerState& state, const Eigen::Ref<const Vector>& x, const LearnerConfig& config) {
  StepResult result;
  SparseCode code = activate(state, x);
  if (config.allow_add && maybe_add_neuron(state, x, code, config)) {
    result.added = true;
    code = activate(state, x);
  }
  hebbian_update(state, x, code, config);
  update_bias(state, code, config);
  update_correlation(state, code);
  ++state.samples_seen;
  if (config.allow_prune && state.samples_seen % config.prune_period == 0) {
    result.pruned = prune(state, config);
  }
  return result;
}

LearnerState fit(const UnitRowMatrix& x_rows, const LearnerConfig& config, const EpochObserver& observer) {
  config.validate();
  if (x_rows.empty()) throw InvalidInput("fit requires at least one sample");

  const Matrix& x = x_rows.matrix();
  LearnerState state = LearnerState::initial(x.row(0).transpose(), config);

  // Stable identities so per-epoch weight movement can be measured across add/prune.
  std::vector<std::uint64_t> ids{0};
  std::uint64_t next_id = 1;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const Matrix w_start = state.w;
    const std::vector<std::uint64_t> ids_start = ids;
    EpochStats stats;
    stats.epoch = epoch;

    for (Index n = 0; n < x.rows(); ++n) {
      StepResult step = train_step(state, x.row(n).transpose(), config);
      if (step.added) {
        ids.push_back(next_id++);
        ++stats.added;
      }
      if (!step.pruned.empty()) {
        std::vector<char> gone(ids.size(), 0);
        for (Index i : step.pruned) gone[static_cast<std::size_t>(i)] = 1;
        std::vector<std::uint64_t> kept;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!gone[i]) kept.push_back(ids[i]);
        }
        ids.swap(kept);
        stats.pruned += static_cast<Index>(step.pruned.size());
      }
    }

    if (config.norm_mode == NormMode::kDecayApproximation) {
      std::vector<Index> all(static_cast<std::size_t>(state.k()));
      std::iota(all.begin(), all.end(), Index{0});
      renormalize_rows(state.w, all);
    }

    double sum_sq = 0.0;
    Index tracked = 0;
    for (std::size_t i = 0, j = 0; i < ids_start.size() && j < ids.size();) {
      // both id lists are increasing
      if (ids_start[i] == ids[j]) {
        sum_sq += (state.w.row(static_cast<Index>(j)) - w_start.row(static_cast<Index>(i))).squaredNorm();
        ++tracked;
        ++i;
        ++j;
      } else if (ids_start[i] < ids[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    stats.neurons = state.k();
    stats.weight_change = tracked > 0 ? std::sqrt(sum_sq / static_cast<double>(tracked)) : 0.0;
    if (observer) observer(stats, state);
  }
  return state;
}

}  // namespace ahl::hebb
