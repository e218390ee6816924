#pragma once

// Adaptive Hebbian Learning: an online, one-sample-at-a-time competitive
// learner that grows neurons for poorly represented inputs, keeps each
// neuron's firing rate near a target through a homeostatic bias, restricts
// soft-WTA updates through synaptic competition, and prunes neurons whose
// activities become too correlated.
//
// Every mechanism is a free function over LearnerState so it can be exercised
// on its own; fit() composes them in the canonical order.

#include "ahl/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ahl::hebb {

enum class NormMode {
  kExplicitRenormalize,  // divide updated rows by their norm
  kDecayApproximation,   // first-order (Oja-style) decay term instead of division
};

std::string to_string(NormMode mode);
NormMode norm_mode_from_string(const std::string& s);

struct LearnerConfig {
  double eta = 1e-2;
  double a_bias = 0.2;   // target mean firing rate
  double a_t = 1.0;      // add gate on total activity
  double rho_t = 0.6;    // add gate on max cosine similarity
  double rho_u = 0.8;    // prune gate on normalized activity correlation
  int k_w = 1;           // number of winners updated per sample
  int epochs = 15;
  std::uint64_t prune_period = 5000;
  double competition_factor = 0.9;
  NormMode norm_mode = NormMode::kExplicitRenormalize;
  std::uint64_t seed = 0;
  bool allow_add = true;
  bool allow_prune = true;
  bool allow_bias = true;

  // Throws InvalidInput naming the first out-of-range field.
  void validate() const;
};

struct LearnerState {
  Matrix w;  // k × d, unit rows
  Vector b;  // bias, unconstrained
  Vector r;  // smoothed firing rate
  Vector e;  // smoothed squared activity
  Matrix c;  // k × k; only the strict upper triangle is meaningful
  std::uint64_t samples_seen = 0;

  Index k() const { return w.rows(); }
  Index dim() const { return w.cols(); }

  // k = 1, w = first_row, b = 0, r = a_bias, c = 0, e = 0.
  static LearnerState initial(const Eigen::Ref<const Vector>& first_row, const LearnerConfig& config);
};

// Rectified activations of one input. `similarity` keeps the pre-bias dot
// products w_i·x, which the add gate and winner tie-breaking need.
struct SparseCode {
  Vector a;
  Vector similarity;
  std::vector<Index> support;  // indices with a > 0, ascending

  Index size() const { return a.size(); }
  double total() const { return a.sum(); }
};

SparseCode activate(const LearnerState& state, const Eigen::Ref<const Vector>& x);

// Appends x as a new neuron when the sample is both weakly explained
// (Σa < a_t) and far from every neuron (max w·x < rho_t).
bool maybe_add_neuron(LearnerState& state, const Eigen::Ref<const Vector>& x, const SparseCode& code,
                      const LearnerConfig& config);

// Indices of the k_w largest activations. Ties on a are broken by the larger
// pre-activation w·x − b, then by the lower index.
std::vector<Index> select_winners(const LearnerState& state, const SparseCode& code, int k_w);

void hebbian_update(LearnerState& state, const Eigen::Ref<const Vector>& x, const SparseCode& code,
                    const LearnerConfig& config);

void update_bias(LearnerState& state, const SparseCode& code, const LearnerConfig& config);

void update_correlation(LearnerState& state, const SparseCode& code);

// Snapshot C(j,k)/√(e_j e_k) for k > j. Entries whose pair has e ≤ kPruneEpsilon
// are NaN (excluded from pruning). Lower triangle and diagonal are NaN.
Matrix normalized_correlation(const LearnerState& state);

inline constexpr double kPruneEpsilon = 1e-12;

// Greedy removal of the higher-indexed member of the most correlated pair
// while that correlation exceeds rho_u. Returns removed indices (numbered as
// before the pass) in removal order.
std::vector<Index> prune(LearnerState& state, const LearnerConfig& config);

// One sample of the main loop: activate, add (then re-activate), update
// weights, bias and correlations, and prune when samples_seen hits the period.
struct StepResult {
  bool added = false;
  std::vector<Index> pruned;
};
StepResult train_step(LearnerState& state, const Eigen::Ref<const Vector>& x, const LearnerConfig& config);

struct EpochStats {
  int epoch = 0;  // 1-based
  Index neurons = 0;
  Index added = 0;
  Index pruned = 0;
  // RMS over neurons alive for the whole epoch of ‖w_end − w_start‖.
  double weight_change = 0.0;
};
using EpochObserver = std::function<void(const EpochStats&, const LearnerState&)>;

LearnerState fit(const UnitRowMatrix& x_rows, const LearnerConfig& config, const EpochObserver& observer = {});

}  // namespace ahl::hebb
