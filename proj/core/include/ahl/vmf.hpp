#pragma once

// von Mises-Fisher distributions on the unit hypersphere S^{d-1}: Wood's
// rejection sampler, mixtures, and the log-density with a log-space modified
// Bessel function of the first kind.

#include "ahl/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ahl::vmf {

struct VmfComponent {
  Vector mu;            // unit mean direction
  double kappa = 0.0;   // concentration
  Index n_samples = 0;

  Index dim() const { return mu.size(); }
  void validate() const;
};

struct SamplerStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return proposals == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

UnitRowMatrix sample_vmf(const VmfComponent& component, Rng& rng, SamplerStats* stats = nullptr);

struct LabeledSamples {
  UnitRowMatrix x;
  std::vector<int> labels;
};

// Concatenates component draws (labels = component index), optionally shuffled.
LabeledSamples sample_mixture(std::span<const VmfComponent> components, Rng& rng, bool shuffle);

// Isotropic-Gaussian direction, normalized.
Vector random_unit_vector(Index d, Rng& rng);

// `count` components with uniform random mean directions and a shared kappa.
std::vector<VmfComponent> random_mixture(Index d, int count, Index per_component, double kappa, Rng& rng);

// ln I_nu(x) for nu >= 0, x >= 0. Power series up to x = 500; above that the
// Hankel expansion when nu² < x, the Debye expansion otherwise.
double log_bessel_i(double nu, double x);

// ln Z_d(kappa) so that ln f(x) = kappa x·mu + ln Z_d(kappa).
double log_normalizer(Index d, double kappa);

double vmf_logpdf(const Eigen::Ref<const Vector>& x, const VmfComponent& component);

// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), the expected cosine to mu.
double mean_resultant_length(Index d, double kappa);

}  // namespace ahl::vmf
