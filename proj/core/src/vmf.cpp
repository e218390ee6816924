#include "ahl/vmf.hpp"

#include "ahl/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace ahl::vmf {

namespace {

// The series has only positive terms, so it stays accurate for as long as the
// partial sum (≈ e^x relative to the first term) fits in a double.
constexpr double kSeriesLimit = 500.0;

double log_bessel_series(double nu, double x) {
  // I_nu(x) = sum_m (x/2)^{2m+nu} / (m! Γ(m+nu+1)), summed relative to the first term
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 0; m < 10000; ++m) {
    term *= q / ((m + 1.0) * (m + nu + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum);
}

double log_bessel_debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double t = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
  const double u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) / 414720.0;
  const double u4 = t2 * t2 *
                    (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2 * t2 - 446185740.0 * t2 * t2 * t2 +
                     185910725.0 * t2 * t2 * t2 * t2) /
                    39813120.0;
  const double series = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
  return nu * eta - 0.5 * std::log(2.0 * std::numbers::pi * nu) - 0.5 * std::log(root) + std::log(series);
}

double log_bessel_hankel(double nu, double x) {
  // e^x / sqrt(2πx) · Σ_k (-1)^k a_k(nu) / x^k
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;  // asymptotic series starts diverging
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

double log_sphere_area(Index d) {
  const double half = 0.5 * static_cast<double>(d);
  return std::log(2.0) + half * std::log(std::numbers::pi) - std::lgamma(half);
}

}  // namespace

void VmfComponent::validate() const {
  if (mu.size() < 2) throw InvalidInput("vMF dimension must be >= 2");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidInput("kappa must be finite and >= 0");
  if (!(std::abs(mu.norm() - 1.0) <= 1e-9)) throw InvalidInput("mu must be unit-norm");
  if (n_samples < 0) throw InvalidInput("n_samples must be >= 0");
}

double log_bessel_i(double nu, double x) {
  if (nu < 0.0 || x < 0.0 || !std::isfinite(nu) || !std::isfinite(x)) {
    throw InvalidInput("log_bessel_i requires nu >= 0 and x >= 0");
  }
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (x <= kSeriesLimit) return log_bessel_series(nu, x);
  return nu * nu < x ? log_bessel_hankel(nu, x) : log_bessel_debye(nu, x);
}

double log_normalizer(Index d, double kappa) {
  if (d < 2) throw InvalidInput("vMF dimension must be >= 2");
  if (kappa == 0.0) return -log_sphere_area(d);
  const double half = 0.5 * static_cast<double>(d);
  return (half - 1.0) * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) -
         log_bessel_i(half - 1.0, kappa);
}

double vmf_logpdf(const Eigen::Ref<const Vector>& x, const VmfComponent& component) {
  if (x.size() != component.dim()) throw InvalidInput("dimension mismatch in vmf_logpdf");
  return component.kappa * x.dot(component.mu) + log_normalizer(component.dim(), component.kappa);
}

double mean_resultant_length(Index d, double kappa) {
  if (kappa == 0.0) return 0.0;
  const double half = 0.5 * static_cast<double>(d);
  return std::exp(log_bessel_i(half, kappa) - log_bessel_i(half - 1.0, kappa));
}

Vector random_unit_vector(Index d, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  do {
    for (Index i = 0; i < d; ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-300);
  return v / v.norm();
}

UnitRowMatrix sample_vmf(const VmfComponent& component, Rng& rng, SamplerStats* stats) {
  component.validate();
  const Index d = component.dim();
  const Index n = component.n_samples;
  Matrix out(n, d);

  if (component.kappa == 0.0) {
    for (Index i = 0; i < n; ++i) out.row(i) = random_unit_vector(d, rng).transpose();
    return UnitRowMatrix::normalized(std::move(out));
  }

  const double kappa = component.kappa;
  const double dm1 = static_cast<double>(d - 1);
  // (−2κ + √(4κ² + (d−1)²))/(d−1), rearranged to avoid cancellation at large κ
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vector& mu = component.mu;

  for (Index i = 0; i < n; ++i) {
    double w = 0.0;
    while (true) {
      const double g1 = gamma(rng);
      const double g2 = gamma(rng);
      const double z = g1 / (g1 + g2);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = uniform(rng);
      if (stats) ++stats->proposals;
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    if (stats) ++stats->accepted;

    Vector v(d);
    double vn = 0.0;
    do {
      for (Index j = 0; j < d; ++j) v[j] = gauss(rng);
      v -= v.dot(mu) * mu;
      vn = v.norm();
    } while (vn < 1e-12);
    v /= vn;
    const Vector x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
    out.row(i) = x.transpose() / x.norm();
  }
  return UnitRowMatrix::normalized(std::move(out));
}

LabeledSamples sample_mixture(std::span<const VmfComponent> components, Rng& rng, bool shuffle) {
  if (components.empty()) throw InvalidInput("mixture needs at least one component");
  const Index d = components.front().dim();
  Index total = 0;
  for (const auto& comp : components) {
    if (comp.dim() != d) throw InvalidInput("mixture components differ in dimension");
    total += comp.n_samples;
  }

  Matrix x(total, d);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Index offset = 0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const UnitRowMatrix part = sample_vmf(components[k], rng);
    x.middleRows(offset, part.rows()) = part.matrix();
    labels.insert(labels.end(), static_cast<std::size_t>(part.rows()), static_cast<int>(k));
    offset += part.rows();
  }

  if (shuffle) {
    for (Index i = total - 1; i > 0; --i) {
      std::uniform_int_distribution<Index> pick(0, i);
      const Index j = pick(rng);
      if (j != i) {
        x.row(i).swap(x.row(j));
        std::swap(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
      }
    }
  }
  return {UnitRowMatrix::normalized(std::move(x)), std::move(labels)};
}

std::vector<VmfComponent> random_mixture(Index d, int count, Index per_component, double kappa, Rng& rng) {
  std::vector<VmfComponent> comps;
  comps.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) comps.push_back({random_unit_vector(d, rng), kappa, per_component});
  return comps;
}

}  // namespace ahl::vmf
