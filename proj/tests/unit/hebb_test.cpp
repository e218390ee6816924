#include "ahl/errors.hpp"
#include "ahl/hebb.hpp"
#include "ahl/vmf.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ahl;
using namespace ahl::hebb;

namespace {

LearnerState state_from(const Matrix& w, const LearnerConfig& config) {
  LearnerState s = LearnerState::initial(w.row(0).transpose(), config);
  const Index k = w.rows();
  s.w = w;
  s.b = Vector::Zero(k);
  s.r = Vector::Constant(k, config.a_bias);
  s.e = Vector::Zero(k);
  s.c = Matrix::Zero(k, k);
  return s;
}

Vector basis(Index d, Index i) {
  Vector v = Vector::Zero(d);
  v[i] = 1.0;
  return v;
}

UnitRowMatrix mixture(Index d, int components, Index per, double kappa, std::uint64_t seed) {
  Rng rng(seed);
  auto comps = vmf::random_mixture(d, components, per, kappa, rng);
  return vmf::sample_mixture(comps, rng, true).x;
}

}  // namespace

TEST(HebbActivate, IdenticalRowGivesOne) {
  LearnerConfig cfg;
  const Vector x = basis(3, 0);
  const auto s = LearnerState::initial(x, cfg);
  const auto code = activate(s, x);
  EXPECT_DOUBLE_EQ(code.a[0], 1.0);
  EXPECT_EQ(code.support, std::vector<Index>{0});
}

TEST(HebbActivate, OrthogonalRowGivesZero) {
  LearnerConfig cfg;
  const auto s = LearnerState::initial(basis(3, 1), cfg);
  const auto code = activate(s, basis(3, 0));
  EXPECT_EQ(code.a[0], 0.0);
  EXPECT_TRUE(code.support.empty());
}

TEST(HebbActivate, BiasIsSubtractedThenClamped) {
  LearnerConfig cfg;
  const Vector x = basis(4, 2);
  auto s = LearnerState::initial(x, cfg);
  s.b[0] = 0.3;
  EXPECT_DOUBLE_EQ(activate(s, x).a[0], 0.7);
  s.b[0] = 1.5;
  EXPECT_EQ(activate(s, x).a[0], 0.0);
}

TEST(HebbActivate, DimensionMismatchThrows) {
  LearnerConfig cfg;
  const auto s = LearnerState::initial(basis(3, 0), cfg);
  EXPECT_THROW(activate(s, basis(4, 0)), InvalidInput);
}

TEST(HebbAdd, OrthogonalInputIsRecruited) {
  LearnerConfig cfg;
  cfg.a_t = 1.0;
  cfg.rho_t = 0.6;
  auto s = LearnerState::initial(basis(3, 0), cfg);
  const Vector x = basis(3, 1);
  EXPECT_TRUE(maybe_add_neuron(s, x, activate(s, x), cfg));
  ASSERT_EQ(s.k(), 2);
  EXPECT_EQ(Vector(s.w.row(1).transpose()), x);
  EXPECT_EQ(s.b[1], 0.0);
  EXPECT_EQ(s.r[1], cfg.a_bias);
  EXPECT_EQ(s.e[1], 0.0);
  EXPECT_EQ(s.c.rows(), 2);
  EXPECT_EQ(s.c.cols(), 2);
}

TEST(HebbAdd, DuplicateInputIsNotRecruited) {
  LearnerConfig cfg;
  auto s = LearnerState::initial(basis(3, 0), cfg);
  const Vector x = basis(3, 0);
  EXPECT_FALSE(maybe_add_neuron(s, x, activate(s, x), cfg));
  EXPECT_EQ(s.k(), 1);
}

TEST(HebbAdd, BothGatesMustOpen) {
  // Σa = 1.2 ≥ a_t while every similarity is below rho_t
  LearnerConfig cfg;
  cfg.a_t = 1.0;
  cfg.rho_t = 0.7;
  const double c = 0.6;
  const double s_ = std::sqrt(1.0 - c * c);
  Matrix w(2, 2);
  w << c, s_, c, -s_;
  auto s = state_from(w, cfg);
  const Vector x = basis(2, 0);
  const auto code = activate(s, x);
  EXPECT_NEAR(code.total(), 1.2, 1e-15);
  EXPECT_FALSE(maybe_add_neuron(s, x, code, cfg));
  EXPECT_EQ(s.k(), 2);
}

TEST(HebbAdd, GateReadsSimilarityBeforeBias) {
  // a large bias silences the neuron, but w·x = 1 still blocks recruitment
  LearnerConfig cfg;
  auto s = LearnerState::initial(basis(3, 0), cfg);
  s.b[0] = 2.0;
  const Vector x = basis(3, 0);
  const auto code = activate(s, x);
  EXPECT_EQ(code.total(), 0.0);
  EXPECT_FALSE(maybe_add_neuron(s, x, code, cfg));
}

TEST(HebbUpdate, SingleWinnerIsFullStep) {
  LearnerConfig cfg;
  cfg.eta = 0.1;
  cfg.k_w = 1;
  Rng rng(3);
  auto s = state_from(test::unit_rows(3, 5, rng), cfg);
  const Vector x = test::unit_vector(5, rng);
  const auto code = activate(s, x);
  const Index win = select_winners(s, code, 1)[0];
  Vector expect = s.w.row(win).transpose() + cfg.eta * x;
  expect.normalize();
  hebbian_update(s, x, code, cfg);
  EXPECT_LT((Vector(s.w.row(win).transpose()) - expect).norm(), 1e-15);
}

TEST(HebbUpdate, CompetitionKeepsOnlyStrongSynapses) {
  LearnerConfig cfg;
  cfg.eta = 0.1;
  cfg.k_w = 2;
  Matrix w(2, 2);
  w << 0.8, 0.6, 0.3, std::sqrt(1.0 - 0.09);
  auto s = state_from(w, cfg);
  Vector x(2);
  x << 0.5, std::sqrt(0.75);
  const auto code = activate(s, x);
  hebbian_update(s, x, code, cfg);

  // dim 0: 0.3 < 0.9·0.8, so only the first row moves there. dim 1: 0.6 < 0.9·0.954,
  // so only the second row moves there.
  Vector r0(2), r1(2);
  r0 << 0.8 + 0.05, 0.6;
  r1 << 0.3, w(1, 1) + 0.1 * x[1];
  r0.normalize();
  r1.normalize();
  EXPECT_LT((Vector(s.w.row(0).transpose()) - r0).norm(), 1e-15);
  EXPECT_LT((Vector(s.w.row(1).transpose()) - r1).norm(), 1e-15);
}

TEST(HebbUpdate, NegativeInputUsesMinBranch) {
  LearnerConfig cfg;
  cfg.eta = 0.1;
  cfg.k_w = 2;
  Matrix w(2, 2);
  w << -0.8, 0.6, -0.3, std::sqrt(0.91);
  auto s = state_from(w, cfg);
  Vector x(2);
  x << -0.6, 0.8;
  const auto before = s.w;
  hebbian_update(s, x, activate(s, x), cfg);
  // dim 0: x < 0, min is −0.8; −0.3 > 0.9·(−0.8) so row 1 is untouched there
  Vector r1(2);
  r1 << -0.3, std::sqrt(0.91) + 0.08;
  r1.normalize();
  EXPECT_LT((Vector(s.w.row(1).transpose()) - r1).norm(), 1e-15);
  Vector r0(2);
  r0 << -0.8 - 0.06, 0.6;
  r0.normalize();
  EXPECT_LT((Vector(s.w.row(0).transpose()) - r0).norm(), 1e-15);
  EXPECT_NE(before, s.w);
}

TEST(HebbUpdate, ZeroInputCoordinateIsUntouched) {
  LearnerConfig cfg;
  cfg.k_w = 2;
  cfg.eta = 0.1;
  Matrix w(2, 3);
  w << 0.6, 0.8, 0.0, 0.8, 0.0, 0.6;
  auto s = state_from(w, cfg);
  Vector x(3);
  x << 1.0, 0.0, 0.0;
  hebbian_update(s, x, activate(s, x), cfg);
  // dim 0: 0.6 < 0.72 leaves row 0 alone; dims 1 and 2 see x_j = 0
  Vector r1(3);
  r1 << 0.9, 0.0, 0.6;
  r1.normalize();
  EXPECT_EQ(s.w.row(0), w.row(0));
  EXPECT_LT((Vector(s.w.row(1).transpose()) - r1).norm(), 1e-15);
}

TEST(HebbUpdate, IdenticalWinnersStayIdentical) {
  LearnerConfig cfg;
  cfg.k_w = 2;
  cfg.eta = 0.1;
  Rng rng(11);
  const Vector u = test::unit_vector(6, rng);
  Matrix w(2, 6);
  w.row(0) = u.transpose();
  w.row(1) = u.transpose();
  auto s = state_from(w, cfg);
  for (int t = 0; t < 50; ++t) {
    const Vector x = test::unit_vector(6, rng);
    hebbian_update(s, x, activate(s, x), cfg);
  }
  EXPECT_TRUE(test::bitwise_equal(Matrix(s.w.row(0)), Matrix(s.w.row(1))));
}

TEST(HebbWinners, TiesGoToLowerIndex) {
  LearnerConfig cfg;
  Matrix w(3, 2);
  w << 0.0, 1.0, 1.0, 0.0, 1.0, 0.0;
  const auto s = state_from(w, cfg);
  const auto code = activate(s, basis(2, 0));
  EXPECT_EQ(select_winners(s, code, 1), std::vector<Index>{1});
  EXPECT_EQ(select_winners(s, code, 2), (std::vector<Index>{1, 2}));
  EXPECT_EQ(select_winners(s, code, 5).size(), 3u);
}

TEST(HebbWinners, SilentNeuronsRankByPreactivation) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 0.0, 1.0, 1.0, 0.0;
  auto s = state_from(w, cfg);
  s.b << 0.6, 1.5;  // both silent on e_0; pre-activations −0.6 and −0.5
  const auto code = activate(s, basis(2, 0));
  EXPECT_EQ(code.total(), 0.0);
  EXPECT_EQ(select_winners(s, code, 1), std::vector<Index>{1});
}

TEST(HebbBias, OneStepArithmetic) {
  LearnerConfig cfg;
  cfg.a_bias = 0.2;
  auto s = LearnerState::initial(basis(2, 0), cfg);
  SparseCode silent;
  silent.a = Vector::Zero(1);
  silent.similarity = Vector::Zero(1);
  update_bias(s, silent, cfg);
  EXPECT_NEAR(s.r[0], 0.198, 1e-15);
  EXPECT_NEAR(s.b[0], -0.00002, 1e-15);
}

TEST(HebbBias, DisabledLeavesStateAlone) {
  LearnerConfig cfg;
  cfg.allow_bias = false;
  auto s = LearnerState::initial(basis(2, 0), cfg);
  SparseCode code;
  code.a = Vector::Ones(1);
  code.similarity = Vector::Ones(1);
  update_bias(s, code, cfg);
  EXPECT_EQ(s.b[0], 0.0);
  EXPECT_EQ(s.r[0], cfg.a_bias);
}

TEST(HebbBias, AlwaysFiringDrivesRateToOneAndBiasUp) {
  LearnerConfig cfg;
  auto s = LearnerState::initial(basis(2, 0), cfg);
  SparseCode code;
  code.a = Vector::Constant(1, 0.5);
  code.similarity = Vector::Ones(1);
  double prev = s.b[0];
  bool crossed = false;
  for (int t = 0; t < 10000; ++t) {
    update_bias(s, code, cfg);
    if (crossed) {
      ASSERT_GT(s.b[0], prev);
    }
    crossed = crossed || s.r[0] > cfg.a_bias;
    prev = s.b[0];
  }
  EXPECT_NEAR(s.r[0], 1.0, 1e-3);
}

TEST(HebbBias, SilentNeuronBiasDrifts) {
  LearnerConfig cfg;
  auto s = LearnerState::initial(basis(2, 0), cfg);
  SparseCode code;
  code.a = Vector::Zero(1);
  code.similarity = Vector::Zero(1);
  for (int t = 0; t < 2000; ++t) update_bias(s, code, cfg);
  EXPECT_LT(s.r[0], 1e-6);
  EXPECT_LT(s.b[0], 0.0);
}

TEST(HebbCorrelation, ZeroActivityOnlyDecays) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 0, 1;
  auto s = state_from(w, cfg);
  s.c(0, 1) = 0.5;
  s.e << 0.2, 0.4;
  SparseCode code;
  code.a = Vector::Zero(2);
  code.similarity = Vector::Zero(2);
  update_correlation(s, code);
  EXPECT_DOUBLE_EQ(s.c(0, 1), 0.9999 * 0.5);
  EXPECT_DOUBLE_EQ(s.e[0], 0.9999 * 0.2);
  EXPECT_DOUBLE_EQ(s.e[1], 0.9999 * 0.4);
}

TEST(HebbCorrelation, SingleStepArithmetic) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 0, 1;
  auto s = state_from(w, cfg);
  SparseCode code;
  code.a = Vector(2);
  code.a << 1.0, 2.0;
  code.similarity = code.a;
  code.support = {0, 1};
  update_correlation(s, code);
  EXPECT_NEAR(s.c(0, 1), 0.0002, 1e-18);
  EXPECT_NEAR(s.e[0], 0.0001, 1e-18);
  EXPECT_NEAR(s.e[1], 0.0004, 1e-18);
}

TEST(HebbCorrelation, ConstantActivityConvergesToOne) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 0, 1;
  auto s = state_from(w, cfg);
  SparseCode code;
  code.a = Vector(2);
  code.a << 0.3, 0.7;
  code.similarity = code.a;
  code.support = {0, 1};
  for (int t = 0; t < 100000; ++t) update_correlation(s, code);
  EXPECT_NEAR(s.c(0, 1), 0.21, 1e-3);
  EXPECT_NEAR(s.e[0], 0.09, 1e-3);
  EXPECT_NEAR(normalized_correlation(s)(0, 1), 1.0, 1e-3);
}

TEST(HebbPrune, DuplicatePairLosesHigherIndex) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 1, 0;
  auto s = state_from(w, cfg);
  s.e << 0.25, 0.25;
  s.c(0, 1) = 0.25;
  EXPECT_EQ(prune(s, cfg), std::vector<Index>{1});
  EXPECT_EQ(s.k(), 1);
  EXPECT_EQ(s.c.rows(), 1);
  EXPECT_EQ(s.r.size(), 1);
}

TEST(HebbPrune, NothingAboveThresholdIsNoop) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 0, 1;
  auto s = state_from(w, cfg);
  s.e << 0.25, 0.25;
  s.c(0, 1) = 0.1;
  const auto before = s.w;
  EXPECT_TRUE(prune(s, cfg).empty());
  EXPECT_EQ(s.w, before);
}

TEST(HebbPrune, ThreeDuplicatesKeepOne) {
  LearnerConfig cfg;
  Matrix w(3, 2);
  w << 1, 0, 1, 0, 1, 0;
  auto s = state_from(w, cfg);
  s.e.setConstant(0.5);
  s.c.setConstant(0.5);
  const auto removed = prune(s, cfg);
  EXPECT_EQ(removed.size(), 2u);
  EXPECT_EQ(s.k(), 1);
}

TEST(HebbPrune, FreshNeuronsAreSkipped) {
  LearnerConfig cfg;
  Matrix w(2, 2);
  w << 1, 0, 1, 0;
  auto s = state_from(w, cfg);
  s.e << 0.25, 0.0;
  s.c(0, 1) = 0.25;
  EXPECT_TRUE(prune(s, cfg).empty());
  EXPECT_TRUE(std::isnan(normalized_correlation(s)(0, 1)));
}

TEST(HebbConfig, RejectsOutOfRangeFields) {
  auto bad = [](auto mutate) {
    LearnerConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](LearnerConfig& c) { c.eta = 0; }).validate(), InvalidInput);
  EXPECT_THROW(bad([](LearnerConfig& c) { c.a_bias = 1.1; }).validate(), InvalidInput);
  EXPECT_THROW(bad([](LearnerConfig& c) { c.rho_t = -0.1; }).validate(), InvalidInput);
  EXPECT_THROW(bad([](LearnerConfig& c) { c.rho_u = 1.5; }).validate(), InvalidInput);
  EXPECT_THROW(bad([](LearnerConfig& c) { c.k_w = 0; }).validate(), InvalidInput);
  EXPECT_THROW(bad([](LearnerConfig& c) { c.competition_factor = 0; }).validate(), InvalidInput);
  EXPECT_NO_THROW(LearnerConfig{}.validate());
}

TEST(HebbFit, EmptyInputThrows) {
  EXPECT_THROW(fit(UnitRowMatrix{}, LearnerConfig{}), InvalidInput);
}

TEST(HebbFit, SingleSampleStaysOneNeuron) {
  LearnerConfig cfg;
  cfg.epochs = 3;
  Matrix x(1, 3);
  x << 0.0, 0.6, 0.8;
  const auto s = fit(UnitRowMatrix::validated(x), cfg);
  EXPECT_EQ(s.k(), 1);
  EXPECT_LT((s.w.row(0) - x.row(0)).norm(), 1e-12);
}

TEST(HebbFit, DeterministicForSameInput) {
  const auto x = mixture(8, 3, 300, 50, 5);
  LearnerConfig cfg;
  cfg.k_w = 2;
  cfg.epochs = 3;
  cfg.prune_period = 200;
  const auto a = fit(x, cfg);
  const auto b = fit(x, cfg);
  EXPECT_TRUE(test::bitwise_equal(a.w, b.w));
  EXPECT_TRUE(test::bitwise_equal(a.b, b.b));
  EXPECT_TRUE(test::bitwise_equal(a.c, b.c));
}

TEST(HebbFit, SeparatedModesAreCovered) {
  const auto x = mixture(30, 5, 1000, 150, 21);
  LearnerConfig cfg;
  cfg.eta = 0.1;
  cfg.rho_t = 0.8;
  cfg.a_t = 1.0;
  cfg.epochs = 7;
  cfg.allow_prune = false;
  cfg.a_bias = 0.5;
  const auto s = fit(x, cfg);
  EXPECT_GE(s.k(), 5);
  EXPECT_LE(s.k(), 25);
  const Vector best = (x.matrix() * s.w.transpose()).rowwise().maxCoeff();
  EXPECT_GE(best.minCoeff(), cfg.rho_t - 0.2);
  EXPECT_GT((best.array() >= cfg.rho_t).cast<double>().mean(), 0.95);
}

TEST(HebbFit, TwoWinnersRecruitAtLeastAsMany) {
  int more = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto x = mixture(30, 5, 1000, 100, seed);
    LearnerConfig cfg;
    cfg.eta = 0.1;
    cfg.rho_t = 0.8;
    cfg.epochs = 7;
    cfg.allow_prune = false;
    cfg.a_bias = 0.5;
    cfg.k_w = 1;
    const Index k1 = fit(x, cfg).k();
    cfg.k_w = 2;
    const Index k2 = fit(x, cfg).k();
    more += k2 >= k1 ? 1 : 0;
  }
  EXPECT_GE(more, 2);
}

TEST(HebbFit, ObserverSeesEveryEpoch) {
  const auto x = mixture(6, 2, 100, 20, 2);
  LearnerConfig cfg;
  cfg.epochs = 4;
  std::vector<int> seen;
  fit(x, cfg, [&](const EpochStats& st, const LearnerState& s) {
    seen.push_back(st.epoch);
    EXPECT_EQ(st.neurons, s.k());
  });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4}));
}

TEST(HebbFit, DecayModeEndsUnitNorm) {
  const auto x = mixture(10, 3, 300, 40, 8);
  LearnerConfig cfg;
  cfg.norm_mode = NormMode::kDecayApproximation;
  cfg.k_w = 2;
  cfg.epochs = 3;
  const auto s = fit(x, cfg);
  EXPECT_LE(max_unit_norm_deviation(s.w), kUnitNormTolerance);
}

TEST(HebbNormMode, StringRoundTrip) {
  for (auto m : {NormMode::kExplicitRenormalize, NormMode::kDecayApproximation}) {
    EXPECT_EQ(norm_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(norm_mode_from_string("oja"), InvalidInput);
}

// ---- properties -------------------------------------------------------------

TEST(HebbProperty, UnitNormAfterEveryUpdate) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = mixture(12, 4, 250, 30, seed);
    LearnerConfig cfg;
    cfg.k_w = static_cast<int>(seed % 3) + 1;
    cfg.eta = 0.05;
    cfg.a_t = 1.5;
    cfg.prune_period = 300;
    LearnerState s = LearnerState::initial(x.row(0).transpose(), cfg);
    for (int epoch = 0; epoch < 2; ++epoch) {
      for (Index n = 0; n < x.rows(); ++n) {
        train_step(s, x.row(n).transpose(), cfg);
        ASSERT_LE(max_unit_norm_deviation(s.w), kUnitNormTolerance) << "seed " << seed << " sample " << n;
      }
    }
  }
}

TEST(HebbProperty, StateShapesStayConsistent) {
  const auto x = mixture(10, 5, 400, 20, 4);
  LearnerConfig cfg;
  cfg.k_w = 2;
  cfg.prune_period = 97;
  cfg.rho_u = 0.5;
  LearnerState s = LearnerState::initial(x.row(0).transpose(), cfg);
  for (Index n = 0; n < x.rows(); ++n) {
    train_step(s, x.row(n).transpose(), cfg);
    const Index k = s.k();
    ASSERT_EQ(s.b.size(), k);
    ASSERT_EQ(s.r.size(), k);
    ASSERT_EQ(s.e.size(), k);
    ASSERT_EQ(s.c.rows(), k);
    ASSERT_EQ(s.c.cols(), k);
    ASSERT_GE(s.e.minCoeff(), 0.0);
    ASSERT_GE(Matrix(s.c.triangularView<Eigen::StrictlyUpper>()).minCoeff(), 0.0);
  }
}

TEST(HebbProperty, HomeostasisHoldsFiringRate) {
  // 10^4 stationary samples, 15 epochs, then a trailing window of one more
  // epoch with the same updates running
  const auto x = mixture(20, 5, 2000, 50, 17);
  LearnerConfig cfg;
  cfg.eta = 0.05;
  cfg.a_bias = 0.2;
  cfg.k_w = 2;
  cfg.epochs = 15;
  cfg.allow_prune = false;
  LearnerState s = fit(x, cfg);

  const Index k0 = s.k();
  Vector fired = Vector::Zero(k0);
  for (Index n = 0; n < x.rows(); ++n) {
    const auto code = activate(s, x.row(n).transpose());
    for (Index i = 0; i < k0; ++i) fired[i] += code.a[i] > 0.0 ? 1.0 : 0.0;
    train_step(s, x.row(n).transpose(), cfg);
  }
  const Vector rate = fired / static_cast<double>(x.rows());
  for (Index i = 0; i < k0; ++i) {
    EXPECT_LE(std::abs(rate[i] - cfg.a_bias), 0.05) << "neuron " << i << " of " << k0;
  }
}

TEST(HebbProperty, PrunePostCondition) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const Index k = 2 + static_cast<Index>(seed % 7);
    LearnerConfig cfg;
    cfg.rho_u = 0.3 + 0.05 * static_cast<double>(seed % 10);
    LearnerState s;
    s.w = test::unit_rows(k, 4, rng);
    s.b = Vector::Zero(k);
    s.r = Vector::Zero(k);
    // activities from a random nonnegative code stream so C and e are consistent
    s.e = Vector::Zero(k);
    s.c = Matrix::Zero(k, k);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Matrix mix = test::gaussian(k, 3, rng);
    for (int t = 0; t < 3000; ++t) {
      SparseCode code;
      const Vector z = Vector::NullaryExpr(3, [&](Index) { return u(rng) - 0.3; });
      code.a = (mix * z).cwiseMax(0.0);
      code.similarity = code.a;
      for (Index i = 0; i < k; ++i) {
        if (code.a[i] > 0) code.support.push_back(i);
      }
      update_correlation(s, code);
    }
    prune(s, cfg);
    const Matrix cn = normalized_correlation(s);
    for (Index j = 0; j < s.k(); ++j) {
      for (Index l = j + 1; l < s.k(); ++l) {
        if (!std::isnan(cn(j, l))) ASSERT_LE(cn(j, l), cfg.rho_u) << "seed " << seed;
      }
    }
  }
}

TEST(HebbProperty, WtaMatchesOnlineSphericalKMeans) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed * 131);
    const Index d = 2 + static_cast<Index>(rng() % 9);
    const Index k = 1 + static_cast<Index>(rng() % 4);
    LearnerConfig cfg;
    cfg.k_w = 1;
    cfg.eta = 0.05 + 0.01 * static_cast<double>(seed % 10);
    cfg.allow_add = false;
    cfg.allow_prune = false;
    cfg.allow_bias = false;
    const Matrix w0 = test::unit_rows(k, d, rng);
    LearnerState s = state_from(w0, cfg);

    Matrix oracle = w0;
    for (int t = 0; t < 100; ++t) {
      const Vector x = test::unit_vector(d, rng);
      Index win = 0;
      for (Index i = 1; i < k; ++i) {
        if (oracle.row(i).dot(x) > oracle.row(win).dot(x)) win = i;
      }
      oracle.row(win) += cfg.eta * x.transpose();
      oracle.row(win) /= oracle.row(win).norm();

      train_step(s, x, cfg);
    }
    ASSERT_TRUE(test::bitwise_equal(s.w, oracle)) << "seed " << seed << " max diff "
                                                  << (s.w - oracle).cwiseAbs().maxCoeff();
  }
}
