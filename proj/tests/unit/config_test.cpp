#include "config.hpp"

#include "ahl/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ahl;
using namespace ahl::cli;

namespace {

const char* kMnist = R"(
[experiment]
kind = mnist
seed = 4
output = out/run

[learner]
k_w = 3
epochs = 2

[data]
train_images = data/train-images
train_labels = data/train-labels
test_images = data/test-images
test_labels = data/test-labels
train_limit = 500

[layer1]
filter = 7
pool = 2
a_t = 0.6

[layer2]
filter = 4
pool = 2
a_t = 0.8
k_w = 1

[classify]
layer_sets = 1, 2, 1+2
lambdas = 1e-4, 1e-3
)";

std::string field_of(const std::string& text) {
  try {
    parse_config(text, "/base");
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, ParsesMnistExperiment) {
  const auto c = parse_config(kMnist, "/base");
  EXPECT_EQ(c.kind, ExperimentKind::kMnist);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.output, std::filesystem::path("/base/out/run"));
  EXPECT_EQ(c.data.train_images, std::filesystem::path("/base/data/train-images"));
  EXPECT_EQ(c.data.train_limit, 500);
  ASSERT_EQ(c.layers.size(), 2u);
  EXPECT_EQ(c.layers[0].filter_size, 7);
  EXPECT_EQ(c.layers[0].ahl.a_t, 0.6);
  EXPECT_EQ(c.layers[0].ahl.k_w, 3);  // inherited from [learner]
  EXPECT_EQ(c.layers[1].ahl.k_w, 1);  // overridden
  EXPECT_EQ(c.layers[1].ahl.epochs, 2);
  EXPECT_EQ(c.layers[0].ahl.seed, 4u);
  EXPECT_EQ(c.layers[1].ahl.seed, 5u);
  ASSERT_EQ(c.classify.layer_sets.size(), 3u);
  EXPECT_EQ(c.classify.layer_sets[2], (std::vector<int>{1, 2}));
  EXPECT_EQ(c.classify.lambdas, (std::vector<double>{1e-4, 1e-3}));
}

TEST(Config, SyntheticKindStartsFromBenchmarkDefaults) {
  const auto c = parse_config("[experiment]\nkind = synthetic\nseed = 1\n");
  EXPECT_EQ(c.synthetic.learner.rho_t, 0.8);
  EXPECT_EQ(c.synthetic.learner.eta, 0.1);
  EXPECT_FALSE(c.synthetic.learner.allow_prune);
  EXPECT_EQ(c.synthetic.kappas, (std::vector<double>{50.0, 100.0, 150.0}));
}

TEST(Config, OutOfRangeRhoUNamesFieldAndBound) {
  try {
    parse_config("[experiment]\nkind = train\nseed = 1\n[learner]\nrho_u = 1.5\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "learner.rho_u");
    const std::string what = e.what();
    EXPECT_NE(what.find("[0, 1]"), std::string::npos) << what;
    EXPECT_NE(what.find("1.5"), std::string::npos) << what;
  }
}

TEST(Config, ErrorsNameTheOffendingField) {
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[learner]\nlearning_rate = 1\n"), "learner.learning_rate");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[bogus]\nx = 1\n"), "bogus");
  EXPECT_EQ(field_of("[experiment]\nkind = train\n"), "experiment.seed");
  EXPECT_EQ(field_of("[experiment]\nseed = 1\n"), "experiment.kind");
  EXPECT_EQ(field_of("[experiment]\nkind = nope\nseed = 1\n"), "experiment.kind");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = x\n"), "experiment.seed");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[learner]\nk_w = 0\n"), "learner.k_w");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[learner]\neta = nan\n"), "learner.eta");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[learner]\nallow_add = maybe\n"), "learner.allow_add");
  EXPECT_EQ(field_of("[experiment]\nkind = synthetic\nseed = 1\n[vmf]\nkappa = \n"), "vmf.kappa");
  EXPECT_EQ(field_of("[experiment]\nkind = features\nseed = 1\n[layer2]\nfilter = 3\n"), "layer2");
  EXPECT_EQ(field_of("[experiment]\nkind = train\nseed = 1\n[layer123456789]\nfilter = 3\n"), "layer123456789");
  EXPECT_EQ(field_of("[experiment]\nkind = features\nseed = 1\n[layer1]\npool = 2\n"), "layer1.filter");
  EXPECT_EQ(field_of("[experiment]\nkind = mnist\nseed = 1\n[layer1]\nfilter = 3\n[classify]\nlayer_sets = 1+x\n"),
            "classify.layer_sets");
  EXPECT_EQ(field_of("[experiment\nkind = train\n").rfind("line", 0), 0u);
}

TEST(Config, RenderParsesBackToTheSameConfig) {
  const auto c = parse_config(kMnist, "/base");
  const std::string text = render_config(c);
  const auto back = parse_config(text, "/elsewhere");
  EXPECT_EQ(render_config(back), text);
  EXPECT_EQ(back.layers[1].ahl.k_w, 1);
  EXPECT_EQ(back.output, c.output);

  const auto s = parse_config("[experiment]\nkind = synthetic\nseed = 3\n[vmf]\nkappa = 0.1, 1e300\n");
  EXPECT_EQ(render_config(parse_config(render_config(s))), render_config(s));
  EXPECT_EQ(parse_config(render_config(s)).synthetic.kappas, (std::vector<double>{0.1, 1e300}));
}

TEST(Config, SeedOverridePropagates) {
  auto c = parse_config(kMnist, "/base");
  override_seed(c, 40);
  EXPECT_EQ(c.seed, 40u);
  EXPECT_EQ(c.classify.seed, 40u);
  EXPECT_EQ(c.layers[1].ahl.seed, 41u);
}

TEST(Config, CheckInputsReportsMissingFiles) {
  const auto c = parse_config(kMnist, "/nonexistent-dir");
  try {
    check_inputs(c);
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "data.train_images");
  }
  EXPECT_THROW(load_config("/nonexistent-dir/config.ini"), ConfigError);
}
