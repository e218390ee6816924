#pragma once

// Experiment description read from an INI file. Every key is checked against
// the schema before any computation; failures name the offending field as
// "section.key".
//
//   [experiment]  kind, seed (required), output, jobs
//   [learner]     method = ahl | spkm, spkm_k, spkm_restarts, and the AHL
//                 fields eta, a_bias, a_t, rho_t, rho_u, k_w, epochs,
//                 prune_period, competition_factor, norm_mode, allow_add,
//                 allow_prune, allow_bias
//   [vmf]         dim, components, per_component, kappa (list), shuffle
//   [synthetic]   runs, winners (list), spkm_restarts, calibration_rate, recon_samples
//   [scp]         trust_cosine, max_outer, step_tolerance, qp_tolerance, qp_max_iter
//   [data]        input, train_images, train_labels, test_images, test_labels,
//                 train_limit, test_limit, stack
//   [layerN]      filter, pool, samples, method, spkm_k, spkm_restarts, and any
//                 AHL field overriding [learner] for that layer
//   [classify]    layer_sets (list of 1+2+3 style sets), lambdas (list), epochs, holdout
//
// Relative paths resolve against the directory holding the config file.

#include "ahl/convpipe.hpp"
#include "ahl/experiments.hpp"
#include "ahl/hebb.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ahl::cli {

enum class ExperimentKind { kGenVmf, kSynthetic, kTrain, kFeatures, kClassify, kMnist };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);  // throws ConfigError

struct DataPaths {
  std::filesystem::path input;  // matrix container for `train`
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::filesystem::path stack;  // feature-stack checkpoint for `classify`
  Index train_limit = 0;        // 0 = all
  Index test_limit = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kTrain;
  std::uint64_t seed = 0;
  std::filesystem::path output = "results";
  int jobs = 1;

  conv::LearnerKind method = conv::LearnerKind::kAhl;
  hebb::LearnerConfig learner;
  Index spkm_k = 0;
  int spkm_restarts = 10;

  exp::SyntheticSettings synthetic;  // [vmf], [synthetic], [scp]
  bool shuffle = true;

  DataPaths data;
  std::vector<conv::LayerSpec> layers;
  exp::ClassifySettings classify;

  std::string source_text;  // the file as read, echoed into manifests
  std::filesystem::path source_path;
};

// `base_dir` anchors relative paths. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical INI text of the effective config: every field spelled out, paths
// absolute. parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& config);

// Checks that every input file the kind needs exists. Throws ConfigError.
void check_inputs(const ExperimentConfig& config);

// Applies --seed: the experiment seed and every seed derived from it.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

}  // namespace ahl::cli
