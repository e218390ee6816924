#pragma once

#include "config.hpp"

#include <filesystem>
#include <ostream>

namespace ahl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;  // bad flags, config or inputs
inline constexpr int kExitRuntime = 3;     // failure while computing or writing
inline constexpr int kExitCheck = 4;       // --check found a failed criterion

struct RunOptions {
  int jobs = 1;
  bool check = false;  // evaluate the acceptance orderings and exit with kExitCheck on failure
  std::ostream* log = nullptr;
};

int cmd_gen_vmf(const ExperimentConfig& config, const RunOptions& options);
int cmd_synthetic_bench(const ExperimentConfig& config, const RunOptions& options);
int cmd_train(const ExperimentConfig& config, const RunOptions& options);
int cmd_features(const ExperimentConfig& config, const RunOptions& options);
int cmd_classify(const ExperimentConfig& config, const RunOptions& options);
// Aggregates every metrics.csv and errors.csv below `dir` into report_*.csv in `out`.
int cmd_report(const std::filesystem::path& dir, const std::filesystem::path& out, const RunOptions& options);

}  // namespace ahl::cli
