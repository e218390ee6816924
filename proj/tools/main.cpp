#include "commands.hpp"
#include "config.hpp"

#include "ahl/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  bool check = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_check) {
  cmd->add_option("--config", f.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override experiment.seed");
  cmd->add_option("--jobs", f.jobs, "parallel runs")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "override experiment.output");
  cmd->add_flag("--quiet", f.quiet, "no progress output");
  if (with_check) cmd->add_flag("--check", f.check, "evaluate the acceptance criteria; exit 4 if any fails");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ahl::cli;

  CLI::App app{"Adaptive Hebbian learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  CommonFlags flags;
  struct Entry {
    CLI::App* app;
    int (*run)(const ExperimentConfig&, const RunOptions&);
  };
  std::vector<Entry> entries = {
      {app.add_subcommand("gen-vmf", "sample vMF mixtures to matrix files"), cmd_gen_vmf},
      {app.add_subcommand("synthetic-bench", "entropy / reconstruction / correlation benchmark"), cmd_synthetic_bench},
      {app.add_subcommand("train", "fit one learner on a matrix file"), cmd_train},
      {app.add_subcommand("features", "train a convolutional stack and export features"), cmd_features},
      {app.add_subcommand("classify", "linear SVM error rates per layer set"), cmd_classify},
  };
  for (auto& e : entries) {
    const std::string name = e.app->get_name();
    add_common(e.app, flags, name == "synthetic-bench" || name == "classify");
  }

  CLI::App* report = app.add_subcommand("report", "aggregate metrics.csv / errors.csv files below a directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "directory to scan")->required();
  report->add_option("--out", flags.out, "output directory (default: <dir>)");
  report->add_flag("--quiet", flags.quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  RunOptions options;
  options.jobs = flags.jobs;
  options.check = flags.check;
  options.log = flags.quiet ? nullptr : &std::cerr;

  ExperimentConfig config;
  int (*run)(const ExperimentConfig&, const RunOptions&) = nullptr;
  try {
    if (report->parsed()) {
      return cmd_report(report_dir, flags.out.empty() ? report_dir : flags.out, options);
    }
    for (const auto& e : entries) {
      if (e.app->parsed()) run = e.run;
    }
    config = load_config(flags.config);
    if (flags.seed) override_seed(config, *flags.seed);
    if (!flags.out.empty()) config.output = flags.out;
    check_inputs(config);
  } catch (const ahl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return report->parsed() ? kExitRuntime : kExitValidation;
  }

  try {
    return run(config, options);
  } catch (const ahl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
