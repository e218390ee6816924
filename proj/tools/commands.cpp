#include "commands.hpp"

#include "manifest.hpp"

#include "ahl/convpipe.hpp"
#include "ahl/dataio.hpp"
#include "ahl/errors.hpp"
#include "ahl/experiments.hpp"
#include "ahl/metrics.hpp"
#include "ahl/model_io.hpp"
#include "ahl/spkm.hpp"
#include "ahl/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

namespace ahl::cli {

namespace fs = std::filesystem;

namespace {

using io::CsvRow;

void require_kind(const ExperimentConfig& c, std::initializer_list<ExperimentKind> kinds, const std::string& command) {
  if (std::find(kinds.begin(), kinds.end(), c.kind) != kinds.end()) return;
  std::string allowed;
  for (auto k : kinds) allowed += (allowed.empty() ? "" : " or ") + to_string(k);
  throw ConfigError("experiment.kind", command + " needs kind " + allowed + ", got " + to_string(c.kind));
}

exp::Log make_log(const RunOptions& o) {
  return [&o](const std::string& msg) {
    if (o.log) *o.log << msg << std::endl;
  };
}

std::int64_t as_int(Index v) { return static_cast<std::int64_t>(v); }

std::string kappa_tag(double kappa) { return "k" + io::format_double(kappa); }

int report_checks(const std::vector<exp::Check>& checks, const RunOptions& o) {
  bool ok = true;
  for (const auto& c : checks) {
    if (o.log) *o.log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitCheck;
}

io::ImageSet load_images(const fs::path& images, const fs::path& labels, Index limit) {
  io::ImageSet set = io::load_idx(images, labels);
  if (limit > 0 && limit < set.count) set = set.head(limit);
  return set;
}

std::vector<fs::path> image_inputs(const ExperimentConfig& c, bool with_test) {
  std::vector<fs::path> in;
  for (const auto& p : {c.data.train_images, c.data.train_labels}) {
    if (!p.empty()) in.push_back(p);
  }
  if (with_test) {
    for (const auto& p : {c.data.test_images, c.data.test_labels}) {
      if (!p.empty()) in.push_back(p);
    }
  }
  return in;
}

void write_stack_tables(const fs::path& out, const conv::FeatureStack& stack, std::vector<fs::path>& outputs) {
  std::vector<CsvRow> layers;
  std::vector<CsvRow> traces;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const auto& l = stack.layers[i];
    const auto n = static_cast<std::int64_t>(i + 1);
    layers.push_back({n, as_int(l.filter_size), as_int(l.pool_size), as_int(l.in_channels), as_int(l.neurons())});
    for (std::size_t e = 0; e < l.neuron_trace.size(); ++e) {
      traces.push_back({n, static_cast<std::int64_t>(e + 1), as_int(l.neuron_trace[e])});
    }
  }
  io::write_csv(out / "layers.csv", {"layer", "filter", "pool", "in-channels", "K"}, layers);
  io::write_csv(out / "neuron_trace.csv", {"layer", "epoch", "K"}, traces);
  outputs.insert(outputs.end(), {"layers.csv", "neuron_trace.csv"});
}

conv::FeatureStack train_configured_stack(const ExperimentConfig& c, const io::ImageSet& train, const RunOptions& o) {
  Rng rng(c.seed);
  return conv::train_stack(train, c.layers, rng, {make_log(o)});
}

}  // namespace

int cmd_gen_vmf(const ExperimentConfig& c, const RunOptions& o) {
  require_kind(c, {ExperimentKind::kGenVmf, ExperimentKind::kSynthetic}, "gen-vmf");
  const auto& s = c.synthetic;
  fs::create_directories(c.output);
  std::vector<fs::path> outputs;
  Rng rng(c.seed);
  for (double kappa : s.kappas) {
    const auto mixture = vmf::random_mixture(s.dim, s.components, s.per_component, kappa, rng);
    const auto data = vmf::sample_mixture(mixture, rng, c.shuffle);
    Matrix means(static_cast<Index>(mixture.size()), s.dim);
    for (std::size_t i = 0; i < mixture.size(); ++i) means.row(static_cast<Index>(i)) = mixture[i].mu.transpose();
    const std::string tag = "vmf_" + kappa_tag(kappa);
    io::save_matrix(c.output / (tag + ".bin"), data.x.matrix());
    io::save_labels(c.output / (tag + "_labels.txt"), data.labels);
    io::save_matrix(c.output / (tag + "_means.bin"), means);
    outputs.insert(outputs.end(), {tag + ".bin", tag + "_labels.txt", tag + "_means.bin"});
    make_log(o)("kappa " + io::format_double(kappa) + ": " + std::to_string(data.x.rows()) + " samples");
  }
  write_manifest(c.output, {"gen-vmf", c.seed, render_config(c), {}, outputs, {}});
  return kExitOk;
}

int cmd_synthetic_bench(const ExperimentConfig& c, const RunOptions& o) {
  require_kind(c, {ExperimentKind::kSynthetic}, "synthetic-bench");
  const auto rows = exp::run_synthetic_benchmark(c.synthetic, o.jobs, make_log(o));
  fs::create_directories(c.output / "correlations");
  std::vector<fs::path> outputs;

  std::vector<CsvRow> metrics_rows;
  for (const auto& m : rows) {
    metrics_rows.push_back({static_cast<std::int64_t>(m.run_seed), m.kappa, m.method, as_int(m.k), m.entropy_bits,
                            m.mean_recon_error, m.mean_weight_corr});
    std::vector<CsvRow> corr;
    for (std::size_t i = 0; i < m.correlations.size(); ++i) {
      corr.push_back({static_cast<std::int64_t>(i + 1), m.correlations[i]});
    }
    const fs::path name = fs::path("correlations") / (m.method + "_" + kappa_tag(m.kappa) + "_s" +
                                                      std::to_string(m.run_seed) + ".csv");
    io::write_csv(c.output / name, {"rank", "correlation"}, corr);
    outputs.push_back(name);
  }
  io::write_csv(c.output / "metrics.csv",
                {"run-seed", "kappa", "method", "K", "entropy-bits", "mean-recon-error", "mean-weight-corr"},
                metrics_rows);
  outputs.push_back("metrics.csv");

  const auto summary = exp::summarize(rows);
  std::vector<CsvRow> summary_rows;
  for (const auto& s : summary) {
    summary_rows.push_back({s.kappa, s.method, static_cast<std::int64_t>(s.runs), s.mean_k, s.entropy_bits,
                            s.mean_recon_error, s.mean_weight_corr});
  }
  io::write_csv(c.output / "summary.csv",
                {"kappa", "method", "runs", "mean-K", "entropy-bits", "mean-recon-error", "mean-weight-corr"},
                summary_rows);
  outputs.push_back("summary.csv");
  write_manifest(c.output, {"synthetic-bench", c.seed, render_config(c), {}, outputs, {}});

  if (!o.check) return kExitOk;
  auto checks = exp::entropy_checks(summary, c.synthetic.kappas, c.synthetic.winners);
  const auto corr = exp::correlation_checks(summary, c.synthetic.kappas, c.synthetic.winners);
  checks.insert(checks.end(), corr.begin(), corr.end());
  return report_checks(checks, o);
}

int cmd_train(const ExperimentConfig& c, const RunOptions& o) {
  require_kind(c, {ExperimentKind::kTrain}, "train");
  check_inputs(c);
  const UnitRowMatrix x = UnitRowMatrix::normalized(io::load_matrix(c.data.input));
  fs::create_directories(c.output);
  std::vector<fs::path> outputs;
  const auto log = make_log(o);

  if (c.method == conv::LearnerKind::kAhl) {
    std::vector<CsvRow> epochs;
    auto observer = [&](const hebb::EpochStats& s, const hebb::LearnerState&) {
      epochs.push_back({static_cast<std::int64_t>(s.epoch), as_int(s.neurons), as_int(s.added), as_int(s.pruned),
                        s.weight_change});
      log("epoch " + std::to_string(s.epoch) + ": K = " + std::to_string(s.neurons));
    };
    const hebb::LearnerState state = hebb::fit(x, c.learner, observer);
    io::save_checkpoint(c.output / "model.ckpt", io::learner_checkpoint(state, c.learner));
    const std::string text = io::learner_text(state);
    io::write_file(c.output / "model.txt", io::ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    io::write_csv(c.output / "epochs.csv", {"epoch", "K", "added", "pruned", "weight-change"}, epochs);
    outputs.insert(outputs.end(), {"model.ckpt", "model.txt", "epochs.csv"});
  } else {
    const spkm::SpkmModel model = spkm::spkm_fit(x, c.spkm_k, c.spkm_restarts, c.seed);
    const Vector bias = metrics::calibrate_bias(model.centers.matrix(), x.matrix(), c.learner.a_bias);
    io::save_checkpoint(c.output / "model.ckpt", io::spkm_checkpoint(model, &bias));
    outputs.push_back("model.ckpt");
    log("spkm: K = " + std::to_string(model.centers.rows()) + ", objective " + io::format_double(model.objective));
  }
  write_manifest(c.output, {"train", c.seed, render_config(c), {c.data.input}, outputs, {}});
  return kExitOk;
}

int cmd_features(const ExperimentConfig& c, const RunOptions& o) {
  require_kind(c, {ExperimentKind::kFeatures, ExperimentKind::kMnist}, "features");
  check_inputs(c);
  const auto train = load_images(c.data.train_images, c.data.train_labels, c.data.train_limit);
  const auto stack = train_configured_stack(c, train, o);
  fs::create_directories(c.output);
  std::vector<fs::path> outputs;
  io::save_checkpoint(c.output / "stack.ckpt", io::stack_checkpoint(stack));
  outputs.push_back("stack.ckpt");
  write_stack_tables(c.output, stack, outputs);

  std::vector<int> all(stack.layers.size());
  std::iota(all.begin(), all.end(), 1);
  io::save_matrix(c.output / "features_train.bin", conv::extract_features(train, stack, all));
  outputs.push_back("features_train.bin");
  if (train.has_labels()) {
    io::save_labels(c.output / "labels_train.txt", train.labels);
    outputs.push_back("labels_train.txt");
  }
  if (!c.data.test_images.empty()) {
    const auto test = load_images(c.data.test_images, c.data.test_labels, c.data.test_limit);
    io::save_matrix(c.output / "features_test.bin", conv::extract_features(test, stack, all));
    outputs.push_back("features_test.bin");
    if (test.has_labels()) {
      io::save_labels(c.output / "labels_test.txt", test.labels);
      outputs.push_back("labels_test.txt");
    }
  }
  write_manifest(c.output, {"features", c.seed, render_config(c), image_inputs(c, true), outputs, {}});
  return kExitOk;
}

int cmd_classify(const ExperimentConfig& c, const RunOptions& o) {
  require_kind(c, {ExperimentKind::kClassify, ExperimentKind::kMnist}, "classify");
  check_inputs(c);
  const auto train = load_images(c.data.train_images, c.data.train_labels, c.data.train_limit);
  const auto test = load_images(c.data.test_images, c.data.test_labels, c.data.test_limit);
  std::vector<fs::path> inputs = image_inputs(c, true);
  fs::create_directories(c.output);
  std::vector<fs::path> outputs;

  conv::FeatureStack stack;
  if (!c.data.stack.empty()) {
    stack = io::stack_from_checkpoint(io::load_checkpoint(c.data.stack));
    inputs.push_back(c.data.stack);
  } else {
    stack = train_configured_stack(c, train, o);
    io::save_checkpoint(c.output / "stack.ckpt", io::stack_checkpoint(stack));
    outputs.push_back("stack.ckpt");
  }
  for (const auto& set : c.classify.layer_sets) {
    if (set.back() > static_cast<int>(stack.layers.size())) {
      throw ConfigError("classify.layer_sets", "layer " + std::to_string(set.back()) + " is not in the stack");
    }
  }
  write_stack_tables(c.output, stack, outputs);

  const auto rows = exp::classify_layer_sets(train, test, stack, c.classify, make_log(o));
  std::vector<CsvRow> table;
  for (const auto& r : rows) {
    table.push_back({r.layer_set, as_int(r.feature_dim), r.lambda, r.validation_error, r.train_error, r.test_error});
    std::vector<CsvRow> pred;
    for (std::size_t i = 0; i < r.test_predictions.size(); ++i) {
      pred.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(r.test_predictions[i]),
                      static_cast<std::int64_t>(test.labels[i])});
    }
    const std::string name = "predictions_" + r.layer_set + ".csv";
    io::write_csv(c.output / name, {"index", "predicted", "truth"}, pred);
    outputs.push_back(name);
  }
  io::write_csv(c.output / "errors.csv",
                {"layer-set", "feature-dim", "lambda", "validation-error", "train-error", "test-error"}, table);
  outputs.push_back("errors.csv");
  write_manifest(c.output, {"classify", c.seed, render_config(c), inputs, outputs, {}});

  if (!o.check) return kExitOk;
  return report_checks(exp::mnist_checks(stack, rows, train.count), o);
}

int cmd_report(const fs::path& dir, const fs::path& out, const RunOptions& o) {
  if (!fs::is_directory(dir)) throw ConfigError("dir", "not a directory: " + dir.string());
  std::vector<fs::path> metrics_files;
  std::vector<fs::path> table_files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "metrics.csv") metrics_files.push_back(entry.path());
    if (entry.path().filename() == "errors.csv") table_files.push_back(entry.path());
  }
  std::sort(metrics_files.begin(), metrics_files.end());
  std::sort(table_files.begin(), table_files.end());
  if (metrics_files.empty() && table_files.empty()) {
    throw ConfigError("dir", "no metrics.csv or errors.csv below " + dir.string());
  }

  auto column = [](const io::CsvTable& t, const std::string& name, const fs::path& file) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw FormatError(FormatError::Kind::CorruptHeader, file.string() + ": no column " + name);
    return static_cast<std::size_t>(it - t.header.begin());
  };
  auto number = [](const std::string& s) { return std::stod(s); };

  struct Stats {
    std::vector<double> values;
    double mean() const { return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()); }
    double sd() const {
      if (values.size() < 2) return 0.0;
      const double m = mean();
      double ss = 0.0;
      for (double v : values) ss += (v - m) * (v - m);
      return std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
  };

  fs::create_directories(out);
  std::vector<fs::path> outputs;
  const auto log = make_log(o);

  if (!metrics_files.empty()) {
    const std::vector<std::string> fields = {"K", "entropy-bits", "mean-recon-error", "mean-weight-corr"};
    std::map<std::pair<double, std::string>, std::vector<Stats>> groups;
    for (const auto& f : metrics_files) {
      const auto t = io::read_csv(f);
      const auto kappa = column(t, "kappa", f);
      const auto method = column(t, "method", f);
      std::vector<std::size_t> cols;
      for (const auto& name : fields) cols.push_back(column(t, name, f));
      for (const auto& row : t.rows) {
        auto& g = groups[{number(row[kappa]), row[method]}];
        g.resize(fields.size());
        for (std::size_t i = 0; i < cols.size(); ++i) g[i].values.push_back(number(row[cols[i]]));
      }
    }
    std::vector<CsvRow> rows;
    for (const auto& [key, stats] : groups) {
      CsvRow r{key.first, key.second, static_cast<std::int64_t>(stats[0].values.size())};
      for (const auto& s : stats) {
        r.push_back(s.mean());
        r.push_back(s.sd());
      }
      rows.push_back(r);
    }
    std::vector<std::string> header = {"kappa", "method", "runs"};
    for (const auto& name : fields) {
      header.push_back(name + "-mean");
      header.push_back(name + "-sd");
    }
    io::write_csv(out / "report_synthetic.csv", header, rows);
    outputs.push_back("report_synthetic.csv");
    log("synthetic: " + std::to_string(metrics_files.size()) + " files, " + std::to_string(rows.size()) + " groups");
  }

  if (!table_files.empty()) {
    std::map<std::string, Stats> groups;
    for (const auto& f : table_files) {
      const auto t = io::read_csv(f);
      const auto set = column(t, "layer-set", f);
      const auto err = column(t, "test-error", f);
      for (const auto& row : t.rows) groups[row[set]].values.push_back(number(row[err]));
    }
    std::vector<CsvRow> rows;
    for (const auto& [set, s] : groups) {
      rows.push_back({set, static_cast<std::int64_t>(s.values.size()), s.mean(), s.sd()});
    }
    io::write_csv(out / "report_errors.csv", {"layer-set", "runs", "test-error-mean", "test-error-sd"}, rows);
    outputs.push_back("report_errors.csv");
    log("errors: " + std::to_string(table_files.size()) + " files");
  }

  std::vector<fs::path> inputs = metrics_files;
  inputs.insert(inputs.end(), table_files.begin(), table_files.end());
  const std::string abs_dir = fs::absolute(dir).lexically_normal().string();
  write_manifest(out, {"report", 0, "[report]\ndir = " + abs_dir + "\n", inputs, outputs, "ahl report " + abs_dir});
  return kExitOk;
}

}  // namespace ahl::cli
