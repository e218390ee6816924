#include "config.hpp"

#include "ahl/dataio.hpp"
#include "ahl/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace ahl::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Typed access to one INI section; remembers which keys were read so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) const { return tree_ && tree_->get_child_optional(key); }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return trim(tree_->get<std::string>(key));
  }

  std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }

  double real(const std::string& key, double fallback) {
    const auto v = raw(key);
    return v ? parse_real(*v, key) : fallback;
  }

  template <typename Int>
  Int integer(const std::string& key, Int fallback) {
    const auto v = raw(key);
    return v ? parse_int<Int>(*v, key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError(field(key), "expected true or false, got '" + *v + "'");
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_real(item, key));
    if (out.empty()) throw ConfigError(field(key), "empty list");
    return out;
  }

  std::vector<int> ints(const std::string& key, std::vector<int> fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_int<int>(item, key));
    if (out.empty()) throw ConfigError(field(key), "empty list");
    return out;
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!used_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  double parse_real(const std::string& v, const std::string& key) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
      throw ConfigError(field(key), "expected a finite number, got '" + v + "'");
    }
    return out;
  }

  template <typename Int>
  Int parse_int(const std::string& v, const std::string& key) const {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(field(key), "expected an integer, got '" + v + "'");
    }
    return out;
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

std::string show(double v) { return io::format_double(v); }

void require_unit(double v, const std::string& field) {
  require(v >= 0.0 && v <= 1.0, field, "must lie in [0, 1], got " + show(v));
}

// Reads the AHL fields present in `s` on top of `base` and range-checks them.
hebb::LearnerConfig read_learner(Section& s, hebb::LearnerConfig c) {
  c.eta = s.real("eta", c.eta);
  require(c.eta > 0.0, s.field("eta"), "must be > 0, got " + show(c.eta));
  c.a_bias = s.real("a_bias", c.a_bias);
  require_unit(c.a_bias, s.field("a_bias"));
  c.a_t = s.real("a_t", c.a_t);
  c.rho_t = s.real("rho_t", c.rho_t);
  require_unit(c.rho_t, s.field("rho_t"));
  c.rho_u = s.real("rho_u", c.rho_u);
  require_unit(c.rho_u, s.field("rho_u"));
  c.k_w = s.integer<int>("k_w", c.k_w);
  require(c.k_w >= 1, s.field("k_w"), "must be >= 1, got " + std::to_string(c.k_w));
  c.epochs = s.integer<int>("epochs", c.epochs);
  require(c.epochs >= 1, s.field("epochs"), "must be >= 1, got " + std::to_string(c.epochs));
  c.prune_period = s.integer<std::uint64_t>("prune_period", c.prune_period);
  require(c.prune_period >= 1, s.field("prune_period"), "must be >= 1");
  c.competition_factor = s.real("competition_factor", c.competition_factor);
  require(c.competition_factor > 0.0 && c.competition_factor <= 1.0, s.field("competition_factor"),
          "must lie in (0, 1], got " + show(c.competition_factor));
  if (const auto mode = s.raw("norm_mode")) {
    try {
      c.norm_mode = hebb::norm_mode_from_string(*mode);
    } catch (const InvalidInput&) {
      throw ConfigError(s.field("norm_mode"), "expected explicit-renormalize or decay-approximation, got '" + *mode + "'");
    }
  }
  c.allow_add = s.boolean("allow_add", c.allow_add);
  c.allow_prune = s.boolean("allow_prune", c.allow_prune);
  c.allow_bias = s.boolean("allow_bias", c.allow_bias);
  return c;
}

conv::LearnerKind read_method(Section& s, conv::LearnerKind fallback) {
  const auto v = s.raw("method");
  if (!v) return fallback;
  if (*v == "ahl") return conv::LearnerKind::kAhl;
  if (*v == "spkm") return conv::LearnerKind::kSpkm;
  throw ConfigError(s.field("method"), "expected ahl or spkm, got '" + *v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void derive_seeds(ExperimentConfig& c) {
  c.learner.seed = c.seed;
  c.synthetic.seed = c.seed;
  c.synthetic.learner.seed = c.seed;
  c.classify.seed = c.seed;
  for (std::size_t i = 0; i < c.layers.size(); ++i) c.layers[i].ahl.seed = c.seed + i;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kGenVmf: return "gen-vmf";
    case ExperimentKind::kSynthetic: return "synthetic";
    case ExperimentKind::kTrain: return "train";
    case ExperimentKind::kFeatures: return "features";
    case ExperimentKind::kClassify: return "classify";
    case ExperimentKind::kMnist: return "mnist";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::kGenVmf, ExperimentKind::kSynthetic, ExperimentKind::kTrain,
                 ExperimentKind::kFeatures, ExperimentKind::kClassify, ExperimentKind::kMnist}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("experiment.kind",
                    "expected one of gen-vmf, synthetic, train, features, classify, mnist; got '" + s + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }

  const std::set<std::string> sections = {"experiment", "learner", "vmf", "synthetic", "scp", "data", "classify"};
  for (const auto& [name, child] : root) {
    const bool layer = name.rfind("layer", 0) == 0 && name.size() > 5 && name.size() <= 8 &&
                       name.find_first_not_of("0123456789", 5) == std::string::npos;
    if (!sections.count(name) && !layer) throw ConfigError(name, "unknown section");
    if (child.empty() && !child.data().empty()) throw ConfigError(name, "key outside of any section");
  }
  auto section = [&](const std::string& name) {
    const auto child = root.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };

  ExperimentConfig c;
  c.source_text = text;

  Section ex = section("experiment");
  const auto kind = ex.raw("kind");
  if (!kind) throw ConfigError("experiment.kind", "required");
  c.kind = experiment_kind_from_string(*kind);
  if (!ex.has("seed")) throw ConfigError("experiment.seed", "required");
  c.seed = ex.integer<std::uint64_t>("seed", 0);
  c.output = resolve(base_dir, ex.text("output", "results"));
  c.jobs = ex.integer<int>("jobs", 1);
  require(c.jobs >= 1, "experiment.jobs", "must be >= 1");
  ex.reject_unknown();

  Section ln = section("learner");
  c.method = read_method(ln, conv::LearnerKind::kAhl);
  c.spkm_k = ln.integer<Index>("spkm_k", 0);
  c.spkm_restarts = ln.integer<int>("spkm_restarts", 10);
  require(c.spkm_restarts >= 1, "learner.spkm_restarts", "must be >= 1");
  const hebb::LearnerConfig learner_base =
      c.kind == ExperimentKind::kSynthetic ? exp::synthetic_learner_defaults() : hebb::LearnerConfig{};
  c.learner = read_learner(ln, learner_base);
  if (c.kind == ExperimentKind::kTrain && c.method == conv::LearnerKind::kSpkm) {
    require(c.spkm_k >= 1, "learner.spkm_k", "must be >= 1 when method = spkm");
  }
  ln.reject_unknown();

  Section vm = section("vmf");
  auto& syn = c.synthetic;
  syn.learner = c.learner;
  syn.dim = vm.integer<Index>("dim", syn.dim);
  require(syn.dim >= 2, "vmf.dim", "must be >= 2, got " + std::to_string(syn.dim));
  syn.components = vm.integer<int>("components", syn.components);
  require(syn.components >= 1, "vmf.components", "must be >= 1");
  syn.per_component = vm.integer<Index>("per_component", syn.per_component);
  require(syn.per_component >= 1, "vmf.per_component", "must be >= 1");
  syn.kappas = vm.reals("kappa", syn.kappas);
  for (double k : syn.kappas) require(k >= 0.0, "vmf.kappa", "must be >= 0, got " + show(k));
  c.shuffle = vm.boolean("shuffle", true);
  vm.reject_unknown();

  Section sy = section("synthetic");
  syn.runs = sy.integer<int>("runs", syn.runs);
  require(syn.runs >= 1, "synthetic.runs", "must be >= 1");
  syn.winners = sy.ints("winners", syn.winners);
  for (int w : syn.winners) require(w >= 1, "synthetic.winners", "entries must be >= 1");
  syn.spkm_restarts = sy.integer<int>("spkm_restarts", syn.spkm_restarts);
  require(syn.spkm_restarts >= 1, "synthetic.spkm_restarts", "must be >= 1");
  syn.calibration_rate = sy.real("calibration_rate", syn.calibration_rate);
  require_unit(syn.calibration_rate, "synthetic.calibration_rate");
  syn.recon_samples = sy.integer<Index>("recon_samples", syn.recon_samples);
  require(syn.recon_samples >= 0, "synthetic.recon_samples", "must be >= 0");
  sy.reject_unknown();

  Section sc = section("scp");
  syn.scp.trust_cosine = sc.real("trust_cosine", syn.scp.trust_cosine);
  require(syn.scp.trust_cosine > 0.0 && syn.scp.trust_cosine < 1.0, "scp.trust_cosine",
          "must lie in (0, 1), got " + show(syn.scp.trust_cosine));
  syn.scp.max_outer = sc.integer<int>("max_outer", syn.scp.max_outer);
  require(syn.scp.max_outer >= 1, "scp.max_outer", "must be >= 1");
  syn.scp.step_tolerance = sc.real("step_tolerance", syn.scp.step_tolerance);
  require(syn.scp.step_tolerance >= 0.0, "scp.step_tolerance", "must be >= 0");
  syn.scp.qp_tolerance = sc.real("qp_tolerance", syn.scp.qp_tolerance);
  require(syn.scp.qp_tolerance > 0.0, "scp.qp_tolerance", "must be > 0");
  syn.scp.qp_max_iter = sc.integer<int>("qp_max_iter", syn.scp.qp_max_iter);
  require(syn.scp.qp_max_iter >= 1, "scp.qp_max_iter", "must be >= 1");
  sc.reject_unknown();

  Section da = section("data");
  auto path = [&](const std::string& key) {
    const auto v = da.raw(key);
    return v ? resolve(base_dir, *v) : std::filesystem::path{};
  };
  c.data.input = path("input");
  c.data.train_images = path("train_images");
  c.data.train_labels = path("train_labels");
  c.data.test_images = path("test_images");
  c.data.test_labels = path("test_labels");
  c.data.stack = path("stack");
  c.data.train_limit = da.integer<Index>("train_limit", 0);
  require(c.data.train_limit >= 0, "data.train_limit", "must be >= 0");
  c.data.test_limit = da.integer<Index>("test_limit", 0);
  require(c.data.test_limit >= 0, "data.test_limit", "must be >= 0");
  da.reject_unknown();

  for (int i = 1;; ++i) {
    const std::string name = "layer" + std::to_string(i);
    if (!root.get_child_optional(name)) break;
    Section ly = section(name);
    conv::LayerSpec spec;
    if (!ly.has("filter")) throw ConfigError(name + ".filter", "required");
    spec.filter_size = ly.integer<Index>("filter", 1);
    require(spec.filter_size >= 1, name + ".filter", "must be >= 1");
    spec.pool_size = ly.integer<Index>("pool", 1);
    require(spec.pool_size >= 1, name + ".pool", "must be >= 1");
    spec.sample_count = ly.integer<Index>("samples", spec.sample_count);
    require(spec.sample_count >= 1, name + ".samples", "must be >= 1");
    spec.learner = read_method(ly, c.method);
    spec.spkm_k = ly.integer<Index>("spkm_k", 0);
    spec.spkm_restarts = ly.integer<int>("spkm_restarts", c.spkm_restarts);
    require(spec.spkm_restarts >= 1, name + ".spkm_restarts", "must be >= 1");
    if (spec.learner == conv::LearnerKind::kSpkm) require(spec.spkm_k >= 1, name + ".spkm_k", "must be >= 1 for spkm");
    spec.ahl = read_learner(ly, c.learner);
    ly.reject_unknown();
    c.layers.push_back(spec);
  }
  for (const auto& [name, child] : root) {
    if (name.rfind("layer", 0) == 0) {
      const int idx = std::stoi(name.substr(5));
      if (idx < 1 || idx > static_cast<int>(c.layers.size())) {
        throw ConfigError(name, "layer sections must be numbered 1, 2, 3, ... without gaps");
      }
    }
  }
  const bool needs_layers = c.kind == ExperimentKind::kFeatures || c.kind == ExperimentKind::kMnist ||
                            (c.kind == ExperimentKind::kClassify && c.data.stack.empty());
  if (needs_layers && c.layers.empty()) throw ConfigError("layer1", "at least one [layerN] section is required");

  Section cl = section("classify");
  if (const auto sets = cl.raw("layer_sets")) {
    c.classify.layer_sets.clear();
    for (const auto& item : split_list(*sets)) {
      try {
        c.classify.layer_sets.push_back(exp::parse_layer_set(item));
      } catch (const InvalidInput& e) {
        throw ConfigError("classify.layer_sets", e.what());
      }
    }
    require(!c.classify.layer_sets.empty(), "classify.layer_sets", "empty list");
  }
  c.classify.lambdas = cl.reals("lambdas", c.classify.lambdas);
  for (double l : c.classify.lambdas) require(l > 0.0, "classify.lambdas", "entries must be > 0, got " + show(l));
  c.classify.epochs = cl.integer<int>("epochs", c.classify.epochs);
  require(c.classify.epochs >= 1, "classify.epochs", "must be >= 1");
  c.classify.holdout = cl.real("holdout", c.classify.holdout);
  require(c.classify.holdout > 0.0 && c.classify.holdout < 1.0, "classify.holdout", "must lie in (0, 1)");
  cl.reject_unknown();
  if (!c.layers.empty()) {
    for (const auto& set : c.classify.layer_sets) {
      require(set.back() <= static_cast<int>(c.layers.size()), "classify.layer_sets",
              "layer " + std::to_string(set.back()) + " exceeds the " + std::to_string(c.layers.size()) +
                  " configured layers");
    }
  }

  derive_seeds(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    const auto bytes = io::read_file(path);
    text.assign(bytes.begin(), bytes.end());
  } catch (const FormatError& e) {
    throw ConfigError("config", e.what());
  }
  ExperimentConfig c = parse_config(text, path.parent_path());
  c.source_path = path;
  return c;
}

namespace {

void render_learner(std::ostringstream& out, const hebb::LearnerConfig& c) {
  out << "eta = " << show(c.eta) << "\na_bias = " << show(c.a_bias) << "\na_t = " << show(c.a_t)
      << "\nrho_t = " << show(c.rho_t) << "\nrho_u = " << show(c.rho_u) << "\nk_w = " << c.k_w
      << "\nepochs = " << c.epochs << "\nprune_period = " << c.prune_period
      << "\ncompetition_factor = " << show(c.competition_factor) << "\nnorm_mode = " << hebb::to_string(c.norm_mode)
      << "\nallow_add = " << (c.allow_add ? "true" : "false") << "\nallow_prune = " << (c.allow_prune ? "true" : "false")
      << "\nallow_bias = " << (c.allow_bias ? "true" : "false") << '\n';
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& fmt,
                 const std::string& sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + fmt(v[i]);
  return out;
}

std::string abs_path(const std::filesystem::path& p) {
  return p.empty() ? std::string{} : std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace

std::string render_config(const ExperimentConfig& c) {
  const std::function<std::string(const double&)> real = [](const double& v) { return show(v); };
  const std::function<std::string(const int&)> integer = [](const int& v) { return std::to_string(v); };
  const std::function<std::string(const std::vector<int>&)> set = [](const std::vector<int>& v) {
    return exp::layer_set_name(v);
  };
  std::ostringstream out;
  out << "[experiment]\nkind = " << to_string(c.kind) << "\nseed = " << c.seed << "\noutput = " << abs_path(c.output)
      << "\njobs = " << c.jobs << "\n\n";
  out << "[learner]\nmethod = " << conv::to_string(c.method) << "\nspkm_k = " << c.spkm_k
      << "\nspkm_restarts = " << c.spkm_restarts << '\n';
  render_learner(out, c.learner);
  const auto& s = c.synthetic;
  out << "\n[vmf]\ndim = " << s.dim << "\ncomponents = " << s.components << "\nper_component = " << s.per_component
      << "\nkappa = " << join(s.kappas, real) << "\nshuffle = " << (c.shuffle ? "true" : "false") << "\n\n";
  out << "[synthetic]\nruns = " << s.runs << "\nwinners = " << join(s.winners, integer)
      << "\nspkm_restarts = " << s.spkm_restarts << "\ncalibration_rate = " << show(s.calibration_rate)
      << "\nrecon_samples = " << s.recon_samples << "\n\n";
  out << "[scp]\ntrust_cosine = " << show(s.scp.trust_cosine) << "\nmax_outer = " << s.scp.max_outer
      << "\nstep_tolerance = " << show(s.scp.step_tolerance) << "\nqp_tolerance = " << show(s.scp.qp_tolerance)
      << "\nqp_max_iter = " << s.scp.qp_max_iter << "\n\n";
  out << "[data]\n";
  auto path_line = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) out << key << " = " << abs_path(p) << '\n';
  };
  path_line("input", c.data.input);
  path_line("train_images", c.data.train_images);
  path_line("train_labels", c.data.train_labels);
  path_line("test_images", c.data.test_images);
  path_line("test_labels", c.data.test_labels);
  path_line("stack", c.data.stack);
  out << "train_limit = " << c.data.train_limit << "\ntest_limit = " << c.data.test_limit << '\n';
  for (std::size_t i = 0; i < c.layers.size(); ++i) {
    const auto& l = c.layers[i];
    out << "\n[layer" << i + 1 << "]\nfilter = " << l.filter_size << "\npool = " << l.pool_size
        << "\nsamples = " << l.sample_count << "\nmethod = " << conv::to_string(l.learner) << "\nspkm_k = " << l.spkm_k
        << "\nspkm_restarts = " << l.spkm_restarts << '\n';
    render_learner(out, l.ahl);
  }
  out << "\n[classify]\nlayer_sets = " << join(c.classify.layer_sets, set)
      << "\nlambdas = " << join(c.classify.lambdas, real) << "\nepochs = " << c.classify.epochs
      << "\nholdout = " << show(c.classify.holdout) << '\n';
  return out.str();
}

void check_inputs(const ExperimentConfig& c) {
  auto need = [](const std::filesystem::path& p, const std::string& field) {
    if (p.empty()) throw ConfigError(field, "required for this experiment kind");
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(field, "file not found: " + p.string());
  };
  switch (c.kind) {
    case ExperimentKind::kGenVmf:
    case ExperimentKind::kSynthetic:
      break;
    case ExperimentKind::kTrain:
      need(c.data.input, "data.input");
      break;
    case ExperimentKind::kFeatures:
      need(c.data.train_images, "data.train_images");
      if (!c.data.train_labels.empty()) need(c.data.train_labels, "data.train_labels");
      if (!c.data.test_images.empty()) need(c.data.test_images, "data.test_images");
      if (!c.data.test_labels.empty()) need(c.data.test_labels, "data.test_labels");
      break;
    case ExperimentKind::kClassify:
    case ExperimentKind::kMnist:
      need(c.data.train_images, "data.train_images");
      need(c.data.train_labels, "data.train_labels");
      need(c.data.test_images, "data.test_images");
      need(c.data.test_labels, "data.test_labels");
      if (!c.data.stack.empty()) need(c.data.stack, "data.stack");
      break;
  }
}

void override_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  derive_seeds(c);
}

}  // namespace ahl::cli
