#include "ahl/model_io.hpp"

#include "ahl/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

namespace ahl::io {

namespace {

using Kind = FormatError::Kind;

Matrix column(const Vector& v) { return Matrix(v); }

Vector as_vector(const Matrix& m, Index expected, const std::string& name) {
  if (m.cols() != 1 || m.rows() != expected) {
    throw FormatError(Kind::CountMismatch, "section " + name + " has shape " + std::to_string(m.rows()) + "x" +
                                               std::to_string(m.cols()) + ", expected " + std::to_string(expected) +
                                               "x1");
  }
  return m.col(0);
}

void expect_kind(const Checkpoint& ckpt, const std::string& kind) {
  if (ckpt.kind != kind) throw FormatError(Kind::CorruptHeader, "expected a " + kind + " checkpoint, got " + ckpt.kind);
}

void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw FormatError(Kind::CountMismatch, "section " + name + " has shape " + std::to_string(m.rows()) + "x" +
                                               std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                               std::to_string(cols));
  }
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw FormatError(Kind::CorruptHeader, "meta " + key + " is not a number: " + text);
  return value;
}

double parse_double(const std::string& text, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw FormatError(Kind::CorruptHeader, "meta " + key + " is not a number: " + text);
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw FormatError(Kind::CorruptHeader, "meta " + key + " is not a boolean: " + text);
}

std::string layer_key(std::size_t i, const std::string& field) { return "layer" + std::to_string(i + 1) + "." + field; }

}  // namespace

std::map<std::string, std::string> config_fields(const hebb::LearnerConfig& c) {
  return {
      {"eta", format_double(c.eta)},
      {"a_bias", format_double(c.a_bias)},
      {"a_t", format_double(c.a_t)},
      {"rho_t", format_double(c.rho_t)},
      {"rho_u", format_double(c.rho_u)},
      {"k_w", std::to_string(c.k_w)},
      {"epochs", std::to_string(c.epochs)},
      {"prune_period", std::to_string(c.prune_period)},
      {"competition_factor", format_double(c.competition_factor)},
      {"norm_mode", hebb::to_string(c.norm_mode)},
      {"seed", std::to_string(c.seed)},
      {"allow_add", c.allow_add ? "true" : "false"},
      {"allow_prune", c.allow_prune ? "true" : "false"},
      {"allow_bias", c.allow_bias ? "true" : "false"},
  };
}

hebb::LearnerConfig config_from_fields(const std::map<std::string, std::string>& fields) {
  hebb::LearnerConfig c;
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw FormatError(Kind::CorruptHeader, "missing meta " + key);
    return it->second;
  };
  c.eta = parse_double(get("eta"), "eta");
  c.a_bias = parse_double(get("a_bias"), "a_bias");
  c.a_t = parse_double(get("a_t"), "a_t");
  c.rho_t = parse_double(get("rho_t"), "rho_t");
  c.rho_u = parse_double(get("rho_u"), "rho_u");
  c.k_w = parse_number<int>(get("k_w"), "k_w");
  c.epochs = parse_number<int>(get("epochs"), "epochs");
  c.prune_period = parse_number<std::uint64_t>(get("prune_period"), "prune_period");
  c.competition_factor = parse_double(get("competition_factor"), "competition_factor");
  try {
    c.norm_mode = hebb::norm_mode_from_string(get("norm_mode"));
  } catch (const InvalidInput& e) {
    throw FormatError(Kind::CorruptHeader, e.what());
  }
  c.seed = parse_number<std::uint64_t>(get("seed"), "seed");
  c.allow_add = parse_bool(get("allow_add"), "allow_add");
  c.allow_prune = parse_bool(get("allow_prune"), "allow_prune");
  c.allow_bias = parse_bool(get("allow_bias"), "allow_bias");
  return c;
}

Checkpoint learner_checkpoint(const hebb::LearnerState& state, const hebb::LearnerConfig& config) {
  Checkpoint ckpt;
  ckpt.kind = "ahl-learner";
  ckpt.d = static_cast<std::uint64_t>(state.dim());
  ckpt.k = static_cast<std::uint64_t>(state.k());
  for (const auto& [key, value] : config_fields(config)) ckpt.set_meta(key, value);
  ckpt.set_meta("samples_seen", std::to_string(state.samples_seen));
  ckpt.add_section("w", state.w);
  ckpt.add_section("b", column(state.b));
  ckpt.add_section("r", column(state.r));
  ckpt.add_section("e", column(state.e));
  ckpt.add_section("c", state.c);
  return ckpt;
}

hebb::LearnerState learner_from_checkpoint(const Checkpoint& ckpt, hebb::LearnerConfig* config) {
  expect_kind(ckpt, "ahl-learner");
  const auto k = static_cast<Index>(ckpt.k);
  const auto d = static_cast<Index>(ckpt.d);
  hebb::LearnerState s;
  s.w = ckpt.section("w");
  expect_shape(s.w, k, d, "w");
  s.b = as_vector(ckpt.section("b"), k, "b");
  s.r = as_vector(ckpt.section("r"), k, "r");
  s.e = as_vector(ckpt.section("e"), k, "e");
  s.c = ckpt.section("c");
  expect_shape(s.c, k, k, "c");
  s.samples_seen = parse_number<std::uint64_t>(ckpt.meta_value("samples_seen"), "samples_seen");
  if (config) {
    std::map<std::string, std::string> fields(ckpt.meta.begin(), ckpt.meta.end());
    *config = config_from_fields(fields);
  }
  return s;
}

Checkpoint spkm_checkpoint(const spkm::SpkmModel& model, const Vector* bias) {
  Checkpoint ckpt;
  ckpt.kind = "spkm";
  ckpt.d = static_cast<std::uint64_t>(model.centers.cols());
  ckpt.k = static_cast<std::uint64_t>(model.centers.rows());
  ckpt.set_meta("objective", format_double(model.objective));
  ckpt.set_meta("iterations", std::to_string(model.iterations));
  ckpt.add_section("w", model.centers.matrix());
  if (bias) {
    if (bias->size() != model.centers.rows()) throw InvalidInput("bias length does not match the number of centers");
    ckpt.add_section("b", column(*bias));
  }
  return ckpt;
}

spkm::SpkmModel spkm_from_checkpoint(const Checkpoint& ckpt, Vector* bias) {
  expect_kind(ckpt, "spkm");
  const auto k = static_cast<Index>(ckpt.k);
  const auto d = static_cast<Index>(ckpt.d);
  spkm::SpkmModel model;
  Matrix w = ckpt.section("w");
  expect_shape(w, k, d, "w");
  try {
    model.centers = UnitRowMatrix::validated(std::move(w));
  } catch (const InvalidInput& e) {
    throw FormatError(Kind::CorruptHeader, std::string("spkm centers: ") + e.what());
  }
  model.objective = parse_double(ckpt.meta_value("objective"), "objective");
  model.iterations = parse_number<int>(ckpt.meta_value("iterations"), "iterations");
  if (bias) {
    if (!ckpt.has_section("b")) throw FormatError(Kind::CorruptHeader, "spkm checkpoint has no bias section");
    *bias = as_vector(ckpt.section("b"), k, "b");
  }
  return model;
}

Checkpoint svm_checkpoint(const svm::SvmModel& model) {
  Checkpoint ckpt;
  ckpt.kind = "svm";
  ckpt.d = static_cast<std::uint64_t>(model.dim());
  ckpt.k = model.classes.size();
  ckpt.set_meta("lambda", format_double(model.lambda));
  ckpt.set_meta("epochs", std::to_string(model.epochs));
  Matrix classes(static_cast<Index>(model.classes.size()), 1);
  for (std::size_t i = 0; i < model.classes.size(); ++i) classes(static_cast<Index>(i), 0) = model.classes[i];
  ckpt.add_section("classes", classes);
  ckpt.add_section("weights", model.weights);
  ckpt.add_section("bias", column(model.bias));
  ckpt.add_section("feature_mean", column(model.feature_mean));
  ckpt.add_section("feature_scale", column(model.feature_scale));
  return ckpt;
}

svm::SvmModel svm_from_checkpoint(const Checkpoint& ckpt) {
  expect_kind(ckpt, "svm");
  const auto k = static_cast<Index>(ckpt.k);
  const auto d = static_cast<Index>(ckpt.d);
  svm::SvmModel m;
  const Vector classes = as_vector(ckpt.section("classes"), k, "classes");
  for (Index i = 0; i < k; ++i) m.classes.push_back(static_cast<int>(classes[i]));
  m.weights = ckpt.section("weights");
  expect_shape(m.weights, k, d, "weights");
  m.bias = as_vector(ckpt.section("bias"), k, "bias");
  m.feature_mean = as_vector(ckpt.section("feature_mean"), d, "feature_mean");
  m.feature_scale = as_vector(ckpt.section("feature_scale"), d, "feature_scale");
  m.lambda = parse_double(ckpt.meta_value("lambda"), "lambda");
  m.epochs = parse_number<int>(ckpt.meta_value("epochs"), "epochs");
  return m;
}

Checkpoint stack_checkpoint(const conv::FeatureStack& stack) {
  Checkpoint ckpt;
  ckpt.kind = "feature-stack";
  ckpt.d = static_cast<std::uint64_t>(stack.input_height * stack.input_width * stack.input_channels);
  ckpt.k = stack.layers.size();
  ckpt.set_meta("input_height", std::to_string(stack.input_height));
  ckpt.set_meta("input_width", std::to_string(stack.input_width));
  ckpt.set_meta("input_channels", std::to_string(stack.input_channels));
  ckpt.set_meta("whitening.pixel_scale", format_double(stack.whitening.pixel_scale));
  ckpt.set_meta("whitening.contrast_regularizer", format_double(stack.whitening.contrast_regularizer));
  ckpt.set_meta("whitening.zca_epsilon", format_double(stack.whitening.zca_epsilon));
  ckpt.add_section("whitening.mean", column(stack.whitening.mean));
  ckpt.add_section("whitening.zca", stack.whitening.zca);
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const auto& l = stack.layers[i];
    ckpt.set_meta(layer_key(i, "filter_size"), std::to_string(l.filter_size));
    ckpt.set_meta(layer_key(i, "pool_size"), std::to_string(l.pool_size));
    ckpt.set_meta(layer_key(i, "in_channels"), std::to_string(l.in_channels));
    ckpt.add_section(layer_key(i, "weights"), l.weights);
    ckpt.add_section(layer_key(i, "bias"), column(l.bias));
    Matrix trace(static_cast<Index>(l.neuron_trace.size()), 1);
    for (std::size_t t = 0; t < l.neuron_trace.size(); ++t) {
      trace(static_cast<Index>(t), 0) = static_cast<double>(l.neuron_trace[t]);
    }
    ckpt.add_section(layer_key(i, "neuron_trace"), trace);
  }
  return ckpt;
}

conv::FeatureStack stack_from_checkpoint(const Checkpoint& ckpt) {
  expect_kind(ckpt, "feature-stack");
  conv::FeatureStack s;
  s.input_height = parse_number<Index>(ckpt.meta_value("input_height"), "input_height");
  s.input_width = parse_number<Index>(ckpt.meta_value("input_width"), "input_width");
  s.input_channels = parse_number<Index>(ckpt.meta_value("input_channels"), "input_channels");
  s.whitening.pixel_scale = parse_double(ckpt.meta_value("whitening.pixel_scale"), "whitening.pixel_scale");
  s.whitening.contrast_regularizer =
      parse_double(ckpt.meta_value("whitening.contrast_regularizer"), "whitening.contrast_regularizer");
  s.whitening.zca_epsilon = parse_double(ckpt.meta_value("whitening.zca_epsilon"), "whitening.zca_epsilon");
  s.whitening.zca = ckpt.section("whitening.zca");
  s.whitening.mean = as_vector(ckpt.section("whitening.mean"), s.whitening.zca.rows(), "whitening.mean");
  expect_shape(s.whitening.zca, s.whitening.mean.size(), s.whitening.mean.size(), "whitening.zca");

  Index channels = s.input_channels;
  for (std::size_t i = 0; i < ckpt.k; ++i) {
    conv::TrainedLayer l;
    l.filter_size = parse_number<Index>(ckpt.meta_value(layer_key(i, "filter_size")), layer_key(i, "filter_size"));
    l.pool_size = parse_number<Index>(ckpt.meta_value(layer_key(i, "pool_size")), layer_key(i, "pool_size"));
    l.in_channels = parse_number<Index>(ckpt.meta_value(layer_key(i, "in_channels")), layer_key(i, "in_channels"));
    if (l.in_channels != channels) {
      throw FormatError(Kind::CountMismatch, layer_key(i, "in_channels") + " does not match the layer below");
    }
    l.weights = ckpt.section(layer_key(i, "weights"));
    expect_shape(l.weights, l.weights.rows(), l.filter_size * l.filter_size * l.in_channels, layer_key(i, "weights"));
    l.bias = as_vector(ckpt.section(layer_key(i, "bias")), l.weights.rows(), layer_key(i, "bias"));
    const Matrix& trace = ckpt.section(layer_key(i, "neuron_trace"));
    for (Index t = 0; t < trace.rows(); ++t) l.neuron_trace.push_back(static_cast<Index>(trace(t, 0)));
    channels = l.neurons();
    s.layers.push_back(std::move(l));
  }
  return s;
}

std::string learner_text(const hebb::LearnerState& state) {
  std::ostringstream out;
  out << "# " << state.k() << ' ' << state.dim() << ' ' << state.samples_seen << '\n';
  for (Index i = 0; i < state.k(); ++i) {
    out << format_double(state.b[i]) << ' ' << format_double(state.r[i]) << ' ' << format_double(state.e[i]);
    for (Index j = 0; j < state.dim(); ++j) out << ' ' << format_double(state.w(i, j));
    for (Index j = 0; j < state.k(); ++j) out << ' ' << format_double(state.c(i, j));
    out << '\n';
  }
  return out.str();
}

hebb::LearnerState learner_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string hash;
  Index k = 0;
  Index d = 0;
  hebb::LearnerState s;
  if (!(in >> hash >> k >> d >> s.samples_seen) || hash != "#" || k < 0 || d < 0) {
    throw FormatError(Kind::CorruptHeader, "learner text export has a bad header line");
  }
  // every value takes at least two characters
  const auto budget = static_cast<double>(text.size()) / 2.0;
  if (static_cast<double>(k) * (3.0 + static_cast<double>(d) + static_cast<double>(k)) > budget) {
    throw FormatError(Kind::Truncated, "learner text export declares more values than it holds");
  }
  s.w.resize(k, d);
  s.b.resize(k);
  s.r.resize(k);
  s.e.resize(k);
  s.c.resize(k, k);
  std::string token;
  auto next = [&]() {
    if (!(in >> token)) throw FormatError(Kind::Truncated, "learner text export ends early");
    return parse_double(token, "value");
  };
  for (Index i = 0; i < k; ++i) {
    s.b[i] = next();
    s.r[i] = next();
    s.e[i] = next();
    for (Index j = 0; j < d; ++j) s.w(i, j) = next();
    for (Index j = 0; j < k; ++j) s.c(i, j) = next();
  }
  if (in >> token) throw FormatError(Kind::CountMismatch, "learner text export has trailing values");
  return s;
}

}  // namespace ahl::io
