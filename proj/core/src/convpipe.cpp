#include "ahl/convpipe.hpp"

#include "ahl/errors.hpp"
#include "ahl/metrics.hpp"
#include "ahl/spkm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace ahl::conv {

namespace {

constexpr double kPatchNormFloor = 1e-8;

void normalize_rows_in_place(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n >= kPatchNormFloor) {
      m.row(i) /= n;
    } else {
      m.row(i).setZero();
    }
  }
}

void copy_patch(const FeatureMap& map, Index y, Index x, Index f, double* out) {
  const Index row_len = f * map.channels;
  for (Index dy = 0; dy < f; ++dy) {
    const double* src = map.data.data() + ((y + dy) * map.width + x) * map.channels;
    std::copy(src, src + row_len, out + dy * row_len);
  }
}

bool uses_global_pool(int layer_number) { return layer_number >= 3; }

}  // namespace

FeatureMap FeatureMap::from_image(const io::ImageSet& images, Index i) {
  if (i < 0 || i >= images.count) throw InvalidInput("image index out of range");
  FeatureMap map(images.height, images.width, images.channels);
  const auto src = images.image(i);
  std::copy(src.begin(), src.end(), map.data.begin());
  return map;
}

std::string to_string(LearnerKind kind) { return kind == LearnerKind::kAhl ? "ahl" : "spkm"; }

void LayerSpec::validate() const {
  if (filter_size < 1) throw InvalidInput("filter_size must be >= 1");
  if (pool_size < 1) throw InvalidInput("pool_size must be >= 1");
  if (sample_count < 1) throw InvalidInput("sample_count must be >= 1");
  if (learner == LearnerKind::kAhl) ahl.validate();
  if (learner == LearnerKind::kSpkm && spkm_k < 1) throw InvalidInput("spkm_k must be >= 1");
  if (spkm_restarts < 1) throw InvalidInput("spkm_restarts must be >= 1");
}

std::vector<LayerGeometry> geometry_chain(Index input_size, std::span<const LayerSpec> specs) {
  std::vector<LayerGeometry> chain;
  Index s = input_size;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    LayerGeometry g;
    g.input = s;
    g.conv_out = s - specs[i].filter_size + 1;
    if (g.conv_out < 1) {
      throw InvalidInput("layer " + std::to_string(i + 1) + ": filter " + std::to_string(specs[i].filter_size) +
                         " does not fit a " + std::to_string(s) + "-pixel input");
    }
    g.pooled = (g.conv_out + specs[i].pool_size - 1) / specs[i].pool_size;
    chain.push_back(g);
    s = g.pooled;
  }
  return chain;
}

// ---- layer-1 preprocessing ----------------------------------------------

Matrix PatchWhitening::contrast_normalize(const Matrix& raw) const {
  Matrix out = raw * pixel_scale;
  const Index d = out.cols();
  for (Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double mean = row.mean();
    row.array() -= mean;
    const double var = d > 1 ? row.squaredNorm() / static_cast<double>(d - 1) : 0.0;
    row /= std::sqrt(var + contrast_regularizer);
  }
  return out;
}

Matrix PatchWhitening::whiten(const Matrix& raw) const {
  if (!fitted()) throw InvalidInput("whitening statistics have not been fitted");
  if (raw.cols() != zca.rows()) throw InvalidInput("patch size does not match the whitening transform");
  Matrix centered = contrast_normalize(raw);
  centered.rowwise() -= mean.transpose();
  return centered * zca;
}

WhitenedPatches preprocess_layer1_patches(const Matrix& raw_patches, const PatchWhitening& settings) {
  if (raw_patches.rows() < 2) throw InvalidInput("whitening needs at least two patches");
  PatchWhitening stats = settings;
  const Matrix normalized = stats.contrast_normalize(raw_patches);
  stats.mean = normalized.colwise().mean().transpose();
  const Matrix centered = normalized.rowwise() - stats.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(raw_patches.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw InvalidInput("patch covariance eigendecomposition failed");
  const Vector scale = (eig.eigenvalues().array().max(0.0) + stats.zca_epsilon).rsqrt().matrix();
  stats.zca = eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

  Matrix whitened = centered * stats.zca;
  std::vector<Index> keep;
  for (Index i = 0; i < whitened.rows(); ++i) {
    if (whitened.row(i).norm() >= kPatchNormFloor) keep.push_back(i);
  }
  if (static_cast<Index>(keep.size()) != whitened.rows()) whitened = Matrix(whitened(keep, Eigen::all));
  Matrix unit = whitened;
  normalize_rows_in_place(unit);
  return {UnitRowMatrix::validated(std::move(unit)), std::move(whitened), std::move(stats)};
}

// ---- patches --------------------------------------------------------------

Matrix extract_patches(const FeatureMap& map, Index filter_size) {
  const Index f = filter_size;
  const Index oh = map.height - f + 1;
  const Index ow = map.width - f + 1;
  if (oh < 1 || ow < 1) throw InvalidInput("filter larger than the feature map");
  Matrix patches(oh * ow, f * f * map.channels);
  for (Index y = 0; y < oh; ++y) {
    for (Index x = 0; x < ow; ++x) copy_patch(map, y, x, f, patches.row(y * ow + x).data());
  }
  return patches;
}

PatchSample sample_patches(Index image_count, const MapSource& map_at, Index filter_size, Index count, Rng& rng,
                           const std::function<bool(const Eigen::Ref<const Vector>&)>& accept) {
  if (image_count < 1) throw InvalidInput("no images to sample patches from");
  if (count < 1) throw InvalidInput("patch count must be >= 1");
  const FeatureMap probe = map_at(0);
  const Index oh = probe.height - filter_size + 1;
  const Index ow = probe.width - filter_size + 1;
  if (oh < 1 || ow < 1) throw InvalidInput("filter larger than the feature map");
  const Index per_image = oh * ow;
  const Index dim = filter_size * filter_size * probe.channels;
  const Index total_locations = image_count * per_image;

  PatchSample out;
  out.with_replacement = count > total_locations;
  out.patches.resize(count, dim);

  std::unordered_set<Index> used;
  std::uniform_int_distribution<Index> pick_image(0, image_count - 1);
  std::uniform_int_distribution<Index> pick_location(0, per_image - 1);
  const Index budget = 20 * count + 1000;
  Index draws = 0;
  Index filled = 0;
  Vector patch(dim);

  while (filled < count) {
    std::vector<std::pair<Index, Index>> batch;
    const Index need = count - filled;
    while (static_cast<Index>(batch.size()) < need) {
      if (!out.with_replacement && static_cast<Index>(used.size()) >= total_locations) break;
      if (++draws > budget) break;
      const Index img = pick_image(rng);
      const Index loc = pick_location(rng);
      if (!out.with_replacement && !used.insert(img * per_image + loc).second) continue;
      batch.emplace_back(img, loc);
    }
    if (batch.empty()) {
      throw InvalidInput("patch sampling exhausted its budget with " + std::to_string(filled) + " of " +
                         std::to_string(count) + " usable patches");
    }
    std::sort(batch.begin(), batch.end());
    Index current = -1;
    FeatureMap map;
    for (const auto& [img, loc] : batch) {
      if (img != current) {
        map = img == 0 ? probe : map_at(img);
        current = img;
      }
      copy_patch(map, loc / ow, loc % ow, filter_size, patch.data());
      if (accept(patch)) out.patches.row(filled++) = patch.transpose();
    }
  }

  // the batches were processed in image order; restore a random presentation order
  for (Index i = count - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    const Index j = pick(rng);
    if (j != i) out.patches.row(i).swap(out.patches.row(j));
  }
  return out;
}

UnitRowMatrix sample_training_patches(std::span<const FeatureMap> maps, Index filter_size, Index count, Rng& rng) {
  const MapSource source = [&](Index i) { return maps[static_cast<std::size_t>(i)]; };
  auto accept = [](const Eigen::Ref<const Vector>& p) { return p.norm() >= kPatchNormFloor; };
  PatchSample sample = sample_patches(static_cast<Index>(maps.size()), source, filter_size, count, rng, accept);
  return UnitRowMatrix::normalized(std::move(sample.patches));
}

// ---- forward pass ---------------------------------------------------------

FeatureMap conv_forward(const FeatureMap& input, const TrainedLayer& layer, const PatchWhitening* whitening) {
  const Index f = layer.filter_size;
  if (input.channels != layer.in_channels) {
    throw InvalidInput("layer expects " + std::to_string(layer.in_channels) + " input channels, got " +
                       std::to_string(input.channels));
  }
  if (layer.weights.cols() != f * f * layer.in_channels) throw InvalidInput("weight width does not match the filter");
  Matrix patches = extract_patches(input, f);
  if (whitening) patches = whitening->whiten(patches);
  normalize_rows_in_place(patches);
  Matrix act = patches * layer.weights.transpose();
  act.rowwise() -= layer.bias.transpose();
  act = act.cwiseMax(0.0);

  FeatureMap out(input.height - f + 1, input.width - f + 1, layer.neurons());
  std::copy(act.data(), act.data() + act.size(), out.data.begin());
  return out;
}

FeatureMap max_pool(const FeatureMap& input, Index pool_size) {
  if (pool_size < 1) throw InvalidInput("pool_size must be >= 1");
  if (pool_size == 1) return input;
  const Index oh = (input.height + pool_size - 1) / pool_size;
  const Index ow = (input.width + pool_size - 1) / pool_size;
  FeatureMap out(oh, ow, input.channels, -std::numeric_limits<double>::infinity());
  for (Index y = 0; y < input.height; ++y) {
    for (Index x = 0; x < input.width; ++x) {
      for (Index c = 0; c < input.channels; ++c) {
        double& cell = out.at(y / pool_size, x / pool_size, c);
        cell = std::max(cell, input.at(y, x, c));
      }
    }
  }
  return out;
}

Vector quadrant_pool(const FeatureMap& map) {
  const Index c = map.channels;
  auto halves = [](Index size) {
    const Index mid = size / 2;
    if (size == 1) return std::array<std::pair<Index, Index>, 2>{{{0, 1}, {0, 1}}};
    return std::array<std::pair<Index, Index>, 2>{{{0, mid}, {mid, size}}};
  };
  const auto rows = halves(map.height);
  const auto cols = halves(map.width);
  Vector out = Vector::Zero(4 * c);
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      const Index q = qy * 2 + qx;
      const auto [y0, y1] = rows[static_cast<std::size_t>(qy)];
      const auto [x0, x1] = cols[static_cast<std::size_t>(qx)];
      for (Index y = y0; y < y1; ++y) {
        for (Index x = x0; x < x1; ++x) {
          for (Index ch = 0; ch < c; ++ch) out[q * c + ch] += map.at(y, x, ch);
        }
      }
      out.segment(q * c, c) /= static_cast<double>((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

Vector global_pool(const FeatureMap& map) {
  Vector out = Vector::Zero(map.channels);
  for (Index y = 0; y < map.height; ++y) {
    for (Index x = 0; x < map.width; ++x) {
      for (Index ch = 0; ch < map.channels; ++ch) out[ch] += map.at(y, x, ch);
    }
  }
  return out / static_cast<double>(map.height * map.width);
}

std::vector<Index> FeatureStack::neuron_counts() const {
  std::vector<Index> k;
  for (const auto& l : layers) k.push_back(l.neurons());
  return k;
}

std::vector<FeatureMap> FeatureStack::forward(const FeatureMap& image) const {
  std::vector<FeatureMap> outputs;
  outputs.reserve(layers.size());
  FeatureMap current = image;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    outputs.push_back(conv_forward(current, layers[i], i == 0 && whitening.fitted() ? &whitening : nullptr));
    if (i + 1 < layers.size()) current = max_pool(outputs.back(), layers[i].pool_size);
  }
  return outputs;
}

// ---- training -------------------------------------------------------------

namespace {

TrainedLayer fit_layer(const UnitRowMatrix& patches, const LayerSpec& spec, Index in_channels) {
  TrainedLayer layer;
  layer.filter_size = spec.filter_size;
  layer.pool_size = spec.pool_size;
  layer.in_channels = in_channels;
  if (spec.learner == LearnerKind::kAhl) {
    auto observer = [&](const hebb::EpochStats& stats, const hebb::LearnerState&) {
      layer.neuron_trace.push_back(stats.neurons);
    };
    hebb::LearnerState state = hebb::fit(patches, spec.ahl, observer);
    layer.weights = std::move(state.w);
    layer.bias = std::move(state.b);
  } else {
    const Index k = std::min(spec.spkm_k, patches.rows());
    spkm::SpkmModel model = spkm::spkm_fit(patches, k, spec.spkm_restarts, spec.ahl.seed);
    layer.weights = model.centers.matrix();
    layer.bias = metrics::calibrate_bias(layer.weights, patches.matrix(), spec.ahl.a_bias);
  }
  return layer;
}

}  // namespace

FeatureStack train_stack(const io::ImageSet& images, std::span<const LayerSpec> specs, Rng& rng,
                         const TrainProgress& progress) {
  if (images.count < 1) throw InvalidInput("train_stack needs at least one image");
  if (specs.empty()) throw InvalidInput("train_stack needs at least one layer");
  if (images.height != images.width) throw InvalidInput("square images required");
  for (const auto& s : specs) s.validate();
  geometry_chain(images.height, specs);

  auto log = [&](const std::string& msg) {
    if (progress.log) progress.log(msg);
  };

  FeatureStack stack;
  stack.input_height = images.height;
  stack.input_width = images.width;
  stack.input_channels = images.channels;

  for (std::size_t li = 0; li < specs.size(); ++li) {
    const LayerSpec& spec = specs[li];
    UnitRowMatrix patches;
    Index in_channels = 0;
    if (li == 0) {
      in_channels = images.channels;
      const MapSource source = [&](Index i) { return FeatureMap::from_image(images, i); };
      const PatchWhitening settings;
      auto accept = [&](const Eigen::Ref<const Vector>& p) {
        return settings.contrast_normalize(p.transpose()).norm() >= kPatchNormFloor;
      };
      PatchSample raw = sample_patches(images.count, source, spec.filter_size, spec.sample_count, rng, accept);
      if (raw.with_replacement) log("layer 1: fewer locations than requested patches, sampling with replacement");
      WhitenedPatches wp = preprocess_layer1_patches(raw.patches, settings);
      stack.whitening = std::move(wp.stats);
      patches = std::move(wp.patches);
    } else {
      in_channels = stack.layers.back().neurons();
      const MapSource source = [&](Index i) {
        const auto outs = stack.forward(FeatureMap::from_image(images, i));
        return max_pool(outs.back(), stack.layers.back().pool_size);
      };
      auto accept = [](const Eigen::Ref<const Vector>& p) { return p.norm() >= kPatchNormFloor; };
      PatchSample raw = sample_patches(images.count, source, spec.filter_size, spec.sample_count, rng, accept);
      if (raw.with_replacement) {
        log("layer " + std::to_string(li + 1) + ": fewer locations than requested patches, sampling with replacement");
      }
      patches = UnitRowMatrix::normalized(std::move(raw.patches));
    }
    log("layer " + std::to_string(li + 1) + ": training " + to_string(spec.learner) + " on " +
        std::to_string(patches.rows()) + " patches of dimension " + std::to_string(patches.cols()));
    stack.layers.push_back(fit_layer(patches, spec, in_channels));
    log("layer " + std::to_string(li + 1) + ": K = " + std::to_string(stack.layers.back().neurons()));
  }
  return stack;
}

Index feature_dimension(const FeatureStack& stack, std::span<const int> layer_set) {
  Index dim = 0;
  for (int l : layer_set) {
    if (l < 1 || l > static_cast<int>(stack.layers.size())) throw InvalidInput("layer " + std::to_string(l) + " not in stack");
    const Index k = stack.layers[static_cast<std::size_t>(l - 1)].neurons();
    dim += uses_global_pool(l) ? k : 4 * k;
  }
  return dim;
}

Matrix extract_features(const io::ImageSet& images, const FeatureStack& stack, std::span<const int> layer_set) {
  std::vector<int> layers(layer_set.begin(), layer_set.end());
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  if (layers.empty()) throw InvalidInput("empty layer set");
  const Index dim = feature_dimension(stack, layers);

  // only run the stack as deep as needed
  FeatureStack partial;
  partial.input_height = stack.input_height;
  partial.input_width = stack.input_width;
  partial.input_channels = stack.input_channels;
  partial.whitening = stack.whitening;
  partial.layers.assign(stack.layers.begin(), stack.layers.begin() + layers.back());

  Matrix features(images.count, dim);
  for (Index i = 0; i < images.count; ++i) {
    const auto outs = partial.forward(FeatureMap::from_image(images, i));
    Index offset = 0;
    for (int l : layers) {
      const FeatureMap& m = outs[static_cast<std::size_t>(l - 1)];
      const Vector pooled = uses_global_pool(l) ? global_pool(m) : quadrant_pool(m);
      features.row(i).segment(offset, pooled.size()) = pooled.transpose();
      offset += pooled.size();
    }
  }
  return features;
}

}  // namespace ahl::conv
