#pragma once

// Layer-wise unsupervised convolutional feature extraction. Each layer is a
// stride-1, unpadded convolution with rectified cosine activations
// max(0, W p̂ − b) over L2-normalized patches p̂, followed by non-overlapping
// max pooling. Layers are trained one at a time on patches sampled from the
// pooled output of the layer below; raw image patches get brightness/contrast
// normalization and ZCA whitening first.

#include "ahl/dataio.hpp"
#include "ahl/hebb.hpp"
#include "ahl/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ahl::conv {

// Height × width × channels, stored row-major with channels innermost.
struct FeatureMap {
  Index height = 0;
  Index width = 0;
  Index channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(Index h, Index w, Index c, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h * w * c), fill) {}

  double& at(Index y, Index x, Index c) { return data[static_cast<std::size_t>((y * width + x) * channels + c)]; }
  double at(Index y, Index x, Index c) const {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }

  static FeatureMap from_image(const io::ImageSet& images, Index i);
};

enum class LearnerKind { kAhl, kSpkm };
std::string to_string(LearnerKind kind);

struct LayerSpec {
  Index filter_size = 1;
  Index pool_size = 1;
  LearnerKind learner = LearnerKind::kAhl;
  hebb::LearnerConfig ahl;  // used when learner == kAhl
  Index spkm_k = 0;         // used when learner == kSpkm
  int spkm_restarts = 1;
  Index sample_count = 100000;

  void validate() const;
};

struct LayerGeometry {
  Index input = 0;     // S_{i-1}
  Index conv_out = 0;  // S'_i = S_{i-1} − f_i + 1
  Index pooled = 0;    // ceil(S'_i / p_i)
};

// Throws InvalidInput if any conv output would be empty.
std::vector<LayerGeometry> geometry_chain(Index input_size, std::span<const LayerSpec> specs);

// Brightness/contrast normalization and ZCA whitening for raw image patches.
// Pixels are rescaled by pixel_scale (to the 0–255 range) before normalizing so
// the regularizers keep their customary meaning.
struct PatchWhitening {
  double pixel_scale = 255.0;
  double contrast_regularizer = 10.0;
  double zca_epsilon = 0.1;
  Vector mean;  // of contrast-normalized training patches
  Matrix zca;   // symmetric D × D

  bool fitted() const { return zca.rows() > 0; }
  // Contrast normalization only (rows of raw patches in [0, 1] pixel units).
  Matrix contrast_normalize(const Matrix& raw) const;
  // Full transform without the final L2 normalization.
  Matrix whiten(const Matrix& raw) const;
};

struct WhitenedPatches {
  UnitRowMatrix patches;
  Matrix whitened;  // before L2 normalization, for diagnostics
  PatchWhitening stats;
};

// Fits contrast normalization + ZCA on raw patches (rows), applies it, and
// L2-normalizes. Rows whose whitened norm is below 1e-8 are dropped.
WhitenedPatches preprocess_layer1_patches(const Matrix& raw_patches, const PatchWhitening& settings = {});

// All f × f × C patches of a map in row-major location order, flattened (dy, dx, c).
Matrix extract_patches(const FeatureMap& map, Index filter_size);

struct PatchSample {
  Matrix patches;
  bool with_replacement = false;
};

// Uniform draws over (image, location), without replacement when enough
// locations exist. Rows rejected by `accept` are redrawn; throws
// InvalidInput once 20·count + 1000 draws have been spent.
using MapSource = std::function<FeatureMap(Index)>;
PatchSample sample_patches(Index image_count, const MapSource& map_at, Index filter_size, Index count, Rng& rng,
                           const std::function<bool(const Eigen::Ref<const Vector>&)>& accept);

// Patches for an upper layer: sampled, norm-guarded (≥ 1e-8) and L2-normalized.
UnitRowMatrix sample_training_patches(std::span<const FeatureMap> maps, Index filter_size, Index count, Rng& rng);

struct TrainedLayer {
  Index filter_size = 1;
  Index pool_size = 1;
  Index in_channels = 1;
  Matrix weights;  // K × (f·f·in_channels), unit rows
  Vector bias;     // K
  std::vector<Index> neuron_trace;  // K after each epoch (AHL only)

  Index neurons() const { return weights.rows(); }
};

// max(0, W p̂ − b) at every valid location. `whitening` (layer 1) is applied
// to each raw patch before the L2 normalization.
FeatureMap conv_forward(const FeatureMap& input, const TrainedLayer& layer, const PatchWhitening* whitening = nullptr);

FeatureMap max_pool(const FeatureMap& input, Index pool_size);

// Per-channel means over the four quadrants (split at floor(S/2), the odd middle
// row/column going to the bottom/right), ordered TL, TR, BL, BR, channel fastest
// within a quadrant. A side of length 1 is shared by both halves.
Vector quadrant_pool(const FeatureMap& map);
Vector global_pool(const FeatureMap& map);

struct FeatureStack {
  Index input_height = 0;
  Index input_width = 0;
  Index input_channels = 1;
  PatchWhitening whitening;
  std::vector<TrainedLayer> layers;

  std::vector<Index> neuron_counts() const;
  // Conv outputs of every layer (pre-pool) for one image.
  std::vector<FeatureMap> forward(const FeatureMap& image) const;
};

struct TrainProgress {
  std::function<void(const std::string&)> log;
};

FeatureStack train_stack(const io::ImageSet& images, std::span<const LayerSpec> specs, Rng& rng,
                         const TrainProgress& progress = {});

// Layer numbers are 1-based. Layers 1 and 2 contribute quadrant pools (4K_i),
// layer 3 and above a global pool (K_i); concatenated in ascending layer order.
Matrix extract_features(const io::ImageSet& images, const FeatureStack& stack, std::span<const int> layer_set);
Index feature_dimension(const FeatureStack& stack, std::span<const int> layer_set);

}  // namespace ahl::conv
