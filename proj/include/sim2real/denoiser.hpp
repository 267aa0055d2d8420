#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sim2real/core.hpp"
#include "sim2real/metrics.hpp"

namespace sim2real {

enum class TrainCondition : std::uint8_t { Simulated = 0, Surrogate = 1 };
enum class DenoiseMode : std::uint8_t { Sinogram = 0, EndToEnd = 1 };

const char* to_string(TrainCondition c);
const char* to_string(DenoiseMode m);
TrainCondition train_condition_from_string(const std::string& s);
DenoiseMode denoise_mode_from_string(const std::string& s);

/// Dense dilated 3x3 network with one channel per layer.
///
/// Layer j (1-based, j <= depth) sees the input and the outputs of layers
/// 1..j-1, uses dilation 1 + (j mod dilation_cycle), and holds 9 j weights
/// plus a bias. The output layer is a 1x1 combination of all depth + 1
/// channels plus a bias, added to the input.
struct MsdLiteArchitecture {
  std::size_t depth = 8;
  std::size_t dilation_cycle = 4;

  void validate() const;
  std::size_t dilation(std::size_t layer) const;
  /// Index of the first weight of `layer`; layer depth + 1 is the output layer.
  std::size_t layer_offset(std::size_t layer) const;
  std::size_t parameter_count() const;
  /// Largest distance (pixels) from which an input pixel reaches an output pixel.
  std::size_t receptive_radius() const;

  bool operator==(const MsdLiteArchitecture&) const = default;
};

struct ModelMetadata {
  TrainCondition train_condition = TrainCondition::Simulated;
  DenoiseMode mode = DenoiseMode::Sinogram;
  std::uint32_t epochs = 0;
  std::uint64_t seed = 0;
  /// Inputs and targets are multiplied by this before entering the network.
  double input_scale = 1.0;
};

struct DenoiserModel {
  MsdLiteArchitecture architecture;
  std::vector<double> weights;
  ModelMetadata metadata;

  /// Intermediate layers uniform in +-sqrt(6 / fan_in), biases and the
  /// output layer zero, so the fresh network is the identity map.
  static DenoiserModel initialized(const MsdLiteArchitecture& architecture,
                                   std::uint64_t seed);
  void validate() const;
};

/// Channel maps kept by forward() for backward().
struct ForwardCache {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> channels;
};

/// input + network(input), same shape as the input.
std::vector<double> forward(const DenoiserModel& model, PlaneView input,
                            ForwardCache* cache = nullptr);

/// Gradient of a scalar loss with respect to the weights, given the loss
/// gradient with respect to the output of the forward pass held in `cache`.
std::vector<double> backward(const DenoiserModel& model, const ForwardCache& cache,
                             std::span<const double> upstream);

/// Denoised intensity-loss sinogram; negative outputs are clamped to zero.
Sinogram denoise(const DenoiserModel& model, const Sinogram& ili);
Image2D denoise(const DenoiserModel& model, const Image2D& image);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// Bias-corrected Adam update for step t (t >= 1).
void adam_step(std::vector<double>& weights, std::span<const double> grads,
               AdamState& state, std::uint64_t t, const AdamConfig& config = {});

struct TrainConfig {
  std::size_t epochs = 100;
  AdamConfig adam;
  std::size_t patch_size = 64;
  std::size_t batch_size = 8;
  std::size_t patches_per_image = 8;
  std::size_t validation_patches_per_image = 2;
  /// Crop each patch with up to receptive-radius pixels of surrounding image
  /// and score only the patch itself, so the loss never sees zero padding
  /// except at true image edges.
  bool patch_context = true;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;

  void validate() const;
};

/// One supervised example; `noisy` and `clean` share the row-major shape.
struct TrainingPair {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> noisy;
  std::vector<double> clean;
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded permutation of 0..n-1 cut by the config fractions. Each part gets
/// round(fraction * n) items (at least one), the test part takes the rest.
DataSplit split_indices(std::size_t n, const TrainConfig& config, std::uint64_t seed);

struct TrainResult {
  DenoiserModel model;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
};

/// Adam on random patches with mean squared error in scaled units. Returns
/// the epoch whose weights had the lowest validation loss (first on ties).
TrainResult train(const std::vector<TrainingPair>& train_pairs,
                  const std::vector<TrainingPair>& validation_pairs,
                  const TrainConfig& config, const MsdLiteArchitecture& architecture,
                  TrainCondition condition, DenoiseMode mode, std::uint64_t seed);

/// Splits `pairs` with split_indices and trains on the train and
/// validation parts. Needs at least 10 pairs.
TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& config,
                  const MsdLiteArchitecture& architecture, TrainCondition condition,
                  DenoiseMode mode, std::uint64_t seed);

/// Binary layout (little-endian):
///   "MSDL" | u8 version | u32 depth | u32 dilation cycle | u64 weight count |
///   f64 weights | u8 train condition | u8 mode | u32 epochs | u64 seed |
///   f64 input scale
inline constexpr std::uint8_t kModelVersion = 1;

std::vector<std::uint8_t> encode_model(const DenoiserModel& model);
DenoiserModel decode_model(const std::vector<std::uint8_t>& bytes);
void save_model(const std::filesystem::path& path, const DenoiserModel& model);
DenoiserModel load_model(const std::filesystem::path& path);
/// Also rejects a model whose architecture differs from `expected`.
DenoiserModel load_model(const std::filesystem::path& path,
                         const MsdLiteArchitecture& expected);

}  // namespace sim2real
