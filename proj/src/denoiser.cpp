#include "sim2real/denoiser.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "sim2real/rng.hpp"

namespace sim2real {

namespace {

using Index = std::ptrdiff_t;

// out[r][c] += w * in[r + dy][c + dx], zero outside the plane.
void axpy_shifted(double w, const double* in, double* out, Index rows, Index cols, Index dy,
                  Index dx) {
  const Index r0 = std::max<Index>(0, -dy);
  const Index r1 = std::min(rows, rows - dy);
  const Index c0 = std::max<Index>(0, -dx);
  const Index c1 = std::min(cols, cols - dx);
  for (Index r = r0; r < r1; ++r) {
    const double* src = in + (r + dy) * cols + dx;
    double* dst = out + r * cols;
    for (Index c = c0; c < c1; ++c) dst[c] += w * src[c];
  }
}

// sum over r, c of g[r][c] * in[r + dy][c + dx], zero outside the plane.
double dot_shifted(const double* g, const double* in, Index rows, Index cols, Index dy,
                   Index dx) {
  const Index r0 = std::max<Index>(0, -dy);
  const Index r1 = std::min(rows, rows - dy);
  const Index c0 = std::max<Index>(0, -dx);
  const Index c1 = std::min(cols, cols - dx);
  double total = 0.0;
  for (Index r = r0; r < r1; ++r) {
    const double* src = in + (r + dy) * cols + dx;
    const double* gr = g + r * cols;
    double s = 0.0;
    for (Index c = c0; c < c1; ++c) s += gr[c] * src[c];
    total += s;
  }
  return total;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int n) {
    if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
      throw TruncatedError("model file is truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

constexpr char kModelMagic[4] = {'M', 'S', 'D', 'L'};

struct Patch {
  std::size_t image;
  std::size_t row;
  std::size_t col;
};

// A patch plus its context: the crop [row0, row0 + rows) x [col0, col0 + cols)
// of the image, with the scored patch at (core_row, core_col) inside it.
struct Crop {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t core_row = 0;
  std::size_t core_col = 0;
  std::vector<double> noisy;
  std::vector<double> clean;
};

// Copies a patch of `pair` and up to `margin` pixels around it, scaled.
void extract_patch(const TrainingPair& pair, const Patch& p, std::size_t size, std::size_t margin,
                   double scale, Crop& crop) {
  const std::size_t r0 = p.row > margin ? p.row - margin : 0;
  const std::size_t c0 = p.col > margin ? p.col - margin : 0;
  const std::size_t r1 = std::min(pair.rows, p.row + size + margin);
  const std::size_t c1 = std::min(pair.cols, p.col + size + margin);
  crop.rows = r1 - r0;
  crop.cols = c1 - c0;
  crop.core_row = p.row - r0;
  crop.core_col = p.col - c0;
  crop.noisy.resize(crop.rows * crop.cols);
  crop.clean.resize(crop.rows * crop.cols);
  for (std::size_t r = 0; r < crop.rows; ++r) {
    for (std::size_t c = 0; c < crop.cols; ++c) {
      const std::size_t src = (r0 + r) * pair.cols + c0 + c;
      crop.noisy[r * crop.cols + c] = pair.noisy[src] * scale;
      crop.clean[r * crop.cols + c] = pair.clean[src] * scale;
    }
  }
}

Patch random_patch(std::size_t image, const TrainingPair& pair, std::size_t size,
                   RandomStream& stream) {
  const std::size_t rows = pair.rows - size + 1;
  const std::size_t cols = pair.cols - size + 1;
  const auto r = static_cast<std::size_t>(stream.uniform() * static_cast<double>(rows));
  const auto c = static_cast<std::size_t>(stream.uniform() * static_cast<double>(cols));
  return {image, std::min(r, rows - 1), std::min(c, cols - 1)};
}

// Mean squared error of the network over the scored patch of a scaled crop
// and, optionally, its weight gradient.
double patch_loss(const DenoiserModel& unit_model, const Crop& crop, std::size_t size,
                  std::vector<double>* grad) {
  ForwardCache cache;
  const PlaneView view(crop.noisy, crop.rows, crop.cols);
  const auto out = forward(unit_model, view, grad != nullptr ? &cache : nullptr);
  const double n = static_cast<double>(size * size);
  double loss = 0.0;
  std::vector<double> upstream(grad != nullptr ? out.size() : 0, 0.0);
  for (std::size_t r = crop.core_row; r < crop.core_row + size; ++r) {
    for (std::size_t c = crop.core_col; c < crop.core_col + size; ++c) {
      const std::size_t i = r * crop.cols + c;
      const double d = out[i] - crop.clean[i];
      loss += d * d;
      if (grad != nullptr) upstream[i] = 2.0 * d / n;
    }
  }
  if (grad != nullptr) *grad = backward(unit_model, cache, upstream);
  return loss / n;
}

void check_pairs(const std::vector<TrainingPair>& pairs, std::size_t patch, const char* what) {
  if (pairs.empty()) throw ValidationError(std::string(what) + " set is empty");
  for (const auto& p : pairs) {
    if (p.rows != pairs.front().rows || p.cols != pairs.front().cols) {
      throw ValidationError("training pairs have inconsistent dimensions");
    }
    if (p.noisy.size() != p.rows * p.cols || p.clean.size() != p.rows * p.cols) {
      throw ValidationError("training pair payload does not match its dimensions");
    }
    if (p.rows < patch || p.cols < patch) {
      throw ValidationError("patch size exceeds the training image dimensions");
    }
  }
}

}  // namespace

const char* to_string(TrainCondition c) {
  return c == TrainCondition::Simulated ? "simulated" : "experimental-surrogate";
}

const char* to_string(DenoiseMode m) {
  return m == DenoiseMode::Sinogram ? "sinogram" : "end-to-end";
}

TrainCondition train_condition_from_string(const std::string& s) {
  if (s == "simulated") return TrainCondition::Simulated;
  if (s == "experimental-surrogate" || s == "surrogate") return TrainCondition::Surrogate;
  throw ValidationError("unknown train condition '" + s + "'");
}

DenoiseMode denoise_mode_from_string(const std::string& s) {
  if (s == "sinogram") return DenoiseMode::Sinogram;
  if (s == "end-to-end" || s == "end_to_end") return DenoiseMode::EndToEnd;
  throw ValidationError("unknown denoise mode '" + s + "'");
}

void MsdLiteArchitecture::validate() const {
  if (depth < 1 || depth > 64) throw ValidationError("network depth must be in [1, 64]");
  if (dilation_cycle < 1 || dilation_cycle > 16) {
    throw ValidationError("dilation cycle must be in [1, 16]");
  }
}

std::size_t MsdLiteArchitecture::dilation(std::size_t layer) const {
  return 1 + layer % dilation_cycle;
}

std::size_t MsdLiteArchitecture::layer_offset(std::size_t layer) const {
  // Layers 1..layer-1 hold sum_k (9 k + 1) weights.
  const std::size_t k = layer - 1;
  return 9 * k * (k + 1) / 2 + k;
}

std::size_t MsdLiteArchitecture::parameter_count() const {
  return layer_offset(depth + 1) + depth + 2;
}

std::size_t MsdLiteArchitecture::receptive_radius() const {
  std::size_t r = 0;
  for (std::size_t j = 1; j <= depth; ++j) r += dilation(j);
  return r;
}

DenoiserModel DenoiserModel::initialized(const MsdLiteArchitecture& architecture,
                                         std::uint64_t seed) {
  architecture.validate();
  DenoiserModel model;
  model.architecture = architecture;
  model.weights.assign(architecture.parameter_count(), 0.0);
  model.metadata.seed = seed;
  const SeededRng rng(seed);
  for (std::size_t j = 1; j <= architecture.depth; ++j) {
    auto stream = rng.stream(RngPurpose::WeightInit, static_cast<std::uint32_t>(j), 0);
    const double bound = std::sqrt(6.0 / (9.0 * static_cast<double>(j)));
    const std::size_t off = architecture.layer_offset(j);
    for (std::size_t i = 0; i < 9 * j; ++i) {
      model.weights[off + i] = bound * (2.0 * stream.uniform() - 1.0);
    }
  }
  return model;
}

void DenoiserModel::validate() const {
  architecture.validate();
  if (weights.size() != architecture.parameter_count()) {
    throw ValidationError("weight vector length does not match the architecture");
  }
  require_finite(weights, "model weights");
  if (!(metadata.input_scale > 0.0) || !std::isfinite(metadata.input_scale)) {
    throw ValidationError("model input scale must be positive");
  }
}

std::vector<double> forward(const DenoiserModel& model, PlaneView input, ForwardCache* cache) {
  const auto& arch = model.architecture;
  if (input.data.size() != input.rows * input.cols || input.rows == 0 || input.cols == 0) {
    throw ValidationError("denoiser input dimensions do not match its payload");
  }
  if (model.weights.size() != arch.parameter_count()) {
    throw ValidationError("weight vector length does not match the architecture");
  }
  if (input.rows < 3 || input.cols < 3) {
    throw ValidationError("denoiser input is smaller than the 3x3 kernel");
  }
  const auto rows = static_cast<Index>(input.rows);
  const auto cols = static_cast<Index>(input.cols);
  const std::size_t n = input.data.size();
  const double scale = model.metadata.input_scale;
  const auto& w = model.weights;

  std::vector<std::vector<double>> ch(arch.depth + 1);
  ch[0].resize(n);
  for (std::size_t i = 0; i < n; ++i) ch[0][i] = input.data[i] * scale;
  for (std::size_t j = 1; j <= arch.depth; ++j) {
    const std::size_t off = arch.layer_offset(j);
    const auto d = static_cast<Index>(arch.dilation(j));
    ch[j].assign(n, w[off + 9 * j]);
    for (std::size_t c = 0; c < j; ++c) {
      for (Index ky = 0; ky < 3; ++ky) {
        for (Index kx = 0; kx < 3; ++kx) {
          const double wt = w[off + 9 * c + static_cast<std::size_t>(3 * ky + kx)];
          axpy_shifted(wt, ch[c].data(), ch[j].data(), rows, cols, (ky - 1) * d, (kx - 1) * d);
        }
      }
    }
    for (auto& v : ch[j]) v = v > 0.0 ? v : 0.0;
  }
  const std::size_t fo = arch.layer_offset(arch.depth + 1);
  std::vector<double> net(n, w[fo + arch.depth + 1]);
  for (std::size_t c = 0; c <= arch.depth; ++c) {
    const double wt = w[fo + c];
    for (std::size_t i = 0; i < n; ++i) net[i] += wt * ch[c][i];
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = input.data[i] + net[i] / scale;
  if (cache != nullptr) {
    cache->rows = input.rows;
    cache->cols = input.cols;
    cache->channels = std::move(ch);
  }
  return out;
}

std::vector<double> backward(const DenoiserModel& model, const ForwardCache& cache,
                             std::span<const double> upstream) {
  const auto& arch = model.architecture;
  const std::size_t n = cache.rows * cache.cols;
  if (upstream.size() != n || cache.channels.size() != arch.depth + 1) {
    throw ValidationError("backward called without a matching forward cache");
  }
  const auto rows = static_cast<Index>(cache.rows);
  const auto cols = static_cast<Index>(cache.cols);
  const auto& ch = cache.channels;
  const auto& w = model.weights;
  std::vector<double> grad(w.size(), 0.0);

  const double inv_scale = 1.0 / model.metadata.input_scale;
  std::vector<double> g_net(n);
  for (std::size_t i = 0; i < n; ++i) g_net[i] = upstream[i] * inv_scale;

  const std::size_t fo = arch.layer_offset(arch.depth + 1);
  std::vector<std::vector<double>> g_ch(arch.depth + 1);
  for (std::size_t c = 0; c <= arch.depth; ++c) {
    grad[fo + c] = dot(g_net, ch[c]);
    if (c > 0) {
      g_ch[c].resize(n);
      const double wt = w[fo + c];
      for (std::size_t i = 0; i < n; ++i) g_ch[c][i] = wt * g_net[i];
    }
  }
  grad[fo + arch.depth + 1] = std::accumulate(g_net.begin(), g_net.end(), 0.0);

  for (std::size_t j = arch.depth; j >= 1; --j) {
    std::vector<double>& g_pre = g_ch[j];
    for (std::size_t i = 0; i < n; ++i) {
      if (!(ch[j][i] > 0.0)) g_pre[i] = 0.0;
    }
    const std::size_t off = arch.layer_offset(j);
    const auto d = static_cast<Index>(arch.dilation(j));
    grad[off + 9 * j] = std::accumulate(g_pre.begin(), g_pre.end(), 0.0);
    for (std::size_t c = 0; c < j; ++c) {
      for (Index ky = 0; ky < 3; ++ky) {
        for (Index kx = 0; kx < 3; ++kx) {
          const std::size_t idx = off + 9 * c + static_cast<std::size_t>(3 * ky + kx);
          const Index dy = (ky - 1) * d;
          const Index dx = (kx - 1) * d;
          grad[idx] = dot_shifted(g_pre.data(), ch[c].data(), rows, cols, dy, dx);
          if (c > 0) axpy_shifted(w[idx], g_pre.data(), g_ch[c].data(), rows, cols, -dy, -dx);
        }
      }
    }
  }
  return grad;
}

Sinogram denoise(const DenoiserModel& model, const Sinogram& ili) {
  if (ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("sinogram denoising expects an intensity-loss sinogram");
  }
  auto out = forward(model, ili);
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Sinogram::with_layout_of(ili, SinogramStage::IntensityLoss, std::move(out));
}

Image2D denoise(const DenoiserModel& model, const Image2D& image) {
  return Image2D(image.width(), image.height(), image.pixel_size_mm(), forward(model, image));
}

void adam_step(std::vector<double>& weights, std::span<const double> grads, AdamState& state,
               std::uint64_t t, const AdamConfig& config) {
  if (t < 1) throw ValidationError("Adam step counter starts at 1");
  if (grads.size() != weights.size()) throw ValidationError("gradient length mismatch");
  if (state.m.size() != weights.size()) state.m.assign(weights.size(), 0.0);
  if (state.v.size() != weights.size()) state.v.assign(weights.size(), 0.0);
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(config.beta1, td);
  const double c2 = 1.0 - std::pow(config.beta2, td);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    weights[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("training needs at least one epoch");
  if (patch_size < 3) throw ValidationError("patch size must be at least 3");
  if (batch_size < 1 || patches_per_image < 1 || validation_patches_per_image < 1) {
    throw ValidationError("batch and patch counts must be positive");
  }
  if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
    throw ValidationError("invalid Adam settings");
  }
  if (!(train_fraction > 0.0) || !(validation_fraction > 0.0) || !(test_fraction >= 0.0) ||
      std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to one");
  }
}

DataSplit split_indices(std::size_t n, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  auto count = [n](double f) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
  };
  const std::size_t n_train = count(config.train_fraction);
  const std::size_t n_val = count(config.validation_fraction);
  const std::size_t n_test = config.test_fraction > 0.0 ? 1 : 0;
  if (n < n_train + n_val + n_test) throw ValidationError("too few items to split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto stream = SeededRng(seed).stream(RngPurpose::DataSplit, 0, 0);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = std::min(static_cast<std::size_t>(stream.uniform() * static_cast<double>(i)), i - 1);
    std::swap(order[i - 1], order[j]);
  }
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<Index>(n_train));
  split.validation.assign(order.begin() + static_cast<Index>(n_train),
                          order.begin() + static_cast<Index>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<Index>(n_train + n_val), order.end());
  if (config.test_fraction == 0.0) {
    split.train.insert(split.train.end(), split.test.begin(), split.test.end());
    split.test.clear();
  }
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    std::sort(part->begin(), part->end());
  }
  return split;
}

TrainResult train(const std::vector<TrainingPair>& train_pairs,
                  const std::vector<TrainingPair>& validation_pairs, const TrainConfig& config,
                  const MsdLiteArchitecture& architecture, TrainCondition condition,
                  DenoiseMode mode, std::uint64_t seed) {
  config.validate();
  check_pairs(train_pairs, config.patch_size, "training");
  check_pairs(validation_pairs, config.patch_size, "validation");
  if (validation_pairs.front().rows != train_pairs.front().rows ||
      validation_pairs.front().cols != train_pairs.front().cols) {
    throw ValidationError("training and validation pairs differ in dimensions");
  }

  // Scale so that the mean absolute training input is one.
  double abs_sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : train_pairs) {
    for (double v : p.noisy) abs_sum += std::abs(v);
    count += p.noisy.size();
  }
  const double mean_abs = abs_sum / static_cast<double>(count);
  const double scale = mean_abs > 0.0 ? 1.0 / mean_abs : 1.0;

  TrainResult result;
  DenoiserModel model = DenoiserModel::initialized(architecture, seed);
  model.metadata.train_condition = condition;
  model.metadata.mode = mode;
  model.metadata.epochs = static_cast<std::uint32_t>(config.epochs);
  model.metadata.seed = seed;
  model.metadata.input_scale = scale;
  // The network runs on pre-scaled patches, so its own scale is one.
  DenoiserModel unit = model;
  unit.metadata.input_scale = 1.0;

  const SeededRng rng(seed);
  const std::size_t ps = config.patch_size;
  const std::size_t margin = config.patch_context ? architecture.receptive_radius() : 0;
  std::vector<Patch> val_patches;
  for (std::size_t i = 0; i < validation_pairs.size(); ++i) {
    auto stream = rng.stream(RngPurpose::PatchSampling, 0xFFFFFFFFu, static_cast<std::uint32_t>(i));
    for (std::size_t k = 0; k < config.validation_patches_per_image; ++k) {
      val_patches.push_back(random_patch(i, validation_pairs[i], ps, stream));
    }
  }
  auto validation_loss = [&](const DenoiserModel& m) {
    std::vector<double> losses(val_patches.size());
    parallel_for(val_patches.size(), [&](std::size_t i) {
      Crop crop;
      extract_patch(validation_pairs[val_patches[i].image], val_patches[i], ps, margin, scale, crop);
      losses[i] = patch_loss(m, crop, ps, nullptr);
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  };

  AdamState adam;
  std::uint64_t step = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto e32 = static_cast<std::uint32_t>(epoch);
    std::vector<Patch> patches;
    for (std::size_t i = 0; i < train_pairs.size(); ++i) {
      auto stream = rng.stream(RngPurpose::PatchSampling, e32, static_cast<std::uint32_t>(i));
      for (std::size_t k = 0; k < config.patches_per_image; ++k) {
        patches.push_back(random_patch(i, train_pairs[i], ps, stream));
      }
    }
    auto shuffle = rng.stream(RngPurpose::PatchSampling, e32, 0xFFFFFFFFu);
    for (std::size_t i = patches.size(); i > 1; --i) {
      const auto j = std::min(static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(i)), i - 1);
      std::swap(patches[i - 1], patches[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < patches.size(); b0 += config.batch_size) {
      const std::size_t nb = std::min(config.batch_size, patches.size() - b0);
      std::vector<std::vector<double>> grads(nb);
      std::vector<double> losses(nb);
      parallel_for(nb, [&](std::size_t i) {
        Crop crop;
        const Patch& p = patches[b0 + i];
        extract_patch(train_pairs[p.image], p, ps, margin, scale, crop);
        losses[i] = patch_loss(unit, crop, ps, &grads[i]);
      });
      // Fixed summation order keeps the update independent of thread count.
      std::vector<double> g(unit.weights.size(), 0.0);
      for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += grads[i][k];
        epoch_loss += losses[i];
      }
      const double inv = 1.0 / static_cast<double>(nb);
      for (auto& v : g) v *= inv;
      adam_step(unit.weights, g, adam, ++step, config.adam);
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(patches.size()));
    const double vl = validation_loss(unit);
    result.validation_loss.push_back(vl);
    if (vl < best) {
      best = vl;
      result.best_epoch = epoch;
      model.weights = unit.weights;
    }
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& config,
                  const MsdLiteArchitecture& architecture, TrainCondition condition,
                  DenoiseMode mode, std::uint64_t seed) {
  if (pairs.size() < 10) throw ValidationError("training needs at least 10 pairs");
  const DataSplit split = split_indices(pairs.size(), config, seed);
  std::vector<TrainingPair> tr, va;
  for (auto i : split.train) tr.push_back(pairs[i]);
  for (auto i : split.validation) va.push_back(pairs[i]);
  return train(tr, va, config, architecture, condition, mode, seed);
}

std::vector<std::uint8_t> encode_model(const DenoiserModel& model) {
  model.validate();
  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u8(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.architecture.depth));
  put_u32(out, static_cast<std::uint32_t>(model.architecture.dilation_cycle));
  put_u64(out, model.weights.size());
  for (double w : model.weights) put_f64(out, w);
  put_u8(out, static_cast<std::uint8_t>(model.metadata.train_condition));
  put_u8(out, static_cast<std::uint8_t>(model.metadata.mode));
  put_u32(out, model.metadata.epochs);
  put_u64(out, model.metadata.seed);
  put_f64(out, model.metadata.input_scale);
  return out;
}

DenoiserModel decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kModelMagic), std::end(kModelMagic), bytes.begin())) {
    throw BadMagicError("not a model file (bad magic)");
  }
  Reader in(bytes);
  in.uint(4);
  const auto version = static_cast<std::uint8_t>(in.uint(1));
  if (version != kModelVersion) {
    throw VersionMismatchError("unsupported model version " + std::to_string(version));
  }
  DenoiserModel model;
  model.architecture.depth = static_cast<std::size_t>(in.uint(4));
  model.architecture.dilation_cycle = static_cast<std::size_t>(in.uint(4));
  try {
    model.architecture.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  const std::uint64_t count = in.uint(8);
  if (count != model.architecture.parameter_count()) {
    throw SizeMismatchError("model weight count " + std::to_string(count) +
                            " does not match the architecture (" +
                            std::to_string(model.architecture.parameter_count()) + ")");
  }
  if (in.remaining() < count * 8) throw TruncatedError("model file is truncated");
  model.weights.resize(count);
  for (auto& w : model.weights) w = in.f64();
  const auto cond = in.uint(1);
  const auto mode = in.uint(1);
  if (cond > 1 || mode > 1) throw FormatError("model metadata tag out of range");
  model.metadata.train_condition = static_cast<TrainCondition>(cond);
  model.metadata.mode = static_cast<DenoiseMode>(mode);
  model.metadata.epochs = static_cast<std::uint32_t>(in.uint(4));
  model.metadata.seed = in.uint(8);
  model.metadata.input_scale = in.f64();
  if (in.remaining() != 0) throw SizeMismatchError("model file has trailing bytes");
  try {
    model.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("model payload: ") + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const DenoiserModel& model) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

DenoiserModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

DenoiserModel load_model(const std::filesystem::path& path, const MsdLiteArchitecture& expected) {
  DenoiserModel model = load_model(path);
  if (!(model.architecture == expected)) {
    throw SizeMismatchError("model architecture (depth " + std::to_string(model.architecture.depth) +
                            ", cycle " + std::to_string(model.architecture.dilation_cycle) +
                            ") differs from the expected one");
  }
  return model;
}

}  // namespace sim2real
