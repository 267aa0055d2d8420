#include "sim2real/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "sim2real/dataset.hpp"
#include "sim2real/detector.hpp"
#include "sim2real/preprocess.hpp"
#include "sim2real/rng.hpp"

namespace sim2real {

namespace {

constexpr std::uint64_t kSplitTag = 0x5350'4c49'54ULL;
constexpr std::uint64_t kModelTag = 0x4d4f'4445'4cULL;
constexpr const char* kIncompleteMarker = "#INCOMPLETE";

// ---------------------------------------------------------------------------
// Config text

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError("config key '" + key + "': '" + s + "' is not a finite number");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError("config key '" + key + "': '" + s + "' is not a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("config key '" + key + "': '" + s + "' is not true/false");
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<void(StudyConfig&, const std::string&)> set;
  std::function<std::string(const StudyConfig&)> get;
};

#define SIM2REAL_DOUBLE(KEY, MEMBER)                                              \
  Field {                                                                        \
    KEY, [](StudyConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); }, \
        [](const StudyConfig& c) { return fmt(c.MEMBER); }                       \
  }
#define SIM2REAL_SIZE(KEY, MEMBER)                                                \
  Field {                                                                        \
    KEY,                                                                         \
        [](StudyConfig& c, const std::string& v) {                               \
          c.MEMBER = static_cast<std::size_t>(to_uint(KEY, v));                  \
        },                                                                       \
        [](const StudyConfig& c) { return std::to_string(c.MEMBER); }            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](StudyConfig& c, const std::string& v) { c.seed = to_uint("seed", v); },
            [](const StudyConfig& c) { return std::to_string(c.seed); }},
      SIM2REAL_SIZE("suite.count", suite_count),
      Field{"suite.complexity_mix",
            [](StudyConfig& c, const std::string& v) {
              c.complexity_mix.clear();
              for (const auto& item : split(v, ',')) {
                const auto parts = split(item, ':');
                if (parts.size() != 2) {
                  throw ValidationError("suite.complexity_mix entries are name:weight");
                }
                c.complexity_mix.emplace_back(
                    complexity_from_string(parts[0]),
                    static_cast<std::size_t>(to_uint("suite.complexity_mix", parts[1])));
              }
            },
            [](const StudyConfig& c) {
              std::string out;
              for (std::size_t i = 0; i < c.complexity_mix.size(); ++i) {
                out += (i ? "," : "") + std::string(to_string(c.complexity_mix[i].first)) + ":" +
                       std::to_string(c.complexity_mix[i].second);
              }
              return out;
            }},
      SIM2REAL_DOUBLE("suite.phantom_fov_mm", phantom_fov_mm),
      SIM2REAL_SIZE("geometry.n_angles", geometry.n_angles),
      SIM2REAL_SIZE("geometry.n_pixels", geometry.n_pixels),
      SIM2REAL_DOUBLE("geometry.det_pixel_mm", geometry.det_pixel_size_mm),
      SIM2REAL_DOUBLE("geometry.fov_radius_mm", geometry.fov_radius_mm),
      Field{"noise.i0_sweep",
            [](StudyConfig& c, const std::string& v) { c.i0_sweep = to_doubles("noise.i0_sweep", v); },
            [](const StudyConfig& c) { return join(c.i0_sweep); }},
      SIM2REAL_DOUBLE("noise.i0", i0),
      SIM2REAL_DOUBLE("noise.cross_talk", cross_talk),
      SIM2REAL_DOUBLE("simulated.sigma_electronic", simulated_sigma_electronic),
      Field{"simulated.cross_talk_on_clean",
            [](StudyConfig& c, const std::string& v) {
              c.simulated_cross_talk_on_clean = to_bool("simulated.cross_talk_on_clean", v);
            },
            [](const StudyConfig& c) {
              return std::string(c.simulated_cross_talk_on_clean ? "true" : "false");
            }},
      SIM2REAL_DOUBLE("surrogate.i0", surrogate_i0),
      SIM2REAL_DOUBLE("surrogate.clean_dose_factor", clean_dose_factor),
      Field{"surrogate.energies_keV",
            [](StudyConfig& c, const std::string& v) {
              c.surrogate_spectrum.energies_keV = to_doubles("surrogate.energies_keV", v);
            },
            [](const StudyConfig& c) { return join(c.surrogate_spectrum.energies_keV); }},
      Field{"surrogate.weights",
            [](StudyConfig& c, const std::string& v) {
              c.surrogate_spectrum.weights = to_doubles("surrogate.weights", v);
            },
            [](const StudyConfig& c) { return join(c.surrogate_spectrum.weights); }},
      Field{"surrogate.dqe",
            [](StudyConfig& c, const std::string& v) {
              c.surrogate_spectrum.dqe = to_doubles("surrogate.dqe", v);
            },
            [](const StudyConfig& c) { return join(c.surrogate_spectrum.dqe); }},
      SIM2REAL_DOUBLE("surrogate.f_conv", surrogate_spectrum.f_conv),
      SIM2REAL_DOUBLE("surrogate.scatter_fraction", surrogate_spectrum.scatter_fraction),
      SIM2REAL_DOUBLE("surrogate.sigma_electronic", surrogate_sigma_electronic),
      SIM2REAL_DOUBLE("surrogate.dark_level", dark_level),
      SIM2REAL_SIZE("surrogate.flat_frames", flat_frames),
      SIM2REAL_SIZE("train.epochs", train.epochs),
      SIM2REAL_DOUBLE("train.learning_rate", train.adam.learning_rate),
      SIM2REAL_DOUBLE("train.beta1", train.adam.beta1),
      SIM2REAL_DOUBLE("train.beta2", train.adam.beta2),
      SIM2REAL_DOUBLE("train.epsilon", train.adam.epsilon),
      SIM2REAL_SIZE("train.patch_size", train.patch_size),
      SIM2REAL_SIZE("train.batch_size", train.batch_size),
      SIM2REAL_SIZE("train.patches_per_image", train.patches_per_image),
      SIM2REAL_SIZE("train.validation_patches_per_image", train.validation_patches_per_image),
      Field{"train.patch_context",
            [](StudyConfig& c, const std::string& v) {
              c.train.patch_context = to_bool("train.patch_context", v);
            },
            [](const StudyConfig& c) { return std::string(c.train.patch_context ? "true" : "false"); }},
      Field{"train.split",
            [](StudyConfig& c, const std::string& v) {
              const auto f = to_doubles("train.split", v);
              if (f.size() != 3) throw ValidationError("train.split needs three fractions");
              c.train.train_fraction = f[0];
              c.train.validation_fraction = f[1];
              c.train.test_fraction = f[2];
            },
            [](const StudyConfig& c) {
              return join({c.train.train_fraction, c.train.validation_fraction,
                           c.train.test_fraction});
            }},
      Field{"model.depth",
            [](StudyConfig& c, const std::string& v) {
              const auto d = static_cast<std::size_t>(to_uint("model.depth", v));
              for (auto& m : c.methods) m.architecture.depth = d;
            },
            [](const StudyConfig& c) {
              return std::to_string(c.methods.empty() ? 0 : c.methods.front().architecture.depth);
            }},
      Field{"model.methods",
            [](StudyConfig& c, const std::string& v) {
              const std::size_t depth =
                  c.methods.empty() ? MsdLiteArchitecture{}.depth : c.methods.front().architecture.depth;
              c.methods.clear();
              for (const auto& item : split(v, ',')) {
                const auto parts = split(item, ':');
                if (parts.size() != 2 || parts[0].empty()) {
                  throw ValidationError("model.methods entries are name:dilation_cycle");
                }
                MethodSpec m;
                m.name = parts[0];
                m.architecture.depth = depth;
                m.architecture.dilation_cycle =
                    static_cast<std::size_t>(to_uint("model.methods", parts[1]));
                c.methods.push_back(m);
              }
            },
            [](const StudyConfig& c) {
              std::string out;
              for (std::size_t i = 0; i < c.methods.size(); ++i) {
                out += (i ? "," : "") + c.methods[i].name + ":" +
                       std::to_string(c.methods[i].architecture.dilation_cycle);
              }
              return out;
            }},
      Field{"fbp.filter",
            [](StudyConfig& c, const std::string& v) { c.fbp.filter = fbp_filter_from_string(v); },
            [](const StudyConfig& c) { return std::string(to_string(c.fbp.filter)); }},
      SIM2REAL_SIZE("fbp.padded_length", fbp.padded_length),
      SIM2REAL_SIZE("fbp.width", fbp.width),
      SIM2REAL_SIZE("fbp.height", fbp.height),
      SIM2REAL_DOUBLE("fbp.pixel_mm", fbp.pixel_size_mm),
      SIM2REAL_SIZE("metric.window", metric.window),
      SIM2REAL_DOUBLE("metric.sigma", metric.gaussian_sigma),
      SIM2REAL_DOUBLE("metric.k1", metric.k1),
      SIM2REAL_DOUBLE("metric.k2", metric.k2),
      Field{"metric.range",
            [](StudyConfig& c, const std::string& v) { c.metric.range = range_policy_from_string(v); },
            [](const StudyConfig& c) { return std::string(to_string(c.metric.range)); }},
      SIM2REAL_DOUBLE("metric.fixed_range", metric.fixed_range),
      Field{"output.dir",
            [](StudyConfig& c, const std::string& v) { c.output_dir = v; },
            [](const StudyConfig& c) { return c.output_dir.string(); }},
      Field{"output.write_datasets",
            [](StudyConfig& c, const std::string& v) {
              c.write_datasets = to_bool("output.write_datasets", v);
            },
            [](const StudyConfig& c) { return std::string(c.write_datasets ? "true" : "false"); }},
  };
  return table;
}

#undef SIM2REAL_DOUBLE
#undef SIM2REAL_SIZE

// ---------------------------------------------------------------------------
// Scoring

struct Scores {
  double sino_psnr = 0.0;
  double sino_ssim = 0.0;
  double recon_psnr = 0.0;
  double recon_ssim = 0.0;
};

Scores score_against_clean(const Sinogram& test_ili, const Image2D& test_recon,
                           const SliceData& slice, const MetricConfig& metric) {
  Scores s;
  s.sino_psnr = psnr(test_ili, slice.clean_ili, metric);
  s.sino_ssim = ssim(test_ili, slice.clean_ili, metric);
  s.recon_psnr = psnr(test_recon, slice.clean_recon, metric);
  s.recon_ssim = ssim(test_recon, slice.clean_recon, metric);
  return s;
}

void add_rows(std::vector<CalibrationRow>& table, const std::string& arm, double i0,
              const std::vector<Scores>& scores) {
  auto col = [&](double Scores::*member) {
    std::vector<double> v;
    for (const auto& s : scores) v.push_back(s.*member);
    return aggregate(v);
  };
  table.push_back({arm, i0, "sinogram", "psnr", col(&Scores::sino_psnr)});
  table.push_back({arm, i0, "sinogram", "ssim", col(&Scores::sino_ssim)});
  table.push_back({arm, i0, "recon", "psnr", col(&Scores::recon_psnr)});
  table.push_back({arm, i0, "recon", "ssim", col(&Scores::recon_ssim)});
}

TrainingPair make_pair(std::span<const double> noisy, std::span<const double> clean,
                       std::size_t rows, std::size_t cols) {
  return {rows, cols, {noisy.begin(), noisy.end()}, {clean.begin(), clean.end()}};
}

std::string slice_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%03zu", i);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const CellRecord* find_cell(const StudyReport& r, const std::string& method, TrainCondition train,
                            TrainCondition test, EvalBlock block, const std::string& metric) {
  for (const auto& c : r.cells) {
    if (c.method == method && c.train == train && c.test == test && c.block == block &&
        c.metric == metric) {
      return &c;
    }
  }
  return nullptr;
}

std::vector<std::string> report_methods(const StudyReport& r) {
  if (!r.methods.empty()) return r.methods;
  std::vector<std::string> out;
  for (const auto& c : r.cells) {
    if (std::find(out.begin(), out.end(), c.method) == out.end()) out.push_back(c.method);
  }
  return out;
}

DenoiseMode mode_of(EvalBlock block) {
  return block == EvalBlock::EndToEndOutput ? DenoiseMode::EndToEnd : DenoiseMode::Sinogram;
}

constexpr TrainCondition kArms[2] = {TrainCondition::Simulated, TrainCondition::Surrogate};
constexpr EvalBlock kBlocks[3] = {EvalBlock::Sinogram, EvalBlock::ReconOfOutput,
                                  EvalBlock::EndToEndOutput};
constexpr const char* kMetrics[2] = {"psnr", "ssim"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string sanitize_csv(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// StudyConfig

SpectrumConfig StudyConfig::default_surrogate_spectrum() {
  SpectrumConfig s;
  s.energies_keV = {40.0, 50.0, 60.0, 75.0, 90.0};
  s.weights = {0.15, 0.25, 0.25, 0.20, 0.15};
  s.dqe = {0.95, 0.90, 0.85, 0.75, 0.65};
  s.f_conv = 1.0 / 60.0;
  s.scatter_fraction = 0.03;
  return s;
}

std::vector<MethodSpec> StudyConfig::default_methods() {
  return {{"msd-lite", MsdLiteArchitecture{8, 4}}, {"dense-cnn", MsdLiteArchitecture{8, 1}}};
}

void StudyConfig::validate() const {
  if (suite_count < 30) throw ValidationError("suite.count must be at least 30");
  if (complexity_mix.empty()) throw ValidationError("suite.complexity_mix is empty");
  std::size_t total = 0;
  for (const auto& [c, w] : complexity_mix) total += w;
  if (total == 0) throw ValidationError("suite.complexity_mix weights sum to zero");
  if (!(phantom_fov_mm > 0.0)) throw ValidationError("suite.phantom_fov_mm must be positive");
  geometry.validate();
  if (phantom_fov_mm > geometry.fov_radius_mm) {
    throw ValidationError("phantom field of view exceeds the scan field of view");
  }
  if (i0_sweep.empty()) throw ValidationError("noise.i0_sweep is empty");
  for (std::size_t i = 0; i < i0_sweep.size(); ++i) {
    if (!(i0_sweep[i] > 0.0)) throw ValidationError("noise.i0_sweep values must be positive");
    if (i > 0 && !(i0_sweep[i] > i0_sweep[i - 1])) {
      throw ValidationError("noise.i0_sweep must be strictly increasing");
    }
  }
  if (!(i0 >= 0.0)) throw ValidationError("noise.i0 must be >= 0");
  if (!(cross_talk >= 0.0 && cross_talk < 0.5)) {
    throw ValidationError("noise.cross_talk must lie in [0, 0.5)");
  }
  if (!(simulated_sigma_electronic >= 0.0) || !(surrogate_sigma_electronic >= 0.0)) {
    throw ValidationError("electronic noise must be >= 0");
  }
  surrogate_spectrum.validate();
  if (!(surrogate_i0 > 0.0)) throw ValidationError("surrogate.i0 must be positive");
  if (!(clean_dose_factor >= 1.0)) throw ValidationError("surrogate.clean_dose_factor must be >= 1");
  if (flat_frames < 1) throw ValidationError("surrogate.flat_frames must be >= 1");
  train.validate();
  if (methods.empty()) throw ValidationError("model.methods is empty");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    methods[i].architecture.validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (methods[i].name == methods[j].name) throw ValidationError("duplicate method name");
    }
  }
  if (train.patch_size > fbp.width || train.patch_size > fbp.height ||
      train.patch_size > geometry.n_angles || train.patch_size > geometry.n_pixels) {
    throw ValidationError("train.patch_size exceeds the sinogram or image dimensions");
  }
  metric.validate();
  if (fbp.width == 0 || fbp.height == 0 || !(fbp.pixel_size_mm > 0.0)) {
    throw ValidationError("fbp grid must be non-empty with positive pixel size");
  }
  if (fbp.width < metric.window || fbp.height < metric.window) {
    throw ValidationError("fbp grid is smaller than the SSIM window");
  }
}

Complexity StudyConfig::complexity_of(std::size_t slice) const {
  std::size_t total = 0;
  for (const auto& [c, w] : complexity_mix) total += w;
  std::size_t r = slice % total;
  for (const auto& [c, w] : complexity_mix) {
    if (r < w) return c;
    r -= w;
  }
  return complexity_mix.back().first;
}

StudyConfig parse_config(const std::string& text) {
  StudyConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Field& f) { return key == f.key; });
    if (it == table.end()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (seen.count(key)) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    seen[key] = line_no;
    it->set(config, value);
  }
  config.validate();
  return config;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ValidationError("config file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_text(const StudyConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(config) + "\n";
  return out;
}

std::uint64_t config_hash(const StudyConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Data generation

Phantom suite_phantom(const StudyConfig& config, std::size_t index) {
  const SeededRng slice_rng = SeededRng(config.seed).derive(index);
  return sample_phantom(slice_rng.derive(0).master_seed(), config.complexity_of(index),
                        config.phantom_fov_mm);
}

SliceData generate_slice(const StudyConfig& config, std::size_t index) {
  const SeededRng rng = SeededRng(config.seed).derive(index);
  const Phantom phantom = suite_phantom(config, index);
  const ChordTable chords(phantom, config.geometry, default_step_mm(config.geometry));
  const SpectrumConfig& spectrum = config.surrogate_spectrum;
  const double per_photon = spectrum.vacuum_signal_per_photon();
  const std::size_t np = config.geometry.n_pixels;

  auto acquire = [&](double i0, std::uint64_t calibration_tag, RngPurpose purpose) {
    const DetectorConfig truth =
        DetectorConfig::uniform(np, i0, i0 * per_photon, config.dark_level,
                                config.surrogate_sigma_electronic, config.cross_talk);
    const DetectorConfig measured =
        measured_calibration(truth, spectrum, config.flat_frames, rng.derive(calibration_tag));
    const ExpectedCounts expected = expected_counts_poly(chords, spectrum, i0);
    const Sinogram raw =
        acquire_polychromatic(expected, spectrum, truth, rng, static_cast<std::uint32_t>(purpose));
    return to_intensity_loss(raw, measured);
  };

  Sinogram clean = acquire(config.clean_dose_factor * config.surrogate_i0, 1,
                           RngPurpose::CleanMeasurement);
  Sinogram surrogate = acquire(config.surrogate_i0, 2, RngPurpose::SurrogateMeasurement);
  Image2D clean_recon = reconstruct_intensity_loss(clean, config.fbp);
  Image2D surrogate_recon = reconstruct_intensity_loss(surrogate, config.fbp);
  return SliceData{index,
                   config.complexity_of(index),
                   std::move(clean),
                   std::move(surrogate),
                   std::move(clean_recon),
                   std::move(surrogate_recon)};
}

std::vector<SliceData> build_suite(const StudyConfig& config) {
  config.validate();
  std::vector<std::optional<SliceData>> slots(config.suite_count);
  parallel_for(config.suite_count, [&](std::size_t i) { slots[i] = generate_slice(config, i); });
  std::vector<SliceData> suite;
  suite.reserve(slots.size());
  for (auto& s : slots) suite.push_back(std::move(*s));
  return suite;
}

Sinogram simulated_arm(const StudyConfig& config, const SliceData& slice, double i0) {
  SynthesisOptions options;
  options.sigma_electronic = config.simulated_sigma_electronic;
  options.cross_talk_on_clean = config.simulated_cross_talk_on_clean;
  options.purpose = static_cast<std::uint32_t>(RngPurpose::SimulatedNoise);
  return synthesize_noisy_pair(slice.clean_ili, i0, config.cross_talk,
                               SeededRng(config.seed).derive(slice.index), options);
}

// ---------------------------------------------------------------------------
// Calibration

CalibrationResult calibrate_noise_level(const StudyConfig& config,
                                        const std::vector<SliceData>& suite,
                                        std::optional<double> simulated_reference_i0) {
  if (config.i0_sweep.empty()) throw ValidationError("noise.i0_sweep is empty");
  if (suite.empty()) throw ValidationError("calibration needs at least one slice");
  const std::size_t ns = suite.size();
  const std::size_t nk = config.i0_sweep.size();
  std::vector<std::vector<Scores>> sim(nk, std::vector<Scores>(ns));
  std::vector<Scores> reference(ns);
  parallel_for(ns, [&](std::size_t s) {
    const SliceData& slice = suite[s];
    for (std::size_t k = 0; k < nk; ++k) {
      const Sinogram noisy = simulated_arm(config, slice, config.i0_sweep[k]);
      sim[k][s] = score_against_clean(noisy, reconstruct_intensity_loss(noisy, config.fbp), slice,
                                      config.metric);
    }
    if (simulated_reference_i0) {
      const Sinogram noisy = simulated_arm(config, slice, *simulated_reference_i0);
      reference[s] = score_against_clean(noisy, reconstruct_intensity_loss(noisy, config.fbp),
                                         slice, config.metric);
    } else {
      reference[s] =
          score_against_clean(slice.surrogate_ili, slice.surrogate_recon, slice, config.metric);
    }
  });

  CalibrationResult result;
  for (std::size_t k = 0; k < nk; ++k) add_rows(result.table, "simulated", config.i0_sweep[k], sim[k]);
  if (simulated_reference_i0) {
    add_rows(result.table, "simulated-reference", *simulated_reference_i0, reference);
  } else {
    add_rows(result.table, "experimental-surrogate", config.surrogate_i0, reference);
  }
  // Rows per arm: sinogram psnr, sinogram ssim, recon psnr, recon ssim.
  const double target = result.table[result.table.size() - 2].value.mean;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nk; ++k) {
    const double gap = std::abs(result.table[k * 4 + 2].value.mean - target);
    if (gap < best) {
      best = gap;
      result.chosen_i0 = config.i0_sweep[k];
    }
  }
  if (!std::isfinite(best)) throw ValidationError("calibration produced no finite PSNR values");
  return result;
}

CalibrationResult calibrate_noise_level(const StudyConfig& config) {
  return calibrate_noise_level(config, build_suite(config));
}

std::string calibration_to_csv(const CalibrationResult& result) {
  std::string out = "noise_arm,I0,domain,metric,mean,std\n";
  for (const auto& r : result.table) {
    out += r.noise_arm + "," + format_value(r.i0) + "," + r.domain + "," + r.metric + "," +
           format_value(r.value.mean) + "," + format_value(r.value.std) + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> generate_arms(const StudyConfig& config,
                                                 const std::vector<SliceData>& suite, double i0,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths(2 * suite.size());
  parallel_for(suite.size(), [&](std::size_t s) {
    const SliceData& slice = suite[s];
    const Sinogram sim = simulated_arm(config, slice, i0);
    const Image2D sim_recon = reconstruct_intensity_loss(sim, config.fbp);
    const std::string base = slice_name(slice.index);
    paths[2 * s] = dir / (base + "_simulated.ctns");
    write_dataset(paths[2 * s], {{RecordRole::CleanSino, slice.clean_ili},
                                 {RecordRole::NoisySino, sim},
                                 {RecordRole::CleanRecon, slice.clean_recon},
                                 {RecordRole::NoisyRecon, sim_recon}});
    paths[2 * s + 1] = dir / (base + "_experimental-surrogate.ctns");
    write_dataset(paths[2 * s + 1], {{RecordRole::CleanSino, slice.clean_ili},
                                     {RecordRole::NoisySino, slice.surrogate_ili},
                                     {RecordRole::CleanRecon, slice.clean_recon},
                                     {RecordRole::NoisyRecon, slice.surrogate_recon}});
  });
  return paths;
}

// ---------------------------------------------------------------------------
// Study

const char* to_string(EvalBlock block) {
  switch (block) {
    case EvalBlock::Sinogram:
      return "sinogram";
    case EvalBlock::ReconOfOutput:
      return "recon-of-output";
    case EvalBlock::EndToEndOutput:
      return "end-to-end-output";
  }
  return "unknown";
}

EvalBlock eval_block_from_string(const std::string& s) {
  for (EvalBlock b : kBlocks) {
    if (s == to_string(b)) return b;
  }
  throw ValidationError("unknown evaluation block '" + s + "'");
}

std::vector<SliceScore> evaluate_model(const StudyConfig& config, const std::string& method,
                                       const DenoiserModel& model,
                                       const std::vector<SliceData>& suite,
                                       const std::vector<Sinogram>& simulated,
                                       const std::vector<Image2D>& simulated_recon,
                                       const std::vector<std::size_t>& test_slices) {
  const TrainCondition train = model.metadata.train_condition;
  const DenoiseMode mode = model.metadata.mode;
  const std::size_t nt = test_slices.size();
  // Per (test arm, slice): up to four scores, written by index.
  std::vector<std::vector<SliceScore>> out(2 * nt);
  parallel_for(2 * nt, [&](std::size_t job) {
    const TrainCondition test = kArms[job / nt];
    const std::size_t s = test_slices[job % nt];
    const SliceData& slice = suite[s];
    auto add = [&](EvalBlock block, const char* metric, double value) {
      out[job].push_back({method, train, test, block, slice.index, metric, value});
    };
    if (mode == DenoiseMode::Sinogram) {
      const Sinogram& noisy = test == TrainCondition::Simulated ? simulated[s] : slice.surrogate_ili;
      const Sinogram den = denoise(model, noisy);
      add(EvalBlock::Sinogram, "psnr", psnr(den, slice.clean_ili, config.metric));
      add(EvalBlock::Sinogram, "ssim", ssim(den, slice.clean_ili, config.metric));
      const Image2D rec = reconstruct_intensity_loss(den, config.fbp);
      add(EvalBlock::ReconOfOutput, "psnr", psnr(rec, slice.clean_recon, config.metric));
      add(EvalBlock::ReconOfOutput, "ssim", ssim(rec, slice.clean_recon, config.metric));
    } else {
      const Image2D& noisy =
          test == TrainCondition::Simulated ? simulated_recon[s] : slice.surrogate_recon;
      const Image2D den = denoise(model, noisy);
      add(EvalBlock::EndToEndOutput, "psnr", psnr(den, slice.clean_recon, config.metric));
      add(EvalBlock::EndToEndOutput, "ssim", ssim(den, slice.clean_recon, config.metric));
    }
  });
  std::vector<SliceScore> scores;
  for (auto& v : out) scores.insert(scores.end(), v.begin(), v.end());
  return scores;
}

std::vector<CellRecord> aggregate_scores(const std::vector<SliceScore>& scores) {
  using Key = std::tuple<std::string, TrainCondition, TrainCondition, EvalBlock, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> values;
  for (const auto& s : scores) {
    const Key key{s.method, s.train, s.test, s.block, s.metric};
    auto [it, inserted] = values.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(s.value);
  }
  std::vector<CellRecord> cells;
  for (const auto& key : order) {
    cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                     std::get<4>(key), aggregate(values[key])});
  }
  return cells;
}

std::string model_file_name(const std::string& method, DenoiseMode mode, TrainCondition arm) {
  return method + "_" + to_string(mode) + "_" + to_string(arm) + ".msdl";
}

std::uint64_t model_seed(const StudyConfig& config, std::size_t method_index, DenoiseMode mode) {
  return SeededRng(config.seed)
      .derive(kModelTag + 2 * method_index + static_cast<std::uint64_t>(mode))
      .master_seed();
}

StudyInputs prepare_study(const StudyConfig& config) {
  config.validate();
  StudyInputs in;
  in.suite = build_suite(config);
  if (config.i0 > 0.0) {
    in.i0 = config.i0;
  } else {
    in.calibration = calibrate_noise_level(config, in.suite);
    in.i0 = in.calibration.chosen_i0;
  }
  const std::size_t ns = in.suite.size();
  std::vector<std::optional<Sinogram>> sim(ns);
  std::vector<std::optional<Image2D>> rec(ns);
  parallel_for(ns, [&](std::size_t s) {
    sim[s] = simulated_arm(config, in.suite[s], in.i0);
    rec[s] = reconstruct_intensity_loss(*sim[s], config.fbp);
  });
  for (std::size_t s = 0; s < ns; ++s) {
    in.simulated.push_back(std::move(*sim[s]));
    in.simulated_recon.push_back(std::move(*rec[s]));
  }
  in.split = split_indices(ns, config.train, SeededRng(config.seed).derive(kSplitTag).master_seed());
  return in;
}

std::vector<TrainingPair> training_pairs(const StudyInputs& inputs,
                                         const std::vector<std::size_t>& slices,
                                         DenoiseMode mode, TrainCondition arm) {
  std::vector<TrainingPair> pairs;
  for (std::size_t s : slices) {
    if (s >= inputs.suite.size()) throw ValidationError("slice index out of range");
    const SliceData& slice = inputs.suite[s];
    if (mode == DenoiseMode::Sinogram) {
      const Sinogram& noisy =
          arm == TrainCondition::Simulated ? inputs.simulated[s] : slice.surrogate_ili;
      pairs.push_back(
          make_pair(noisy.data(), slice.clean_ili.data(), noisy.n_angles(), noisy.n_pixels()));
    } else {
      const Image2D& noisy =
          arm == TrainCondition::Simulated ? inputs.simulated_recon[s] : slice.surrogate_recon;
      pairs.push_back(
          make_pair(noisy.data(), slice.clean_recon.data(), noisy.height(), noisy.width()));
    }
  }
  return pairs;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  StudyReport report;
  report.seed = config.seed;
  report.config_hash = config_hash(config);
  report.timestamp = utc_timestamp();
  report.metric_range_policy = to_string(config.metric.range);
  for (const auto& m : config.methods) report.methods.push_back(m.name);

  try {
    const StudyInputs in = prepare_study(config);
    report.calibration = in.calibration;
    report.i0 = in.i0;
    report.split = in.split;
    if (config.write_datasets) generate_arms(config, in.suite, in.i0, config.output_dir / "datasets");

    const std::filesystem::path model_dir = config.output_dir / "models";
    std::error_code ec;
    std::filesystem::create_directories(model_dir, ec);
    if (ec) throw IoError("cannot create " + model_dir.string() + ": " + ec.message());

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const MethodSpec& method = config.methods[mi];
      for (DenoiseMode mode : {DenoiseMode::Sinogram, DenoiseMode::EndToEnd}) {
        for (TrainCondition arm : kArms) {
          TrainResult trained = train(training_pairs(in, in.split.train, mode, arm),
                                      training_pairs(in, in.split.validation, mode, arm),
                                      config.train, method.architecture, arm, mode,
                                      model_seed(config, mi, mode));
          save_model(model_dir / model_file_name(method.name, mode, arm), trained.model);
          report.training.push_back({method.name, mode, arm, trained.train_loss,
                                     trained.validation_loss, trained.best_epoch});
          const auto scores = evaluate_model(config, method.name, trained.model, in.suite,
                                             in.simulated, in.simulated_recon, in.split.test);
          report.slice_scores.insert(report.slice_scores.end(), scores.begin(), scores.end());
          report.cells = aggregate_scores(report.slice_scores);
        }
      }
    }
  } catch (const std::exception& e) {
    report.incomplete = true;
    report.failure = e.what();
    report.cells = aggregate_scores(report.slice_scores);
    try {
      emit_report(report, config.output_dir);
    } catch (const std::exception&) {
      // The original error is more useful than a failed flush.
    }
    throw;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report

std::string report_to_csv(const StudyReport& report) {
  std::string out = "method,mode,train_condition,test_condition,domain,metric,mean,std,n,excluded\n";
  for (const auto& c : report.cells) {
    out += c.method + "," + to_string(mode_of(c.block)) + "," + to_string(c.train) + "," +
           to_string(c.test) + "," + to_string(c.block) + "," + c.metric + "," +
           format_value(c.value.mean) + "," + format_value(c.value.std) + "," +
           std::to_string(c.value.n) + "," + std::to_string(c.value.excluded) + "\n";
  }
  if (report.incomplete) {
    out += std::string(kIncompleteMarker) + ",,,,," + sanitize_csv(report.failure) + ",nan,nan,0,0\n";
  }
  return out;
}

StudyReport report_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) ||
      line != "method,mode,train_condition,test_condition,domain,metric,mean,std,n,excluded") {
    throw ValidationError("study report CSV is missing its header row");
  }
  StudyReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw ValidationError("malformed study report line: " + line);
    if (f[0] == kIncompleteMarker) {
      report.incomplete = true;
      report.failure = f[5];
      continue;
    }
    CellRecord c;
    c.method = f[0];
    c.train = train_condition_from_string(f[2]);
    c.test = train_condition_from_string(f[3]);
    c.block = eval_block_from_string(f[4]);
    if (denoise_mode_from_string(f[1]) != mode_of(c.block)) {
      throw ValidationError("mode does not match the evaluation block: " + line);
    }
    c.metric = f[5];
    c.value.mean = parse_value(f[6]);
    c.value.std = parse_value(f[7]);
    c.value.n = static_cast<std::size_t>(to_uint("n", f[8]));
    c.value.excluded = static_cast<std::size_t>(to_uint("excluded", f[9]));
    report.cells.push_back(std::move(c));
  }
  return report;
}

std::vector<std::string> missing_cells(const StudyReport& report) {
  std::vector<std::string> missing;
  const auto methods = report_methods(report);
  if (methods.empty()) missing.emplace_back("no methods reported");
  for (const auto& m : methods) {
    for (TrainCondition train : kArms) {
      for (TrainCondition test : kArms) {
        for (EvalBlock block : kBlocks) {
          for (const char* metric : kMetrics) {
            if (find_cell(report, m, train, test, block, metric) == nullptr) {
              missing.push_back(m + " train=" + to_string(train) + " test=" + to_string(test) + " " +
                                to_string(block) + " " + metric);
            }
          }
        }
      }
    }
  }
  return missing;
}

std::vector<OrderingCheck> check_orderings(const StudyReport& report) {
  std::vector<OrderingCheck> checks;
  const auto S = TrainCondition::Simulated;
  const auto X = TrainCondition::Surrogate;
  auto greater = [&](const std::string& m, TrainCondition tr_a, TrainCondition te_a, EvalBlock b_a,
                     TrainCondition tr_b, TrainCondition te_b, EvalBlock b_b,
                     const std::string& metric) {
    const CellRecord* a = find_cell(report, m, tr_a, te_a, b_a, metric);
    const CellRecord* b = find_cell(report, m, tr_b, te_b, b_b, metric);
    return a != nullptr && b != nullptr && a->value.mean > b->value.mean;
  };
  for (const auto& m : report_methods(report)) {
    for (EvalBlock block : {EvalBlock::ReconOfOutput, EvalBlock::EndToEndOutput}) {
      for (const char* metric : kMetrics) {
        checks.push_back({m + ": " + to_string(mode_of(block)) + " mode, " + to_string(block) + " " +
                              metric + ": train=surrogate/test=surrogate > train=simulated/test=surrogate",
                          greater(m, X, X, block, S, X, block, metric)});
      }
    }
    for (TrainCondition arm : kArms) {
      checks.push_back({m + ": ssim end-to-end-output > recon-of-output, train=test=" +
                            std::string(to_string(arm)),
                        greater(m, arm, arm, EvalBlock::EndToEndOutput, arm, arm,
                                EvalBlock::ReconOfOutput, "ssim")});
    }
  }
  return checks;
}

std::string report_summary(const StudyReport& report) {
  std::ostringstream out;
  const auto missing = missing_cells(report);
  if (report.incomplete || !missing.empty()) {
    out << "==================== INCOMPLETE ====================\n";
    if (report.incomplete) out << "run stopped early: " << report.failure << "\n";
    for (const auto& m : missing) out << "missing cell: " << m << "\n";
    out << "====================================================\n\n";
  }
  out << "sim2real study summary\n";
  out << "seed: " << report.seed << "\n";
  out << "config hash: " << std::hex << std::setw(16) << std::setfill('0') << report.config_hash
      << std::dec << std::setfill(' ') << "\n";
  out << "simulated-arm I0: " << fmt(report.i0)
      << (report.calibration.table.empty() ? " (fixed)" : " (calibrated)") << "\n";
  out << "metric range policy: " << report.metric_range_policy << "\n";
  out << "split (train/validation/test slices): " << report.split.train.size() << "/"
      << report.split.validation.size() << "/" << report.split.test.size() << "\n\n";

  out << "method       block              train                   test                    metric      mean        std   n\n";
  for (const auto& c : report.cells) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %-18s %-23s %-23s %-6s %10.4f %10.4f %3zu\n",
                  c.method.c_str(), to_string(c.block), to_string(c.train), to_string(c.test),
                  c.metric.c_str(), c.value.mean, c.value.std, c.value.n);
    out << buf;
  }
  out << "\norderings\n";
  for (const auto& check : check_orderings(report)) {
    out << (check.held ? "  HELD      " : "  NOT HELD  ") << check.description << "\n";
  }
  return out.str();
}

std::string block_svg(const StudyReport& report, EvalBlock block) {
  const auto methods = report_methods(report);
  const double panel_w = 420.0;
  const double panel_h = 260.0;
  const double left = 60.0;
  const double top = 50.0;
  const double width = 2.0 * (panel_w + left) + 20.0;
  const double height = top + panel_h + 90.0;
  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(std::string("evaluation block: ") + to_string(block)) << "</text>\n";
  const char* colors[4] = {"#4c72b0", "#8fb0dd", "#dd8452", "#f0b98f"};
  for (int panel = 0; panel < 2; ++panel) {
    const std::string metric = kMetrics[panel];
    const double x0 = left + panel * (panel_w + left);
    std::vector<const CellRecord*> cells;
    double vmax = 0.0;
    double vmin = 0.0;
    for (const auto& m : methods) {
      for (TrainCondition train : kArms) {
        for (TrainCondition test : kArms) {
          const CellRecord* c = find_cell(report, m, train, test, block, metric);
          cells.push_back(c);
          if (c != nullptr && std::isfinite(c->value.mean)) {
            const double sd = std::isfinite(c->value.std) ? c->value.std : 0.0;
            vmax = std::max(vmax, c->value.mean + sd);
            vmin = std::min(vmin, c->value.mean - sd);
          }
        }
      }
    }
    if (vmax <= vmin) vmax = vmin + 1.0;
    const double span = vmax - vmin;
    auto ypos = [&](double v) { return top + panel_h * (1.0 - (v - vmin) / span); };
    svg << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << top - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << metric << "</text>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << top << "\" x2=\"" << x0 << "\" y2=\"" << top + panel_h
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << ypos(0.0) << "\" x2=\"" << x0 + panel_w << "\" y2=\""
        << ypos(0.0) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = vmin + span * t / 4.0;
      svg << "<text x=\"" << x0 - 4 << "\" y=\"" << ypos(v) + 4 << "\" text-anchor=\"end\">"
          << std::setprecision(3) << v << std::setprecision(2) << "</text>\n";
    }
    const std::size_t groups = std::max<std::size_t>(1, methods.size());
    const double group_w = panel_w / static_cast<double>(groups);
    const double bar_w = group_w / 5.0;
    for (std::size_t g = 0; g < methods.size(); ++g) {
      for (int k = 0; k < 4; ++k) {
        const CellRecord* c = cells[g * 4 + static_cast<std::size_t>(k)];
        const double bx = x0 + g * group_w + bar_w * (0.5 + k);
        if (c == nullptr || !std::isfinite(c->value.mean)) {
          svg << "<text x=\"" << bx + bar_w / 2 << "\" y=\"" << ypos(0.0) - 4
              << "\" text-anchor=\"middle\" fill=\"red\">n/a</text>\n";
          continue;
        }
        const double y = ypos(std::max(c->value.mean, 0.0));
        const double h = std::abs(ypos(c->value.mean) - ypos(0.0));
        svg << "<rect x=\"" << bx << "\" y=\"" << y << "\" width=\"" << bar_w * 0.9 << "\" height=\""
            << h << "\" fill=\"" << colors[k] << "\"/>\n";
        if (std::isfinite(c->value.std) && c->value.std > 0.0) {
          const double cx = bx + bar_w * 0.45;
          svg << "<line x1=\"" << cx << "\" y1=\"" << ypos(c->value.mean - c->value.std) << "\" x2=\""
              << cx << "\" y2=\"" << ypos(c->value.mean + c->value.std) << "\" stroke=\"black\"/>\n";
        }
      }
      svg << "<text x=\"" << x0 + (g + 0.5) * group_w << "\" y=\"" << top + panel_h + 16
          << "\" text-anchor=\"middle\">" << xml_escape(methods[g]) << "</text>\n";
    }
  }
  const char* labels[4] = {"train sim / test sim", "train sim / test surrogate",
                           "train surrogate / test sim", "train surrogate / test surrogate"};
  for (int k = 0; k < 4; ++k) {
    const double lx = left + k * 220.0;
    const double ly = top + panel_h + 40.0;
    svg << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\"" << colors[k]
        << "\"/>\n";
    svg << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 10 << "\">" << labels[k] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(const StudyReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "per_slice", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "study_report.csv", report_to_csv(report));
  if (!report.calibration.table.empty()) {
    write_text(dir / "calibration.csv", calibration_to_csv(report.calibration));
  }

  std::map<std::string, std::vector<MetricRecord>> per_slice;
  for (const auto& s : report.slice_scores) {
    const std::string file = s.method + "_train-" + to_string(s.train) + "_test-" + to_string(s.test) + ".csv";
    per_slice[file].push_back({slice_name(s.slice), to_string(s.block), s.metric, s.value});
  }
  for (const auto& [file, records] : per_slice) write_metric_csv(dir / "per_slice" / file, records);

  std::string loss = "method,mode,train_condition,epoch,train_loss,validation_loss\n";
  for (const auto& t : report.training) {
    for (std::size_t e = 0; e < t.train_loss.size(); ++e) {
      loss += t.method + "," + to_string(t.mode) + "," + to_string(t.train) + "," +
              std::to_string(e + 1) + "," + format_value(t.train_loss[e]) + "," +
              format_value(t.validation_loss[e]) + "\n";
    }
  }
  write_text(dir / "training_loss.csv", loss);

  for (EvalBlock block : kBlocks) {
    write_text(dir / (std::string("block_") + to_string(block) + ".svg"), block_svg(report, block));
  }
  write_text(dir / "summary.txt", report_summary(report));

  std::ostringstream prov;
  prov << "config_hash=" << std::hex << std::setw(16) << std::setfill('0') << report.config_hash
       << std::dec << "\n";
  prov << "seed=" << report.seed << "\n";
  prov << "timestamp=" << report.timestamp << "\n";
  prov << "i0=" << fmt(report.i0) << "\n";
  prov << "metric_range_policy=" << report.metric_range_policy << "\n";
  write_text(dir / "provenance.txt", prov.str());
}

}  // namespace sim2real
