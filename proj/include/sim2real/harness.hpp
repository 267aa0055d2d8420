#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sim2real/denoiser.hpp"
#include "sim2real/fbp.hpp"
#include "sim2real/metrics.hpp"
#include "sim2real/phantom.hpp"
#include "sim2real/projector.hpp"

namespace sim2real {

struct MethodSpec {
  std::string name;
  MsdLiteArchitecture architecture;
};

/// Everything a study run depends on besides the thread count.
///
/// Text form is flat `section.key=value` lines; see
/// docs/study.example.cfg for every key with its default.
struct StudyConfig {
  std::uint64_t seed = 7;

  std::size_t suite_count = 60;
  std::vector<std::pair<Complexity, std::size_t>> complexity_mix = {
      {Complexity::Sparse, 1}, {Complexity::Mixed, 1}, {Complexity::Dense, 1}};
  double phantom_fov_mm = 60.0;

  ScanGeometry geometry;

  std::vector<double> i0_sweep = {200.0, 250.0, 300.0, 350.0};
  /// Simulated-arm photon count; 0 selects it by calibration.
  double i0 = 0.0;
  double cross_talk = 0.05;

  double simulated_sigma_electronic = 0.0;
  bool simulated_cross_talk_on_clean = false;

  SpectrumConfig surrogate_spectrum = default_surrogate_spectrum();
  double surrogate_i0 = 500.0;
  double clean_dose_factor = 30.0;
  double surrogate_sigma_electronic = 2.0;
  double dark_level = 50.0;
  std::size_t flat_frames = 2;

  TrainConfig train;
  std::vector<MethodSpec> methods = default_methods();

  FbpConfig fbp;
  MetricConfig metric;

  std::filesystem::path output_dir = "study_out";
  bool write_datasets = false;

  static SpectrumConfig default_surrogate_spectrum();
  static std::vector<MethodSpec> default_methods();

  void validate() const;
  Complexity complexity_of(std::size_t slice) const;
};

/// Applies `key=value` lines on top of the defaults. Blank lines and lines
/// starting with '#' are skipped; unknown keys are errors.
StudyConfig parse_config(const std::string& text);
StudyConfig load_config(const std::filesystem::path& path);
/// Canonical text of every key, in a fixed order.
std::string config_to_text(const StudyConfig& config);
/// FNV-1a of the canonical text.
std::uint64_t config_hash(const StudyConfig& config);

/// Clean and experimental-surrogate data of one phantom slice.
struct SliceData {
  std::size_t index = 0;
  Complexity complexity = Complexity::Sparse;
  Sinogram clean_ili;
  Sinogram surrogate_ili;
  Image2D clean_recon;
  Image2D surrogate_recon;
};

/// Phantom of slice `index` of the suite.
Phantom suite_phantom(const StudyConfig& config, std::size_t index);

/// Clean arm: polychromatic measurement at clean_dose_factor * surrogate_i0,
/// flat/dark corrected with fields measured at that flux. Surrogate arm:
/// the same acquisition at surrogate_i0 with its own measured fields.
SliceData generate_slice(const StudyConfig& config, std::size_t index);
std::vector<SliceData> build_suite(const StudyConfig& config);

/// Simulated-noisy counterpart of the clean arm at photon count i0. The
/// draws do not depend on i0, so sweeps use common random numbers.
Sinogram simulated_arm(const StudyConfig& config, const SliceData& slice, double i0);

struct CalibrationRow {
  std::string noise_arm;
  double i0 = 0.0;
  std::string domain;
  std::string metric;
  Aggregate value;
};

struct CalibrationResult {
  double chosen_i0 = 0.0;
  std::vector<CalibrationRow> table;
};

/// Scores the simulated arm at every sweep value and the reference arm
/// against the clean arm in both domains, and picks the sweep value whose
/// mean reconstruction-domain PSNR is closest to the reference arm's (the
/// smaller value on ties). The reference arm is the surrogate, or the
/// simulated arm at `simulated_reference_i0` when given.
CalibrationResult calibrate_noise_level(const StudyConfig& config,
                                        const std::vector<SliceData>& suite,
                                        std::optional<double> simulated_reference_i0 = {});
CalibrationResult calibrate_noise_level(const StudyConfig& config);

/// Header: noise_arm,I0,domain,metric,mean,std
std::string calibration_to_csv(const CalibrationResult& result);

/// Writes per-slice dataset files (clean, simulated, surrogate) to `dir`
/// and returns their paths.
std::vector<std::filesystem::path> generate_arms(const StudyConfig& config,
                                                 const std::vector<SliceData>& suite,
                                                 double i0, const std::filesystem::path& dir);

enum class EvalBlock { Sinogram, ReconOfOutput, EndToEndOutput };
const char* to_string(EvalBlock block);
EvalBlock eval_block_from_string(const std::string& s);

struct CellRecord {
  std::string method;
  TrainCondition train = TrainCondition::Simulated;
  TrainCondition test = TrainCondition::Simulated;
  EvalBlock block = EvalBlock::Sinogram;
  std::string metric;
  Aggregate value;
};

struct SliceScore {
  std::string method;
  TrainCondition train = TrainCondition::Simulated;
  TrainCondition test = TrainCondition::Simulated;
  EvalBlock block = EvalBlock::Sinogram;
  std::size_t slice = 0;
  std::string metric;
  double value = 0.0;
};

struct TrainingLog {
  std::string method;
  DenoiseMode mode = DenoiseMode::Sinogram;
  TrainCondition train = TrainCondition::Simulated;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
};

struct StudyReport {
  std::vector<CellRecord> cells;
  std::vector<SliceScore> slice_scores;
  std::vector<TrainingLog> training;
  CalibrationResult calibration;
  double i0 = 0.0;
  DataSplit split;
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string timestamp;
  std::string metric_range_policy;
  /// Set when the run stopped early; `failure` holds the reason.
  bool incomplete = false;
  std::string failure;
};

/// Suite, simulated arm at the study I0 and the slice split.
struct StudyInputs {
  std::vector<SliceData> suite;
  /// Empty when config.i0 > 0.
  CalibrationResult calibration;
  double i0 = 0.0;
  std::vector<Sinogram> simulated;
  std::vector<Image2D> simulated_recon;
  DataSplit split;
};

StudyInputs prepare_study(const StudyConfig& config);

/// Noisy/clean pairs of the given slices for one mode and train arm.
std::vector<TrainingPair> training_pairs(const StudyInputs& inputs,
                                         const std::vector<std::size_t>& slices,
                                         DenoiseMode mode, TrainCondition arm);

/// Initial-weight seed of a (method, mode); shared by both train arms.
std::uint64_t model_seed(const StudyConfig& config, std::size_t method_index, DenoiseMode mode);

/// <method>_<mode>_<arm>.msdl
std::string model_file_name(const std::string& method, DenoiseMode mode, TrainCondition arm);

/// Calibration (unless config.i0 > 0), 80/10/10 split by slice index, one
/// sinogram-mode and one end-to-end model per (method, train arm), each
/// evaluated on both arms' test slices in all applicable blocks. Models are
/// written to <output_dir>/models. On failure the partial report is emitted
/// with an incomplete marker before the error is rethrown.
StudyReport run_study(const StudyConfig& config);

/// Test-slice scores of `model` on both arms.
std::vector<SliceScore> evaluate_model(const StudyConfig& config, const std::string& method,
                                       const DenoiserModel& model,
                                       const std::vector<SliceData>& suite,
                                       const std::vector<Sinogram>& simulated,
                                       const std::vector<Image2D>& simulated_recon,
                                       const std::vector<std::size_t>& test_slices);

/// Aggregates slice scores into one record per (method, train, test,
/// block, metric).
std::vector<CellRecord> aggregate_scores(const std::vector<SliceScore>& scores);

/// Header: method,mode,train_condition,test_condition,domain,metric,mean,std,n,excluded
std::string report_to_csv(const StudyReport& report);
/// Cells (and the incomplete marker) from report_to_csv output.
StudyReport report_from_csv(const std::string& csv);

/// Cells required for a complete report that are absent, as text.
std::vector<std::string> missing_cells(const StudyReport& report);

struct OrderingCheck {
  std::string description;
  bool held = false;
};

/// The matched-noise and end-to-end orderings, per method.
std::vector<OrderingCheck> check_orderings(const StudyReport& report);

std::string report_summary(const StudyReport& report);
/// Bar chart of PSNR and SSIM for one block.
std::string block_svg(const StudyReport& report, EvalBlock block);

/// study_report.csv, per-slice CSVs, calibration.csv, training_loss.csv,
/// one SVG per block, summary.txt and provenance.txt.
void emit_report(const StudyReport& report, const std::filesystem::path& dir);

}  // namespace sim2real
