#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sim2real/harness.hpp"

using namespace sim2real;
namespace fs = std::filesystem;

namespace {

StudyConfig tiny_config() {
  StudyConfig c;
  c.suite_count = 30;
  c.geometry.n_angles = 90;
  c.geometry.n_pixels = 91;
  c.geometry.det_pixel_size_mm = 1.5;
  c.geometry.fov_radius_mm = 64.0;
  c.phantom_fov_mm = 60.0;
  c.fbp.width = 64;
  c.fbp.height = 64;
  c.fbp.pixel_size_mm = 2.0;
  c.train.epochs = 2;
  c.train.patch_size = 32;
  c.train.patches_per_image = 2;
  c.train.validation_patches_per_image = 1;
  for (auto& m : c.methods) m.architecture.depth = 3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const StudyReport& tiny_study() {
  static const StudyReport report = [] {
    StudyConfig c = tiny_config();
    c.output_dir = fs::temp_directory_path() / "sim2real_tiny_study";
    fs::remove_all(c.output_dir);
    set_num_threads(1);
    StudyReport r = run_study(c);
    emit_report(r, c.output_dir);
    return r;
  }();
  return report;
}

CellRecord cell(const std::string& method, TrainCondition train, TrainCondition test,
                EvalBlock block, const std::string& metric, double mean) {
  CellRecord c{method, train, test, block, metric, {}};
  c.value.mean = mean;
  c.value.std = 0.5;
  c.value.n = 6;
  return c;
}

}  // namespace

TEST(HarnessConfig, CanonicalTextRoundTrips) {
  const StudyConfig def;
  const std::string text = config_to_text(def);
  EXPECT_EQ(config_to_text(parse_config(text)), text);
  EXPECT_EQ(config_hash(parse_config(text)), config_hash(def));
  StudyConfig other = def;
  other.seed = 8;
  EXPECT_NE(config_hash(other), config_hash(def));
}

TEST(HarnessConfig, ExampleFileMatchesDefaults) {
  const StudyConfig parsed = load_config(fs::path(SIM2REAL_SOURCE_DIR) / "docs" / "study.example.cfg");
  EXPECT_EQ(config_to_text(parsed), config_to_text(StudyConfig{}));
}

TEST(HarnessConfig, OverridesAndErrors) {
  const StudyConfig c = parse_config(
      "# comment\n\nseed = 42\nnoise.i0_sweep=100,150\nmodel.depth=5\nmodel.methods=a:2,b:3\n"
      "metric.range=fixed\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.i0_sweep, (std::vector<double>{100, 150}));
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[1].name, "b");
  EXPECT_EQ(c.methods[1].architecture.depth, 5u);
  EXPECT_EQ(c.methods[1].architecture.dilation_cycle, 3u);
  EXPECT_EQ(c.metric.range, RangePolicy::Fixed);

  EXPECT_THROW(parse_config("nope=1\n"), ValidationError);
  EXPECT_THROW(parse_config("seed=1\nseed=2\n"), ValidationError);
  EXPECT_THROW(parse_config("seed\n"), ValidationError);
  EXPECT_THROW(parse_config("seed=-3\n"), ValidationError);
  EXPECT_THROW(parse_config("noise.i0_sweep=200,200\n"), ValidationError);
  EXPECT_THROW(parse_config("noise.i0_sweep=300,200\n"), ValidationError);
  EXPECT_THROW(parse_config("suite.count=29\n"), ValidationError);
  EXPECT_THROW(parse_config("train.split=0.5,0.5\n"), ValidationError);
  EXPECT_THROW(parse_config("model.methods=a:2,a:3\n"), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/config.cfg"), ValidationError);
}

TEST(HarnessConfig, ComplexityCycle) {
  StudyConfig c;
  c.complexity_mix = {{Complexity::Sparse, 2}, {Complexity::Dense, 1}};
  EXPECT_EQ(c.complexity_of(0), Complexity::Sparse);
  EXPECT_EQ(c.complexity_of(1), Complexity::Sparse);
  EXPECT_EQ(c.complexity_of(2), Complexity::Dense);
  EXPECT_EQ(c.complexity_of(3), Complexity::Sparse);
}

TEST(HarnessData, SlicesAreDeterministic) {
  const StudyConfig c = tiny_config();
  const SliceData a = generate_slice(c, 4);
  set_num_threads(3);
  const SliceData b = generate_slice(c, 4);
  set_num_threads(1);
  EXPECT_TRUE(std::equal(a.surrogate_ili.data().begin(), a.surrogate_ili.data().end(),
                         b.surrogate_ili.data().begin()));
  EXPECT_TRUE(std::equal(a.clean_recon.data().begin(), a.clean_recon.data().end(),
                         b.clean_recon.data().begin()));
  const SliceData other = generate_slice(c, 5);
  EXPECT_FALSE(std::equal(a.clean_ili.data().begin(), a.clean_ili.data().end(),
                          other.clean_ili.data().begin()));
  EXPECT_EQ(a.clean_ili.n_angles(), 90u);
  EXPECT_EQ(a.clean_recon.width(), 64u);
}

TEST(HarnessData, SimulatedArmNoiseFreeLimit) {
  const StudyConfig c = tiny_config();
  const SliceData s = generate_slice(c, 0);
  const Sinogram sim = simulated_arm(c, s, 1e9);
  for (std::size_t i = 0; i < sim.data().size(); ++i) {
    EXPECT_NEAR(sim.data()[i], s.clean_ili.data()[i], 1e-3);
  }
}

TEST(HarnessData, CalibrationSelfMatch) {
  const StudyConfig c = tiny_config();
  const auto suite = build_suite(c);
  const CalibrationResult r = calibrate_noise_level(c, suite, 250.0);
  EXPECT_EQ(r.chosen_i0, 250.0);
  ASSERT_EQ(r.table.size(), 4u * (c.i0_sweep.size() + 1));
  const std::string csv = calibration_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "noise_arm,I0,domain,metric,mean,std");
}

TEST(HarnessData, GeneratedArmFilesAreReproducible) {
  StudyConfig c = tiny_config();
  std::vector<SliceData> suite;
  suite.push_back(generate_slice(c, 0));
  suite.push_back(generate_slice(c, 1));
  const fs::path d1 = fs::temp_directory_path() / "sim2real_arms_1";
  const fs::path d2 = fs::temp_directory_path() / "sim2real_arms_2";
  const auto p1 = generate_arms(c, suite, 300.0, d1);
  const auto p2 = generate_arms(c, suite, 300.0, d2);
  ASSERT_EQ(p1.size(), 4u);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].filename(), p2[i].filename());
    EXPECT_EQ(slurp(p1[i]), slurp(p2[i]));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(HarnessReport, CsvRoundTripIsExact) {
  StudyReport r;
  r.cells.push_back(cell("m", TrainCondition::Simulated, TrainCondition::Surrogate,
                         EvalBlock::ReconOfOutput, "psnr", 31.123456789012345));
  r.cells.push_back(cell("m", TrainCondition::Surrogate, TrainCondition::Surrogate,
                         EvalBlock::EndToEndOutput, "ssim", 0.1 + 0.2));
  r.cells.back().value.excluded = 1;
  const std::string csv = report_to_csv(r);
  const StudyReport back = report_from_csv(csv);
  ASSERT_EQ(back.cells.size(), 2u);
  EXPECT_EQ(back.cells[0].value.mean, r.cells[0].value.mean);
  EXPECT_EQ(back.cells[1].value.mean, r.cells[1].value.mean);
  EXPECT_EQ(back.cells[1].value.excluded, 1u);
  EXPECT_EQ(back.cells[1].block, EvalBlock::EndToEndOutput);
  EXPECT_EQ(report_to_csv(back), csv);
  EXPECT_THROW(report_from_csv("bad header\n"), ValidationError);
}

TEST(HarnessReport, IncompleteMarkerAndBanner) {
  StudyReport r;
  r.methods = {"m"};
  r.incomplete = true;
  r.failure = "disk full, sorry";
  const StudyReport back = report_from_csv(report_to_csv(r));
  EXPECT_TRUE(back.incomplete);
  EXPECT_EQ(missing_cells(r).size(), 24u);
  EXPECT_NE(report_summary(r).find("INCOMPLETE"), std::string::npos);
}

TEST(HarnessReport, OrderingChecks) {
  StudyReport r;
  r.methods = {"m"};
  const auto S = TrainCondition::Simulated;
  const auto X = TrainCondition::Surrogate;
  for (auto block : {EvalBlock::ReconOfOutput, EvalBlock::EndToEndOutput}) {
    for (std::string metric : {"psnr", "ssim"}) {
      r.cells.push_back(cell("m", X, X, block, metric, 2.0));
      r.cells.push_back(cell("m", S, X, block, metric, 1.0));
    }
  }
  r.cells.push_back(cell("m", S, S, EvalBlock::EndToEndOutput, "ssim", 0.5));
  r.cells.push_back(cell("m", S, S, EvalBlock::ReconOfOutput, "ssim", 0.6));
  const auto checks = check_orderings(r);
  ASSERT_EQ(checks.size(), 6u);
  std::size_t held = 0;
  for (const auto& c : checks) held += c.held ? 1 : 0;
  // Matched-noise checks hold; end-to-end loses on the simulated arm and
  // ties on the surrogate arm.
  EXPECT_EQ(held, 4u);
  EXPECT_FALSE(checks[4].held);
  EXPECT_FALSE(checks[5].held);
}

TEST(HarnessStudy, ReportHasEveryCell) {
  const StudyReport& r = tiny_study();
  EXPECT_FALSE(r.incomplete);
  EXPECT_EQ(r.cells.size(), 2u * 2 * 2 * 3 * 2);
  EXPECT_TRUE(missing_cells(r).empty());
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.value.n + c.value.excluded, r.split.test.size());
  }
  std::set<std::size_t> all(r.split.train.begin(), r.split.train.end());
  all.insert(r.split.validation.begin(), r.split.validation.end());
  all.insert(r.split.test.begin(), r.split.test.end());
  EXPECT_EQ(all.size(), 30u);
  EXPECT_EQ(r.split.train.size() + r.split.validation.size() + r.split.test.size(), 30u);
  EXPECT_EQ(r.training.size(), 8u);
  EXPECT_GT(r.i0, 0.0);
  EXPECT_EQ(r.calibration.chosen_i0, r.i0);
}

TEST(HarnessStudy, EmittedFilesAndReparse) {
  const StudyReport& r = tiny_study();
  const fs::path dir = fs::temp_directory_path() / "sim2real_tiny_study";
  for (const char* f : {"study_report.csv", "calibration.csv", "training_loss.csv", "summary.txt",
                        "provenance.txt", "block_sinogram.svg", "block_recon-of-output.svg",
                        "block_end-to-end-output.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::size_t per_slice = 0;
  for (const auto& e : fs::directory_iterator(dir / "per_slice")) per_slice += e.is_regular_file();
  EXPECT_EQ(per_slice, 8u);
  std::size_t models = 0;
  for (const auto& e : fs::directory_iterator(dir / "models")) models += e.is_regular_file();
  EXPECT_EQ(models, 8u);
  const StudyReport back = report_from_csv(slurp(dir / "study_report.csv"));
  ASSERT_EQ(back.cells.size(), r.cells.size());
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    EXPECT_EQ(back.cells[i].value.mean, r.cells[i].value.mean);
    EXPECT_EQ(back.cells[i].value.std, r.cells[i].value.std);
  }
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_EQ(summary.find("INCOMPLETE"), std::string::npos);
  EXPECT_NE(summary.find("HELD"), std::string::npos);
  EXPECT_EQ(slurp(dir / "block_sinogram.svg").rfind("<svg", 0), 0u);
}

TEST(HarnessStudy, DeterministicAcrossThreadCounts) {
  const StudyReport& a = tiny_study();
  StudyConfig c = tiny_config();
  c.output_dir = fs::temp_directory_path() / "sim2real_tiny_study_threads";
  set_num_threads(3);
  const StudyReport b = run_study(c);
  set_num_threads(1);
  EXPECT_EQ(report_to_csv(a), report_to_csv(b));
  fs::remove_all(c.output_dir);
}

TEST(HarnessStudy, FailureFlushesPartialReport) {
  StudyConfig c = tiny_config();
  c.output_dir = fs::temp_directory_path() / "sim2real_failing_study";
  fs::remove_all(c.output_dir);
  fs::create_directories(c.output_dir);
  // A regular file where the model directory should go makes saving fail.
  std::ofstream(c.output_dir / "models") << "x";
  EXPECT_THROW(run_study(c), IoError);
  const std::string csv = slurp(c.output_dir / "study_report.csv");
  EXPECT_NE(csv.find("#INCOMPLETE"), std::string::npos);
  EXPECT_NE(slurp(c.output_dir / "summary.txt").find("INCOMPLETE"), std::string::npos);
  fs::remove_all(c.output_dir);
}
