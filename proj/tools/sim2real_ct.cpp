// sim2real_ct: phantom suite, noise arms, calibration, training and the
// train/test study from the command line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sim2real/harness.hpp"

namespace fs = std::filesystem;
using namespace sim2real;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config, "study config file (key=value lines)");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out, "output directory (overrides output.dir)");
  cmd->add_option("--threads", opts.threads,
                  "worker threads (default: SIM2REAL_CT_THREADS, else hardware)");
}

void apply_threads(const CommonOptions& opts) {
  std::size_t n = opts.threads;
  if (n == 0) {
    if (const char* env = std::getenv("SIM2REAL_CT_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end == env || *end != '\0') {
        throw ValidationError(std::string("SIM2REAL_CT_THREADS is not a number: ") + env);
      }
      n = v;
    }
  }
  if (n > 0) set_num_threads(n);
}

StudyConfig resolve_config(const CommonOptions& opts) {
  StudyConfig config = load_config(opts.config);
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.out.empty()) config.output_dir = opts.out;
  config.validate();
  return config;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8-bit binary PGM, linearly windowed to [lo, hi].
void write_pgm(const fs::path& path, std::span<const double> data, std::size_t width,
               std::size_t height, double lo, double hi) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : data) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_image(const fs::path& path, const Image2D& img, double lo, double hi) {
  write_pgm(path, img.data(), img.width(), img.height(), lo, hi);
}

std::pair<double, double> value_range(std::span<const double> data) {
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  return {*lo, *hi};
}

std::string slice_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%03zu", i);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_phantom(const CommonOptions& opts) {
  const StudyConfig config = resolve_config(opts);
  const fs::path dir = config.output_dir / "phantoms";
  ensure_dir(dir);
  const double energy = config.surrogate_spectrum.energies_keV.empty()
                            ? 60.0
                            : config.surrogate_spectrum.energies_keV[config.surrogate_spectrum.energies_keV.size() / 2];
  std::string index = "slice,complexity,ellipses,high_attenuation\n";
  for (std::size_t i = 0; i < config.suite_count; ++i) {
    const Phantom ph = suite_phantom(config, i);
    write_file(dir / (slice_stem(i) + ".phantom"), phantom_to_text(ph));
    const Image2D img = rasterize(ph, config.fbp.width, config.fbp.height, config.fbp.pixel_size_mm, energy);
    const auto [lo, hi] = value_range(img.data());
    write_image(dir / (slice_stem(i) + ".pgm"), img, lo, hi);
    index += slice_stem(i) + "," + to_string(config.complexity_of(i)) + "," +
             std::to_string(ph.ellipses().size()) + "," + std::to_string(ph.high_attenuation_count()) + "\n";
  }
  write_file(dir / "index.csv", index);
  std::cout << "wrote " << config.suite_count << " phantoms to " << dir.string() << "\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opts) {
  const StudyConfig config = resolve_config(opts);
  const StudyInputs in = prepare_study(config);
  const fs::path dir = config.output_dir / "datasets";
  const auto paths = generate_arms(config, in.suite, in.i0, dir);
  const fs::path img_dir = config.output_dir / "images";
  ensure_dir(img_dir);
  for (std::size_t s = 0; s < in.suite.size(); ++s) {
    const SliceData& slice = in.suite[s];
    const auto [lo, hi] = value_range(slice.clean_recon.data());
    const std::string stem = slice_stem(slice.index);
    write_image(img_dir / (stem + "_clean.pgm"), slice.clean_recon, lo, hi);
    write_image(img_dir / (stem + "_simulated.pgm"), in.simulated_recon[s], lo, hi);
    write_image(img_dir / (stem + "_experimental-surrogate.pgm"), slice.surrogate_recon, lo, hi);
  }
  if (!in.calibration.table.empty()) {
    write_file(config.output_dir / "calibration.csv", calibration_to_csv(in.calibration));
  }
  std::cout << "simulated-arm I0 " << in.i0 << "; wrote " << paths.size() << " dataset files to "
            << dir.string() << "\n";
  return 0;
}

int cmd_calibrate(const CommonOptions& opts) {
  const StudyConfig config = resolve_config(opts);
  const CalibrationResult result = calibrate_noise_level(config);
  const std::string csv = calibration_to_csv(result);
  ensure_dir(config.output_dir);
  write_file(config.output_dir / "calibration.csv", csv);
  std::cout << csv << "chosen I0: " << result.chosen_i0 << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opts, const std::string& method_filter,
              const std::string& mode_filter, const std::string& arm_filter) {
  const StudyConfig config = resolve_config(opts);
  std::optional<DenoiseMode> mode;
  std::optional<TrainCondition> arm;
  if (!mode_filter.empty()) mode = denoise_mode_from_string(mode_filter);
  if (!arm_filter.empty()) arm = train_condition_from_string(arm_filter);
  bool known = method_filter.empty();
  for (const auto& m : config.methods) known = known || m.name == method_filter;
  if (!known) throw ValidationError("unknown method '" + method_filter + "'");

  const StudyInputs in = prepare_study(config);
  const fs::path dir = config.output_dir / "models";
  ensure_dir(dir);
  std::string loss = "method,mode,train_condition,epoch,train_loss,validation_loss\n";
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const MethodSpec& method = config.methods[mi];
    if (!method_filter.empty() && method.name != method_filter) continue;
    for (DenoiseMode md : {DenoiseMode::Sinogram, DenoiseMode::EndToEnd}) {
      if (mode && *mode != md) continue;
      for (TrainCondition a : {TrainCondition::Simulated, TrainCondition::Surrogate}) {
        if (arm && *arm != a) continue;
        const TrainResult r = train(training_pairs(in, in.split.train, md, a),
                                    training_pairs(in, in.split.validation, md, a), config.train,
                                    method.architecture, a, md, model_seed(config, mi, md));
        const fs::path path = dir / model_file_name(method.name, md, a);
        save_model(path, r.model);
        for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
          loss += method.name + "," + to_string(md) + "," + to_string(a) + "," +
                  std::to_string(e + 1) + "," + format_value(r.train_loss[e]) + "," +
                  format_value(r.validation_loss[e]) + "\n";
        }
        std::cout << path.string() << ": best epoch " << r.best_epoch << ", validation loss "
                  << r.validation_loss[r.best_epoch - 1] << "\n";
      }
    }
  }
  write_file(config.output_dir / "training_loss.csv", loss);
  return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& model_path,
                 std::string method_name) {
  const StudyConfig config = resolve_config(opts);
  const DenoiserModel model = load_model(model_path);
  if (method_name.empty()) {
    for (const auto& m : config.methods) {
      if (fs::path(model_path).filename().string().rfind(m.name + "_", 0) == 0) method_name = m.name;
    }
    if (method_name.empty()) method_name = fs::path(model_path).stem().string();
  }
  const StudyInputs in = prepare_study(config);
  const auto scores = evaluate_model(config, method_name, model, in.suite, in.simulated,
                                     in.simulated_recon, in.split.test);
  StudyReport report;
  report.cells = aggregate_scores(scores);
  report.methods = {method_name};
  ensure_dir(config.output_dir);
  const fs::path csv = config.output_dir / (fs::path(model_path).stem().string() + "_evaluation.csv");
  write_file(csv, report_to_csv(report));
  std::vector<MetricRecord> records;
  for (const auto& s : scores) {
    records.push_back({slice_stem(s.slice) + "@" + to_string(s.test), to_string(s.block), s.metric, s.value});
  }
  write_metric_csv(config.output_dir / (fs::path(model_path).stem().string() + "_per_slice.csv"), records);
  std::cout << read_file(csv);
  return 0;
}

int cmd_study(const CommonOptions& opts) {
  const StudyConfig config = resolve_config(opts);
  ensure_dir(config.output_dir);
  write_file(config.output_dir / "config.cfg", config_to_text(config));
  const StudyReport report = run_study(config);
  emit_report(report, config.output_dir);
  std::cout << report_summary(report);
  return 0;
}

int cmd_report(const CommonOptions& opts, const std::string& report_path) {
  fs::path csv = report_path;
  fs::path dir = opts.out;
  if (csv.empty()) {
    if (dir.empty()) {
      if (opts.config.empty()) throw ValidationError("report needs --report, --out or --config");
      dir = resolve_config(opts).output_dir;
    }
    csv = dir / "study_report.csv";
  }
  if (dir.empty()) dir = csv.parent_path();
  if (!fs::exists(csv)) throw IoError("study report not found: " + csv.string());
  StudyReport report = report_from_csv(read_file(csv));
  ensure_dir(dir);
  for (EvalBlock block : {EvalBlock::Sinogram, EvalBlock::ReconOfOutput, EvalBlock::EndToEndOutput}) {
    write_file(dir / (std::string("block_") + to_string(block) + ".svg"), block_svg(report, block));
  }
  const std::string summary = report_summary(report);
  write_file(dir / "summary.txt", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sim2real_ct: simulated versus experimental-surrogate noise in learned CT denoising"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string method, mode, arm, model_path, report_path;

  auto* phantom = app.add_subcommand("phantom", "write the phantom suite (text + PGM)");
  auto* simulate = app.add_subcommand("simulate", "generate clean, simulated and surrogate datasets");
  auto* calibrate = app.add_subcommand("calibrate", "I0 sweep against the surrogate arm");
  auto* train_cmd = app.add_subcommand("train", "train denoisers on the study split");
  auto* evaluate = app.add_subcommand("evaluate", "score a model on both arms' test slices");
  auto* study = app.add_subcommand("study", "full calibration, training and evaluation study");
  auto* report = app.add_subcommand("report", "rebuild summary and plots from study_report.csv");

  for (auto* cmd : {phantom, simulate, calibrate, train_cmd, evaluate, study}) add_common(cmd, opts, true);
  add_common(report, opts, false);
  train_cmd->add_option("--method", method, "only this method");
  train_cmd->add_option("--mode", mode, "only this mode (sinogram | end-to-end)");
  train_cmd->add_option("--arm", arm, "only this train arm (simulated | experimental-surrogate)");
  evaluate->add_option("--model", model_path, "model file")->required();
  evaluate->add_option("--method", method, "method name for the report rows");
  report->add_option("--report", report_path, "study_report.csv to read");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return 1;
  }

  try {
    apply_threads(opts);
    if (*phantom) return cmd_phantom(opts);
    if (*simulate) return cmd_simulate(opts);
    if (*calibrate) return cmd_calibrate(opts);
    if (*train_cmd) return cmd_train(opts, method, mode, arm);
    if (*evaluate) return cmd_evaluate(opts, model_path, method);
    if (*study) return cmd_study(opts);
    if (*report) return cmd_report(opts, report_path);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
