#include "gazekit/error.hpp"
#include "gazekit/pipeline.hpp"
#include "gazekit/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace gazekit;

// defaults < config file < flags
PipelineConfig resolve_config(const std::string& file, const std::vector<std::string>& sets) {
  PipelineConfig config;
  if (!file.empty()) apply_config_file(config, file);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    apply_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void print_summary(const ProcessResult& r) {
  std::cout << "stage timings\n" << format_timings(r.timings);
  std::cout << "gaze rows: " << r.gaze_rows << ", estimators fitted: " << r.bank.fitted_count() << "/"
            << EstimatorKey::kCount << '\n';
  if (r.accuracy) {
    std::cout << "held-out marker error (px), all rows / nearest frame:\n";
    for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
      const auto& a = (*r.accuracy)[i];
      if (!a.count_all) continue;
      std::printf("  %-18s %9.3f %9.3f\n", EstimatorKey::from_index(i).name().c_str(), a.mean_all, a.mean_nearest);
    }
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazekit: eye-tracking post-processing from landmark detections"};
  app.require_subcommand(1);

  std::string project, recording, config_file, calib_range, out_dir;
  std::vector<std::string> sets;
  int jobs = 0;
  long long seed = -1;
  auto* process = app.add_subcommand("process", "run the full workflow over one recording");
  process->add_option("--project", project, "project directory")->required();
  process->add_option("--recording", recording, "recording id (sub-directory of the project)")->required();
  process->add_option("--calib-range", calib_range, "calibration scene frames A:B (inclusive)");
  process->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
  process->add_option("--set", sets, "override one config key (key=value), repeatable");
  process->add_option("--jobs", jobs, "worker threads for per-frame stages")->check(CLI::PositiveNumber);
  process->add_option("--seed", seed, "seed for network training")->check(CLI::NonNegativeNumber);
  process->add_option("--out", out_dir, "output directory")->required();

  std::string script, synth_out;
  bool print_script = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic recording with ground truth");
  synth->add_option("--script", script, "scene script (built-in 10 s script when omitted)")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "recording directory to create");
  synth->add_flag("--print-default-script", print_script, "print the built-in script and exit");

  std::string eval_out, truth_dir;
  auto* eval = app.add_subcommand("eval", "score process outputs against synthetic ground truth");
  eval->add_option("--out", eval_out, "directory written by process")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--truth", truth_dir, "synthetic recording directory")->required()->check(CLI::ExistingDirectory);

  std::string labels, model_out;
  auto* train_mov = app.add_subcommand("train-movements", "train the movement classifier from labelled motion");
  train_mov->add_option("--labels", labels, "labelled CSV")->required()->check(CLI::ExistingFile);
  train_mov->add_option("--out", model_out, "model file")->required();
  train_mov->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
  train_mov->add_option("--set", sets, "override one config key (key=value), repeatable");

  std::size_t scenes = 2000;
  auto* train_eye = app.add_subcommand("train-eyeball", "train the learned eyeball estimator on generated eyeballs");
  train_eye->add_option("--scenes", scenes, "generated training eyeballs")->check(CLI::PositiveNumber);
  train_eye->add_option("--out", model_out, "model file")->required();
  train_eye->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
  train_eye->add_option("--set", sets, "override one config key (key=value), repeatable");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*process) {
      PipelineConfig config = resolve_config(config_file, sets);
      if (!calib_range.empty()) config.calib_range = parse_frame_range(calib_range);
      if (jobs > 0) config.jobs = jobs;
      if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
      print_summary(run_process(project, recording, config, out_dir));
    } else if (*synth) {
      if (print_script) {
        std::cout << format_scene_script(default_scene_script());
        return 0;
      }
      if (synth_out.empty()) throw Error(ErrorCode::InvalidConfig, "synth needs --out");
      run_synth(script, synth_out);
      std::cout << "wrote " << synth_out << '\n';
    } else if (*eval) {
      std::cout << run_eval(eval_out, truth_dir).to_text();
    } else if (*train_mov) {
      run_train_movements(labels, model_out, resolve_config(config_file, sets));
    } else if (*train_eye) {
      run_train_eyeball(scenes, model_out, resolve_config(config_file, sets));
    }
  } catch (const StageError& e) {
    std::cerr << "gazekit: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "gazekit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
