#include "gazekit/pipeline.hpp"

#include "gazekit/csv_io.hpp"
#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"
#include "gazekit/synth.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace gazekit {

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

double config_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!parse_double(v, x) || !std::isfinite(x)) bad_config(key + ": expected a number, got '" + v + "'");
  return x;
}

long long config_int(const std::string& key, const std::string& v) {
  long long x = 0;
  if (!parse_int64(v, x)) bad_config(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::string_view ellipses_name(EyeballEllipses e) {
  switch (e) {
    case EyeballEllipses::Pupil: return "pupil";
    case EyeballEllipses::Iris: return "iris";
    case EyeballEllipses::Both: return "both";
  }
  return "pupil";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::pair<std::int64_t, std::int64_t> parse_frame_range(const std::string& text) {
  const auto colon = text.find(':');
  long long a = 0, b = 0;
  if (colon == std::string::npos || !parse_int64(std::string_view(text).substr(0, colon), a) ||
      !parse_int64(std::string_view(text).substr(colon + 1), b) || a > b || a < 0) {
    bad_config("frame range must look like A:B with 0 <= A <= B, got '" + text + "'");
  }
  return {a, b};
}

void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  const auto positive_int = [&](int& field) {
    const auto x = config_int(key, v);
    if (x < 1) bad_config(key + " must be >= 1");
    field = static_cast<int>(x);
  };
  if (key == "poly_degree") {
    positive_int(c.poly_degree);
  } else if (key == "best_fraction") {
    c.best_fraction = config_real(key, v);
    if (!(c.best_fraction > 0.0 && c.best_fraction <= 1.0)) bad_config("best_fraction must lie in (0, 1]");
  } else if (key == "window") {
    const auto x = config_int(key, v);
    if (x < 0) bad_config("window must be >= 0");
    c.window = static_cast<int>(x);
  } else if (key == "min_calibration_frames") {
    const auto x = config_int(key, v);
    if (x < 1) bad_config("min_calibration_frames must be >= 1");
    c.min_calibration_frames = static_cast<std::size_t>(x);
  } else if (key == "calib_range") {
    if (v.empty()) {
      c.calib_range.reset();
    } else {
      c.calib_range = parse_frame_range(v);
    }
  } else if (key == "blink_fraction") {
    c.blink_fraction = config_real(key, v);
  } else if (key == "saccade_threshold") {
    c.saccade_threshold = config_real(key, v);
  } else if (key == "pursuit_low") {
    c.pursuit_low = config_real(key, v);
  } else if (key == "depth_a") {
    c.depth.a = config_real(key, v);
  } else if (key == "depth_b") {
    c.depth.b = config_real(key, v);
  } else if (key == "depth_c") {
    c.depth.c = config_real(key, v);
  } else if (key == "depth_fit") {
    c.depth_fit = config_int(key, v) != 0;
  } else if (key == "depth_samples") {
    c.depth_samples = v;
  } else if (key == "seed") {
    const auto x = config_int(key, v);
    if (x < 0) bad_config("seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(x);
  } else if (key == "jobs") {
    positive_int(c.jobs);
  } else if (key == "nn_lr") {
    c.nn_lr = config_real(key, v);
  } else if (key == "nn_momentum") {
    c.nn_momentum = config_real(key, v);
  } else if (key == "nn_weight_decay") {
    c.nn_weight_decay = config_real(key, v);
  } else if (key == "nn_epochs") {
    positive_int(c.nn_epochs);
  } else if (key == "nn_stages") {
    positive_int(c.nn_stages);
  } else if (key == "nn_restarts") {
    positive_int(c.nn_restarts);
  } else if (key == "nn_hidden") {
    std::vector<int> layers;
    for (const auto& part : split_fields(v, ',')) {
      const auto x = config_int(key, trim(part));
      if (x < 1) bad_config("nn_hidden sizes must be >= 1");
      layers.push_back(static_cast<int>(x));
    }
    c.nn_hidden = layers;
  } else if (key == "eyeball_ellipses") {
    if (v == "pupil") c.eyeball_ellipses = EyeballEllipses::Pupil;
    else if (v == "iris") c.eyeball_ellipses = EyeballEllipses::Iris;
    else if (v == "both") c.eyeball_ellipses = EyeballEllipses::Both;
    else bad_config("eyeball_ellipses must be pupil, iris or both");
  } else if (key == "radius_method") {
    if (v == "foreshortening") c.radius_method = RadiusMethod::Foreshortening;
    else if (v == "percentile") c.radius_method = RadiusMethod::Percentile;
    else bad_config("radius_method must be foreshortening or percentile");
  } else if (key == "eyeball_model") {
    c.eyeball_model = v;
  } else if (key == "movement_model") {
    c.movement_model = v;
  } else {
    bad_config("unknown config key '" + key + "'");
  }
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad_config(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    apply_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "poly_degree=" << c.poly_degree << '\n'
     << "best_fraction=" << format_exact(c.best_fraction) << '\n'
     << "window=" << c.window << '\n'
     << "min_calibration_frames=" << c.min_calibration_frames << '\n'
     << "calib_range=" << (c.calib_range ? std::to_string(c.calib_range->first) + ":" + std::to_string(c.calib_range->second) : "")
     << '\n'
     << "blink_fraction=" << format_exact(c.blink_fraction) << '\n'
     << "saccade_threshold=" << format_exact(c.saccade_threshold) << '\n'
     << "pursuit_low=" << format_exact(c.pursuit_low) << '\n'
     << "depth_a=" << format_exact(c.depth.a) << '\n'
     << "depth_b=" << format_exact(c.depth.b) << '\n'
     << "depth_c=" << format_exact(c.depth.c) << '\n'
     << "depth_fit=" << (c.depth_fit ? 1 : 0) << '\n'
     << "depth_samples=" << c.depth_samples << '\n'
     << "seed=" << c.seed << '\n'
     << "jobs=" << c.jobs << '\n'
     << "nn_lr=" << format_exact(c.nn_lr) << '\n'
     << "nn_momentum=" << format_exact(c.nn_momentum) << '\n'
     << "nn_weight_decay=" << format_exact(c.nn_weight_decay) << '\n'
     << "nn_epochs=" << c.nn_epochs << '\n'
     << "nn_stages=" << c.nn_stages << '\n'
     << "nn_restarts=" << c.nn_restarts << '\n'
     << "nn_hidden=";
  for (std::size_t i = 0; i < c.nn_hidden.size(); ++i) os << (i ? "," : "") << c.nn_hidden[i];
  os << '\n'
     << "eyeball_ellipses=" << ellipses_name(c.eyeball_ellipses) << '\n'
     << "radius_method=" << (c.radius_method == RadiusMethod::Foreshortening ? "foreshortening" : "percentile") << '\n'
     << "eyeball_model=" << c.eyeball_model << '\n'
     << "movement_model=" << c.movement_model << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// process

namespace {

MLPTrainSettings mlp_settings(const PipelineConfig& c) {
  MLPTrainSettings s;
  s.lr = c.nn_lr;
  s.momentum = c.nn_momentum;
  s.weight_decay = c.nn_weight_decay;
  s.epochs_per_stage = c.nn_epochs;
  s.stages = c.nn_stages;
  s.restarts = c.nn_restarts;
  s.seed = c.seed;
  return s;
}

template <typename T>
T load_model(const std::string& path, const char* type) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read model " + path);
  const auto blocks = read_model_blocks(in);
  if (blocks.size() != 1 || blocks.front().type() != type) {
    throw Error(ErrorCode::ModelFormat, path + " does not hold a " + type + " model");
  }
  return T::from_block(blocks.front());
}

class StageRunner {
 public:
  template <typename Fn>
  auto run(const std::string& stage, std::size_t items, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, items, start);
      } else {
        auto result = fn();
        record(stage, items, start);
        return result;
      }
    } catch (const Error& e) {
      throw StageError(stage, e.code(), e.what());
    }
  }

  std::vector<StageTiming> timings;

 private:
  void record(const std::string& stage, std::size_t items, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    timings.push_back({stage, d.count(), items});
  }
};

std::vector<MovementRecord> classify_eye(Eye eye, std::span<const EyeFeatures> features, const PipelineConfig& config,
                                         const MovementClassifier* model) {
  std::vector<EyeState> states;
  states.reserve(features.size());
  for (const auto& f : features) states.push_back(to_eye_state(f));
  const ThresholdConfig thresholds{config.blink_fraction, config.saccade_threshold, config.pursuit_low};
  std::vector<MovementLabel> labels;
  if (model) {
    const auto motion = extract_motion_sequence(states);
    const double median = median_opening(states);
    for (std::size_t i = 0; i < states.size(); ++i) labels.push_back(model->classify(motion[i], states[i], median, thresholds));
  } else {
    labels = classify_sequence_threshold(states, thresholds);
  }
  std::vector<MovementRecord> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) out.push_back({eye, features[i].timestamp_ns, labels[i]});
  return out;
}

MarkerObservation scene_marker(const StreamFrame& frame) {
  const auto* det = frame.find_valid(LandmarkKind::Marker);
  if (!det) {
    MarkerObservation m;
    m.scene_frame_id = frame.frame_id;
    m.timestamp_ns = frame.timestamp_ns;
    return m;
  }
  return marker_from_landmarks(det->points, frame.timestamp_ns, frame.frame_id);
}

std::string accuracy_block(const ProcessResult& r) {
  std::ostringstream os;
  os << "# estimator,training_pairs,training_error_px,marker_error_all_px,rows_all,marker_error_nearest_px,"
        "rows_nearest,valid_gaze_pct,scene_frames_with_valid_pct\n";
  for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
    const auto& est = r.bank.estimators[i];
    os << EstimatorKey::from_index(i).name() << ',';
    if (est) {
      os << est->training_pairs << ',' << format_csv(est->training_error_px);
    } else {
      os << "absent,";
    }
    if (r.accuracy) {
      const auto& a = (*r.accuracy)[i];
      os << ',' << (a.count_all ? format_csv(a.mean_all) : "") << ',' << a.count_all << ','
         << (a.count_nearest ? format_csv(a.mean_nearest) : "") << ',' << a.count_nearest;
    } else {
      os << ",,,,";
    }
    os << ',' << format_csv(r.validity[i].valid_gaze_percent) << ','
       << format_csv(r.validity[i].scene_frames_with_valid_percent) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

std::string format_timings(const std::vector<StageTiming>& timings) {
  std::ostringstream os;
  double total = 0.0;
  for (const auto& t : timings) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-14s %10.3f ms  %8zu items\n", t.stage.c_str(), t.seconds * 1e3, t.items);
    os << buf;
    total += t.seconds;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-14s %10.3f ms\n", "total", total * 1e3);
  os << buf;
  return os.str();
}

ProcessResult run_process(const std::filesystem::path& project, const std::string& recording_id,
                          const PipelineConfig& config, const std::filesystem::path& out_dir) {
  ProcessResult result;
  StageRunner stages;
  const auto rec_dir = recording_dir(project, recording_id);

  Recording rec = stages.run("recording-io", 0, [&] { return load_recording(project, recording_id); });
  stages.timings.back().items = rec.left.size() + rec.right.size() + rec.scene.size();
  if (!rec.warnings.empty()) {
    result.warnings.push_back(std::to_string(rec.warnings.size()) + " malformed landmark rows (first: " +
                              std::string(to_string(rec.warnings.front().source)) + " line " +
                              std::to_string(rec.warnings.front().line) + ": " + rec.warnings.front().message + ")");
  }
  const auto& manifest = rec.manifest;
  const int jobs = config.jobs;

  std::vector<EyeFeatures> left(rec.left.size()), right(rec.right.size());
  stages.run("features", left.size() + right.size(), [&] {
    parallel_for(left.size(), jobs, [&](std::size_t i) { fill_ellipses(left[i], rec.left.frames[i]); });
    parallel_for(right.size(), jobs, [&](std::size_t i) { fill_ellipses(right[i], rec.right.frames[i]); });
  });

  stages.run("eyeball", left.size() + right.size(), [&] {
    std::optional<LearnedEyeballEstimator> learned;
    if (!config.eyeball_model.empty()) {
      learned = load_model<LearnedEyeballEstimator>(config.eyeball_model, "eyeball_mlp");
    }
    EyeballSettings settings;
    settings.ellipses = config.eyeball_ellipses;
    settings.geometric.radius_method = config.radius_method;
    settings.learned = learned ? &*learned : nullptr;
    for (auto* eye : {&left, &right}) {
      if (eye->empty()) continue;
      const EyeballModel model = estimate_recording_eyeball(*eye, manifest.eye_resolution, settings);
      if (model.low_confidence) {
        result.warnings.push_back(std::string(eye == &left ? "left" : "right") +
                                  " eyeball fit fell back to the image-centre model");
      }
      attach_optical_vectors(*eye, model);
    }
  });

  stages.run("opening", left.size() + right.size(), [&] {
    parallel_for(left.size(), jobs, [&](std::size_t i) { fill_opening(left[i], rec.left.frames[i]); });
    parallel_for(right.size(), jobs, [&](std::size_t i) { fill_opening(right[i], rec.right.frames[i]); });
  });

  std::vector<MovementRecord> movements = stages.run("movements", left.size() + right.size(), [&] {
    std::optional<MovementClassifier> model;
    if (!config.movement_model.empty()) model = load_model<MovementClassifier>(config.movement_model, "movement_mlp");
    auto out = classify_eye(Eye::Left, left, config, model ? &*model : nullptr);
    auto r = classify_eye(Eye::Right, right, config, model ? &*model : nullptr);
    out.insert(out.end(), r.begin(), r.end());
    return out;
  });

  const SyncResult sync =
      stages.run("sync", rec.scene.size(), [&] { return synchronize(rec.scene, rec.left, rec.right); });

  std::vector<MarkerObservation> markers;
  markers.reserve(rec.scene.size());
  for (const auto& f : rec.scene.frames) markers.push_back(scene_marker(f));
  const auto range = config.calib_range ? config.calib_range : manifest.calibration_range;

  result.bank = stages.run("calibration", 0, [&] {
    CalibrationSettings cs;
    cs.poly_degree = config.poly_degree;
    cs.best_fraction = config.best_fraction;
    cs.window = config.window;
    cs.min_candidates = config.min_calibration_frames;
    cs.range = range;
    const auto selection = select_calibration_pairs(markers, left, right, sync, manifest, cs);
    for (const auto& w : selection.warnings) result.warnings.push_back(w);
    for (const auto s : selection.step1) result.calibration_candidates.push_back(markers[s].scene_frame_id);
    BankSettings bs;
    bs.poly_degree = config.poly_degree;
    bs.mlp = mlp_settings(config);
    bs.hidden_layers = config.nn_hidden;
    bs.jobs = jobs;
    auto bank = fit_gaze_bank(selection, manifest, bs);
    return bank;
  });
  stages.timings.back().items = result.bank.fitted_count();
  for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
    if (!result.bank.estimators[i]) result.warnings.push_back(EstimatorKey::from_index(i).name() + " is absent");
  }

  // Gaze rows are driven by the left eye stream (right when the left is empty).
  const bool by_left = !left.empty();
  const auto& driver = by_left ? left : right;
  const auto& to_scene = by_left ? sync.left_to_scene : sync.right_to_scene;
  std::vector<GazeRecord> gaze(driver.size());
  std::vector<GazeEvalRow> eval(driver.size());
  stages.run("gaze", driver.size(), [&] {
    const auto other_ts = (by_left ? rec.right : rec.left).timestamps();
    parallel_for(driver.size(), jobs, [&](std::size_t i) {
      const std::size_t s = to_scene[i];
      const EyeFeatures* l = by_left ? &left[i] : nullptr;
      const EyeFeatures* r = by_left ? nullptr : &right[i];
      if (!other_ts.empty()) {
        const std::size_t j = nearest_index(other_ts, driver[i].timestamp_ns);
        (by_left ? r : l) = by_left ? &right[j] : &left[j];
      }
      GazeRecord& g = gaze[i];
      g.scene_frame_id = rec.scene.frames[s].frame_id;
      if (l) {
        g.left_frame_id = l->frame_id;
        g.left_timestamp_ns = l->timestamp_ns;
      }
      if (r) {
        g.right_frame_id = r->frame_id;
        g.right_timestamp_ns = r->timestamp_ns;
      }
      g.estimates = estimate_gaze(result.bank, l, r);
      GazeEvalRow& e = eval[i];
      e.scene_frame_id = g.scene_frame_id;
      const auto& near = sync.nearest[s];
      e.nearest = (by_left ? near.left_index : near.right_index) == i;
      const bool in_range = range && g.scene_frame_id >= range->first && g.scene_frame_id <= range->second;
      if (markers[s].valid && !in_range) e.truth = markers[s].center;
      e.estimates = g.estimates;
    });
  });
  result.gaze_rows = gaze.size();
  result.validity = validity_stats(eval);
  try {
    result.accuracy = accuracy_report(eval);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoEvaluationFrames) throw;
  }

  std::vector<DepthRecord> depth = stages.run("depth", rec.scene.size(), [&] {
    std::vector<DepthSample> samples;
    std::filesystem::path sample_path = config.depth_samples;
    if (sample_path.empty() && std::filesystem::exists(rec_dir / kDepthSamplesFile)) {
      sample_path = rec_dir / kDepthSamplesFile;
    }
    if (!sample_path.empty()) samples = read_depth_samples(sample_path);
    PowerLawDepth law = config.depth;
    if (config.depth_fit && samples.size() >= 4) law = fit_powerlaw(samples);
    std::vector<DepthRecord> out;
    out.reserve(markers.size());
    for (const auto& m : markers) {
      DepthRecord d;
      d.scene_frame_id = m.scene_frame_id;
      if (m.valid) {
        d.marker_area_px2 = m.area;
        d.depth_cm_powerlaw = depth_powerlaw(law, m.area);
        if (samples.size() >= 2) d.depth_cm_knn = depth_knn(samples, m.area);
      }
      out.push_back(d);
    }
    return out;
  });

  stages.run("csv", 0, [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());
    std::size_t rows = 0;
    rows += write_features_csv(out_dir / features_file_name(Eye::Left), left);
    rows += write_features_csv(out_dir / features_file_name(Eye::Right), right);
    rows += write_gaze_csv(out_dir / kGazeFile, gaze);
    rows += write_movements_csv(out_dir / kMovementsFile, movements);
    rows += write_depth_csv(out_dir / kDepthFile, depth);
    write_bank(out_dir / kBankFile, result.bank);
    write_text(out_dir / kConfigFile, format_config(config));
    return rows;
  });
  result.timings = stages.timings;

  std::ostringstream report;
  report << "# stage timings\n" << format_timings(result.timings) << "# gaze estimators\n" << accuracy_block(result);
  report << "# calibration candidates\n";
  if (!result.calibration_candidates.empty()) {
    report << "scene_frames," << result.calibration_candidates.front() << ',' << result.calibration_candidates.back()
           << ',' << result.calibration_candidates.size() << '\n';
  }
  report << "# warnings\n";
  for (const auto& w : result.warnings) report << w << '\n';
  try {
    write_text(out_dir / kReportFile, report.str());
  } catch (const Error& e) {
    throw StageError("csv", e.code(), e.what());
  }
  return result;
}

// ---------------------------------------------------------------------------
// synth / eval / training

void run_synth(const std::filesystem::path& script, const std::filesystem::path& out_dir) {
  try {
    const SceneScript s = script.empty() ? default_scene_script() : read_scene_script(script);
    write_synthetic_recording(out_dir, generate(s));
  } catch (const Error& e) {
    throw StageError("synth", e.code(), e.what());
  }
}

ScoreReport run_eval(const std::filesystem::path& out_dir, const std::filesystem::path& truth_dir) {
  try {
    const auto report = score_pipeline(read_pipeline_outputs(out_dir), read_ground_truth(truth_dir));
    write_text(out_dir / kEvalReportFile, report.to_text());
    return report;
  } catch (const Error& e) {
    throw StageError("eval", e.code(), e.what());
  }
}

void run_train_movements(const std::filesystem::path& labels, const std::filesystem::path& model_out,
                         const PipelineConfig& config) {
  try {
    const auto rows = read_label_csv(labels);
    MovementClassifier clf;
    clf.train(rows, mlp_settings(config));
    std::ofstream out(model_out);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + model_out.string());
    write_model_blocks(out, {clf.to_block()});
  } catch (const Error& e) {
    throw StageError("train-movements", e.code(), e.what());
  }
}

void run_train_eyeball(std::size_t scenes, const std::filesystem::path& model_out, const PipelineConfig& config) {
  try {
    const Resolution res{192, 192};
    const auto pairs = make_eyeball_training_set(scenes, res, config.seed);
    LearnedEyeballEstimator est(res);
    est.train(pairs, mlp_settings(config));
    std::ofstream out(model_out);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + model_out.string());
    write_model_blocks(out, {est.to_block()});
  } catch (const Error& e) {
    throw StageError("train-eyeball", e.code(), e.what());
  }
}

}  // namespace gazekit
