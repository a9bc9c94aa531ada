#include "gazekit/calibration.hpp"

#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace gazekit {

// ---------------------------------------------------------------------------
// Synchronization

std::size_t nearest_index(std::span<const std::int64_t> timestamps, std::int64_t t) {
  if (timestamps.empty()) throw Error(ErrorCode::EmptyStream, "cannot pick a frame from an empty stream");
  const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.begin()) return 0;
  if (it == timestamps.end()) return timestamps.size() - 1;
  const auto after = static_cast<std::size_t>(it - timestamps.begin());
  const std::size_t before = after - 1;
  // Earlier frame wins ties.
  return (t - timestamps[before] <= timestamps[after] - t) ? before : after;
}

namespace {

std::vector<std::int64_t> frame_ids(const Stream& s) {
  std::vector<std::int64_t> ids;
  ids.reserve(s.frames.size());
  for (const auto& f : s.frames) ids.push_back(f.frame_id);
  return ids;
}

std::vector<std::size_t> map_to_scene(std::span<const std::int64_t> eye_ts, std::span<const std::int64_t> scene_ts) {
  std::vector<std::size_t> out;
  out.reserve(eye_ts.size());
  for (const auto t : eye_ts) out.push_back(nearest_index(scene_ts, t));
  return out;
}

}  // namespace

SyncResult synchronize(std::span<const std::int64_t> scene_ts, std::span<const std::int64_t> left_ts,
                       std::span<const std::int64_t> right_ts, std::span<const std::int64_t> scene_ids,
                       std::span<const std::int64_t> left_ids, std::span<const std::int64_t> right_ids) {
  if (scene_ts.empty()) throw Error(ErrorCode::EmptyStream, "scene stream is empty");
  if (left_ts.empty() && right_ts.empty()) throw Error(ErrorCode::EmptyStream, "both eye streams are empty");
  const auto id_of = [](std::span<const std::int64_t> ids, std::size_t i) {
    return i < ids.size() ? ids[i] : static_cast<std::int64_t>(i);
  };

  SyncResult result;
  result.nearest.reserve(scene_ts.size());
  for (std::size_t s = 0; s < scene_ts.size(); ++s) {
    SyncAssignment a;
    a.scene_index = s;
    a.scene_frame_id = id_of(scene_ids, s);
    if (!left_ts.empty()) {
      const std::size_t i = nearest_index(left_ts, scene_ts[s]);
      a.left_index = i;
      a.left_eye_frame_id = id_of(left_ids, i);
      a.left_offset_ns = left_ts[i] - scene_ts[s];
    }
    if (!right_ts.empty()) {
      const std::size_t i = nearest_index(right_ts, scene_ts[s]);
      a.right_index = i;
      a.right_eye_frame_id = id_of(right_ids, i);
      a.right_offset_ns = right_ts[i] - scene_ts[s];
    }
    result.nearest.push_back(a);
  }
  result.left_to_scene = map_to_scene(left_ts, scene_ts);
  result.right_to_scene = map_to_scene(right_ts, scene_ts);
  return result;
}

SyncResult synchronize(const Stream& scene, const Stream& left, const Stream& right) {
  const auto st = scene.timestamps();
  const auto lt = left.timestamps();
  const auto rt = right.timestamps();
  const auto si = frame_ids(scene);
  const auto li = frame_ids(left);
  const auto ri = frame_ids(right);
  return synchronize(st, lt, rt, si, li, ri);
}

// ---------------------------------------------------------------------------
// Feature recipes

std::optional<Eigen::VectorXd> eye_feature_vector(const EyeFeatures& eye, FeatureKind feature,
                                                  Resolution eye_resolution) {
  const double w = eye_resolution.width;
  const double h = eye_resolution.height;
  const auto centre = [&](const std::optional<Ellipse>& e) -> std::optional<Eigen::VectorXd> {
    if (!e) return std::nullopt;
    Eigen::VectorXd v(2);
    v << e->center.x() / w, e->center.y() / h;
    return v;
  };
  const auto vector = [&](const std::optional<Eigen::Vector3d>& u) -> std::optional<Eigen::VectorXd> {
    if (!u || !eye.eyeball) return std::nullopt;
    Eigen::VectorXd v(5);
    v << eye.eyeball->center.x() / w, eye.eyeball->center.y() / h, u->x(), u->y(), u->z();
    return v;
  };
  switch (feature) {
    case FeatureKind::PC: return centre(eye.pupil);
    case FeatureKind::IC: return centre(eye.iris);
    case FeatureKind::PV: return vector(eye.pupil_vector);
    case FeatureKind::IV: return vector(eye.iris_vector);
  }
  return std::nullopt;
}

std::optional<Eigen::VectorXd> combo_feature_vector(const EyeFeatures* left, const EyeFeatures* right,
                                                    FeatureKind feature, Combo combo, Resolution eye_resolution) {
  switch (combo) {
    case Combo::Left:
      return left ? eye_feature_vector(*left, feature, eye_resolution) : std::nullopt;
    case Combo::Right:
      return right ? eye_feature_vector(*right, feature, eye_resolution) : std::nullopt;
    case Combo::Binocular: {
      if (!left || !right) return std::nullopt;
      const auto l = eye_feature_vector(*left, feature, eye_resolution);
      const auto r = eye_feature_vector(*right, feature, eye_resolution);
      if (!l || !r) return std::nullopt;
      Eigen::VectorXd v(l->size() + r->size());
      v << *l, *r;
      return v;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Calibration data selection

std::vector<bool> window_filter(const std::vector<bool>& valid, int window) {
  const auto n = static_cast<long long>(valid.size());
  const long long w = std::max(window, 0);
  std::vector<bool> keep(valid.size(), false);
  // run[i]: length of the valid run ending at i.
  std::vector<long long> run(valid.size(), 0);
  for (long long i = 0; i < n; ++i) run[i] = valid[i] ? (i > 0 ? run[i - 1] : 0) + 1 : 0;
  for (long long i = w; i + w < n; ++i) keep[i] = run[i + w] >= 2 * w + 1;
  return keep;
}

std::vector<std::size_t> keep_best_fraction(std::span<const double> errors, double fraction) {
  std::vector<std::size_t> order(errors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] < errors[b]; });
  const double want = std::ceil(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(errors.size()) - 1e-9);
  order.resize(static_cast<std::size_t>(std::max(want, 0.0)));
  return order;
}

const std::vector<CalibrationPair>& CalibrationSelection::pairs_for(FeatureKind feature, Combo combo) const {
  return pairs[static_cast<std::size_t>(feature) * 3 + static_cast<std::size_t>(combo)];
}

namespace {

struct EyeLookup {
  std::span<const EyeFeatures> left;
  std::span<const EyeFeatures> right;

  std::pair<const EyeFeatures*, const EyeFeatures*> at(const SyncAssignment& a) const {
    const EyeFeatures* l = (a.left_index && *a.left_index < left.size()) ? &left[*a.left_index] : nullptr;
    const EyeFeatures* r = (a.right_index && *a.right_index < right.size()) ? &right[*a.right_index] : nullptr;
    return {l, r};
  }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

CalibrationSelection select_calibration_pairs(std::span<const MarkerObservation> markers,
                                              std::span<const EyeFeatures> left, std::span<const EyeFeatures> right,
                                              const SyncResult& sync, const RecordingManifest& manifest,
                                              const CalibrationSettings& settings) {
  if (markers.size() != sync.nearest.size()) {
    throw Error(ErrorCode::DimMismatch, "marker list and synchronization differ in length");
  }
  const auto range = settings.range ? settings.range : manifest.calibration_range;
  const EyeLookup eyes{left, right};
  const double sw = manifest.scene_resolution.width;
  const double sh = manifest.scene_resolution.height;
  if (sw <= 0 || sh <= 0) throw Error(ErrorCode::InvalidConfig, "scene resolution must be positive");

  CalibrationSelection sel;
  std::vector<bool> valid(markers.size(), false);
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const auto& m = markers[i];
    if (!m.valid) continue;
    if (range && (m.scene_frame_id < range->first || m.scene_frame_id > range->second)) continue;
    valid[i] = true;
    sel.step1.push_back(i);
  }
  if (sel.step1.size() < settings.min_candidates) {
    throw Error(ErrorCode::CalibrationTooSmall, std::to_string(sel.step1.size()) +
                                                    " scene frames with a valid marker, need " +
                                                    std::to_string(settings.min_candidates));
  }
  const auto keep = window_filter(valid, settings.window);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) sel.step2.push_back(i);
  }
  if (sel.step2.empty()) throw Error(ErrorCode::CalibrationTooSmall, "no scene frame survives the window filter");

  for (const Combo combo : kCombos) {
    auto& cs = sel.combos[static_cast<std::size_t>(combo)];
    std::vector<std::size_t> scene_idx;
    std::vector<Eigen::VectorXd> inputs;
    for (const std::size_t s : sel.step2) {
      const auto [l, r] = eyes.at(sync.nearest[s]);
      auto v = combo_feature_vector(l, r, FeatureKind::PC, combo, manifest.eye_resolution);
      if (!v) continue;
      scene_idx.push_back(s);
      inputs.push_back(std::move(*v));
    }
    for (const auto s : scene_idx) cs.candidate_frames.push_back(markers[s].scene_frame_id);
    if (scene_idx.empty()) continue;

    Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), inputs.front().size());
    Eigen::MatrixXd y(x.rows(), 2);
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      x.row(k) = inputs[static_cast<std::size_t>(k)].transpose();
      const Point2& t = markers[scene_idx[static_cast<std::size_t>(k)]].center;
      y.row(k) << t.x() / sw, t.y() / sh;
    }
    const PolynomialFit fit = fit_polynomial(x, y, settings.poly_degree, settings.lm);
    cs.provisional = fit.model;
    std::vector<double> errors(scene_idx.size());
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      const Eigen::VectorXd p = poly_eval(fit.model, x.row(k).transpose());
      errors[static_cast<std::size_t>(k)] = std::hypot((p[0] - y(k, 0)) * sw, (p[1] - y(k, 1)) * sh);
    }
    auto kept = keep_best_fraction(errors, settings.best_fraction);
    std::vector<bool> is_kept(errors.size(), false);
    for (const auto k : kept) is_kept[k] = true;
    std::vector<std::size_t> kept_sorted;
    for (std::size_t k = 0; k < errors.size(); ++k) {
      if (is_kept[k]) {
        kept_sorted.push_back(k);
        cs.kept_frames.push_back(markers[scene_idx[k]].scene_frame_id);
        cs.kept_errors.push_back(errors[k]);
      } else {
        cs.dropped_frames.push_back(markers[scene_idx[k]].scene_frame_id);
        cs.dropped_errors.push_back(errors[k]);
      }
    }
    if (!cs.dropped_errors.empty()) {
      const double med = std::max(median_of(cs.kept_errors), 1.0);
      const double ratio =
          *std::min_element(cs.dropped_errors.begin(), cs.dropped_errors.end()) / med;
      if (ratio > settings.outlier_warning_ratio) {
        sel.warnings.push_back(std::string(to_string(combo)) + ": every dropped calibration frame is more than " +
                               format_csv(settings.outlier_warning_ratio) +
                               "x the kept median error; more marker detections may be wrong");
      }
    }

    for (const FeatureKind feature : kFeatureKinds) {
      auto& out = sel.pairs[static_cast<std::size_t>(feature) * 3 + static_cast<std::size_t>(combo)];
      for (const auto k : kept_sorted) {
        const std::size_t s = scene_idx[k];
        const auto [l, r] = eyes.at(sync.nearest[s]);
        auto v = combo_feature_vector(l, r, feature, combo, manifest.eye_resolution);
        if (!v) continue;
        out.push_back(CalibrationPair{std::move(*v), markers[s].center, markers[s].scene_frame_id});
      }
    }
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Gaze estimators

Point2 GazeEstimator::predict(const Eigen::VectorXd& features) const {
  const double sw = scene_resolution.width;
  const double sh = scene_resolution.height;
  if (polynomial) {
    const Eigen::VectorXd p = poly_eval(*polynomial, features);
    return {p[0] * sw, p[1] * sh};
  }
  if (mlp) {
    if (features.size() != input_mean.size()) throw Error(ErrorCode::DimMismatch, "feature dimension mismatch");
    const Eigen::VectorXd z = (features - input_mean).cwiseQuotient(input_scale);
    const Eigen::VectorXd o = mlp_eval(*mlp, z);
    return {(o[0] * output_scale[0] + output_mean[0]) * sw, (o[1] * output_scale[1] + output_mean[1]) * sh};
  }
  throw Error(ErrorCode::NotTrained, "estimator " + key.name() + " holds no model");
}

std::size_t GazeEstimatorBank::fitted_count() const {
  return static_cast<std::size_t>(std::count_if(estimators.begin(), estimators.end(),
                                                [](const auto& e) { return e.has_value(); }));
}

namespace {

void standardize(const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  mean = m.colwise().mean().transpose();
  scale.resize(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - mean[c]).square().mean();
    const double sd = std::sqrt(var);
    scale[c] = sd > 1e-12 ? sd : 1.0;
  }
}

std::uint64_t estimator_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 step so neighbouring estimators get unrelated streams
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::optional<GazeEstimator> fit_one(const EstimatorKey& key, const std::vector<CalibrationPair>& pairs,
                                     Resolution scene, const BankSettings& settings) {
  if (pairs.empty()) return std::nullopt;
  const double sw = scene.width;
  const double sh = scene.height;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd x(n, pairs.front().features.size());
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    x.row(i) = p.features.transpose();
    y.row(i) << p.target.x() / sw, p.target.y() / sh;
  }

  GazeEstimator est;
  est.key = key;
  est.scene_resolution = scene;
  est.training_pairs = pairs.size();
  try {
    if (key.method == Method::LM) {
      est.polynomial = fit_polynomial(x, y, settings.poly_degree, settings.lm).model;
    } else {
      standardize(x, est.input_mean, est.input_scale);
      Eigen::VectorXd om, os;
      standardize(y, om, os);
      est.output_mean = om;
      est.output_scale = os;
      MLPDataset data;
      data.inputs = (x.rowwise() - est.input_mean.transpose()).array().rowwise() / est.input_scale.transpose().array();
      data.targets = (y.rowwise() - om.transpose()).array().rowwise() / os.transpose().array();
      std::vector<int> layers{static_cast<int>(x.cols())};
      layers.insert(layers.end(), settings.hidden_layers.begin(), settings.hidden_layers.end());
      layers.push_back(2);
      MLPTrainSettings ts = settings.mlp;
      ts.seed = estimator_seed(settings.mlp.seed, key.index());
      est.mlp = mlp_train(layers, OutputActivation::Identity, data, ts).model;
    }
  } catch (const Error&) {
    return std::nullopt;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = est.predict(x.row(i).transpose());
    if (!p.allFinite()) return std::nullopt;
    total += (p - pairs[static_cast<std::size_t>(i)].target).norm();
  }
  est.training_error_px = total / static_cast<double>(n);
  return est;
}

}  // namespace

GazeEstimatorBank fit_gaze_bank(const CalibrationSelection& selection, const RecordingManifest& manifest,
                                const BankSettings& settings) {
  GazeEstimatorBank bank;
  bank.eye_resolution = manifest.eye_resolution;
  bank.scene_resolution = manifest.scene_resolution;
  parallel_for(EstimatorKey::kCount, settings.jobs, [&](std::size_t i) {
    const EstimatorKey key = EstimatorKey::from_index(i);
    if (key.method == Method::LM && !settings.fit_lm) return;
    if (key.method == Method::NN && !settings.fit_nn) return;
    bank.estimators[i] = fit_one(key, selection.pairs_for(key.feature, key.combo), bank.scene_resolution, settings);
  });
  return bank;
}

GazeEstimates estimate_gaze(const GazeEstimatorBank& bank, const EyeFeatures* left, const EyeFeatures* right) {
  GazeEstimates out;
  for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
    const auto& est = bank.estimators[i];
    if (!est) continue;
    const auto v = combo_feature_vector(left, right, est->key.feature, est->key.combo, bank.eye_resolution);
    if (!v) continue;
    const Point2 p = est->predict(*v);
    if (p.allFinite()) out[i] = p;
  }
  return out;
}

void write_bank(const std::filesystem::path& path, const GazeEstimatorBank& bank) {
  std::vector<ModelBlock> blocks;
  ModelBlock head("gaze_bank");
  head.set("eye_width", static_cast<long long>(bank.eye_resolution.width));
  head.set("eye_height", static_cast<long long>(bank.eye_resolution.height));
  head.set("scene_width", static_cast<long long>(bank.scene_resolution.width));
  head.set("scene_height", static_cast<long long>(bank.scene_resolution.height));
  blocks.push_back(head);
  for (const auto& est : bank.estimators) {
    if (!est) continue;
    ModelBlock b("gaze_estimator");
    b.set("key", est->key.name());
    b.set("training_pairs", static_cast<long long>(est->training_pairs));
    b.set("training_error_px", est->training_error_px);
    if (est->polynomial) {
      const ModelBlock poly = polynomial_to_block(*est->polynomial);
      for (const auto& [k, v] : poly.entries()) b.set("poly_" + k, v);
    } else if (est->mlp) {
      mlp_to_block(*est->mlp, b, "nn_");
      b.set("input_mean", est->input_mean);
      b.set("input_scale", est->input_scale);
      b.set("output_mean", Eigen::VectorXd(est->output_mean));
      b.set("output_scale", Eigen::VectorXd(est->output_scale));
    }
    blocks.push_back(std::move(b));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_model_blocks(out, blocks);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

GazeEstimatorBank read_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  const auto blocks = read_model_blocks(in);
  if (blocks.empty() || blocks.front().type() != "gaze_bank") {
    throw Error(ErrorCode::ModelFormat, path.string() + " is not a gaze estimator bank");
  }
  GazeEstimatorBank bank;
  const auto& head = blocks.front();
  bank.eye_resolution = {static_cast<int>(head.get_int("eye_width")), static_cast<int>(head.get_int("eye_height"))};
  bank.scene_resolution = {static_cast<int>(head.get_int("scene_width")),
                           static_cast<int>(head.get_int("scene_height"))};
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.type() != "gaze_estimator") throw Error(ErrorCode::ModelFormat, "unexpected block " + b.type());
    const auto key = EstimatorKey::parse(b.get("key"));
    if (!key) throw Error(ErrorCode::ModelFormat, "unknown estimator " + b.get("key"));
    GazeEstimator est;
    est.key = *key;
    est.scene_resolution = bank.scene_resolution;
    est.training_pairs = static_cast<std::size_t>(b.get_int("training_pairs"));
    est.training_error_px = b.get_real("training_error_px");
    if (key->method == Method::LM) {
      ModelBlock poly("polynomial");
      for (const auto& [k, v] : b.entries()) {
        if (k.rfind("poly_", 0) == 0) poly.set(k.substr(5), v);
      }
      est.polynomial = polynomial_from_block(poly);
    } else {
      est.mlp = mlp_from_block(b, "nn_");
      est.input_mean = b.get_reals("input_mean");
      est.input_scale = b.get_reals("input_scale");
      const Eigen::VectorXd om = b.get_reals("output_mean");
      const Eigen::VectorXd os = b.get_reals("output_scale");
      if (om.size() != 2 || os.size() != 2) throw Error(ErrorCode::ModelFormat, "output scaling must have 2 entries");
      est.output_mean = om;
      est.output_scale = os;
    }
    bank.estimators[key->index()] = std::move(est);
  }
  return bank;
}

// ---------------------------------------------------------------------------
// Evaluation

std::array<EstimatorAccuracy, EstimatorKey::kCount> accuracy_report(std::span<const GazeEvalRow> rows) {
  std::array<EstimatorAccuracy, EstimatorKey::kCount> acc{};
  bool any_truth = false;
  for (const auto& row : rows) {
    if (!row.truth) continue;
    any_truth = true;
    for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
      if (!row.estimates[i]) continue;
      const double e = (*row.estimates[i] - *row.truth).norm();
      acc[i].mean_all += e;
      ++acc[i].count_all;
      if (row.nearest) {
        acc[i].mean_nearest += e;
        ++acc[i].count_nearest;
      }
    }
  }
  if (!any_truth) throw Error(ErrorCode::NoEvaluationFrames, "no gaze rows carry a ground-truth target");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& a : acc) {
    a.mean_all = a.count_all ? a.mean_all / static_cast<double>(a.count_all) : nan;
    a.mean_nearest = a.count_nearest ? a.mean_nearest / static_cast<double>(a.count_nearest) : nan;
  }
  return acc;
}

std::array<ValidityStats, EstimatorKey::kCount> validity_stats(std::span<const GazeEvalRow> rows) {
  std::array<ValidityStats, EstimatorKey::kCount> stats{};
  if (rows.empty()) return stats;
  for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
    std::size_t valid = 0;
    std::map<std::int64_t, bool> scenes;
    for (const auto& row : rows) {
      const bool ok = row.estimates[i].has_value();
      valid += ok ? 1 : 0;
      auto [it, inserted] = scenes.emplace(row.scene_frame_id, ok);
      if (!inserted) it->second = it->second || ok;
    }
    const auto with_valid = std::count_if(scenes.begin(), scenes.end(), [](const auto& kv) { return kv.second; });
    stats[i].valid_gaze_percent = 100.0 * static_cast<double>(valid) / static_cast<double>(rows.size());
    stats[i].scene_frames_with_valid_percent =
        100.0 * static_cast<double>(with_valid) / static_cast<double>(scenes.size());
  }
  return stats;
}

}  // namespace gazekit
