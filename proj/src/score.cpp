#include "gazekit/score.hpp"

#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gazekit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void misaligned(const std::string& what) { throw Error(ErrorCode::Misaligned, what); }

std::size_t idx(MovementLabel l) { return static_cast<std::size_t>(l); }

std::optional<EyeballScore> eyeball_score(std::span<const EyeFeatures> features, const EyeballModel& truth) {
  for (const auto& f : features) {
    if (!f.eyeball) continue;
    return EyeballScore{(f.eyeball->center - truth.center).norm(),
                        std::abs(f.eyeball->radius - truth.radius) / truth.radius};
  }
  return std::nullopt;
}

std::string num(double v) { return std::isnan(v) ? std::string("nan") : format_csv(v); }

}  // namespace

void ConfusionMatrix::add(MovementLabel truth, MovementLabel predicted) { ++counts[idx(truth)][idx(predicted)]; }

std::size_t ConfusionMatrix::total(MovementLabel truth) const {
  std::size_t n = 0;
  for (const auto c : counts[idx(truth)]) n += c;
  return n;
}

double ConfusionMatrix::class_accuracy(MovementLabel truth) const {
  const std::size_t n = total(truth);
  return n ? static_cast<double>(counts[idx(truth)][idx(truth)]) / static_cast<double>(n) : kNaN;
}

bool ConfusionMatrix::diagonal() const {
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j && counts[i][j] != 0) return false;
    }
  }
  return true;
}

ScoreReport score_pipeline(const PipelineOutputs& out, const GroundTruth& truth) {
  ScoreReport report;

  if (out.gaze.size() != truth.eye.size()) {
    misaligned("gaze rows (" + std::to_string(out.gaze.size()) + ") and truth eye frames (" +
               std::to_string(truth.eye.size()) + ") differ in count");
  }
  std::array<double, EstimatorKey::kCount> sum_all{}, sum_held{};
  for (std::size_t i = 0; i < out.gaze.size(); ++i) {
    const auto& row = out.gaze[i];
    const auto frame = row.left_frame_id ? row.left_frame_id : row.right_frame_id;
    if (!frame || *frame != truth.eye[i].frame_id) misaligned("gaze row " + std::to_string(i) + " has no matching eye frame");
    const bool held_out = !truth.calibration_range || row.scene_frame_id < truth.calibration_range->first ||
                          row.scene_frame_id > truth.calibration_range->second;
    for (std::size_t k = 0; k < EstimatorKey::kCount; ++k) {
      if (!row.estimates[k]) continue;
      const double e = (*row.estimates[k] - truth.eye[i].gaze).norm();
      sum_all[k] += e;
      ++report.gaze[k].rows_all;
      if (held_out) {
        sum_held[k] += e;
        ++report.gaze[k].rows_held_out;
      }
    }
  }
  for (std::size_t k = 0; k < EstimatorKey::kCount; ++k) {
    auto& g = report.gaze[k];
    g.mean_all = g.rows_all ? sum_all[k] / static_cast<double>(g.rows_all) : kNaN;
    g.mean_held_out = g.rows_held_out ? sum_held[k] / static_cast<double>(g.rows_held_out) : kNaN;
  }

  std::array<std::size_t, 2> seen{};
  for (const auto& m : out.movements) {
    const std::size_t e = m.eye == Eye::Left ? 0 : 1;
    const std::size_t i = seen[e]++;
    if (i >= truth.eye.size() || truth.eye[i].timestamp_ns != m.timestamp_ns) {
      misaligned(std::string(to_string(m.eye)) + " movement row " + std::to_string(i) + " does not match the truth");
    }
    const MovementLabel expected = e == 0 ? truth.eye[i].left_label : truth.eye[i].right_label;
    (e == 0 ? report.left_movements : report.right_movements).add(expected, m.label);
  }
  for (std::size_t e = 0; e < 2; ++e) {
    if (seen[e] != 0 && seen[e] != truth.eye.size()) misaligned("movement rows and truth eye frames differ in count");
  }

  if (!out.depth.empty()) {
    if (out.depth.size() != truth.scene.size()) misaligned("depth rows and truth scene frames differ in count");
    double pl = 0.0, knn = 0.0;
    std::size_t npl = 0, nknn = 0;
    for (std::size_t i = 0; i < out.depth.size(); ++i) {
      const auto& d = out.depth[i];
      if (d.scene_frame_id != truth.scene[i].scene_frame_id) misaligned("depth row " + std::to_string(i) + " is out of step");
      if (d.depth_cm_powerlaw) {
        pl += std::abs(*d.depth_cm_powerlaw - truth.scene[i].depth_cm);
        ++npl;
      }
      if (d.depth_cm_knn) {
        knn += std::abs(*d.depth_cm_knn - truth.scene[i].depth_cm);
        ++nknn;
      }
    }
    if (npl) report.depth_powerlaw_mae_cm = pl / static_cast<double>(npl);
    if (nknn) report.depth_knn_mae_cm = knn / static_cast<double>(nknn);
  }

  report.left_eyeball = eyeball_score(out.left_features, truth.left_eyeball);
  report.right_eyeball = eyeball_score(out.right_features, truth.right_eyeball);
  return report;
}

std::string ScoreReport::to_text() const {
  std::ostringstream os;
  os << "# gaze error (px): estimator,rows_all,mean_all,rows_held_out,mean_held_out\n";
  for (std::size_t k = 0; k < EstimatorKey::kCount; ++k) {
    const auto& g = gaze[k];
    os << "gaze," << EstimatorKey::from_index(k).name() << ',' << g.rows_all << ',' << num(g.mean_all) << ','
       << g.rows_held_out << ',' << num(g.mean_held_out) << '\n';
  }
  const auto matrix = [&](const char* eye, const ConfusionMatrix& m) {
    os << "# " << eye << " movements: truth,predicted counts (Fixation,Saccade,SmoothPursuit,Blink,Error),accuracy\n";
    for (const auto t : kAllMovementLabels) {
      os << "confusion_" << eye << ',' << to_string(t);
      for (const auto p : kAllMovementLabels) os << ',' << m.counts[idx(t)][idx(p)];
      os << ',' << num(m.class_accuracy(t)) << '\n';
    }
  };
  matrix("left", left_movements);
  matrix("right", right_movements);
  os << "depth_powerlaw_mae_cm," << (depth_powerlaw_mae_cm ? num(*depth_powerlaw_mae_cm) : "") << '\n';
  os << "depth_knn_mae_cm," << (depth_knn_mae_cm ? num(*depth_knn_mae_cm) : "") << '\n';
  const auto ball = [&](const char* eye, const std::optional<EyeballScore>& s) {
    os << "eyeball_" << eye << "_center_error_px," << (s ? num(s->center_error_px) : "") << '\n';
    os << "eyeball_" << eye << "_radius_relative_error," << (s ? num(s->radius_relative_error) : "") << '\n';
  };
  ball("left", left_eyeball);
  ball("right", right_eyeball);
  return os.str();
}

PipelineOutputs read_pipeline_outputs(const std::filesystem::path& dir) {
  PipelineOutputs out;
  out.gaze = read_gaze_csv(dir / kGazeFile);
  out.movements = read_movements_csv(dir / kMovementsFile);
  out.depth = read_depth_csv(dir / kDepthFile);
  if (std::filesystem::exists(dir / features_file_name(Eye::Left))) {
    out.left_features = read_features_csv(dir / features_file_name(Eye::Left));
  }
  if (std::filesystem::exists(dir / features_file_name(Eye::Right))) {
    out.right_features = read_features_csv(dir / features_file_name(Eye::Right));
  }
  return out;
}

}  // namespace gazekit
