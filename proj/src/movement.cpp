#include "gazekit/movement.hpp"

#include "gazekit/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace gazekit {

namespace {

constexpr std::array<MovementLabel, 4> kNetworkClasses = {MovementLabel::Fixation, MovementLabel::Saccade,
                                                          MovementLabel::SmoothPursuit, MovementLabel::Blink};

int class_index(MovementLabel label) {
  for (std::size_t i = 0; i < kNetworkClasses.size(); ++i) {
    if (kNetworkClasses[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

std::string_view to_string(MovementLabel label) {
  switch (label) {
    case MovementLabel::Fixation: return "Fixation";
    case MovementLabel::Saccade: return "Saccade";
    case MovementLabel::SmoothPursuit: return "SmoothPursuit";
    case MovementLabel::Blink: return "Blink";
    case MovementLabel::Error: return "Error";
  }
  return "?";
}

std::optional<MovementLabel> parse_movement_label(std::string_view text) {
  for (auto l : kAllMovementLabels) {
    if (text == to_string(l)) return l;
  }
  return std::nullopt;
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

MotionFeatures extract_motion_features(const EyeState* previous, const EyeState& current) {
  MotionFeatures f;
  if (!previous) {
    f.pupil_valid = current.pupil_vector.has_value();
    f.iris_valid = current.iris_vector.has_value();
    f.opening_valid = current.opening.has_value();
    return f;
  }
  if (previous->pupil_vector && current.pupil_vector) {
    f.pupil_valid = true;
    f.pupil_angle_delta = angle_between(*previous->pupil_vector, *current.pupil_vector);
  }
  if (previous->iris_vector && current.iris_vector) {
    f.iris_valid = true;
    f.iris_angle_delta = angle_between(*previous->iris_vector, *current.iris_vector);
  }
  if (previous->opening && current.opening) {
    f.opening_valid = true;
    f.opening_delta = *current.opening - *previous->opening;
  }
  return f;
}

std::vector<MotionFeatures> extract_motion_sequence(std::span<const EyeState> frames) {
  std::vector<MotionFeatures> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.push_back(extract_motion_features(i == 0 ? nullptr : &frames[i - 1], frames[i]));
  }
  return out;
}

double median_opening(std::span<const EyeState> frames) {
  std::vector<double> values;
  for (const auto& f : frames) {
    if (f.opening) values.push_back(*f.opening);
  }
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

bool is_error_frame(const EyeState& current, double median, const ThresholdConfig& config) {
  if (current.pupil_vector || current.iris_vector) return false;
  if (!current.opening) return true;
  return *current.opening > config.blink_fraction * median;
}

MovementLabel classify_threshold(const MotionFeatures& features, const EyeState& current, double median,
                                 const ThresholdConfig& config) {
  if (is_error_frame(current, median, config)) return MovementLabel::Error;
  if (current.opening && *current.opening < config.blink_fraction * median) return MovementLabel::Blink;
  if (!current.pupil_vector && !current.iris_vector) return MovementLabel::Blink;

  double sum = 0.0;
  int count = 0;
  if (features.pupil_valid) {
    sum += features.pupil_angle_delta;
    ++count;
  }
  if (features.iris_valid) {
    sum += features.iris_angle_delta;
    ++count;
  }
  const double velocity = count > 0 ? sum / count : 0.0;
  if (velocity > config.saccade_threshold) return MovementLabel::Saccade;
  if (velocity > config.pursuit_low) return MovementLabel::SmoothPursuit;
  return MovementLabel::Fixation;
}

std::vector<MovementLabel> classify_sequence_threshold(std::span<const EyeState> frames,
                                                       const ThresholdConfig& config) {
  const double median = median_opening(frames);
  const auto features = extract_motion_sequence(frames);
  std::vector<MovementLabel> labels;
  labels.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    labels.push_back(classify_threshold(features[i], frames[i], median, config));
  }
  return labels;
}

std::vector<LabeledMotion> read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<LabeledMotion> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    const auto f = split_csv(line);
    long long ts = 0;
    const auto label = f.size() == 5 ? parse_movement_label(f[4]) : std::nullopt;
    if (!label || !parse_int64(f[0], ts)) {
      throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(line_no));
    }
    LabeledMotion row;
    row.timestamp_ns = ts;
    row.label = *label;
    const auto cell = [&](const std::string& text, double& value, bool& valid) {
      valid = !text.empty();
      if (valid && !parse_double(text, value)) {
        throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(line_no));
      }
    };
    cell(f[1], row.features.pupil_angle_delta, row.features.pupil_valid);
    cell(f[2], row.features.iris_angle_delta, row.features.iris_valid);
    cell(f[3], row.features.opening_delta, row.features.opening_valid);
    rows.push_back(row);
  }
  return rows;
}

void write_label_csv(const std::filesystem::path& path, std::span<const LabeledMotion> rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "timestamp_ns,pupil_delta,iris_delta,opening_delta,label\n";
  for (const auto& r : rows) {
    out << r.timestamp_ns << ',';
    if (r.features.pupil_valid) out << format_exact(r.features.pupil_angle_delta);
    out << ',';
    if (r.features.iris_valid) out << format_exact(r.features.iris_angle_delta);
    out << ',';
    if (r.features.opening_valid) out << format_exact(r.features.opening_delta);
    out << ',' << to_string(r.label) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Eigen::VectorXd MovementClassifier::encode(const MotionFeatures& f) const {
  Eigen::VectorXd x(kInputs);
  x << (f.pupil_valid ? f.pupil_angle_delta : 0.0), (f.iris_valid ? f.iris_angle_delta : 0.0),
      (f.opening_valid ? f.opening_delta : 0.0), (f.pupil_valid ? 1.0 : 0.0), (f.iris_valid ? 1.0 : 0.0);
  return x;
}

void MovementClassifier::train(std::span<const LabeledMotion> rows, const MLPTrainSettings& settings) {
  std::vector<const LabeledMotion*> usable;
  std::array<std::size_t, 4> counts{};
  for (const auto& r : rows) {
    const int c = class_index(r.label);
    if (c < 0) continue;
    ++counts[static_cast<std::size_t>(c)];
    usable.push_back(&r);
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorCode::MissingClass, "no training example for " + std::string(to_string(kNetworkClasses[c])));
    }
  }
  MLPDataset data;
  const auto n = static_cast<Eigen::Index>(usable.size());
  data.inputs.resize(n, kInputs);
  data.targets = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kNetworkClasses.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    data.inputs.row(i) = encode(usable[static_cast<std::size_t>(i)]->features).transpose();
    data.targets(i, class_index(usable[static_cast<std::size_t>(i)]->label)) = 1.0;
  }
  input_mean_ = data.inputs.colwise().mean().transpose();
  input_scale_.resize(kInputs);
  for (Eigen::Index c = 0; c < kInputs; ++c) {
    const double var = (data.inputs.col(c).array() - input_mean_[c]).square().mean();
    input_scale_[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    data.inputs.col(c) = (data.inputs.col(c).array() - input_mean_[c]) / input_scale_[c];
  }
  model_ = mlp_train({kInputs, kHiddenUnits, static_cast<int>(kNetworkClasses.size())}, OutputActivation::Softmax,
                     data, settings)
               .model;
}

MovementLabel MovementClassifier::classify_features(const MotionFeatures& features) const {
  if (!model_) throw Error(ErrorCode::NotTrained, "movement classifier has not been trained");
  const Eigen::VectorXd x = (encode(features) - input_mean_).cwiseQuotient(input_scale_);
  const Eigen::VectorXd p = mlp_eval(*model_, x);
  Eigen::Index best = 0;
  p.maxCoeff(&best);
  return kNetworkClasses[static_cast<std::size_t>(best)];
}

MovementLabel MovementClassifier::classify(const MotionFeatures& features, const EyeState& current, double median,
                                           const ThresholdConfig& config) const {
  if (!model_) throw Error(ErrorCode::NotTrained, "movement classifier has not been trained");
  if (is_error_frame(current, median, config)) return MovementLabel::Error;
  return classify_features(features);
}

const MLPModel& MovementClassifier::model() const {
  if (!model_) throw Error(ErrorCode::NotTrained, "movement classifier has not been trained");
  return *model_;
}

ModelBlock MovementClassifier::to_block() const {
  ModelBlock block("movement_mlp");
  block.set("input_mean", input_mean_);
  block.set("input_scale", input_scale_);
  mlp_to_block(model(), block);
  return block;
}

MovementClassifier MovementClassifier::from_block(const ModelBlock& block) {
  if (block.type() != "movement_mlp") throw Error(ErrorCode::ModelFormat, "expected movement_mlp block");
  MovementClassifier c;
  c.input_mean_ = block.get_reals("input_mean");
  c.input_scale_ = block.get_reals("input_scale");
  c.model_ = mlp_from_block(block);
  return c;
}

}  // namespace gazekit
