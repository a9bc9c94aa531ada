#include "gazekit/synth.hpp"

#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace gazekit {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr std::size_t kPupilPoints = 24;
constexpr std::size_t kIrisPoints = 48;
constexpr std::size_t kUpperLidPoints = 50;
constexpr std::size_t kLowerLidPoints = 49;
constexpr std::size_t kMarkerPointsPerSide = 6;
constexpr double kUpperLidHeight = 30.0;
constexpr double kLowerLidHeight = 25.0;
constexpr double kLidHalfWidth = 76.0;
constexpr double kOccludedBelow = 0.25;   // lid openness below which pupil and iris are hidden
constexpr double kIrisDepthRatio = 0.97;  // iris plane sits slightly inside the pupil's sphere radius
constexpr double kBlinkFraction = 0.3;
constexpr double kDefaultRamp = 0.05;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScript, what); }

std::string_view regime_name(RegimeType t) {
  switch (t) {
    case RegimeType::Fixation: return "fixation";
    case RegimeType::Saccade: return "saccade";
    case RegimeType::Pursuit: return "pursuit";
    case RegimeType::Blink: return "blink";
  }
  return "?";
}

std::optional<RegimeType> parse_regime(std::string_view s) {
  for (auto t : {RegimeType::Fixation, RegimeType::Saccade, RegimeType::Pursuit, RegimeType::Blink}) {
    if (regime_name(t) == s) return t;
  }
  return std::nullopt;
}

MovementLabel label_of(RegimeType t) {
  switch (t) {
    case RegimeType::Fixation: return MovementLabel::Fixation;
    case RegimeType::Saccade: return MovementLabel::Saccade;
    case RegimeType::Pursuit: return MovementLabel::SmoothPursuit;
    case RegimeType::Blink: return MovementLabel::Blink;
  }
  return MovementLabel::Fixation;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct Pose {
  double yaw = 0.0;  // radians
  double pitch = 0.0;
};

// Regimes with resolved start/end poses.
struct Timeline {
  std::vector<Regime> regimes;
  std::vector<Pose> from, to;

  explicit Timeline(const SceneScript& s) : regimes(s.regimes) {
    Pose cur{s.start_yaw_deg * kDeg, s.start_pitch_deg * kDeg};
    for (const auto& r : regimes) {
      Pose start = cur, end = cur;
      if (r.param1 && r.param2 && r.type != RegimeType::Blink) {
        const Pose target{*r.param1 * kDeg, *r.param2 * kDeg};
        end = target;
        if (r.type == RegimeType::Fixation) start = target;
      }
      from.push_back(start);
      to.push_back(end);
      cur = end;
    }
  }

  std::size_t index_at(double t) const {
    for (std::size_t i = 0; i < regimes.size(); ++i) {
      if (t < regimes[i].end_s) return i;
    }
    return regimes.size() - 1;
  }

  Pose pose(double t) const {
    const std::size_t i = index_at(t);
    const auto& r = regimes[i];
    const double len = r.end_s - r.start_s;
    const double u = std::clamp(len > 0 ? (t - r.start_s) / len : 1.0, 0.0, 1.0);
    return {from[i].yaw + u * (to[i].yaw - from[i].yaw), from[i].pitch + u * (to[i].pitch - from[i].pitch)};
  }

  double openness(double t) const {
    const std::size_t i = index_at(t);
    const auto& r = regimes[i];
    if (r.type != RegimeType::Blink) return 1.0;
    const double ramp = std::clamp(r.param1.value_or(kDefaultRamp), 1e-6, 0.5);
    const double u = std::clamp((t - r.start_s) / (r.end_s - r.start_s), 0.0, 1.0);
    if (u < ramp) return 1.0 - u / ramp;
    if (u > 1.0 - ramp) return (u - (1.0 - ramp)) / ramp;
    return 0.0;
  }
};

Eigen::Vector3d gaze_vector(const Pose& p) {
  return {std::sin(p.yaw) * std::cos(p.pitch), std::sin(p.pitch), std::cos(p.yaw) * std::cos(p.pitch)};
}

std::int64_t eye_timestamp(std::int64_t k, double fps) {
  return std::llround(static_cast<double>(k) * 1e9 / fps);
}

class Noise {
 public:
  Noise(std::uint64_t seed, double sigma) : rng_(seed), sigma_(sigma) {}
  Point2 jitter(const Point2& p) {
    if (sigma_ <= 0.0) return p;
    return {p.x() + sigma_ * normal_(rng_), p.y() + sigma_ * normal_(rng_)};
  }
  bool chance(double p) { return p > 0.0 && uniform_(rng_) < p; }

 private:
  std::mt19937_64 rng_;
  double sigma_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct EyeImage {
  const SyntheticEye& eye;
  Resolution resolution;
  bool mirror;
  double squash;

  // Nasal half: towards the image centre line between the eyes; +x for the
  // left camera, -x for the mirrored right camera.
  Point2 distort(const Point2& p) const {
    if (squash == 1.0) return p;
    const double dx = p.x() - eye.center.x();
    const bool nasal = mirror ? dx < 0.0 : dx > 0.0;
    return nasal ? Point2(eye.center.x() + squash * dx, p.y()) : p;
  }

  Point2 clamp(const Point2& p) const {
    return {std::clamp(p.x(), 0.0, static_cast<double>(resolution.width)),
            std::clamp(p.y(), 0.0, static_cast<double>(resolution.height))};
  }
};

FrameLandmarks detection(LandmarkKind kind, std::vector<Point2> pts, bool valid) {
  FrameLandmarks d;
  d.kind = kind;
  d.valid = valid;
  d.confidence = valid ? 1.0 : 0.0;
  if (valid) d.points = std::move(pts);
  return d;
}

std::vector<Point2> ellipse_points(const Ellipse& e, std::size_t n) {
  std::vector<Point2> pts;
  pts.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts.push_back(e.point_at(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
  }
  return pts;
}

std::vector<Point2> lid_points(const EyeImage& img, double openness, double height, std::size_t n) {
  std::vector<Point2> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    if (img.mirror) s = -s;  // keep nasal -> temporal ordering in both cameras
    pts.emplace_back(img.eye.center.x() + s * kLidHalfWidth, img.eye.center.y() + height * openness * (1.0 - s * s));
  }
  return pts;
}

std::vector<Point2> marker_square(const Point2& c, double side) {
  const double h = side / 2.0;
  const std::array<Point2, 5> corners = {Point2(c.x() - h, c.y() - h), Point2(c.x() + h, c.y() - h),
                                         Point2(c.x() + h, c.y() + h), Point2(c.x() - h, c.y() + h),
                                         Point2(c.x() - h, c.y() - h)};
  std::vector<Point2> pts;
  for (std::size_t side_i = 0; side_i < 4; ++side_i) {
    for (std::size_t k = 0; k < kMarkerPointsPerSide; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(kMarkerPointsPerSide);
      pts.push_back(corners[side_i] + u * (corners[side_i + 1] - corners[side_i]));
    }
  }
  return pts;
}

}  // namespace

// ---------------------------------------------------------------------------
// Script

SceneScript parse_scene_script(const std::string& text) {
  SceneScript s;
  s.regimes.clear();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<long long> calib_start, calib_end;
  const auto where = [&] { return "script line " + std::to_string(line_no) + ": "; };
  const auto real = [&](const std::string& v) {
    double x = 0.0;
    if (!parse_double(trim(v), x)) invalid(where() + "bad number '" + v + "'");
    return x;
  };
  const auto integer = [&](const std::string& v) {
    long long x = 0;
    if (!parse_int64(trim(v), x)) invalid(where() + "bad integer '" + v + "'");
    return x;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (const auto eq = line.find('='); eq != std::string::npos) {
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "duration") s.duration_s = real(value);
      else if (key == "eye_fps") s.eye_fps = real(value);
      else if (key == "scene_fps") s.scene_fps = real(value);
      else if (key == "eye_width") s.eye_resolution.width = static_cast<int>(integer(value));
      else if (key == "eye_height") s.eye_resolution.height = static_cast<int>(integer(value));
      else if (key == "scene_width") s.scene_resolution.width = static_cast<int>(integer(value));
      else if (key == "scene_height") s.scene_resolution.height = static_cast<int>(integer(value));
      else if (key == "left_cx") s.left.center.x() = real(value);
      else if (key == "left_cy") s.left.center.y() = real(value);
      else if (key == "left_r") s.left.radius = real(value);
      else if (key == "right_cx") s.right.center.x() = real(value);
      else if (key == "right_cy") s.right.center.y() = real(value);
      else if (key == "right_r") s.right.radius = real(value);
      else if (key == "pupil_radius") s.pupil_radius = real(value);
      else if (key == "iris_radius") s.iris_radius = real(value);
      else if (key == "start_yaw_deg") s.start_yaw_deg = real(value);
      else if (key == "start_pitch_deg") s.start_pitch_deg = real(value);
      else if (key == "noise_px") s.noise_px = real(value);
      else if (key == "dropout") s.dropout = real(value);
      else if (key == "hard_mode") s.hard_mode = integer(value) != 0;
      else if (key == "nasal_squash") s.nasal_squash = real(value);
      else if (key == "depth_start_cm") s.depth_start_cm = real(value);
      else if (key == "depth_end_cm") s.depth_end_cm = real(value);
      else if (key == "depth_sample_step_cm") s.depth_sample_step_cm = real(value);
      else if (key == "depth_sample_max_cm") s.depth_sample_max_cm = real(value);
      else if (key == "depth_a") s.depth_model.a = real(value);
      else if (key == "depth_b") s.depth_model.b = real(value);
      else if (key == "depth_c") s.depth_model.c = real(value);
      else if (key == "calib_start") calib_start = integer(value);
      else if (key == "calib_end") calib_end = integer(value);
      else if (key == "seed") {
        const auto v = integer(value);
        if (v < 0) invalid(where() + "seed must be non-negative");
        s.seed = static_cast<std::uint64_t>(v);
      } else {
        invalid(where() + "unknown key '" + key + "'");
      }
      continue;
    }
    std::vector<std::string> f;
    std::string field;
    std::istringstream row(line);
    while (std::getline(row, field, ',')) f.push_back(trim(field));
    if (line.back() == ',') f.emplace_back();
    if (f.size() < 3 || f.size() > 5) invalid(where() + "regime rows are start_s,end_s,type,param1,param2");
    Regime r;
    r.start_s = real(f[0]);
    r.end_s = real(f[1]);
    const auto type = parse_regime(f[2]);
    if (!type) invalid(where() + "unknown regime type '" + f[2] + "'");
    r.type = *type;
    if (f.size() > 3 && !f[3].empty()) r.param1 = real(f[3]);
    if (f.size() > 4 && !f[4].empty()) r.param2 = real(f[4]);
    s.regimes.push_back(r);
  }
  if (calib_start.has_value() != calib_end.has_value()) invalid("calib_start and calib_end come together");
  if (calib_start) s.calibration_range = std::make_pair(*calib_start, *calib_end);
  validate_scene_script(s);
  return s;
}

SceneScript read_scene_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_script(ss.str());
}

void validate_scene_script(const SceneScript& s) {
  if (!(s.duration_s > 0.0)) invalid("duration must be positive");
  if (!(s.eye_fps > 0.0) || !(s.scene_fps > 0.0)) invalid("frame rates must be positive");
  if (s.eye_resolution.width <= 0 || s.eye_resolution.height <= 0 || s.scene_resolution.width <= 0 ||
      s.scene_resolution.height <= 0) {
    invalid("resolutions must be positive");
  }
  if (!(s.left.radius > 0.0) || !(s.right.radius > 0.0)) invalid("eyeball radii must be positive");
  if (!(s.pupil_radius > 0.0) || !(s.iris_radius > 0.0)) invalid("pupil and iris radii must be positive");
  if (!(s.noise_px >= 0.0)) invalid("noise_px must be >= 0");
  if (!(s.dropout >= 0.0 && s.dropout <= 1.0)) invalid("dropout must lie in [0, 1]");
  if (!(s.nasal_squash > 0.0 && s.nasal_squash <= 1.0)) invalid("nasal_squash must lie in (0, 1]");
  if (!(s.depth_model.a > 0.0) || !(s.depth_model.b < 0.0)) invalid("depth model needs a > 0 and b < 0");
  if (!(s.depth_start_cm > s.depth_model.c) || !(s.depth_end_cm > s.depth_model.c)) {
    invalid("depths must exceed the depth model offset");
  }
  if (!(s.depth_sample_step_cm > 0.0)) invalid("depth_sample_step_cm must be positive");
  if (s.calibration_range && s.calibration_range->first > s.calibration_range->second) {
    invalid("calibration range is reversed");
  }
  if (s.regimes.empty()) invalid("script has no regimes");
  constexpr double tol = 1e-9;
  double expect = 0.0;
  for (std::size_t i = 0; i < s.regimes.size(); ++i) {
    const auto& r = s.regimes[i];
    const std::string which = "regime " + std::to_string(i + 1) + ": ";
    if (std::abs(r.start_s - expect) > tol) invalid(which + "regimes must tile the duration without gaps or overlap");
    if (!(r.end_s > r.start_s)) invalid(which + "end must follow start");
    if ((r.type == RegimeType::Saccade || r.type == RegimeType::Pursuit) && !(r.param1 && r.param2)) {
      invalid(which + "saccade and pursuit need a target yaw,pitch");
    }
    if (r.type == RegimeType::Fixation && r.param1.has_value() != r.param2.has_value()) {
      invalid(which + "fixation takes both yaw and pitch or neither");
    }
    if (r.type == RegimeType::Blink && r.param1 && !(*r.param1 > 0.0 && *r.param1 <= 0.5)) {
      invalid(which + "blink ramp fraction must lie in (0, 0.5]");
    }
    expect = r.end_s;
  }
  if (std::abs(expect - s.duration_s) > tol) invalid("regimes must end at the script duration");
}

std::string format_scene_script(const SceneScript& s) {
  std::ostringstream os;
  os << "duration=" << format_exact(s.duration_s) << '\n'
     << "eye_fps=" << format_exact(s.eye_fps) << '\n'
     << "scene_fps=" << format_exact(s.scene_fps) << '\n'
     << "eye_width=" << s.eye_resolution.width << '\n'
     << "eye_height=" << s.eye_resolution.height << '\n'
     << "scene_width=" << s.scene_resolution.width << '\n'
     << "scene_height=" << s.scene_resolution.height << '\n'
     << "left_cx=" << format_exact(s.left.center.x()) << '\n'
     << "left_cy=" << format_exact(s.left.center.y()) << '\n'
     << "left_r=" << format_exact(s.left.radius) << '\n'
     << "right_cx=" << format_exact(s.right.center.x()) << '\n'
     << "right_cy=" << format_exact(s.right.center.y()) << '\n'
     << "right_r=" << format_exact(s.right.radius) << '\n'
     << "pupil_radius=" << format_exact(s.pupil_radius) << '\n'
     << "iris_radius=" << format_exact(s.iris_radius) << '\n'
     << "start_yaw_deg=" << format_exact(s.start_yaw_deg) << '\n'
     << "start_pitch_deg=" << format_exact(s.start_pitch_deg) << '\n'
     << "noise_px=" << format_exact(s.noise_px) << '\n'
     << "dropout=" << format_exact(s.dropout) << '\n'
     << "hard_mode=" << (s.hard_mode ? 1 : 0) << '\n'
     << "nasal_squash=" << format_exact(s.nasal_squash) << '\n'
     << "depth_start_cm=" << format_exact(s.depth_start_cm) << '\n'
     << "depth_end_cm=" << format_exact(s.depth_end_cm) << '\n'
     << "depth_sample_step_cm=" << format_exact(s.depth_sample_step_cm) << '\n'
     << "depth_sample_max_cm=" << format_exact(s.depth_sample_max_cm) << '\n'
     << "depth_a=" << format_exact(s.depth_model.a) << '\n'
     << "depth_b=" << format_exact(s.depth_model.b) << '\n'
     << "depth_c=" << format_exact(s.depth_model.c) << '\n';
  if (s.calibration_range) {
    os << "calib_start=" << s.calibration_range->first << '\n' << "calib_end=" << s.calibration_range->second << '\n';
  }
  os << "seed=" << s.seed << '\n';
  os << "# start_s,end_s,type,param1,param2\n";
  for (const auto& r : s.regimes) {
    os << format_exact(r.start_s) << ',' << format_exact(r.end_s) << ',' << regime_name(r.type) << ','
       << (r.param1 ? format_exact(*r.param1) : "") << ',' << (r.param2 ? format_exact(*r.param2) : "") << '\n';
  }
  return os.str();
}

SceneScript default_scene_script() {
  SceneScript s;
  s.calibration_range = std::make_pair(std::int64_t{0}, std::int64_t{149});
  s.start_yaw_deg = -25.0;
  s.start_pitch_deg = -20.0;
  const auto add = [&](double a, double b, RegimeType t, std::optional<double> p1 = {},
                       std::optional<double> p2 = {}) { s.regimes.push_back({a, b, t, p1, p2}); };
  using R = RegimeType;
  // Calibration: horizontal then vertical pursuit sweeps over the field.
  add(0.0, 0.5, R::Pursuit, 25, -20);
  add(0.5, 1.0, R::Pursuit, -25, -10);
  add(1.0, 1.5, R::Pursuit, 25, 0);
  add(1.5, 2.0, R::Pursuit, -25, 10);
  add(2.0, 2.5, R::Pursuit, 25, 20);
  add(2.5, 3.0, R::Pursuit, -25, 20);
  add(3.0, 3.5, R::Pursuit, -12.5, -20);
  add(3.5, 4.0, R::Pursuit, 0, 20);
  add(4.0, 4.5, R::Pursuit, 12.5, -20);
  add(4.5, 5.0, R::Pursuit, 25, 20);
  // Held-out half.
  add(5.0, 5.07, R::Saccade, 0, 0);
  add(5.07, 5.6, R::Fixation);
  add(5.6, 5.64, R::Saccade, -15, 10);
  add(5.64, 6.2, R::Fixation);
  add(6.2, 6.46, R::Pursuit, 15, 10);
  add(6.46, 6.9, R::Fixation);
  add(6.9, 7.2, R::Blink, 0.05);
  add(7.2, 7.6, R::Fixation);
  add(7.6, 7.66, R::Saccade, -10, -10);
  add(7.66, 8.2, R::Fixation);
  add(8.2, 8.5, R::Pursuit, 10, -15);
  add(8.5, 8.9, R::Fixation);
  add(8.9, 8.96, R::Saccade, 0, 15);
  add(8.96, 9.4, R::Fixation);
  add(9.4, 9.7, R::Pursuit, -20, 0);
  add(9.7, 10.0, R::Fixation);
  return s;
}

Point2 true_gaze_point(const SceneScript& s, double gx, double gy) {
  double x = 0.5 * s.scene_resolution.width + 800.0 * gx + 60.0 * gx * gx - 40.0 * gx * gy + 30.0 * gy * gy;
  const double y = 0.5 * s.scene_resolution.height + 800.0 * gy + 50.0 * gy * gy + 30.0 * gx * gy - 30.0 * gx * gx;
  if (s.hard_mode) x += 600.0 * gx * gx * gx;
  return {x, y};
}

Ellipse projected_disc(const SyntheticEye& eye, double rho, double gx, double gy, bool mirror_x) {
  const double ix = mirror_x ? -gx : gx;
  const double planar = std::hypot(ix, gy);
  const double gz = std::sqrt(std::max(0.0, 1.0 - ix * ix - gy * gy));
  Ellipse e;
  e.center = eye.center + eye.radius * Point2(ix, gy);
  e.semi_major = rho;
  e.semi_minor = rho * gz;
  if (planar > 0.0) {
    // Major axis is perpendicular to the radial (minor) direction.
    double ang = std::atan2(gy, ix) + std::numbers::pi / 2.0;
    ang = std::fmod(ang, std::numbers::pi);
    if (ang < 0.0) ang += std::numbers::pi;
    e.angle = ang;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Generation

SyntheticRecording generate(const SceneScript& script) {
  validate_scene_script(script);
  const Timeline timeline(script);
  Noise noise(script.seed, script.noise_px);
  SyntheticRecording out;
  auto& rec = out.recording;
  rec.manifest.eye_resolution = script.eye_resolution;
  rec.manifest.scene_resolution = script.scene_resolution;
  rec.manifest.eye_fps = script.eye_fps;
  rec.manifest.scene_fps = script.scene_fps;
  rec.manifest.calibration_range = script.calibration_range;
  rec.left.source = Source::LeftEye;
  rec.right.source = Source::RightEye;
  rec.scene.source = Source::Scene;

  const auto n_eye = static_cast<std::int64_t>(std::floor(script.duration_s * script.eye_fps + 1e-9));
  const auto n_scene = static_cast<std::int64_t>(std::floor(script.duration_s * script.scene_fps + 1e-9));
  const double dt = 1.0 / script.eye_fps;
  const std::array<EyeImage, 2> images = {
      EyeImage{script.left, script.eye_resolution, false, script.nasal_squash},
      EyeImage{script.right, script.eye_resolution, true, script.nasal_squash}};

  for (std::int64_t k = 0; k < n_eye; ++k) {
    const std::int64_t ts = eye_timestamp(k, script.eye_fps);
    const double t = static_cast<double>(ts) * 1e-9;
    const Pose pose = timeline.pose(t);
    const Eigen::Vector3d g = gaze_vector(pose);
    const double open = timeline.openness(t);
    const RegimeType regime = timeline.regimes[timeline.index_at(std::max(0.0, t - dt / 2.0))].type;

    EyeTruthRow truth;
    truth.frame_id = k;
    truth.timestamp_ns = ts;
    truth.yaw_rad = pose.yaw;
    truth.pitch_rad = pose.pitch;
    truth.gaze = true_gaze_point(script, g.x(), g.y());

    for (std::size_t e = 0; e < 2; ++e) {
      const EyeImage& img = images[e];
      const bool dropped = noise.chance(script.dropout);
      const bool visible = open >= kOccludedBelow && !dropped;
      const auto landmarks = [&](std::vector<Point2> pts) {
        for (auto& p : pts) p = img.clamp(noise.jitter(img.distort(p)));
        return pts;
      };
      StreamFrame frame{k, ts, {}};
      const Ellipse pupil = projected_disc(img.eye, script.pupil_radius, g.x(), g.y(), img.mirror);
      SyntheticEye iris_sphere = img.eye;
      iris_sphere.radius *= kIrisDepthRatio;
      const Ellipse iris = projected_disc(iris_sphere, script.iris_radius, g.x(), g.y(), img.mirror);
      frame.detections.push_back(detection(LandmarkKind::Pupil, landmarks(ellipse_points(pupil, kPupilPoints)), visible));
      frame.detections.push_back(detection(LandmarkKind::Iris, landmarks(ellipse_points(iris, kIrisPoints)), visible));
      frame.detections.push_back(detection(
          LandmarkKind::EyelidUpper, landmarks(lid_points(img, open, -kUpperLidHeight, kUpperLidPoints)), true));
      frame.detections.push_back(detection(
          LandmarkKind::EyelidLower, landmarks(lid_points(img, open, kLowerLidHeight, kLowerLidPoints)), true));
      for (auto& d : frame.detections) {
        d.frame_id = k;
        d.timestamp_ns = ts;
        d.source = e == 0 ? Source::LeftEye : Source::RightEye;
      }

      const double opening = (kUpperLidHeight + kLowerLidHeight) * open;
      MovementLabel label = label_of(regime);
      if (dropped && open > kBlinkFraction) label = MovementLabel::Error;
      if (e == 0) {
        truth.left_label = label;
        truth.left_opening_px = opening;
        rec.left.frames.push_back(std::move(frame));
      } else {
        truth.right_label = label;
        truth.right_opening_px = opening;
        rec.right.frames.push_back(std::move(frame));
      }
    }
    out.truth.eye.push_back(truth);
  }

  const bool snap = script.eye_fps >= script.scene_fps;
  for (std::int64_t j = 0; j < n_scene; ++j) {
    // Scene frames share the eye clock so each one has an exactly simultaneous eye frame.
    const std::int64_t ts =
        snap ? eye_timestamp(std::llround(static_cast<double>(j) * script.eye_fps / script.scene_fps), script.eye_fps)
             : eye_timestamp(j, script.scene_fps);
    const double t = static_cast<double>(ts) * 1e-9;
    const Eigen::Vector3d g = gaze_vector(timeline.pose(t));
    SceneTruthRow truth;
    truth.scene_frame_id = j;
    truth.timestamp_ns = ts;
    truth.marker = true_gaze_point(script, g.x(), g.y());
    const double u = std::clamp(t / script.duration_s, 0.0, 1.0);
    truth.depth_cm = script.depth_start_cm + u * (script.depth_end_cm - script.depth_start_cm);
    truth.area_px2 = area_for_depth(script.depth_model, truth.depth_cm);

    auto pts = marker_square(truth.marker, std::sqrt(truth.area_px2));
    bool inside = true;
    for (auto& p : pts) {
      p = noise.jitter(p);
      inside = inside && p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= script.scene_resolution.width &&
               p.y() <= script.scene_resolution.height;
    }
    FrameLandmarks det = detection(LandmarkKind::Marker, std::move(pts), inside);
    det.frame_id = j;
    det.timestamp_ns = ts;
    det.source = Source::Scene;
    rec.scene.frames.push_back(StreamFrame{j, ts, {std::move(det)}});
    out.truth.scene.push_back(truth);
  }

  out.truth.left_eyeball = EyeballModel{script.left.center, script.left.radius, EyeballSource::Geometric, false};
  out.truth.right_eyeball = EyeballModel{script.right.center, script.right.radius, EyeballSource::Geometric, false};
  out.truth.calibration_range = script.calibration_range;
  for (double d = script.depth_sample_step_cm; d <= script.depth_sample_max_cm + 1e-9; d += script.depth_sample_step_cm) {
    if (d > script.depth_model.c) out.depth_samples.push_back({area_for_depth(script.depth_model, d), d});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

void write_synthetic_recording(const std::filesystem::path& dir, const SyntheticRecording& synth) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
  const auto& rec = synth.recording;
  write_manifest(dir / kManifestFile, rec.manifest);
  write_landmark_stream(dir / kLeftEyeFile, rec.left);
  write_landmark_stream(dir / kRightEyeFile, rec.right);
  write_landmark_stream(dir / kSceneFile, rec.scene);
  write_depth_samples(dir / kDepthSamplesFile, synth.depth_samples);

  std::ofstream eye(dir / kTruthEyeFile);
  if (!eye) throw Error(ErrorCode::IoFailure, "cannot write truth files in " + dir.string());
  eye << "frame_id,timestamp_ns,yaw_rad,pitch_rad,gaze_x,gaze_y,left_label,right_label,left_opening_px,"
         "right_opening_px\n";
  for (const auto& r : synth.truth.eye) {
    eye << r.frame_id << ',' << r.timestamp_ns << ',' << format_exact(r.yaw_rad) << ',' << format_exact(r.pitch_rad)
        << ',' << format_exact(r.gaze.x()) << ',' << format_exact(r.gaze.y()) << ',' << to_string(r.left_label) << ','
        << to_string(r.right_label) << ',' << format_exact(r.left_opening_px) << ','
        << format_exact(r.right_opening_px) << '\n';
  }
  std::ofstream scene(dir / kTruthSceneFile);
  scene << "scene_frame_id,timestamp_ns,marker_x,marker_y,marker_area_px2,depth_cm\n";
  for (const auto& r : synth.truth.scene) {
    scene << r.scene_frame_id << ',' << r.timestamp_ns << ',' << format_exact(r.marker.x()) << ','
          << format_exact(r.marker.y()) << ',' << format_exact(r.area_px2) << ',' << format_exact(r.depth_cm) << '\n';
  }
  std::ofstream ball(dir / kTruthEyeballFile);
  const auto& l = synth.truth.left_eyeball;
  const auto& r = synth.truth.right_eyeball;
  ball << "left_cx=" << format_exact(l.center.x()) << "\nleft_cy=" << format_exact(l.center.y())
       << "\nleft_r=" << format_exact(l.radius) << "\nright_cx=" << format_exact(r.center.x())
       << "\nright_cy=" << format_exact(r.center.y()) << "\nright_r=" << format_exact(r.radius) << '\n';
  if (synth.truth.calibration_range) {
    ball << "calib_start=" << synth.truth.calibration_range->first << "\ncalib_end="
         << synth.truth.calibration_range->second << '\n';
  }
  if (!eye || !scene || !ball) throw Error(ErrorCode::IoFailure, "write failed for truth files in " + dir.string());
}

GroundTruth read_ground_truth(const std::filesystem::path& dir) {
  GroundTruth truth;
  const auto rows = [&](const char* name, std::size_t fields) {
    std::ifstream in(dir / name);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir / name).string());
    std::vector<std::vector<std::string>> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      std::vector<std::string> f;
      std::string cell;
      std::istringstream row(line);
      while (std::getline(row, cell, ',')) f.push_back(cell);
      if (f.size() != fields) throw Error(ErrorCode::MalformedRow, std::string(name) + ": bad row '" + line + "'");
      out.push_back(std::move(f));
    }
    return out;
  };
  const auto num = [](const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v)) throw Error(ErrorCode::MalformedRow, "bad number '" + s + "' in truth files");
    return v;
  };
  const auto integer = [](const std::string& s) {
    long long v = 0;
    if (!parse_int64(s, v)) throw Error(ErrorCode::MalformedRow, "bad integer '" + s + "' in truth files");
    return static_cast<std::int64_t>(v);
  };
  const auto label = [](const std::string& s) {
    const auto l = parse_movement_label(s);
    if (!l) throw Error(ErrorCode::MalformedRow, "bad label '" + s + "' in truth files");
    return *l;
  };
  for (const auto& f : rows(kTruthEyeFile, 10)) {
    EyeTruthRow r;
    r.frame_id = integer(f[0]);
    r.timestamp_ns = integer(f[1]);
    r.yaw_rad = num(f[2]);
    r.pitch_rad = num(f[3]);
    r.gaze = {num(f[4]), num(f[5])};
    r.left_label = label(f[6]);
    r.right_label = label(f[7]);
    r.left_opening_px = num(f[8]);
    r.right_opening_px = num(f[9]);
    truth.eye.push_back(r);
  }
  for (const auto& f : rows(kTruthSceneFile, 6)) {
    SceneTruthRow r;
    r.scene_frame_id = integer(f[0]);
    r.timestamp_ns = integer(f[1]);
    r.marker = {num(f[2]), num(f[3])};
    r.area_px2 = num(f[4]);
    r.depth_cm = num(f[5]);
    truth.scene.push_back(r);
  }
  std::ifstream in(dir / kTruthEyeballFile);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir / kTruthEyeballFile).string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto key = [&](const char* k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw Error(ErrorCode::MalformedRow, std::string("truth eyeball lacks ") + k);
    return num(it->second);
  };
  truth.left_eyeball = EyeballModel{{key("left_cx"), key("left_cy")}, key("left_r"), EyeballSource::Geometric, false};
  truth.right_eyeball =
      EyeballModel{{key("right_cx"), key("right_cy")}, key("right_r"), EyeballSource::Geometric, false};
  if (kv.count("calib_start") && kv.count("calib_end")) {
    truth.calibration_range = std::make_pair(integer(kv["calib_start"]), integer(kv["calib_end"]));
  }
  return truth;
}

std::vector<EyeballTrainingPair> make_eyeball_training_set(std::size_t scenes, Resolution resolution,
                                                           std::uint64_t seed, std::size_t frames_per_scene) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = resolution.width;
  const double h = resolution.height;
  std::vector<EyeballTrainingPair> out;
  out.reserve(scenes);
  for (std::size_t s = 0; s < scenes; ++s) {
    SyntheticEye eye;
    eye.center = {w * (0.4 + 0.2 * unit(rng)), h * (0.4 + 0.2 * unit(rng))};
    eye.radius = w * (0.22 + 0.12 * unit(rng));
    const double rho = w * (0.03 + 0.03 * unit(rng));
    const double max_angle = (25.0 + 15.0 * unit(rng)) * kDeg;
    std::vector<Ellipse> ellipses;
    ellipses.reserve(frames_per_scene);
    for (std::size_t f = 0; f < frames_per_scene; ++f) {
      const Pose p{(2.0 * unit(rng) - 1.0) * max_angle, (2.0 * unit(rng) - 1.0) * max_angle * 0.8};
      const Eigen::Vector3d g = gaze_vector(p);
      ellipses.push_back(projected_disc(eye, rho, g.x(), g.y()));
    }
    out.push_back({select_diverse_ellipses(ellipses, resolution),
                   EyeballModel{eye.center, eye.radius, EyeballSource::Geometric, false}});
  }
  return out;
}

}  // namespace gazekit
