#include "gazekit/recording.hpp"

#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace gazekit {

std::string_view to_string(Source source) {
  switch (source) {
    case Source::LeftEye: return "left";
    case Source::RightEye: return "right";
    case Source::Scene: return "scene";
  }
  return "?";
}

std::string_view to_string(LandmarkKind kind) {
  switch (kind) {
    case LandmarkKind::Pupil: return "pupil";
    case LandmarkKind::Iris: return "iris";
    case LandmarkKind::EyelidUpper: return "eyelid_upper";
    case LandmarkKind::EyelidLower: return "eyelid_lower";
    case LandmarkKind::Marker: return "marker";
  }
  return "?";
}

std::string_view to_string(Eye eye) { return eye == Eye::Left ? "left" : "right"; }

std::optional<LandmarkKind> parse_landmark_kind(std::string_view text) {
  for (auto kind : {LandmarkKind::Pupil, LandmarkKind::Iris, LandmarkKind::EyelidUpper, LandmarkKind::EyelidLower,
                    LandmarkKind::Marker}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const FrameLandmarks* StreamFrame::find_valid(LandmarkKind kind) const {
  for (const auto& d : detections) {
    if (d.kind == kind && d.valid) return &d;
  }
  return nullptr;
}

std::vector<std::int64_t> Stream::timestamps() const {
  std::vector<std::int64_t> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.timestamp_ns);
  return out;
}

std::filesystem::path recording_dir(const std::filesystem::path& project, const std::string& recording_id) {
  return project / recording_id;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_bool(std::string_view text, bool& value) {
  if (text == "1" || text == "true") {
    value = true;
    return true;
  }
  if (text == "0" || text == "false") {
    value = false;
    return true;
  }
  return false;
}

bool parse_points(std::string_view text, std::vector<Point2>& points) {
  points.clear();
  if (text.empty()) return true;
  const auto parts = split(text, ';');
  if (parts.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < parts.size(); i += 2) {
    double x = 0.0, y = 0.0;
    if (!parse_double(parts[i], x) || !parse_double(parts[i + 1], y)) return false;
    points.emplace_back(x, y);
  }
  return true;
}

bool within(const Point2& p, Resolution r) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= r.width && p.y() <= r.height;
}

}  // namespace

Stream read_landmark_stream(std::istream& in, Source source, Resolution bounds, std::vector<LoadWarning>& warnings) {
  Stream stream;
  stream.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  const auto warn = [&](const std::string& msg) { warnings.push_back({source, line_no, msg}); };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != kLandmarkHeader) warn("unexpected header '" + line + "'");
      if (line.rfind("frame_id", 0) == 0) continue;
    }
    const auto fields = split(line, ',');
    long long frame_id = 0, timestamp = 0;
    if (fields.size() < 2 || !parse_int64(fields[0], frame_id) || !parse_int64(fields[1], timestamp)) {
      warn("malformed row dropped: frame id or timestamp unreadable");
      continue;
    }

    StreamFrame* frame = stream.frames.empty() ? nullptr : &stream.frames.back();
    if (!frame || frame->frame_id != frame_id) {
      if (frame && frame_id < frame->frame_id) {
        warn("malformed row dropped: frame_id goes backwards");
        continue;
      }
      if (frame && timestamp <= frame->timestamp_ns) {
        throw Error(ErrorCode::NonMonotoneTimestamp, std::string(to_string(source)) + " stream line " +
                                                         std::to_string(line_no) + ": timestamp " +
                                                         std::to_string(timestamp) + " does not increase");
      }
      stream.frames.push_back({frame_id, timestamp, {}});
      frame = &stream.frames.back();
    } else if (frame->timestamp_ns != timestamp) {
      warn("malformed row dropped: timestamp differs within frame " + std::to_string(frame_id));
      continue;
    }

    FrameLandmarks det;
    det.frame_id = frame_id;
    det.timestamp_ns = timestamp;
    det.source = source;
    const auto kind = fields.size() == 6 ? parse_landmark_kind(fields[2]) : std::nullopt;
    if (!kind) {
      warn("malformed row: field count or kind unreadable; frame kept without detection");
      continue;
    }
    det.kind = *kind;
    bool valid = false;
    if (!parse_double(fields[3], det.confidence) || !parse_bool(fields[4], valid) ||
        !parse_points(fields[5], det.points) || !(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      warn("malformed row: detection demoted to invalid");
      det.points.clear();
      det.valid = false;
      frame->detections.push_back(std::move(det));
      continue;
    }
    det.valid = valid;
    if (det.valid && det.points.empty()) {
      warn("valid row without points demoted to invalid");
      det.valid = false;
    }
    if (det.valid) {
      for (const auto& p : det.points) {
        if (!within(p, bounds)) {
          warn("point outside the image bounds; detection demoted to invalid");
          det.valid = false;
          break;
        }
      }
    }
    frame->detections.push_back(std::move(det));
  }
  return stream;
}

void write_landmark_stream(const std::filesystem::path& path, const Stream& stream) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << kLandmarkHeader << '\n';
  for (const auto& frame : stream.frames) {
    for (const auto& d : frame.detections) {
      out << frame.frame_id << ',' << frame.timestamp_ns << ',' << to_string(d.kind) << ','
          << format_exact(d.confidence) << ',' << (d.valid ? 1 : 0) << ',';
      for (std::size_t i = 0; i < d.points.size(); ++i) {
        if (i > 0) out << ';';
        out << format_exact(d.points[i].x()) << ';' << format_exact(d.points[i].y());
      }
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

RecordingManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingManifest, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::MissingManifest, "bad manifest line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto integer = [&](const char* key, std::optional<long long> fallback) -> long long {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (fallback) return *fallback;
      throw Error(ErrorCode::MissingManifest, std::string("manifest lacks '") + key + "'");
    }
    long long v = 0;
    if (!parse_int64(it->second, v)) throw Error(ErrorCode::MissingManifest, std::string("bad value for ") + key);
    return v;
  };
  const auto real = [&](const char* key) {
    auto it = kv.find(key);
    double v = 0.0;
    if (it == kv.end() || !parse_double(it->second, v)) {
      throw Error(ErrorCode::MissingManifest, std::string("manifest lacks a valid '") + key + "'");
    }
    return v;
  };

  RecordingManifest m;
  m.eye_resolution = {static_cast<int>(integer("eye_width", 192)), static_cast<int>(integer("eye_height", 192))};
  m.scene_resolution = {static_cast<int>(integer("scene_width", std::nullopt)),
                        static_cast<int>(integer("scene_height", std::nullopt))};
  m.eye_fps = real("eye_fps");
  m.scene_fps = real("scene_fps");
  if (kv.count("calib_start") || kv.count("calib_end")) {
    m.calibration_range = std::make_pair(integer("calib_start", std::nullopt), integer("calib_end", std::nullopt));
  }
  if (m.eye_resolution.width <= 0 || m.eye_resolution.height <= 0 || m.scene_resolution.width <= 0 ||
      m.scene_resolution.height <= 0 || !(m.eye_fps > 0.0) || !(m.scene_fps > 0.0)) {
    throw Error(ErrorCode::MissingManifest, "manifest resolutions and frame rates must be positive");
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const RecordingManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "eye_width=" << m.eye_resolution.width << '\n'
      << "eye_height=" << m.eye_resolution.height << '\n'
      << "scene_width=" << m.scene_resolution.width << '\n'
      << "scene_height=" << m.scene_resolution.height << '\n'
      << "eye_fps=" << format_exact(m.eye_fps) << '\n'
      << "scene_fps=" << format_exact(m.scene_fps) << '\n';
  if (m.calibration_range) {
    out << "calib_start=" << m.calibration_range->first << '\n' << "calib_end=" << m.calibration_range->second << '\n';
  }
}

Recording load_recording(const std::filesystem::path& project, const std::string& recording_id) {
  const auto dir = recording_dir(project, recording_id);
  Recording rec;
  rec.manifest = read_manifest(dir / kManifestFile);
  const auto load = [&](const char* name, Source source, Resolution bounds) {
    std::ifstream in(dir / name);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open landmark file " + (dir / name).string());
    return read_landmark_stream(in, source, bounds, rec.warnings);
  };
  rec.left = load(kLeftEyeFile, Source::LeftEye, rec.manifest.eye_resolution);
  rec.right = load(kRightEyeFile, Source::RightEye, rec.manifest.eye_resolution);
  rec.scene = load(kSceneFile, Source::Scene, rec.manifest.scene_resolution);
  return rec;
}

}  // namespace gazekit
