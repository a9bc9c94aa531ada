#include "gazekit/csv_io.hpp"

#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"

#include <fstream>
#include <sstream>

namespace gazekit {

namespace {

constexpr std::size_t kFeatureColumns = 23;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string cell(const std::optional<double>& v) { return v ? format_csv(*v) : std::string(); }
std::string cell(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

struct Reader {
  std::filesystem::path path;
  std::ifstream in;
  std::size_t line_no = 0;

  Reader(const std::filesystem::path& p, const std::string& header) : path(p), in(p) {
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
    std::string first;
    if (!next(first) || first != header) fail("unexpected header");
  }

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(line_no) + ": " + what);
  }

  std::vector<std::string> fields(const std::string& line, std::size_t expected) const {
    auto f = split_fields(line);
    if (f.size() != expected) fail("expected " + std::to_string(expected) + " fields");
    return f;
  }

  std::int64_t integer(const std::string& s) const {
    long long v = 0;
    if (!parse_int64(s, v)) fail("bad integer '" + s + "'");
    return v;
  }
  std::optional<std::int64_t> opt_integer(const std::string& s) const {
    if (s.empty()) return std::nullopt;
    return integer(s);
  }
  double real(const std::string& s) const {
    double v = 0.0;
    if (!parse_double(s, v)) fail("bad number '" + s + "'");
    return v;
  }
  std::optional<double> opt_real(const std::string& s) const {
    if (s.empty()) return std::nullopt;
    return real(s);
  }
};

void put_ellipse(std::ostringstream& os, const std::optional<Ellipse>& e) {
  if (e) {
    os << ',' << format_csv(e->center.x()) << ',' << format_csv(e->center.y()) << ',' << format_csv(e->semi_major)
       << ',' << format_csv(e->semi_minor) << ',' << format_csv(e->angle);
  } else {
    os << ",,,,,";
  }
}

void put_vector(std::ostringstream& os, const std::optional<Eigen::Vector3d>& v) {
  if (v) {
    os << ',' << format_csv(v->x()) << ',' << format_csv(v->y()) << ',' << format_csv(v->z());
  } else {
    os << ",,,";
  }
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string features_file_name(Eye eye) { return std::string("features_") + std::string(to_string(eye)) + ".csv"; }

std::string features_csv_header() {
  return "frame_id,timestamp_ns,pupil_cx,pupil_cy,pupil_a,pupil_b,pupil_angle,iris_cx,iris_cy,iris_a,iris_b,"
         "iris_angle,opening_px,eyeball_cx,eyeball_cy,eyeball_r,pupil_vx,pupil_vy,pupil_vz,iris_vx,iris_vy,"
         "iris_vz,validity";
}

std::string gaze_csv_header() {
  std::string h = "scene_frame_id,left_frame_id,left_timestamp_ns,right_frame_id,right_timestamp_ns";
  for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
    const std::string name = EstimatorKey::from_index(i).name();
    h += "," + name + "_x," + name + "_y";
  }
  return h;
}

std::size_t write_features_csv(const std::filesystem::path& path, std::span<const EyeFeatures> rows) {
  auto out = open_out(path);
  out << features_csv_header() << '\n';
  for (const auto& f : rows) {
    std::ostringstream os;
    os << f.frame_id << ',' << f.timestamp_ns;
    put_ellipse(os, f.pupil);
    put_ellipse(os, f.iris);
    os << ',' << cell(f.opening_px);
    if (f.eyeball) {
      os << ',' << format_csv(f.eyeball->center.x()) << ',' << format_csv(f.eyeball->center.y()) << ','
         << format_csv(f.eyeball->radius);
    } else {
      os << ",,,";
    }
    put_vector(os, f.pupil_vector);
    put_vector(os, f.iris_vector);
    os << ',' << f.validity;
    out << os.str() << '\n';
  }
  finish(out, path);
  return rows.size();
}

std::size_t write_gaze_csv(const std::filesystem::path& path, std::span<const GazeRecord> rows) {
  auto out = open_out(path);
  out << gaze_csv_header() << '\n';
  for (const auto& r : rows) {
    std::ostringstream os;
    os << r.scene_frame_id << ',' << cell(r.left_frame_id) << ',' << cell(r.left_timestamp_ns) << ','
       << cell(r.right_frame_id) << ',' << cell(r.right_timestamp_ns);
    for (const auto& e : r.estimates) {
      if (e) {
        os << ',' << format_csv(e->x()) << ',' << format_csv(e->y());
      } else {
        os << ",,";
      }
    }
    out << os.str() << '\n';
  }
  finish(out, path);
  return rows.size();
}

std::size_t write_movements_csv(const std::filesystem::path& path, std::span<const MovementRecord> rows) {
  auto out = open_out(path);
  out << kMovementsHeader << '\n';
  for (const auto& r : rows) out << to_string(r.eye) << ',' << r.timestamp_ns << ',' << to_string(r.label) << '\n';
  finish(out, path);
  return rows.size();
}

std::size_t write_depth_csv(const std::filesystem::path& path, std::span<const DepthRecord> rows) {
  auto out = open_out(path);
  out << kDepthHeader << '\n';
  for (const auto& r : rows) {
    out << r.scene_frame_id << ',' << cell(r.marker_area_px2) << ',' << cell(r.depth_cm_powerlaw) << ','
        << cell(r.depth_cm_knn) << '\n';
  }
  finish(out, path);
  return rows.size();
}

std::vector<EyeFeatures> read_features_csv(const std::filesystem::path& path) {
  Reader rd(path, features_csv_header());
  std::vector<EyeFeatures> rows;
  std::string line;
  while (rd.next(line)) {
    const auto f = rd.fields(line, kFeatureColumns);
    EyeFeatures ef;
    ef.frame_id = rd.integer(f[0]);
    ef.timestamp_ns = rd.integer(f[1]);
    const auto ellipse = [&](std::size_t at) -> std::optional<Ellipse> {
      if (f[at].empty()) return std::nullopt;
      Ellipse e;
      e.center = {rd.real(f[at]), rd.real(f[at + 1])};
      e.semi_major = rd.real(f[at + 2]);
      e.semi_minor = rd.real(f[at + 3]);
      e.angle = rd.real(f[at + 4]);
      return e;
    };
    const auto vec = [&](std::size_t at) -> std::optional<Eigen::Vector3d> {
      if (f[at].empty()) return std::nullopt;
      return Eigen::Vector3d(rd.real(f[at]), rd.real(f[at + 1]), rd.real(f[at + 2]));
    };
    ef.pupil = ellipse(2);
    ef.iris = ellipse(7);
    ef.opening_px = rd.opt_real(f[12]);
    if (!f[13].empty()) {
      EyeballModel m;
      m.center = {rd.real(f[13]), rd.real(f[14])};
      m.radius = rd.real(f[15]);
      ef.eyeball = m;
    }
    ef.pupil_vector = vec(16);
    ef.iris_vector = vec(19);
    const auto bits = rd.integer(f[22]);
    if (bits < 0) rd.fail("negative validity");
    ef.validity = static_cast<std::uint32_t>(bits);
    if (ef.eyeball) ef.eyeball->low_confidence = (ef.validity & kEyeballLowConfidence) != 0;
    rows.push_back(std::move(ef));
  }
  return rows;
}

std::vector<GazeRecord> read_gaze_csv(const std::filesystem::path& path) {
  Reader rd(path, gaze_csv_header());
  std::vector<GazeRecord> rows;
  std::string line;
  while (rd.next(line)) {
    const auto f = rd.fields(line, 5 + 2 * EstimatorKey::kCount);
    GazeRecord r;
    r.scene_frame_id = rd.integer(f[0]);
    r.left_frame_id = rd.opt_integer(f[1]);
    r.left_timestamp_ns = rd.opt_integer(f[2]);
    r.right_frame_id = rd.opt_integer(f[3]);
    r.right_timestamp_ns = rd.opt_integer(f[4]);
    for (std::size_t i = 0; i < EstimatorKey::kCount; ++i) {
      const auto& x = f[5 + 2 * i];
      const auto& y = f[6 + 2 * i];
      if (x.empty() != y.empty()) rd.fail("half-empty estimate");
      if (!x.empty()) r.estimates[i] = Point2(rd.real(x), rd.real(y));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MovementRecord> read_movements_csv(const std::filesystem::path& path) {
  Reader rd(path, kMovementsHeader);
  std::vector<MovementRecord> rows;
  std::string line;
  while (rd.next(line)) {
    const auto f = rd.fields(line, 3);
    MovementRecord r;
    if (f[0] == "left") {
      r.eye = Eye::Left;
    } else if (f[0] == "right") {
      r.eye = Eye::Right;
    } else {
      rd.fail("bad eye '" + f[0] + "'");
    }
    r.timestamp_ns = rd.integer(f[1]);
    const auto label = parse_movement_label(f[2]);
    if (!label) rd.fail("bad label '" + f[2] + "'");
    r.label = *label;
    rows.push_back(r);
  }
  return rows;
}

std::vector<DepthRecord> read_depth_csv(const std::filesystem::path& path) {
  Reader rd(path, kDepthHeader);
  std::vector<DepthRecord> rows;
  std::string line;
  while (rd.next(line)) {
    const auto f = rd.fields(line, 4);
    DepthRecord r;
    r.scene_frame_id = rd.integer(f[0]);
    r.marker_area_px2 = rd.opt_real(f[1]);
    r.depth_cm_powerlaw = rd.opt_real(f[2]);
    r.depth_cm_knn = rd.opt_real(f[3]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gazekit
