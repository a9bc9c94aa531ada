#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gazekit {

using Point2 = Eigen::Vector2d;

/// Ellipse in image pixels. `angle` is the direction of the major axis,
/// measured from +x towards +y and wrapped into [0, pi).
struct Ellipse {
  Point2 center{0.0, 0.0};
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;

  Point2 major_direction() const;
  Point2 minor_direction() const;
  /// Point on the boundary at eccentric anomaly `t`.
  Point2 point_at(double t) const;
};

/// Direct least-squares conic fit constrained to ellipses (numerically stable
/// variant with centred/scaled coordinates). Throws DegenerateInput for fewer
/// than five points, collinear input, or a non-elliptic solution.
Ellipse fit_ellipse(std::span<const Point2> points);

/// Interpolating cubic spline through ordered 2-D control points with natural
/// end conditions. The curve parameter is normalised chord length in [0, 1].
class EyelidSpline {
 public:
  explicit EyelidSpline(std::vector<Point2> control_points);

  Point2 evaluate(double t) const;
  std::vector<Point2> sample(std::size_t count) const;

  const std::vector<Point2>& control_points() const { return points_; }
  /// Parameter value of each control point.
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<Point2> points_;
  std::vector<double> knots_;
  std::vector<Point2> second_derivatives_;
};

struct EyeCorners {
  Point2 nasal{0.0, 0.0};
  Point2 temporal{0.0, 0.0};
  Point2 corner_vector{1.0, 0.0};  // unit, nasal -> temporal
};

struct EyelidFit {
  EyelidSpline upper;
  EyelidSpline lower;
  EyeCorners corners;
};

/// Both landmark lists must be ordered nasal -> temporal with at least four
/// points each. Corners are the midpoints of the paired curve endpoints.
EyelidFit fit_eyelid_splines(std::span<const Point2> upper_points, std::span<const Point2> lower_points);

struct OpeningSegment {
  double length = 0.0;
  Point2 upper_point{0.0, 0.0};
  Point2 lower_point{0.0, 0.0};
};

inline constexpr std::size_t kOpeningUpperSamples = 100;
inline constexpr std::size_t kOpeningLowerSamples = 200;

/// Maximal lid separation measured along lines perpendicular to the corner
/// vector. For every upper-lid sample the nearest crossing of the
/// perpendicular line with the lower-lid polyline is taken; the result is the
/// largest of those distances. Returns nullopt when no line crosses the lower lid.
std::optional<OpeningSegment> eye_opening_segment(const EyelidSpline& upper, const EyelidSpline& lower,
                                                  const EyeCorners& corners,
                                                  std::size_t upper_samples = kOpeningUpperSamples,
                                                  std::size_t lower_samples = kOpeningLowerSamples);

/// Opening in pixels; 0 for closed or degenerate configurations.
double compute_eye_opening(const EyelidSpline& upper, const EyelidSpline& lower, const EyeCorners& corners);

struct MarkerObservation {
  std::int64_t scene_frame_id = 0;
  std::int64_t timestamp_ns = 0;
  Point2 center{0.0, 0.0};
  std::vector<Point2> polygon;
  double area = 0.0;
  bool valid = false;
};

Point2 centroid(std::span<const Point2> points);
/// Absolute shoelace area of the ordered polygon.
double polygon_area(std::span<const Point2> polygon);

/// Never throws: degenerate input yields an observation with valid == false.
MarkerObservation marker_from_landmarks(std::span<const Point2> points, std::int64_t timestamp_ns,
                                        std::int64_t scene_frame_id);

}  // namespace gazekit
