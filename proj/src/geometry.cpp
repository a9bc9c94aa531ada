#include "gazekit/geometry.hpp"

#include "gazekit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gazekit {

Point2 Ellipse::major_direction() const { return {std::cos(angle), std::sin(angle)}; }

Point2 Ellipse::minor_direction() const { return {-std::sin(angle), std::cos(angle)}; }

Point2 Ellipse::point_at(double t) const {
  return center + semi_major * std::cos(t) * major_direction() + semi_minor * std::sin(t) * minor_direction();
}

namespace {

double wrap_half_turn(double angle) {
  double a = std::fmod(angle, std::numbers::pi);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

// Conic A x^2 + B xy + C y^2 + D x + E y + F = 0 to centre/axes/angle form.
Ellipse conic_to_ellipse(const Eigen::Matrix<double, 6, 1>& conic) {
  const double A = conic[0], B = conic[1], C = conic[2], D = conic[3], E = conic[4], F = conic[5];
  Eigen::Matrix2d centre_system;
  centre_system << 2.0 * A, B, B, 2.0 * C;
  const double det = centre_system.determinant();
  if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::DegenerateInput, "conic has no unique centre");
  const Point2 c = centre_system.inverse() * Point2(-D, -E);
  double q = F + 0.5 * (D * c.x() + E * c.y());

  Eigen::Matrix2d quad;
  quad << A, 0.5 * B, 0.5 * B, C;
  if (q > 0.0) {
    quad = -quad;
    q = -q;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(quad);
  const Eigen::Vector2d lambda = eig.eigenvalues();
  if (!(lambda[0] > 0.0 && lambda[1] > 0.0 && q < 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "fitted conic is not a real ellipse");
  }
  // Smaller eigenvalue belongs to the major axis.
  Ellipse e;
  e.center = c;
  e.semi_major = std::sqrt(-q / lambda[0]);
  e.semi_minor = std::sqrt(-q / lambda[1]);
  const Eigen::Vector2d major = eig.eigenvectors().col(0);
  e.angle = wrap_half_turn(std::atan2(major.y(), major.x()));
  return e;
}

}  // namespace

Ellipse fit_ellipse(std::span<const Point2> points) {
  const auto n = points.size();
  if (n < 5) throw Error(ErrorCode::DegenerateInput, "ellipse fit needs at least 5 points");

  Point2 mean = Point2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& p : points) spread += (p - mean).squaredNorm();
  spread = std::sqrt(spread / (2.0 * static_cast<double>(n)));
  if (!(spread > 0.0) || !std::isfinite(spread)) throw Error(ErrorCode::DegenerateInput, "coincident points");

  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 q = (points[i] - mean) / spread;
    cov += q * q.transpose();
    d1.row(static_cast<Eigen::Index>(i)) << q.x() * q.x(), q.x() * q.y(), q.y() * q.y();
    d2.row(static_cast<Eigen::Index>(i)) << q.x(), q.y(), 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> cov_eig(cov);
  if (cov_eig.eigenvalues()[0] <= 1e-12 * cov_eig.eigenvalues()[1]) {
    throw Error(ErrorCode::DegenerateInput, "collinear points");
  }

  const Eigen::Matrix3d s1 = d1.transpose() * d1;
  const Eigen::Matrix3d s2 = d1.transpose() * d2;
  const Eigen::Matrix3d s3 = d2.transpose() * d2;
  const Eigen::Matrix3d t = -s3.ldlt().solve(s2.transpose());
  const Eigen::Matrix3d m = s1 + s2 * t;
  Eigen::Matrix3d reduced;
  reduced.row(0) = 0.5 * m.row(2);
  reduced.row(1) = -m.row(1);
  reduced.row(2) = 0.5 * m.row(0);

  Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  int best = -1;
  double best_lambda = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_vec;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d v = eig.eigenvectors().col(k).real();
    const double norm = v.norm();
    if (!(norm > 0.0)) continue;
    v /= norm;
    const double constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
    const double lambda = std::abs(eig.eigenvalues()[k].real());
    if (constraint > 0.0 && lambda < best_lambda) {
      best = k;
      best_lambda = lambda;
      best_vec = v;
    }
  }
  if (best < 0) throw Error(ErrorCode::DegenerateInput, "no elliptic solution");

  Eigen::Matrix<double, 6, 1> conic;
  conic.head<3>() = best_vec;
  conic.tail<3>() = t * best_vec;

  Ellipse e = conic_to_ellipse(conic);
  e.center = mean + spread * e.center;
  e.semi_major *= spread;
  e.semi_minor *= spread;
  if (!std::isfinite(e.semi_major) || !std::isfinite(e.center.x()) || !std::isfinite(e.center.y())) {
    throw Error(ErrorCode::DegenerateInput, "non-finite ellipse");
  }
  return e;
}

EyelidSpline::EyelidSpline(std::vector<Point2> control_points) {
  for (const auto& p : control_points) {
    if (!p.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite eyelid point");
    if (points_.empty() || (p - points_.back()).norm() > 0.0) points_.push_back(p);
  }
  const auto n = points_.size();
  if (n < 4) throw Error(ErrorCode::DegenerateInput, "eyelid spline needs at least 4 distinct points");

  knots_.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) knots_[i] = knots_[i - 1] + (points_[i] - points_[i - 1]).norm();
  const double total = knots_.back();
  for (auto& k : knots_) k /= total;
  knots_.back() = 1.0;

  // Tridiagonal system for the second derivatives; natural ends pin them to 0.
  second_derivatives_.assign(n, Point2::Zero());
  const std::size_t m = n - 2;
  std::vector<double> diag(m), upper(m), lower(m);
  std::vector<Point2> rhs(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = j + 1;
    const double h0 = knots_[i] - knots_[i - 1];
    const double h1 = knots_[i + 1] - knots_[i];
    lower[j] = h0;
    diag[j] = 2.0 * (h0 + h1);
    upper[j] = h1;
    rhs[j] = 6.0 * ((points_[i + 1] - points_[i]) / h1 - (points_[i] - points_[i - 1]) / h0);
  }
  for (std::size_t j = 1; j < m; ++j) {
    const double w = lower[j] / diag[j - 1];
    diag[j] -= w * upper[j - 1];
    rhs[j] -= w * rhs[j - 1];
  }
  std::vector<Point2> solution(m);
  solution[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::size_t j = m - 1; j-- > 0;) solution[j] = (rhs[j] - upper[j] * solution[j + 1]) / diag[j];
  for (std::size_t j = 0; j < m; ++j) second_derivatives_[j + 1] = solution[j];
}

Point2 EyelidSpline::evaluate(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  i = std::min(i, knots_.size() - 2);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return a * points_[i] + b * points_[i + 1] +
         ((a * a * a - a) * second_derivatives_[i] + (b * b * b - b) * second_derivatives_[i + 1]) * (h * h / 6.0);
}

std::vector<Point2> EyelidSpline::sample(std::size_t count) const {
  std::vector<Point2> out;
  out.reserve(count);
  if (count == 1) {
    out.push_back(evaluate(0.5));
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(evaluate(static_cast<double>(i) / static_cast<double>(count - 1)));
  }
  return out;
}

EyelidFit fit_eyelid_splines(std::span<const Point2> upper_points, std::span<const Point2> lower_points) {
  if (upper_points.size() < 4 || lower_points.size() < 4) {
    throw Error(ErrorCode::DegenerateInput, "eyelids need at least 4 points each");
  }
  EyelidSpline upper(std::vector<Point2>(upper_points.begin(), upper_points.end()));
  EyelidSpline lower(std::vector<Point2>(lower_points.begin(), lower_points.end()));

  EyeCorners corners;
  corners.nasal = 0.5 * (upper_points.front() + lower_points.front());
  corners.temporal = 0.5 * (upper_points.back() + lower_points.back());
  const Point2 span_vec = corners.temporal - corners.nasal;
  const double len = span_vec.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::DegenerateInput, "eye corners coincide");
  corners.corner_vector = span_vec / len;
  return EyelidFit{std::move(upper), std::move(lower), corners};
}

std::optional<OpeningSegment> eye_opening_segment(const EyelidSpline& upper, const EyelidSpline& lower,
                                                  const EyeCorners& corners, std::size_t upper_samples,
                                                  std::size_t lower_samples) {
  const Point2 normal(-corners.corner_vector.y(), corners.corner_vector.x());
  const auto ups = upper.sample(upper_samples);
  const auto polyline = lower.sample(lower_samples);

  std::optional<OpeningSegment> best;
  for (const auto& u : ups) {
    std::optional<OpeningSegment> nearest;
    for (std::size_t j = 0; j + 1 < polyline.size(); ++j) {
      const Point2 p = polyline[j];
      const Point2 edge = polyline[j + 1] - p;
      // Solve u + s * normal = p + tau * edge.
      const double det = edge.x() * normal.y() - normal.x() * edge.y();
      if (std::abs(det) <= 1e-14 * edge.norm()) continue;
      const Point2 rhs = p - u;
      const double s = (edge.x() * rhs.y() - edge.y() * rhs.x()) / det;
      const double tau = (normal.x() * rhs.y() - normal.y() * rhs.x()) / det;
      if (tau < 0.0 || tau > 1.0) continue;
      const double dist = std::abs(s);
      if (!nearest || dist < nearest->length) {
        nearest = OpeningSegment{dist, u, u + s * normal};
      }
    }
    if (nearest && (!best || nearest->length > best->length)) best = nearest;
  }
  return best;
}

double compute_eye_opening(const EyelidSpline& upper, const EyelidSpline& lower, const EyeCorners& corners) {
  const auto seg = eye_opening_segment(upper, lower, corners);
  return seg ? seg->length : 0.0;
}

Point2 centroid(std::span<const Point2> points) {
  Point2 c = Point2::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

double polygon_area(std::span<const Point2> polygon) {
  const auto n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice);
}

MarkerObservation marker_from_landmarks(std::span<const Point2> points, std::int64_t timestamp_ns,
                                        std::int64_t scene_frame_id) {
  MarkerObservation obs;
  obs.scene_frame_id = scene_frame_id;
  obs.timestamp_ns = timestamp_ns;
  obs.polygon.assign(points.begin(), points.end());
  if (points.size() < 3) return obs;
  for (const auto& p : points) {
    if (!p.allFinite()) return obs;
  }
  obs.center = centroid(points);
  obs.area = polygon_area(points);
  obs.valid = obs.area > 0.0;
  return obs;
}

}  // namespace gazekit
