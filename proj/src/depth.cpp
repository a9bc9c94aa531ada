#include "gazekit/depth.hpp"

#include "gazekit/error.hpp"
#include "gazekit/knn.hpp"
#include "gazekit/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace gazekit {

double depth_powerlaw(const PowerLawDepth& model, double area) {
  if (!(area > 0.0)) throw Error(ErrorCode::NonPositiveArea, "marker area must be positive");
  return model.a * std::pow(area, model.b) + model.c;
}

double area_for_depth(const PowerLawDepth& model, double depth) {
  const double base = (depth - model.c) / model.a;
  if (!(base > 0.0) || model.b == 0.0) throw Error(ErrorCode::DegenerateInput, "depth outside the model range");
  return std::pow(base, 1.0 / model.b);
}

PowerLawDepth fit_powerlaw(std::span<const DepthSample> samples, const LMSettings& settings) {
  if (samples.size() < 4) throw Error(ErrorCode::FitDiverged, "need at least four depth samples");
  double min_area = HUGE_VAL, max_area = 0.0;
  for (const auto& s : samples) {
    if (!(s.area > 0.0) || !std::isfinite(s.depth)) throw Error(ErrorCode::FitDiverged, "invalid depth sample");
    min_area = std::min(min_area, s.area);
    max_area = std::max(max_area, s.area);
  }
  if (max_area < 2.0 * min_area) throw Error(ErrorCode::FitDiverged, "sample areas span less than 2x");

  const auto smallest = std::min_element(samples.begin(), samples.end(),
                                         [](const DepthSample& l, const DepthSample& r) { return l.area < r.area; });
  // Parameters are optimised relative to the starting guess: p = (a/a0, b, c/depth_scale).
  const double a0 = smallest->depth * std::sqrt(smallest->area);
  double depth_scale = 0.0;
  for (const auto& s : samples) depth_scale = std::max(depth_scale, std::abs(s.depth));
  if (!(a0 > 0.0) || depth_scale == 0.0) throw Error(ErrorCode::FitDiverged, "depth samples must be positive");

  const ResidualFn residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const double model = p[0] * a0 * std::pow(s.area, p[1]) + p[2] * depth_scale;
      r[static_cast<Eigen::Index>(i)] = (s.depth - model) / depth_scale;
    }
    return r;
  };
  Eigen::VectorXd init(3);
  init << 1.0, -0.5, 0.0;
  const LMResult fit = lm_fit(residual, init, settings);
  PowerLawDepth out{fit.params[0] * a0, fit.params[1], fit.params[2] * depth_scale};
  if (!std::isfinite(out.a) || !std::isfinite(out.b) || !std::isfinite(out.c) || !(out.a > 0.0) ||
      !(out.b < 0.0)) {
    throw Error(ErrorCode::FitDiverged, "power-law fit left the valid parameter region");
  }
  return out;
}

double depth_knn(std::span<const DepthSample> samples, double query_area) {
  std::vector<Sample1D> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back({s.area, s.depth});
  return knn_regress(pts, query_area, 2);
}

std::vector<DepthSample> read_depth_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<DepthSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("area", 0) == 0) continue;
    const auto comma = line.find(',');
    DepthSample s;
    if (comma == std::string::npos || !parse_double(std::string_view(line).substr(0, comma), s.area) ||
        !parse_double(std::string_view(line).substr(comma + 1), s.depth) || !(s.area > 0.0) || !(s.depth > 0.0)) {
      throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(lineno) + ": bad depth sample");
    }
    out.push_back(s);
  }
  return out;
}

void write_depth_samples(const std::filesystem::path& path, std::span<const DepthSample> samples) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "area_px2,depth_cm\n";
  for (const auto& s : samples) out << format_exact(s.area) << ',' << format_exact(s.depth) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace gazekit
