#pragma once

#include "gazekit/lm.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace gazekit {

/// depth(A) = a * A^b + c, area in px^2, depth in cm.
struct PowerLawDepth {
  double a = 13550.0;
  double b = -0.4656;
  double c = -18.02;
};

struct DepthSample {
  double area = 0.0;   // px^2
  double depth = 0.0;  // cm
};

/// Throws NonPositiveArea.
double depth_powerlaw(const PowerLawDepth& model, double area);

/// Inverse of depth_powerlaw; throws DegenerateInput when depth <= c.
double area_for_depth(const PowerLawDepth& model, double depth);

/// Refits (a, b, c) with lm_fit. Throws FitDiverged for fewer than four
/// samples, an area span below 2x, or a non-finite/invalid result.
PowerLawDepth fit_powerlaw(std::span<const DepthSample> samples, const LMSettings& settings = {});

/// k = 2 inverse-distance regression on marker area. Throws TooFewSamples.
double depth_knn(std::span<const DepthSample> samples, double query_area);

/// `area_px2,depth_cm` with a header row.
std::vector<DepthSample> read_depth_samples(const std::filesystem::path& path);
void write_depth_samples(const std::filesystem::path& path, std::span<const DepthSample> samples);

}  // namespace gazekit
