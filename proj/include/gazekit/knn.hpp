#pragma once

#include <cstddef>
#include <span>

namespace gazekit {

struct Sample1D {
  double x = 0.0;
  double y = 0.0;
};

/// Inverse-distance-weighted mean of the targets of the k nearest samples
/// (ties broken by sample order). An exact hit returns that sample's target.
/// Throws TooFewSamples when fewer than k samples are given.
double knn_regress(std::span<const Sample1D> samples, double query, std::size_t k = 2);

}  // namespace gazekit
