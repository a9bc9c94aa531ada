#include "gazekit/knn.hpp"

#include "gazekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace gazekit {

double knn_regress(std::span<const Sample1D> samples, double query, std::size_t k) {
  if (k == 0 || samples.size() < k) {
    throw Error(ErrorCode::TooFewSamples,
                "knn needs " + std::to_string(k) + " samples, got " + std::to_string(samples.size()));
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto closer = [&](std::size_t a, std::size_t b) {
    const double da = std::abs(samples[a].x - query);
    const double db = std::abs(samples[b].x - query);
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);

  if (std::abs(samples[order[0]].x - query) == 0.0) return samples[order[0]].y;
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / std::abs(samples[order[i]].x - query);
    weighted += w * samples[order[i]].y;
    total += w;
  }
  return weighted / total;
}

}  // namespace gazekit
