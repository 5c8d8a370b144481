#pragma once

#include <span>
#include <vector>

namespace layerprobe {

// 1-based fractional ranks; tied values share the average of their ranks.
std::vector<double> fractional_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of fractional ranks. Requires equal lengths >= 3 and
// non-constant inputs; throws DataError otherwise.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace layerprobe
