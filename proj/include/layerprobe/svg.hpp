#pragma once

#include <optional>
#include <string>
#include <vector>

#include "layerprobe/localization.hpp"

namespace layerprobe {

// Delta-from-best heatmap: one row per feature or category, one column per
// normalized-depth grid point. Lower values render yellow.
struct Heatmap {
  std::string title;
  std::vector<double> columns;                  // lambda of each column
  std::vector<std::string> row_labels;
  std::vector<std::vector<double>> values;      // [row][column]
  std::vector<std::optional<double>> com;       // black dot, lambda
  std::vector<std::optional<double>> argmax;    // red dot, lambda
};

// Deterministic SVG text. Cells are <rect class="cell">, COM dots
// <circle class="com">, argmax dots <circle class="argmax">.
std::string render_heatmap(const Heatmap& map);

std::string render_similarity(const SimilarityMatrix& matrix);

std::string xml_escape(const std::string& s);

}  // namespace layerprobe
