#pragma once

// Layer profiles and the localization statistics derived from them.
//
// A profile holds one score per layer 0..L, layer 0 being the input
// embedding. The center of mass weights the relative depth l/L by the
// score's excess over the weakest layer among 1..L:
//
//   COM = sum_{l=1..L} (l/L) * D_l / sum_{l=1..L} D_l,
//   D_l = score_l - min_{1<=l'<=L} score_l'
//
// and is undefined for a profile that is flat over layers 1..L.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerprobe/tables.hpp"

namespace layerprobe {

enum class Metric { kSelectivity, kRaw };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);  // "selectivity" | "raw"

struct LayerProfile {
  std::string model;
  std::string method;
  std::string feature;
  std::vector<double> scores;  // index = layer

  std::size_t blocks() const { return scores.size() - 1; }
};

struct LocalizationSummary {
  std::optional<double> com;
  std::size_t argmax_layer = 0;
  std::vector<double> delta;
  double best_score = 0.0;
};

// max(scores) - scores[l]
std::vector<double> delta_from_best(std::span<const double> scores);

// Smallest index among the maxima.
std::size_t argmax_layer(std::span<const double> scores);

// Requires at least two entries (layer 0 plus one block).
std::optional<double> center_of_mass(std::span<const double> scores);

LocalizationSummary localize(std::span<const double> scores);

// Evenly spaced coordinates i / (points - 1).
std::vector<double> grid_coordinates(std::size_t points);

// Piecewise-linear interpolation of scores placed at l / L onto the grid.
std::vector<double> resample_to_grid(std::span<const double> scores, std::size_t points);

struct CategoryProfile {
  std::string category;
  std::size_t members = 0;          // profiles aggregated (feature x model)
  std::vector<double> mean_delta;   // on the common grid
  std::optional<double> com;        // of the aggregated profile
  std::size_t argmax_point = 0;     // grid index of the smallest mean delta
  std::optional<double> mean_member_com;  // mean of defined per-profile COMs
};

struct CategoryAggregation {
  std::vector<CategoryProfile> categories;
  std::vector<std::string> warnings;
};

// Averages the resampled delta-from-best profiles of each category's members.
// Categories in `category_order` (default: all labels in the map, sorted)
// with no member profiles are omitted and reported in `warnings`.
CategoryAggregation category_profile(const std::vector<LayerProfile>& profiles,
                                     const std::map<std::string, std::string>& category_map,
                                     std::size_t points,
                                     const std::vector<std::string>& category_order = {});

// Profiles per (model, method, feature) in first-appearance order. Every
// profile must have layers 0..L without gaps or duplicates.
std::vector<LayerProfile> build_profiles(const ResultTable& results, Metric metric);

std::vector<ProfileRow> profile_rows(const std::vector<LayerProfile>& profiles);
std::vector<LayerProfile> profiles_from_rows(const std::vector<ProfileRow>& rows);

struct SummaryRow {
  std::string model;
  std::string method;
  Metric metric = Metric::kSelectivity;
  double first = 0.0;
  double last = 0.0;
  double best = 0.0;
  double worst = 0.0;
  double mean = 0.0;
  std::size_t features = 0;
};

// Per (model, method, metric): feature means of the first-layer, last-layer,
// best-layer, worst-layer and all-layer-mean scores.
std::vector<SummaryRow> layer_summary(const ResultTable& results);

struct TailStats {
  double best_layer_fraction = 0.0;  // argmax with l/L > 1 - tail_fraction
  double mean_drop = 0.0;            // mean delta_from_best over tail layers
  std::size_t pairs = 0;
};

TailStats tail_stats(const std::vector<LayerProfile>& profiles, double tail_fraction);
TailStats tail_stats(const ResultTable& results, Metric metric, double tail_fraction);

struct MethodGain {
  Metric metric = Metric::kSelectivity;
  double median_gain = 0.0;
  double fraction_features_improved = 0.0;
  std::size_t pairs = 0;
};

// Gain of contextualized extraction (template, averaged) over isolated, in
// the all-layer mean score, per (model, feature, contextual method). nullopt
// when the results lack isolated or contextual rows for a common feature.
std::optional<MethodGain> method_gain(const ResultTable& results, Metric metric);

struct SimilarityMatrix {
  std::string method;
  std::vector<std::string> models;
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<std::size_t>> shared;  // features used per pair
  std::vector<std::string> excluded_features;
};

struct ComVectors {
  std::vector<std::string> features;
  std::vector<std::string> models;
  std::vector<std::vector<std::optional<double>>> com;  // [model][feature]
};

// Pairwise Spearman correlations of the models' COM vectors over features not
// excluded and defined in both models; fewer than 3 such features is an error.
SimilarityMatrix model_similarity(const ComVectors& vectors,
                                  const std::vector<std::string>& exclude,
                                  std::string method = {});

}  // namespace layerprobe
