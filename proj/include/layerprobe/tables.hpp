#pragma once

// Row types and CSV (de)serialization for the files exchanged between the
// probe, analyze, compare and heatmap commands.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerprobe {

struct ResultRow {
  std::string model;
  std::string method;
  std::string feature;
  std::size_t layer = 0;
  double r2_obs = 0.0;
  double r2_rand = 0.0;
  double selectivity = 0.0;
  std::size_t n_folds = 0;
  double alpha_mode = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

inline constexpr std::string_view kResultsHeader =
    "model,method,feature,layer,r2_obs,r2_rand,selectivity,n_folds,alpha_mode";
inline constexpr std::string_view kProfilesHeader =
    "model,method,feature,layer,lambda,score,delta";

std::string results_csv(const ResultTable& table);
void write_results_csv(const std::filesystem::path& path, const ResultTable& table);

// Parses and validates a results file; errors name the 1-based line.
ResultTable parse_results_csv(std::string_view contents, std::string_view source);
ResultTable read_results_csv(const std::filesystem::path& path);

struct ProfileRow {
  std::string model;
  std::string method;
  std::string feature;
  std::size_t layer = 0;
  double lambda = 0.0;
  double score = 0.0;
  double delta = 0.0;
};

std::string profiles_csv(const std::vector<ProfileRow>& rows);
std::vector<ProfileRow> parse_profiles_csv(std::string_view contents, std::string_view source);
std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path);

// Throws DataError if an identifier would break the comma-separated format.
void check_csv_field(std::string_view field, std::string_view what);

}  // namespace layerprobe
