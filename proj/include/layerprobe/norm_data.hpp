#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerprobe {

// Word x feature matrix of norm values with an explicit missing mask.
// Immutable after construction; safe for concurrent reads.
class NormTable {
 public:
  NormTable() = default;

  // Validates the invariants (unique ids, finite values, complete category
  // map) and throws DataError on violation. `values` is row-major
  // words.size() x features.size(); `present` marks non-missing cells.
  NormTable(std::vector<std::string> words, std::vector<std::string> features,
            std::vector<double> values, std::vector<std::uint8_t> present,
            std::map<std::string, std::string> categories);

  std::size_t word_count() const { return words_.size(); }
  std::size_t feature_count() const { return features_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& features() const { return features_; }
  const std::map<std::string, std::string>& categories() const { return categories_; }

  // Sorted unique category labels in use.
  std::vector<std::string> category_labels() const;

  std::size_t feature_index(std::string_view feature) const;  // throws if unknown
  std::optional<std::size_t> find_word(std::string_view word) const;

  bool has_value(std::size_t row, std::size_t col) const {
    return present_[row * features_.size() + col] != 0;
  }
  double value(std::size_t row, std::size_t col) const {
    return values_[row * features_.size() + col];
  }
  std::optional<double> get(std::size_t row, std::size_t col) const {
    if (!has_value(row, col)) return std::nullopt;
    return value(row, col);
  }

  // Column view with std::nullopt for masked cells.
  std::vector<std::optional<double>> column(std::size_t col) const;
  const std::string& category_of(std::string_view feature) const;

  // New table restricted to the given rows (in that order) and features.
  NormTable subset(const std::vector<std::size_t>& rows,
                   const std::vector<std::string>& features) const;

 private:
  std::vector<std::string> words_;
  std::vector<std::string> features_;
  std::vector<double> values_;
  std::vector<std::uint8_t> present_;
  std::map<std::string, std::string> categories_;
  std::map<std::string, std::size_t, std::less<>> word_index_;
  std::map<std::string, std::size_t, std::less<>> feature_index_;
};

struct WordSubset {
  std::vector<std::size_t> indices;  // rows of the originating NormTable
  std::uint64_t seed = 0;
  std::size_t size() const { return indices.size(); }
};

// Norm TSV: header `word<TAB>f1<TAB>...`, blank cell = missing.
// Category TSV: `feature<TAB>category` rows, optional header line.
NormTable load_norm_table(const std::filesystem::path& path,
                          const std::filesystem::path& category_path);

// Parses the category file alone.
std::map<std::string, std::string> load_category_map(const std::filesystem::path& path);

void write_norm_table(const std::filesystem::path& path, const NormTable& table);
void write_category_map(const std::filesystem::path& path,
                        const std::map<std::string, std::string>& categories,
                        const std::vector<std::string>& feature_order);

std::size_t feature_coverage(const NormTable& table, std::string_view feature);

// Keeps features with coverage > min_coverage, ranks words by how many kept
// features cover them (descending), ties by ascending byte order of the word,
// and returns the first target_size rows.
WordSubset select_word_subset_greedy(const NormTable& table, std::size_t min_coverage,
                                     std::size_t target_size);

// Features retained by the coverage filter used above, in table order.
std::vector<std::string> features_above_coverage(const NormTable& table,
                                                 std::size_t min_coverage);

// `repeats` uniform samples without replacement; subset r depends only on
// (seed, r).
std::vector<WordSubset> sample_subsets(const NormTable& table, std::size_t subset_size,
                                       std::size_t repeats, std::uint64_t seed);

// Seed of repeat r of a subset stream, shared with the probe engine.
std::uint64_t subset_seed(std::uint64_t seed, std::size_t repeat);

// Feature categories with their dataset counts, in the order used for
// reporting psychNorms analyses.
struct CategoryCount {
  std::string_view label;
  std::size_t features;
};
const std::vector<CategoryCount>& psychnorms_categories();

}  // namespace layerprobe
