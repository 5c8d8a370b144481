#include "layerprobe/norm_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"
#include "layerprobe/rng.hpp"

namespace layerprobe {

NormTable::NormTable(std::vector<std::string> words, std::vector<std::string> features,
                     std::vector<double> values, std::vector<std::uint8_t> present,
                     std::map<std::string, std::string> categories)
    : words_(std::move(words)),
      features_(std::move(features)),
      values_(std::move(values)),
      present_(std::move(present)) {
  const std::size_t cells = words_.size() * features_.size();
  if (values_.size() != cells || present_.size() != cells)
    throw DataError("norm table: value matrix does not match word x feature shape");

  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!word_index_.emplace(words_[i], i).second)
      throw DataError("norm table: duplicate word \"" + words_[i] + "\"");
  }
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (!feature_index_.emplace(features_[j], j).second)
      throw DataError("norm table: duplicate feature \"" + features_[j] + "\"");
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (present_[c] && !std::isfinite(values_[c]))
      throw DataError("norm table: non-finite value for word \"" +
                      words_[c / features_.size()] + "\", feature \"" +
                      features_[c % features_.size()] + "\"");
  }
  for (const auto& f : features_) {
    auto it = categories.find(f);
    if (it == categories.end())
      throw DataError("norm table: feature \"" + f + "\" has no category");
    categories_.emplace(f, it->second);
  }
}

std::vector<std::string> NormTable::category_labels() const {
  std::set<std::string> labels;
  for (const auto& [f, c] : categories_) labels.insert(c);
  return {labels.begin(), labels.end()};
}

std::size_t NormTable::feature_index(std::string_view feature) const {
  auto it = feature_index_.find(feature);
  if (it == feature_index_.end())
    throw DataError("unknown feature \"" + std::string(feature) + "\"");
  return it->second;
}

std::optional<std::size_t> NormTable::find_word(std::string_view word) const {
  auto it = word_index_.find(word);
  if (it == word_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::optional<double>> NormTable::column(std::size_t col) const {
  std::vector<std::optional<double>> out(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) out[i] = get(i, col);
  return out;
}

const std::string& NormTable::category_of(std::string_view feature) const {
  return categories_.at(features_[feature_index(feature)]);
}

NormTable NormTable::subset(const std::vector<std::size_t>& rows,
                            const std::vector<std::string>& features) const {
  std::vector<std::size_t> cols;
  cols.reserve(features.size());
  for (const auto& f : features) cols.push_back(feature_index(f));

  std::vector<std::string> words;
  std::vector<double> values;
  std::vector<std::uint8_t> present;
  words.reserve(rows.size());
  values.reserve(rows.size() * cols.size());
  present.reserve(rows.size() * cols.size());
  for (std::size_t r : rows) {
    if (r >= words_.size()) throw DataError("norm table: row index out of range");
    words.push_back(words_[r]);
    for (std::size_t c : cols) {
      values.push_back(value(r, c));
      present.push_back(present_[r * features_.size() + c]);
    }
  }
  std::map<std::string, std::string> cats;
  for (const auto& f : features) cats.emplace(f, categories_.at(f));
  return NormTable(std::move(words), features, std::move(values), std::move(present),
                   std::move(cats));
}

std::map<std::string, std::string> load_category_map(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = text::split(lines[i], '\t');
    if (cells.size() != 2)
      throw DataError(path.string() + ": line " + std::to_string(i + 1) +
                      ": expected 2 tab-separated columns");
    if (i == 0 && cells[0] == "feature" && cells[1] == "category") continue;
    if (cells[0].empty() || cells[1].empty())
      throw DataError(path.string() + ": line " + std::to_string(i + 1) + ": empty field");
    if (!out.emplace(std::string(cells[0]), std::string(cells[1])).second)
      throw DataError(path.string() + ": duplicate feature \"" + std::string(cells[0]) +
                      "\"");
  }
  return out;
}

NormTable load_norm_table(const std::filesystem::path& path,
                          const std::filesystem::path& category_path) {
  const auto lines = text::read_lines(path);
  if (lines.empty()) throw DataError(path.string() + ": missing header row");
  const auto header = text::split(lines[0], '\t');
  if (header.empty() || header[0] != "word")
    throw DataError(path.string() + ": header must start with \"word\"");

  std::vector<std::string> features;
  std::set<std::string_view> seen_features;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw DataError(path.string() + ": empty feature name in header");
    if (!seen_features.insert(header[j]).second)
      throw DataError(path.string() + ": duplicate feature \"" + std::string(header[j]) +
                      "\"");
    features.emplace_back(header[j]);
  }

  std::vector<std::string> words;
  std::vector<double> values;
  std::vector<std::uint8_t> present;
  std::set<std::string> seen_words;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = text::split(lines[i], '\t');
    const std::string where = path.string() + ": row " + std::to_string(i + 1);
    if (cells.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) +
                      " columns, found " + std::to_string(cells.size()));
    std::string word(cells[0]);
    if (word.empty()) throw DataError(where + ": empty word");
    if (!seen_words.insert(word).second)
      throw DataError(path.string() + ": duplicate word \"" + word + "\"");
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        values.push_back(0.0);
        present.push_back(0);
        continue;
      }
      auto v = text::parse_double(cells[j]);
      if (!v || !std::isfinite(*v))
        throw DataError(where + ", column " + std::to_string(j + 1) + " (" + features[j - 1] +
                        "): cannot parse \"" + std::string(cells[j]) + "\" as a finite number");
      values.push_back(*v);
      present.push_back(1);
    }
    words.push_back(std::move(word));
  }

  return NormTable(std::move(words), std::move(features), std::move(values),
                   std::move(present), load_category_map(category_path));
}

void write_norm_table(const std::filesystem::path& path, const NormTable& table) {
  std::string out = "word";
  for (const auto& f : table.features()) out += "\t" + f;
  out += "\n";
  for (std::size_t i = 0; i < table.word_count(); ++i) {
    out += table.words()[i];
    for (std::size_t j = 0; j < table.feature_count(); ++j) {
      out += "\t";
      if (table.has_value(i, j)) out += text::format_double(table.value(i, j));
    }
    out += "\n";
  }
  text::write_file(path, out);
}

void write_category_map(const std::filesystem::path& path,
                        const std::map<std::string, std::string>& categories,
                        const std::vector<std::string>& feature_order) {
  std::string out = "feature\tcategory\n";
  for (const auto& f : feature_order) out += f + "\t" + categories.at(f) + "\n";
  text::write_file(path, out);
}

std::size_t feature_coverage(const NormTable& table, std::string_view feature) {
  const std::size_t col = table.feature_index(feature);
  std::size_t n = 0;
  for (std::size_t i = 0; i < table.word_count(); ++i) n += table.has_value(i, col);
  return n;
}

std::vector<std::string> features_above_coverage(const NormTable& table,
                                                 std::size_t min_coverage) {
  std::vector<std::string> kept;
  for (const auto& f : table.features())
    if (feature_coverage(table, f) > min_coverage) kept.push_back(f);
  return kept;
}

WordSubset select_word_subset_greedy(const NormTable& table, std::size_t min_coverage,
                                     std::size_t target_size) {
  if (target_size > table.word_count())
    throw DataError("greedy subset: target size " + std::to_string(target_size) +
                    " exceeds word count " + std::to_string(table.word_count()));
  const auto kept = features_above_coverage(table, min_coverage);
  if (kept.empty())
    throw DataError("greedy subset: no feature has coverage above " +
                    std::to_string(min_coverage));

  std::vector<std::size_t> cols;
  for (const auto& f : kept) cols.push_back(table.feature_index(f));
  std::vector<std::size_t> covered(table.word_count(), 0);
  for (std::size_t i = 0; i < table.word_count(); ++i)
    for (std::size_t c : cols) covered[i] += table.has_value(i, c);

  std::vector<std::size_t> order(table.word_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& words = table.words();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (covered[a] != covered[b]) return covered[a] > covered[b];
    return words[a] < words[b];  // std::string compares bytes as unsigned char
  });
  order.resize(target_size);
  return WordSubset{std::move(order), 0};
}

std::uint64_t subset_seed(std::uint64_t seed, std::size_t repeat) {
  return mix_seed({seed, static_cast<std::uint64_t>(StreamTag::kSubset), repeat});
}

std::vector<WordSubset> sample_subsets(const NormTable& table, std::size_t subset_size,
                                       std::size_t repeats, std::uint64_t seed) {
  if (subset_size > table.word_count())
    throw DataError("subset size " + std::to_string(subset_size) + " exceeds word count " +
                    std::to_string(table.word_count()));
  std::vector<WordSubset> out;
  out.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r)
    out.push_back({sample_without_replacement(table.word_count(), subset_size,
                                              subset_seed(seed, r)),
                   seed});
  return out;
}

const std::vector<CategoryCount>& psychnorms_categories() {
  static const std::vector<CategoryCount> kCategories = {
      {"Frequency", 10},
      {"Motor", 7},
      {"Sensory", 6},
      {"Semantic Diversity", 6},
      {"Visual Lexical Decision", 6},
      {"Familiarity", 4},
      {"Auditory Lexical Decision", 4},
      {"Valence", 2},
      {"Arousal", 2},
      {"Dominance", 2},
      {"Naming", 2},
      {"Semantic Decision", 2},
      {"Age of Acquisition", 1},
      {"Concreteness", 1},
      {"Semantic Neighborhood", 1},
      {"Social / Moral", 1},
      {"Iconicity / Transparency", 1},
  };
  return kCategories;
}

}  // namespace layerprobe
