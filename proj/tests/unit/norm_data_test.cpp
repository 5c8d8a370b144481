#include "layerprobe/norm_data.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"
#include "unit/test_util.hpp"

namespace layerprobe {
namespace {

using testing_util::scratch_dir;

void write(const std::filesystem::path& p, const std::string& s) { text::write_file(p, s); }

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(NormData, LoadsMaskedCellsAndCategories) {
  const auto dir = scratch_dir();
  write(dir / "n.tsv", "word\tvalence\tarousal\ncat\t5.5\t\ndog\t\t3\nhat\t1e-2\t-4\n");
  write(dir / "c.tsv", "feature\tcategory\nvalence\tValence\narousal\tArousal\n");
  const auto t = load_norm_table(dir / "n.tsv", dir / "c.tsv");
  ASSERT_EQ(t.word_count(), 3u);
  ASSERT_EQ(t.feature_count(), 2u);
  EXPECT_EQ(t.get(0, 0), 5.5);
  EXPECT_FALSE(t.get(0, 1).has_value());
  EXPECT_FALSE(t.get(1, 0).has_value());
  EXPECT_EQ(t.get(2, 0), 0.01);
  EXPECT_EQ(t.category_of("arousal"), "Arousal");
  EXPECT_EQ(t.find_word("dog"), 1u);
  EXPECT_FALSE(t.find_word("cow"));
  EXPECT_EQ(t.category_labels(), (std::vector<std::string>{"Arousal", "Valence"}));
  EXPECT_EQ(feature_coverage(t, "valence"), 2u);
}

TEST(NormData, RoundTripsThroughTsv) {
  const auto dir = scratch_dir();
  write(dir / "n.tsv", "word\ta\tb\nx\t0.1\t\ny\t-7.25\t1e300\n");
  write(dir / "c.tsv", "a\tA\nb\tB\n");
  const auto t = load_norm_table(dir / "n.tsv", dir / "c.tsv");
  write_norm_table(dir / "out.tsv", t);
  write_category_map(dir / "out_c.tsv", t.categories(), t.features());
  const auto u = load_norm_table(dir / "out.tsv", dir / "out_c.tsv");
  ASSERT_EQ(u.words(), t.words());
  for (std::size_t i = 0; i < t.word_count(); ++i)
    for (std::size_t j = 0; j < t.feature_count(); ++j) EXPECT_EQ(u.get(i, j), t.get(i, j));
}

TEST(NormData, ErrorsNameRowAndColumn) {
  const auto dir = scratch_dir();
  write(dir / "c.tsv", "a\tA\n");
  write(dir / "bad.tsv", "word\ta\nx\t1\ny\tabc\n");
  const auto msg = error_of([&] { load_norm_table(dir / "bad.tsv", dir / "c.tsv"); });
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;

  write(dir / "dup.tsv", "word\ta\nx\t1\nx\t2\n");
  EXPECT_NE(error_of([&] { load_norm_table(dir / "dup.tsv", dir / "c.tsv"); })
                .find("duplicate word \"x\""),
            std::string::npos);

  write(dir / "nan.tsv", "word\ta\nx\tnan\n");
  EXPECT_FALSE(error_of([&] { load_norm_table(dir / "nan.tsv", dir / "c.tsv"); }).empty());

  write(dir / "ok.tsv", "word\ta\tb\nx\t1\t2\n");
  EXPECT_NE(error_of([&] { load_norm_table(dir / "ok.tsv", dir / "c.tsv"); })
                .find("\"b\" has no category"),
            std::string::npos);
}

// Oracle: score every word by covered kept features, then brute-force sort.
std::vector<std::size_t> brute_greedy(const NormTable& t, std::size_t min_cov, std::size_t k) {
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < t.feature_count(); ++j) {
    std::size_t cov = 0;
    for (std::size_t i = 0; i < t.word_count(); ++i) cov += t.has_value(i, j);
    if (cov > min_cov) kept.push_back(j);
  }
  std::vector<std::pair<long, std::string>> keyed;
  for (std::size_t i = 0; i < t.word_count(); ++i) {
    long c = 0;
    for (auto j : kept) c += t.has_value(i, j);
    keyed.push_back({-c, t.words()[i]});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(*t.find_word(keyed[r].second));
  return out;
}

NormTable random_table(std::uint64_t seed, std::size_t words, std::size_t features) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution keep(0.6);
  std::vector<std::string> w, f;
  for (std::size_t i = 0; i < words; ++i) w.push_back("w" + std::to_string(gen() % 100000) + "_" + std::to_string(i));
  std::map<std::string, std::string> cats;
  for (std::size_t j = 0; j < features; ++j) {
    f.push_back("f" + std::to_string(j));
    cats[f.back()] = j % 2 ? "Odd" : "Even";
  }
  std::vector<double> v(words * features);
  std::vector<std::uint8_t> p(words * features);
  for (std::size_t k = 0; k < v.size(); ++k) {
    p[k] = keep(gen);
    v[k] = p[k] ? static_cast<double>(gen() % 1000) / 10.0 : 0.0;
  }
  return NormTable(w, f, v, p, cats);
}

TEST(NormData, GreedySelectionMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_table(seed, 60, 7);
    const std::size_t min_cov = 30 + seed % 10;
    if (features_above_coverage(t, min_cov).empty()) {
      EXPECT_THROW(select_word_subset_greedy(t, min_cov, 25), DataError);
      continue;
    }
    const auto got = select_word_subset_greedy(t, min_cov, 25);
    EXPECT_EQ(got.indices, brute_greedy(t, min_cov, 25)) << "seed " << seed;
  }
}

TEST(NormData, GreedyTieBreakIsByteOrder) {
  const std::vector<std::string> words = {"b", "B", "a", "ab"};
  const NormTable t(words, {"f"}, {1, 1, 1, 1}, {1, 1, 1, 1}, {{"f", "F"}});
  const auto sel = select_word_subset_greedy(t, 0, 4);
  std::vector<std::string> names;
  for (auto i : sel.indices) names.push_back(t.words()[i]);
  EXPECT_EQ(names, (std::vector<std::string>{"B", "a", "ab", "b"}));
  EXPECT_THROW(select_word_subset_greedy(t, 4, 2), DataError);
  EXPECT_THROW(select_word_subset_greedy(t, 0, 5), DataError);
}

TEST(NormData, SubsetsAreDeterministicPerRepeat) {
  const auto t = random_table(5, 200, 2);
  const auto a = sample_subsets(t, 50, 4, 123);
  const auto b = sample_subsets(t, 50, 6, 123);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(a[r].indices, b[r].indices);  // repeat r depends only on (seed, r)
    EXPECT_EQ(std::set<std::size_t>(a[r].indices.begin(), a[r].indices.end()).size(), 50u);
  }
  EXPECT_NE(a[0].indices, a[1].indices);
  EXPECT_THROW(sample_subsets(t, 201, 1, 0), DataError);
}

TEST(NormData, SubsetOverlapMatchesHypergeometricMean) {
  // Two independent k-of-n subsets share k^2/n elements on average.
  const auto t = random_table(9, 400, 1);
  const auto subsets = sample_subsets(t, 100, 400, 1);
  double total = 0;
  for (std::size_t r = 0; r + 1 < subsets.size(); r += 2) {
    std::set<std::size_t> s(subsets[r].indices.begin(), subsets[r].indices.end());
    for (auto i : subsets[r + 1].indices) total += s.count(i);
  }
  EXPECT_NEAR(total / 200.0, 100.0 * 100.0 / 400.0, 1.0);
}

TEST(NormData, SubsetTableKeepsRowOrderAndCategories) {
  const auto t = random_table(2, 10, 3);
  const auto s = t.subset({4, 1}, {"f2", "f0"});
  ASSERT_EQ(s.word_count(), 2u);
  EXPECT_EQ(s.words()[0], t.words()[4]);
  EXPECT_EQ(s.features(), (std::vector<std::string>{"f2", "f0"}));
  EXPECT_EQ(s.get(1, 0), t.get(1, 2));
  EXPECT_EQ(s.category_of("f0"), "Even");
}

TEST(NormData, ReferenceCategoryCountsSumToFiftyEightFeatures) {
  const auto& cats = psychnorms_categories();
  ASSERT_EQ(cats.size(), 17u);
  std::size_t total = 0;
  std::map<std::string, std::size_t> by_label;
  for (const auto& c : cats) {
    total += c.features;
    by_label[std::string(c.label)] = c.features;
  }
  EXPECT_EQ(total, 58u);
  EXPECT_EQ(by_label["Frequency"], 10u);
  EXPECT_EQ(by_label["Motor"], 7u);
  EXPECT_EQ(by_label["Valence"], 2u);
  EXPECT_EQ(by_label["Concreteness"], 1u);
}

}  // namespace
}  // namespace layerprobe
