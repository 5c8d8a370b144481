#include "layerprobe/cli.hpp"

#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"
#include "layerprobe/tables.hpp"
#include "unit/test_util.hpp"

namespace layerprobe {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "layerprobe");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

// Small synthetic store with features f0 (early) and f1 (late), L = 4.
fs::path make_synth(const fs::path& dir, const std::string& model = "synthetic",
                    const std::string& seed = "3") {
  const auto r = cli({"synth", "--out", dir.string(), "--model-name", model, "--num-layers", "4",
                      "--hidden-dim", "8", "--words", "250", "--planted-layers", "1,4",
                      "--seed", seed});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

std::vector<std::string> probe_args(const fs::path& d, const fs::path& out) {
  return {"probe", "--store", (d / "store").string(), "--norms", (d / "norms.tsv").string(),
          "--categories", (d / "categories.tsv").string(), "--subset-size", "200", "--repeats",
          "2", "--alpha-grid", "10,100", "--out", out.string()};
}

TEST(Cli, ParsesLayerLists) {
  EXPECT_EQ(parse_layer_list("0,2,5-8"), (std::vector<std::size_t>{0, 2, 5, 6, 7, 8}));
  EXPECT_TRUE(parse_layer_list("").empty());
  EXPECT_THROW(parse_layer_list("3-1"), DataError);
  EXPECT_THROW(parse_layer_list("a"), DataError);
}

TEST(Cli, ProbeWritesOneRowPerFeatureAndLayer) {
  const auto dir = make_synth(testing_util::scratch_dir());
  auto r = cli(probe_args(dir, dir / "all.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_results_csv(dir / "all.csv").rows.size(), 2u * 5u);

  auto args = probe_args(dir, dir / "some.csv");
  args.insert(args.end(), {"--features", "f1", "--layers", "1,3-4"});
  r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto some = read_results_csv(dir / "some.csv");
  ASSERT_EQ(some.rows.size(), 3u);
  EXPECT_EQ(some.rows[0].feature, "f1");
  EXPECT_EQ(some.rows[2].layer, 4u);
  EXPECT_EQ(some.rows[0].n_folds, 10u);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto dir = make_synth(testing_util::scratch_dir());
  ASSERT_EQ(cli(probe_args(dir, dir / "a.csv")).code, 0);
  auto args = probe_args(dir, dir / "b.csv");
  args.insert(args.end(), {"--workers", "3"});
  ASSERT_EQ(cli(args).code, 0);
  EXPECT_EQ(text::read_file(dir / "a.csv"), text::read_file(dir / "b.csv"));
}

TEST(Cli, MissingInputsExitWithDataError) {
  const auto dir = testing_util::scratch_dir();
  const auto missing = (dir / "nowhere").string();
  auto r = cli({"probe", "--store", missing, "--norms", "x", "--categories", "y", "--out",
                (dir / "o.csv").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("not found: " + missing), std::string::npos) << r.err;

  r = cli({"analyze", (dir / "none.csv").string(), "--out", (dir / "an").string()});
  EXPECT_EQ(r.code, kExitData);

  text::write_file(dir / "bad.csv", std::string(kResultsHeader) + "\nm,isolated,f,0,zz,0,0,5,1\n");
  r = cli({"analyze", (dir / "bad.csv").string(), "--out", (dir / "an").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"probe", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, BinaryReportsExitCodes) {
  const auto dir = testing_util::scratch_dir();
  const std::string cmd = std::string("\"") + LAYERPROBE_CLI_PATH + "\" probe --store \"" +
                          (dir / "missing").string() + "\" --norms a --categories b --out c" +
                          " 2>\"" + (dir / "err.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(text::read_file(dir / "err.txt").find("not found"), std::string::npos);
}

TEST(Cli, AnalyzeWritesReportsAndWarnsOnEmptyCategories) {
  const auto dir = make_synth(testing_util::scratch_dir());
  ASSERT_EQ(cli(probe_args(dir, dir / "res.csv")).code, 0);
  auto cats = text::read_file(dir / "categories.tsv");
  text::write_file(dir / "cats_extra.tsv", cats + "ghost\tUnused\n");
  const auto r = cli({"analyze", (dir / "res.csv").string(), "--categories",
                      (dir / "cats_extra.tsv").string(), "--out", (dir / "an").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"profiles.csv", "localization.csv", "summary.csv", "tail.csv",
                        "categories.csv", "category_com.csv", "warnings.txt"})
    EXPECT_TRUE(fs::exists(dir / "an" / f)) << f;
  EXPECT_NE(r.err.find("Unused"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "an" / "method_gain.csv"));
  const auto loc = text::read_lines(dir / "an" / "localization.csv");
  ASSERT_EQ(loc.size(), 3u);
  EXPECT_NE(loc[1].find("synthetic,isolated,f0,selectivity,5,"), std::string::npos);
  EXPECT_EQ(read_profiles_csv(dir / "an" / "profiles.csv").size(), 10u);
}

TEST(Cli, CompareBuildsASquareMatrixPerMethod) {
  const auto root = testing_util::scratch_dir();
  std::vector<std::string> args = {"compare"};
  for (const char* m : {"a", "b", "c"}) {
    const auto dir = root / m;
    fs::create_directories(dir);
    // Three features with distinct peaks, identical across models up to noise.
    std::vector<ProfileRow> rows;
    const std::vector<std::vector<double>> scores = {
        {0, 0.9, 0.1, 0.0}, {0, 0.1, 0.8, 0.2}, {0, 0.0, 0.3, 0.7}, {0, 0.2, 0.5, 0.4}};
    for (std::size_t f = 0; f < scores.size(); ++f)
      for (std::size_t l = 0; l < 4; ++l)
        rows.push_back({m, "isolated", "f" + std::to_string(f), l, l / 3.0,
                        scores[f][l] + (m[0] - 'a') * 0.01 * l, 0.0});
    text::write_file(dir / "profiles.csv", profiles_csv(rows));
    args.push_back((dir / "profiles.csv").string());
  }
  args.insert(args.end(), {"--out", (root / "cmp").string()});
  const auto r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = text::read_lines(root / "cmp" / "similarity_isolated.csv");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "model,a,b,c");
  EXPECT_EQ(lines[1].substr(0, 4), "a,1,");
  EXPECT_TRUE(fs::exists(root / "cmp" / "similarity_isolated.svg"));

  auto ex = args;
  ex.insert(ex.end() - 2, {"--exclude-features", "nope"});
  EXPECT_EQ(cli(ex).code, kExitData);
}

TEST(Cli, CompareListsAsymmetricFeatures) {
  const auto root = testing_util::scratch_dir();
  std::vector<std::string> args = {"compare"};
  for (int m = 0; m < 2; ++m) {
    std::vector<ProfileRow> rows;
    for (int f = 0; f < 3 + m; ++f)
      for (std::size_t l = 0; l < 3; ++l)
        rows.push_back({"m" + std::to_string(m), "isolated", "f" + std::to_string(f), l, l / 2.0,
                        (l == static_cast<std::size_t>(f % 2 + 1)) ? 1.0 : 0.0, 0.0});
    const auto p = root / ("p" + std::to_string(m) + ".csv");
    text::write_file(p, profiles_csv(rows));
    args.push_back(p.string());
  }
  args.insert(args.end(), {"--out", (root / "cmp").string()});
  const auto r = cli(args);
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("asymmetric features: f3"), std::string::npos) << r.err;
}

fs::path write_profile(const fs::path& dir, const std::vector<double>& scores) {
  std::vector<ProfileRow> rows;
  const double L = static_cast<double>(scores.size() - 1);
  for (std::size_t l = 0; l < scores.size(); ++l)
    rows.push_back({"m", "isolated", "only", l, l / L, scores[l], 0.0});
  const auto p = dir / "profiles.csv";
  text::write_file(p, profiles_csv(rows));
  return p;
}

TEST(Cli, HeatmapDrawsOneCellPerGridPointAndOneArgmaxDot) {
  const auto dir = testing_util::scratch_dir();
  const auto p = write_profile(dir, {0.1, 0.5, 0.3});
  ASSERT_EQ(cli({"heatmap", p.string(), "--out", (dir / "h.svg").string()}).code, 0);
  const auto svg = text::read_file(dir / "h.svg");
  EXPECT_EQ(count(svg, "class=\"cell\""), 3u);
  EXPECT_EQ(count(svg, "fill=\"red\""), 1u);
  EXPECT_EQ(count(svg, "class=\"com\""), 1u);
  ASSERT_EQ(cli({"heatmap", p.string(), "--out", (dir / "h2.svg").string()}).code, 0);
  EXPECT_EQ(svg, text::read_file(dir / "h2.svg"));
}

TEST(Cli, HeatmapOmitsComDotForFlatProfiles) {
  const auto dir = testing_util::scratch_dir();
  const auto p = write_profile(dir, {0.4, 0.2, 0.2, 0.2});
  ASSERT_EQ(cli({"heatmap", p.string(), "--out", (dir / "h.svg").string()}).code, 0);
  const auto svg = text::read_file(dir / "h.svg");
  EXPECT_EQ(count(svg, "class=\"com\""), 0u);
  EXPECT_EQ(count(svg, "class=\"argmax\""), 1u);
}

TEST(Cli, HeatmapByCategoryNeedsACategoryFile) {
  const auto dir = testing_util::scratch_dir();
  const auto p = write_profile(dir, {0.0, 0.5, 0.3});
  EXPECT_EQ(cli({"heatmap", p.string(), "--axis", "categories", "--out",
                 (dir / "h.svg").string()})
                .code,
            kExitData);
  text::write_file(dir / "c.tsv", "only\tGroup\n");
  ASSERT_EQ(cli({"heatmap", p.string(), "--axis", "categories", "--categories",
                 (dir / "c.tsv").string(), "--points", "11", "--out", (dir / "h.svg").string()})
                .code,
            0);
  const auto svg = text::read_file(dir / "h.svg");
  EXPECT_EQ(count(svg, "class=\"cell\""), 11u);
  EXPECT_NE(svg.find(">Group<"), std::string::npos);
}

}  // namespace
}  // namespace layerprobe
