#include "layerprobe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "layerprobe/csv.hpp"
#include "layerprobe/embedding_store.hpp"
#include "layerprobe/errors.hpp"
#include "layerprobe/grid.hpp"
#include "layerprobe/localization.hpp"
#include "layerprobe/norm_data.hpp"
#include "layerprobe/parallel.hpp"
#include "layerprobe/svg.hpp"
#include "layerprobe/synth.hpp"
#include "layerprobe/tables.hpp"

namespace layerprobe {

namespace fs = std::filesystem;
using text::format_double;

std::vector<std::size_t> parse_layer_list(const std::string& spec) {
  std::vector<std::size_t> out;
  for (const auto& item : text::split_list(spec)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      auto v = text::parse_int(item);
      if (!v || *v < 0) throw DataError("invalid layer \"" + item + "\"");
      out.push_back(static_cast<std::size_t>(*v));
      continue;
    }
    auto lo = text::parse_int(std::string_view(item).substr(0, dash));
    auto hi = text::parse_int(std::string_view(item).substr(dash + 1));
    if (!lo || !hi || *lo < 0 || *hi < *lo) throw DataError("invalid layer range \"" + item + "\"");
    for (long long l = *lo; l <= *hi; ++l) out.push_back(static_cast<std::size_t>(l));
  }
  return out;
}

namespace {

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path);
}

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw DataError(std::string(what) + " not found: " + path);
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::vector<double> parse_alpha_grid(const std::string& spec) {
  std::vector<double> grid;
  for (const auto& item : text::split_list(spec)) {
    auto v = text::parse_double(item);
    if (!v) throw DataError("invalid alpha \"" + item + "\"");
    grid.push_back(*v);
  }
  return grid;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::string model_name = "synthetic";
  std::string method = "isolated";
  std::size_t num_layers = 8;
  std::size_t hidden_dim = 64;
  std::size_t words = 2000;
  std::string planted_layers = "5";
  double snr = 2.0;
  double decay = 0.5;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec;
  spec.L = a.num_layers;
  spec.d = a.hidden_dim;
  spec.W = a.words;
  spec.snr_peak = a.snr;
  spec.decay = a.decay;
  spec.seed = a.seed;
  spec.model_name = a.model_name;
  spec.method = parse_extraction_method(a.method);

  const auto planted = parse_layer_list(a.planted_layers);
  if (planted.empty()) throw DataError("--planted-layers is empty");
  spec.planted_layer = planted[0];
  if (planted.size() > 1) {
    auto category = [&](std::size_t l) { return 2 * l <= spec.L ? "early" : "late"; };
    spec.feature_name = "f0";
    spec.category = category(planted[0]);
    for (std::size_t k = 1; k < planted.size(); ++k)
      spec.extra_features.push_back(
          {"f" + std::to_string(k), category(planted[k]), planted[k], a.snr, a.decay});
  }
  const auto paths = write_synth(a.out, generate(spec));
  out << "store: " << paths.store.string() << "\nnorms: " << paths.norms.string()
      << "\ncategories: " << paths.categories.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- select

struct SelectArgs {
  std::string norms, categories, out;
  std::size_t min_coverage = 0;
  std::size_t target_size = 0;
};

int cmd_select(const SelectArgs& a, std::ostream& out) {
  require_file(a.norms, "norms file");
  require_file(a.categories, "categories file");
  const auto table = load_norm_table(a.norms, a.categories);
  const auto subset = select_word_subset_greedy(table, a.min_coverage, a.target_size);
  const auto kept = features_above_coverage(table, a.min_coverage);
  ensure_parent(a.out);
  write_norm_table(a.out, table.subset(subset.indices, kept));
  out << "selected " << subset.size() << " words over " << kept.size() << " features\n";
  return kExitOk;
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
  std::string store, norms, categories, features, layers, alpha_grid, out;
  std::size_t outer_folds = 5, inner_folds = 5, subset_size = 4000, repeats = 10;
  std::uint64_t seed = 0;
  bool standardize = false;
  std::size_t workers = 0;
};

int cmd_probe(const ProbeArgs& a, std::ostream& out) {
  require_dir(a.store, "store directory");
  require_file(a.norms, "norms file");
  require_file(a.categories, "categories file");

  ProbeConfig cfg;
  if (!a.alpha_grid.empty()) cfg.alpha_grid = parse_alpha_grid(a.alpha_grid);
  cfg.outer_folds = a.outer_folds;
  cfg.inner_folds = a.inner_folds;
  cfg.subset_size = a.subset_size;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.standardize_predictors = a.standardize;
  cfg.validate();

  const auto store = open_store(a.store);
  const auto table = load_norm_table(a.norms, a.categories);
  GridOptions opts;
  opts.workers = a.workers ? a.workers : default_workers();
  const auto result = run_grid(store, table, text::split_list(a.features),
                               parse_layer_list(a.layers), cfg, opts);
  ensure_parent(a.out);
  write_results_csv(a.out, result.table());
  out << "wrote " << result.estimates.size() << " cells to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::vector<std::string> results;
  std::string categories, metric = "selectivity", out;
  double tail_fraction = 0.2;
  std::size_t points = 101;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const Metric metric = parse_metric(a.metric);
  ResultTable merged;
  for (const auto& path : a.results) {
    require_file(path, "results file");
    auto t = read_results_csv(path);
    merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
  }
  std::map<std::string, std::string> categories;
  if (!a.categories.empty()) {
    require_file(a.categories, "categories file");
    categories = load_category_map(a.categories);
  }
  const fs::path dir = a.out;
  fs::create_directories(dir);

  const auto profiles = build_profiles(merged, metric);
  text::write_file(dir / "profiles.csv", profiles_csv(profile_rows(profiles)));

  std::string loc = "model,method,feature,metric,num_layers,com,argmax_layer,argmax_lambda,best_score\n";
  for (const auto& p : profiles) {
    const auto s = localize(p.scores);
    loc += p.model + ',' + p.method + ',' + p.feature + ',' + std::string(to_string(metric)) +
           ',' + std::to_string(p.scores.size()) + ',' + opt_double(s.com) + ',' +
           std::to_string(s.argmax_layer) + ',' +
           format_double(static_cast<double>(s.argmax_layer) / static_cast<double>(p.blocks())) +
           ',' + format_double(s.best_score) + '\n';
  }
  text::write_file(dir / "localization.csv", loc);

  std::string summary = "model,method,metric,first,last,best,worst,mean,n_features\n";
  for (const auto& s : layer_summary(merged))
    summary += s.model + ',' + s.method + ',' + std::string(to_string(s.metric)) + ',' +
               format_double(s.first) + ',' + format_double(s.last) + ',' +
               format_double(s.best) + ',' + format_double(s.worst) + ',' +
               format_double(s.mean) + ',' + std::to_string(s.features) + '\n';
  text::write_file(dir / "summary.csv", summary);

  std::string tail = "scope,method,metric,tail_fraction,best_layer_fraction,mean_drop,pairs\n";
  for (Metric m : {Metric::kSelectivity, Metric::kRaw}) {
    const auto all = build_profiles(merged, m);
    std::vector<std::string> methods, models;
    for (const auto& p : all) {
      if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
        methods.push_back(p.method);
      if (std::find(models.begin(), models.end(), p.model) == models.end())
        models.push_back(p.model);
    }
    auto emit = [&](const std::string& scope, const std::string& method,
                    const std::vector<LayerProfile>& group) {
      if (group.empty()) return;
      const auto t = tail_stats(group, a.tail_fraction);
      tail += scope + ',' + method + ',' + std::string(to_string(m)) + ',' +
              format_double(a.tail_fraction) + ',' + format_double(t.best_layer_fraction) + ',' +
              format_double(t.mean_drop) + ',' + std::to_string(t.pairs) + '\n';
    };
    for (const auto& method : methods) {
      std::vector<LayerProfile> group;
      for (const auto& p : all)
        if (p.method == method) group.push_back(p);
      emit("all", method, group);
      for (const auto& model : models) {
        std::vector<LayerProfile> g;
        for (const auto& p : group)
          if (p.model == model) g.push_back(p);
        emit(model, method, g);
      }
    }
  }
  text::write_file(dir / "tail.csv", tail);

  std::string gains;
  for (Metric m : {Metric::kSelectivity, Metric::kRaw}) {
    if (auto g = method_gain(merged, m))
      gains += std::string(to_string(m)) + ',' + format_double(g->median_gain) + ',' +
               format_double(g->fraction_features_improved) + ',' + std::to_string(g->pairs) +
               '\n';
  }
  if (!gains.empty())
    text::write_file(dir / "method_gain.csv",
                     "metric,median_gain,fraction_features_improved,pairs\n" + gains);

  if (!categories.empty()) {
    std::string long_form = "method,category,point,lambda,mean_delta\n";
    std::string coms = "method,category,members,com,argmax_lambda,mean_feature_com\n";
    std::vector<std::string> warnings;
    std::vector<std::string> methods;
    for (const auto& p : profiles)
      if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
        methods.push_back(p.method);
    const auto grid = grid_coordinates(a.points);
    for (const auto& method : methods) {
      std::vector<LayerProfile> group;
      for (const auto& p : profiles)
        if (p.method == method) group.push_back(p);
      const auto agg = category_profile(group, categories, a.points);
      for (const auto& w : agg.warnings) warnings.push_back(method + ": " + w);
      for (const auto& c : agg.categories) {
        for (std::size_t i = 0; i < grid.size(); ++i)
          long_form += method + ',' + c.category + ',' + std::to_string(i) + ',' +
                       format_double(grid[i]) + ',' + format_double(c.mean_delta[i]) + '\n';
        coms += method + ',' + c.category + ',' + std::to_string(c.members) + ',' +
                opt_double(c.com) + ',' + format_double(grid[c.argmax_point]) + ',' +
                opt_double(c.mean_member_com) + '\n';
      }
    }
    text::write_file(dir / "categories.csv", long_form);
    text::write_file(dir / "category_com.csv", coms);
    if (!warnings.empty()) {
      std::string w;
      for (const auto& line : warnings) {
        err << "warning: " << line << "\n";
        w += line + '\n';
      }
      text::write_file(dir / "warnings.txt", w);
    }
  }
  out << "analyzed " << profiles.size() << " profiles into " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> profiles;
  std::string exclude, categories, out;
};

struct ModelProfiles {
  std::string label;
  std::string method;
  std::map<std::string, std::optional<double>> com;  // feature -> COM
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  std::map<std::string, std::string> categories;
  if (!a.categories.empty()) {
    require_file(a.categories, "categories file");
    categories = load_category_map(a.categories);
  }

  std::vector<ModelProfiles> entries;
  std::map<std::string, std::size_t> label_uses;
  for (const auto& path : a.profiles) {
    require_file(path, "profiles file");
    const auto profiles = profiles_from_rows(read_profiles_csv(path));
    std::vector<std::pair<std::string, std::string>> seen;  // (model, method) in this file
    std::map<std::pair<std::string, std::string>, std::size_t> slot;
    for (const auto& p : profiles) {
      const std::pair<std::string, std::string> key{p.model, p.method};
      auto it = slot.find(key);
      if (it == slot.end()) {
        const std::size_t use = ++label_uses[p.model + "\n" + p.method];
        const std::string label = use == 1 ? p.model : p.model + "@" + std::to_string(use);
        it = slot.emplace(key, entries.size()).first;
        entries.push_back({label, p.method, {}});
      }
      entries[it->second].com[p.feature] = center_of_mass(p.scores);
    }
  }

  std::vector<std::string> methods;
  for (const auto& e : entries)
    if (std::find(methods.begin(), methods.end(), e.method) == methods.end())
      methods.push_back(e.method);

  std::set<std::string> all_features;
  for (const auto& e : entries)
    for (const auto& [f, c] : e.com) all_features.insert(f);
  std::set<std::string> excluded;
  for (const auto& item : text::split_list(a.exclude)) {
    if (all_features.count(item)) {
      excluded.insert(item);
      continue;
    }
    bool matched = false;
    for (const auto& [f, c] : categories) {
      if (c == item && all_features.count(f)) {
        excluded.insert(f);
        matched = true;
      }
    }
    if (!matched)
      throw DataError("--exclude-features: \"" + item + "\" is neither a feature nor a category" +
                      (categories.empty() ? " (no --categories given)" : ""));
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::string summary = "method,models,features,min_offdiag_rho,max_offdiag_rho\n";
  for (const auto& method : methods) {
    std::vector<const ModelProfiles*> group;
    for (const auto& e : entries)
      if (e.method == method) group.push_back(&e);
    if (group.size() < 2)
      throw DataError("compare: method " + method + " has " + std::to_string(group.size()) +
                      " model(s), need at least 2");

    // Feature sets must agree once exclusions are removed.
    std::set<std::string> uni, inter;
    bool first = true;
    for (const auto* e : group) {
      std::set<std::string> fs_;
      for (const auto& [f, c] : e->com)
        if (!excluded.count(f)) fs_.insert(f);
      uni.insert(fs_.begin(), fs_.end());
      if (first) {
        inter = fs_;
        first = false;
      } else {
        std::set<std::string> next;
        std::set_intersection(inter.begin(), inter.end(), fs_.begin(), fs_.end(),
                              std::inserter(next, next.begin()));
        inter = std::move(next);
      }
    }
    if (uni != inter) {
      std::vector<std::string> asym;
      std::set_difference(uni.begin(), uni.end(), inter.begin(), inter.end(),
                          std::back_inserter(asym));
      throw DataError("compare: feature sets differ across models for method " + method +
                      "; asymmetric features: " + text::join(asym, ", "));
    }

    ComVectors vectors;
    for (const auto& [f, c] : group.front()->com) vectors.features.push_back(f);
    std::vector<std::string> group_excluded;
    for (const auto& f : vectors.features)
      if (excluded.count(f)) group_excluded.push_back(f);
    for (const auto* e : group) {
      vectors.models.push_back(e->label);
      std::vector<std::optional<double>> v;
      for (const auto& f : vectors.features) v.push_back(e->com.at(f));
      vectors.com.push_back(std::move(v));
    }
    const auto sim = model_similarity(vectors, group_excluded, method);

    std::string csv = "model";
    for (const auto& m : sim.models) csv += ',' + m;
    csv += '\n';
    double lo = 1.0, hi = -1.0;
    for (std::size_t i = 0; i < sim.models.size(); ++i) {
      csv += sim.models[i];
      for (std::size_t j = 0; j < sim.models.size(); ++j) {
        csv += ',' + format_double(sim.rho[i][j]);
        if (i != j) {
          lo = std::min(lo, sim.rho[i][j]);
          hi = std::max(hi, sim.rho[i][j]);
        }
      }
      csv += '\n';
    }
    text::write_file(dir / ("similarity_" + method + ".csv"), csv);
    text::write_file(dir / ("similarity_" + method + ".svg"), render_similarity(sim));
    summary += method + ',' + std::to_string(sim.models.size()) + ',' +
               std::to_string(vectors.features.size() - group_excluded.size()) + ',' +
               format_double(lo) + ',' + format_double(hi) + '\n';
  }
  text::write_file(dir / "similarity_summary.csv", summary);
  out << "compared " << entries.size() << " model profiles into " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- heatmap

struct HeatmapArgs {
  std::string profiles, axis = "features", categories, out;
  std::size_t points = 0;
};

int cmd_heatmap(const HeatmapArgs& a, std::ostream& out) {
  require_file(a.profiles, "profiles file");
  const auto profiles = profiles_from_rows(read_profiles_csv(a.profiles));

  std::size_t points = a.points;
  std::set<std::pair<std::string, std::string>> groups;
  for (const auto& p : profiles) {
    if (!a.points) points = std::max(points, p.scores.size());
    groups.insert({p.model, p.method});
  }
  Heatmap map;
  map.columns = grid_coordinates(points);

  if (a.axis == "features") {
    const bool single = groups.size() == 1;
    map.title = single ? "delta from best layer: " + profiles.front().model + " / " +
                             profiles.front().method
                       : "delta from best layer";
    for (const auto& p : profiles) {
      map.row_labels.push_back(single ? p.feature : p.model + "/" + p.method + "/" + p.feature);
      map.values.push_back(resample_to_grid(delta_from_best(p.scores), points));
      map.com.push_back(center_of_mass(p.scores));
      map.argmax.push_back(static_cast<double>(argmax_layer(p.scores)) /
                           static_cast<double>(p.blocks()));
    }
  } else if (a.axis == "categories") {
    if (a.categories.empty()) throw DataError("--axis categories requires --categories");
    require_file(a.categories, "categories file");
    const auto agg = category_profile(profiles, load_category_map(a.categories), points);
    map.title = "mean delta from best layer by category";
    for (const auto& c : agg.categories) {
      map.row_labels.push_back(c.category);
      map.values.push_back(c.mean_delta);
      map.com.push_back(c.com);
      map.argmax.push_back(map.columns[c.argmax_point]);
    }
  } else {
    throw DataError("--axis must be features or categories, got \"" + a.axis + "\"");
  }
  ensure_parent(a.out);
  text::write_file(a.out, render_heatmap(map));
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-wise ridge probing with permutation-controlled selectivity"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sub_synth = app.add_subcommand("synth", "Write a synthetic store with planted signal");
  sub_synth->add_option("--out", synth.out, "Output directory")->required();
  sub_synth->add_option("--model-name", synth.model_name, "Model name in the manifest");
  sub_synth->add_option("--method", synth.method, "Extraction method tag");
  sub_synth->add_option("--num-layers", synth.num_layers, "Block count L");
  sub_synth->add_option("--hidden-dim", synth.hidden_dim, "Hidden dimension d");
  sub_synth->add_option("--words", synth.words, "Word count W");
  sub_synth->add_option("--planted-layers", synth.planted_layers,
                        "Planted layer per feature, e.g. 2,5,7");
  sub_synth->add_option("--snr", synth.snr, "Peak signal scale");
  sub_synth->add_option("--decay", synth.decay, "Per-layer attenuation in [0,1)");
  sub_synth->add_option("--seed", synth.seed, "Random seed");

  SelectArgs select;
  auto* sub_select = app.add_subcommand("select", "Greedy word-set selection over high-coverage features");
  sub_select->add_option("--norms", select.norms, "Norm TSV")->required();
  sub_select->add_option("--categories", select.categories, "Category TSV")->required();
  sub_select->add_option("--min-coverage", select.min_coverage, "Keep features with coverage above this");
  sub_select->add_option("--target-size", select.target_size, "Number of words")->required();
  sub_select->add_option("--out", select.out, "Output norm TSV")->required();

  ProbeArgs probe;
  auto* sub_probe = app.add_subcommand("probe", "Fit observed and permuted probes per feature and layer");
  sub_probe->add_option("--store", probe.store, "Embedding store directory")->required();
  sub_probe->add_option("--norms", probe.norms, "Norm TSV")->required();
  sub_probe->add_option("--categories", probe.categories, "Category TSV")->required();
  sub_probe->add_option("--features", probe.features, "Comma-separated features (default all)");
  sub_probe->add_option("--layers", probe.layers, "Layers, e.g. 0-8 (default all)");
  sub_probe->add_option("--alpha-grid", probe.alpha_grid, "Comma-separated ridge alphas");
  sub_probe->add_option("--outer-folds", probe.outer_folds, "Outer CV folds");
  sub_probe->add_option("--inner-folds", probe.inner_folds, "Inner CV folds");
  sub_probe->add_option("--subset-size", probe.subset_size, "Words per random subset");
  sub_probe->add_option("--repeats", probe.repeats, "Random subsets per cell");
  sub_probe->add_option("--seed", probe.seed, "Random seed");
  sub_probe->add_flag("--standardize", probe.standardize, "z-score predictors per fit");
  sub_probe->add_option("--workers", probe.workers, "Worker threads (default: all cores)");
  sub_probe->add_option("--out", probe.out, "Results CSV")->required();

  AnalyzeArgs analyze;
  auto* sub_analyze = app.add_subcommand("analyze", "Profiles, localization, summaries and tail statistics");
  sub_analyze->add_option("results", analyze.results, "Results CSV files")->required();
  sub_analyze->add_option("--categories", analyze.categories, "Category TSV for category aggregates");
  sub_analyze->add_option("--metric", analyze.metric, "selectivity or raw");
  sub_analyze->add_option("--tail-fraction", analyze.tail_fraction, "Tail share of layers");
  sub_analyze->add_option("--points", analyze.points, "Grid points for category aggregates");
  sub_analyze->add_option("--out", analyze.out, "Output directory")->required();

  CompareArgs compare;
  auto* sub_compare = app.add_subcommand("compare", "Cross-model Spearman similarity of COM vectors");
  sub_compare->add_option("profiles", compare.profiles, "Profile CSV files")->required();
  sub_compare->add_option("--exclude-features", compare.exclude,
                          "Comma-separated features or category names to drop");
  sub_compare->add_option("--categories", compare.categories, "Category TSV");
  sub_compare->add_option("--out", compare.out, "Output directory")->required();

  HeatmapArgs heatmap;
  auto* sub_heatmap = app.add_subcommand("heatmap", "Render a delta-from-best heatmap SVG");
  sub_heatmap->add_option("profiles", heatmap.profiles, "Profile CSV")->required();
  sub_heatmap->add_option("--axis", heatmap.axis, "features or categories");
  sub_heatmap->add_option("--categories", heatmap.categories, "Category TSV");
  sub_heatmap->add_option("--points", heatmap.points, "Grid points (default: max layer count)");
  sub_heatmap->add_option("--out", heatmap.out, "Output SVG")->required();

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sub_synth) return cmd_synth(synth, out);
    if (*sub_select) return cmd_select(select, out);
    if (*sub_probe) return cmd_probe(probe, out);
    if (*sub_analyze) return cmd_analyze(analyze, out, err);
    if (*sub_compare) return cmd_compare(compare, out);
    if (*sub_heatmap) return cmd_heatmap(heatmap, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace layerprobe
