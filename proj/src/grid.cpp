#include "layerprobe/grid.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "layerprobe/errors.hpp"
#include "layerprobe/parallel.hpp"
#include "layerprobe/rng.hpp"

namespace layerprobe {

double ProbeEstimate::alpha_mode() const {
  std::map<double, std::size_t> counts;
  for (double a : chosen_alphas) ++counts[a];
  double best = 0.0;
  std::size_t best_count = 0;
  for (const auto& [a, c] : counts)
    if (c >= best_count) {  // ascending keys: ">=" lets larger alphas win ties
      best = a;
      best_count = c;
    }
  return best;
}

ResultTable GridResult::table() const {
  ResultTable t;
  t.rows.reserve(estimates.size());
  for (const auto& e : estimates) {
    t.rows.push_back({manifest.model_name, std::string(to_string(manifest.extraction_method)),
                      e.feature, e.layer, e.r2_obs_mean, e.r2_rand_mean, e.selectivity,
                      e.r2_obs_fold_values.size(), e.alpha_mode()});
  }
  return t;
}

std::uint64_t cell_seed(std::uint64_t seed, std::string_view feature, std::size_t layer) {
  return mix_seed({seed, hash_string(feature), layer});
}

namespace {

struct FeatureTargets {
  std::string name;
  std::vector<std::size_t> store_rows;
  std::vector<double> values;
};

template <typename E>
[[noreturn]] void rethrow_with_context(const E& e, const std::string& ctx) {
  throw E(ctx + ": " + e.what());
}

}  // namespace

GridResult run_grid(const EmbeddingStore& store, const NormTable& table,
                    const std::vector<std::string>& features,
                    const std::vector<std::size_t>& layers, const ProbeConfig& config,
                    const GridOptions& options) {
  config.validate();
  const auto& manifest = store.manifest();

  std::vector<std::string> feature_list = features.empty() ? table.features() : features;
  {
    std::set<std::string_view> seen;
    for (const auto& f : feature_list) {
      table.feature_index(f);
      if (!seen.insert(f).second) throw DataError("feature \"" + f + "\" requested twice");
    }
  }
  std::vector<std::size_t> layer_list = layers;
  if (layer_list.empty()) {
    layer_list.resize(manifest.num_layers);
    std::iota(layer_list.begin(), layer_list.end(), std::size_t{0});
  }
  for (std::size_t l : layer_list)
    if (l >= manifest.num_layers)
      throw DataError("layer " + std::to_string(l) + " out of range [0, " +
                      std::to_string(manifest.num_layers - 1) + "] for store " +
                      store.dir().string());
  if (std::set<std::size_t>(layer_list.begin(), layer_list.end()).size() != layer_list.size())
    throw DataError("layer list contains duplicates");

  WordSubset all_rows;
  all_rows.indices.resize(table.word_count());
  std::iota(all_rows.indices.begin(), all_rows.indices.end(), std::size_t{0});
  const auto row_map = align_words(store, all_rows, table);

  std::vector<FeatureTargets> targets;
  for (const auto& f : feature_list) {
    const std::size_t col = table.feature_index(f);
    FeatureTargets t{f, {}, {}};
    for (std::size_t i = 0; i < table.word_count(); ++i) {
      if (table.has_value(i, col)) {
        t.store_rows.push_back(row_map[i]);
        t.values.push_back(table.value(i, col));
      }
    }
    if (t.values.size() < config.subset_size)
      throw DataError("feature \"" + f + "\": only " + std::to_string(t.values.size()) +
                      " words with values, subset_size is " +
                      std::to_string(config.subset_size));
    targets.push_back(std::move(t));
  }

  const std::size_t nf = targets.size();
  const std::size_t nr = config.repeats;
  // results[layer_pos][feature][pass][repeat]
  std::vector<std::vector<RepeatResult>> results(layer_list.size() * nf * 2,
                                                 std::vector<RepeatResult>(nr));

  const std::uintmax_t per_layer = std::max<std::uintmax_t>(manifest.layer_bytes(), 1);
  const std::size_t batch = static_cast<std::size_t>(
      std::clamp<std::uintmax_t>(options.max_resident_bytes / per_layer, 1, layer_list.size()));

  for (std::size_t b0 = 0; b0 < layer_list.size(); b0 += batch) {
    const std::size_t b1 = std::min(layer_list.size(), b0 + batch);
    std::vector<LayerMatrix> loaded(b1 - b0);
    parallel_for(b1 - b0, options.workers,
                 [&](std::size_t i) { loaded[i] = load_layer(store, layer_list[b0 + i]); });

    const std::size_t tasks = (b1 - b0) * nf * 2 * nr;
    parallel_for(tasks, options.workers, [&](std::size_t t) {
      const std::size_t r = t % nr;
      const std::size_t pass = (t / nr) % 2;
      const std::size_t fi = (t / (nr * 2)) % nf;
      const std::size_t li = t / (nr * 2 * nf);
      const std::size_t layer = layer_list[b0 + li];
      const auto& ft = targets[fi];

      ProbeConfig cfg = config;
      cfg.permute = pass == 1;
      const std::string ctx = "cell (feature=" + ft.name + ", layer=" + std::to_string(layer) +
                              ", pass=" + (pass ? "permuted" : "observed") +
                              ", repeat=" + std::to_string(r) + ")";
      try {
        results[((b0 + li) * nf + fi) * 2 + pass][r] =
            run_repeat(loaded[li].data, ft.store_rows, ft.values, cfg,
                       cell_seed(config.seed, ft.name, layer), r);
      } catch (const NumericError& e) {
        rethrow_with_context(e, ctx);
      } catch (const DataError& e) {
        rethrow_with_context(e, ctx);
      }
    });
  }

  GridResult out;
  out.manifest = manifest;
  for (std::size_t fi = 0; fi < nf; ++fi) {
    for (std::size_t li = 0; li < layer_list.size(); ++li) {
      const auto obs = collect_repeats(std::move(results[(li * nf + fi) * 2 + 0]));
      const auto rnd = collect_repeats(std::move(results[(li * nf + fi) * 2 + 1]));
      ProbeEstimate e;
      e.feature = targets[fi].name;
      e.layer = layer_list[li];
      e.r2_obs_mean = obs.mean_r2;
      e.r2_rand_mean = rnd.mean_r2;
      e.selectivity = selectivity(obs.mean_r2, rnd.mean_r2);
      e.r2_obs_fold_values = obs.fold_r2;
      e.r2_rand_fold_values = rnd.fold_r2;
      e.chosen_alphas = obs.chosen_alphas;
      out.estimates.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace layerprobe
