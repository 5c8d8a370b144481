#include "layerprobe/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "layerprobe/errors.hpp"
#include "layerprobe/spearman.hpp"

namespace layerprobe {

std::string_view to_string(Metric m) { return m == Metric::kRaw ? "raw" : "selectivity"; }

Metric parse_metric(std::string_view s) {
  if (s == "selectivity") return Metric::kSelectivity;
  if (s == "raw") return Metric::kRaw;
  throw DataError("unknown metric \"" + std::string(s) + "\" (expected selectivity or raw)");
}

std::vector<double> delta_from_best(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double best = *std::max_element(scores.begin(), scores.end());
  std::vector<double> d(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) d[i] = best - scores[i];
  return d;
}

std::size_t argmax_layer(std::span<const double> scores) {
  if (scores.empty()) throw DataError("argmax of an empty profile");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) -
                                  scores.begin());
}

std::optional<double> center_of_mass(std::span<const double> scores) {
  if (scores.size() < 2) throw DataError("center of mass needs layers 0..L with L >= 1");
  const std::size_t L = scores.size() - 1;
  const double floor = *std::min_element(scores.begin() + 1, scores.end());
  double total = 0.0;
  for (std::size_t l = 1; l <= L; ++l) total += scores[l] - floor;
  if (!(total > 0.0)) return std::nullopt;
  // Normalizing the weights first keeps point masses exact (weight 1 * k/L).
  double com = 0.0;
  for (std::size_t l = 1; l <= L; ++l) {
    const double w = (scores[l] - floor) / total;
    com += (static_cast<double>(l) / static_cast<double>(L)) * w;
  }
  return com;
}

LocalizationSummary localize(std::span<const double> scores) {
  LocalizationSummary s;
  s.com = center_of_mass(scores);
  s.argmax_layer = argmax_layer(scores);
  s.delta = delta_from_best(scores);
  s.best_score = scores[s.argmax_layer];
  return s;
}

std::vector<double> grid_coordinates(std::size_t points) {
  if (points < 2) throw DataError("grid needs at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

std::vector<double> resample_to_grid(std::span<const double> scores, std::size_t points) {
  if (points < 2) throw DataError("resample: need at least 2 grid points");
  if (scores.size() < 2) throw DataError("resample: profile needs at least 2 layers");
  const std::size_t L = scores.size() - 1;
  const std::size_t span = points - 1;
  std::vector<double> out(points);
  for (std::size_t g = 0; g < points; ++g) {
    // position g/span on [0, 1] maps to layer coordinate g*L/span, split
    // into integer part and remainder so grid points on layers are exact
    const std::size_t num = g * L;
    const std::size_t i = num / span;
    const std::size_t rem = num % span;
    if (rem == 0) {
      out[g] = scores[i];
      continue;
    }
    const double frac = static_cast<double>(rem) / static_cast<double>(span);
    out[g] = scores[i] + frac * (scores[i + 1] - scores[i]);
  }
  return out;
}

CategoryAggregation category_profile(const std::vector<LayerProfile>& profiles,
                                     const std::map<std::string, std::string>& category_map,
                                     std::size_t points,
                                     const std::vector<std::string>& category_order) {
  std::vector<std::string> order = category_order;
  if (order.empty()) {
    std::set<std::string> labels;
    for (const auto& [f, c] : category_map) labels.insert(c);
    order.assign(labels.begin(), labels.end());
  }

  struct Acc {
    std::vector<double> sum;
    std::size_t n = 0;
    double com_sum = 0.0;
    std::size_t com_n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& p : profiles) {
    auto it = category_map.find(p.feature);
    if (it == category_map.end())
      throw DataError("feature \"" + p.feature + "\" has no category");
    auto& a = acc[it->second];
    const auto resampled = resample_to_grid(delta_from_best(p.scores), points);
    if (a.sum.empty()) a.sum.assign(points, 0.0);
    for (std::size_t i = 0; i < points; ++i) a.sum[i] += resampled[i];
    ++a.n;
    if (auto c = center_of_mass(p.scores)) {
      a.com_sum += *c;
      ++a.com_n;
    }
  }

  CategoryAggregation out;
  for (const auto& label : order) {
    auto it = acc.find(label);
    if (it == acc.end() || it->second.n == 0) {
      out.warnings.push_back("category \"" + label + "\" has no member profiles; omitted");
      continue;
    }
    const Acc& a = it->second;
    CategoryProfile cp;
    cp.category = label;
    cp.members = a.n;
    cp.mean_delta.resize(points);
    std::vector<double> as_score(points);
    for (std::size_t i = 0; i < points; ++i) {
      cp.mean_delta[i] = a.sum[i] / static_cast<double>(a.n);
      as_score[i] = -cp.mean_delta[i];
    }
    cp.com = center_of_mass(as_score);
    cp.argmax_point = argmax_layer(as_score);
    if (a.com_n) cp.mean_member_com = a.com_sum / static_cast<double>(a.com_n);
    out.categories.push_back(std::move(cp));
  }
  for (const auto& [label, a] : acc)
    if (std::find(order.begin(), order.end(), label) == order.end())
      out.warnings.push_back("category \"" + label + "\" not in the requested order; skipped");
  return out;
}

namespace {

using ProfileKey = std::tuple<std::string, std::string, std::string>;

// Groups (key, layer, score) triples into gap-free profiles.
template <typename Row, typename ScoreFn>
std::vector<LayerProfile> group_profiles(const std::vector<Row>& rows, ScoreFn score) {
  std::vector<ProfileKey> order;
  std::map<ProfileKey, std::map<std::size_t, double>> cells;
  for (const auto& r : rows) {
    ProfileKey key{r.model, r.method, r.feature};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    if (!it->second.emplace(r.layer, score(r)).second)
      throw DataError("duplicate cell for model " + r.model + ", method " + r.method +
                      ", feature " + r.feature + ", layer " + std::to_string(r.layer));
  }
  std::vector<LayerProfile> out;
  for (const auto& key : order) {
    const auto& layers = cells.at(key);
    const std::size_t L = layers.rbegin()->first;
    const auto& [model, method, feature] = key;
    if (L < 1 || layers.size() != L + 1) {
      std::string missing;
      for (std::size_t l = 0; l <= std::max<std::size_t>(L, 1); ++l)
        if (!layers.count(l)) missing += (missing.empty() ? "" : ",") + std::to_string(l);
      throw DataError("missing layer cells for model " + model + ", method " + method +
                      ", feature " + feature + ": layers " + missing);
    }
    LayerProfile p{model, method, feature, {}};
    p.scores.reserve(L + 1);
    for (const auto& [l, s] : layers) p.scores.push_back(s);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<LayerProfile> build_profiles(const ResultTable& results, Metric metric) {
  return group_profiles(results.rows, [metric](const ResultRow& r) {
    return metric == Metric::kRaw ? r.r2_obs : r.selectivity;
  });
}

std::vector<ProfileRow> profile_rows(const std::vector<LayerProfile>& profiles) {
  std::vector<ProfileRow> rows;
  for (const auto& p : profiles) {
    const auto delta = delta_from_best(p.scores);
    const double L = static_cast<double>(p.blocks());
    for (std::size_t l = 0; l < p.scores.size(); ++l)
      rows.push_back({p.model, p.method, p.feature, l, static_cast<double>(l) / L, p.scores[l],
                      delta[l]});
  }
  return rows;
}

std::vector<LayerProfile> profiles_from_rows(const std::vector<ProfileRow>& rows) {
  return group_profiles(rows, [](const ProfileRow& r) { return r.score; });
}

std::vector<SummaryRow> layer_summary(const ResultTable& results) {
  std::vector<SummaryRow> out;
  const auto sel = build_profiles(results, Metric::kSelectivity);
  const auto raw = build_profiles(results, Metric::kRaw);

  std::vector<std::pair<std::string, std::string>> groups;
  for (const auto& p : sel) {
    std::pair<std::string, std::string> g{p.model, p.method};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  for (const auto& [model, method] : groups) {
    for (const auto* profiles : {&sel, &raw}) {
      SummaryRow s{model, method, profiles == &sel ? Metric::kSelectivity : Metric::kRaw};
      for (const auto& p : *profiles) {
        if (p.model != model || p.method != method) continue;
        const auto [lo, hi] = std::minmax_element(p.scores.begin(), p.scores.end());
        s.first += p.scores.front();
        s.last += p.scores.back();
        s.best += *hi;
        s.worst += *lo;
        s.mean += std::accumulate(p.scores.begin(), p.scores.end(), 0.0) /
                  static_cast<double>(p.scores.size());
        ++s.features;
      }
      const double n = static_cast<double>(s.features);
      s.first /= n;
      s.last /= n;
      s.best /= n;
      s.worst /= n;
      s.mean /= n;
      out.push_back(s);
    }
  }
  return out;
}

TailStats tail_stats(const std::vector<LayerProfile>& profiles, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw DataError("tail fraction must lie strictly between 0 and 1");
  // A layer exactly on the boundary l/L == 1 - tail_fraction is not in the tail.
  constexpr double kBoundaryTol = 1e-12;
  const double cut = 1.0 - tail_fraction + kBoundaryTol;

  TailStats t;
  std::size_t in_tail = 0, tail_cells = 0;
  double drop_sum = 0.0;
  for (const auto& p : profiles) {
    const double L = static_cast<double>(p.blocks());
    const auto delta = delta_from_best(p.scores);
    if (static_cast<double>(argmax_layer(p.scores)) / L > cut) ++in_tail;
    for (std::size_t l = 0; l < p.scores.size(); ++l) {
      if (static_cast<double>(l) / L > cut) {
        drop_sum += delta[l];
        ++tail_cells;
      }
    }
    ++t.pairs;
  }
  if (t.pairs) t.best_layer_fraction = static_cast<double>(in_tail) / static_cast<double>(t.pairs);
  if (tail_cells) t.mean_drop = drop_sum / static_cast<double>(tail_cells);
  return t;
}

TailStats tail_stats(const ResultTable& results, Metric metric, double tail_fraction) {
  return tail_stats(build_profiles(results, metric), tail_fraction);
}

std::optional<MethodGain> method_gain(const ResultTable& results, Metric metric) {
  const auto profiles = build_profiles(results, metric);
  // (model, feature) -> method -> mean score over layers
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> means;
  for (const auto& p : profiles)
    means[{p.model, p.feature}][p.method] =
        std::accumulate(p.scores.begin(), p.scores.end(), 0.0) /
        static_cast<double>(p.scores.size());

  std::vector<double> gains;
  std::map<std::string, std::pair<double, std::size_t>> per_feature;
  for (const auto& [key, by_method] : means) {
    auto iso = by_method.find("isolated");
    if (iso == by_method.end()) continue;
    for (const char* ctx : {"template", "averaged"}) {
      auto it = by_method.find(ctx);
      if (it == by_method.end()) continue;
      const double g = it->second - iso->second;
      gains.push_back(g);
      auto& pf = per_feature[key.second];
      pf.first += g;
      ++pf.second;
    }
  }
  if (gains.empty()) return std::nullopt;

  std::sort(gains.begin(), gains.end());
  const std::size_t n = gains.size();
  MethodGain mg;
  mg.metric = metric;
  mg.pairs = n;
  mg.median_gain = n % 2 ? gains[n / 2] : 0.5 * (gains[n / 2 - 1] + gains[n / 2]);
  std::size_t improved = 0;
  for (const auto& [f, sum_n] : per_feature)
    if (sum_n.first / static_cast<double>(sum_n.second) > 0.0) ++improved;
  mg.fraction_features_improved =
      static_cast<double>(improved) / static_cast<double>(per_feature.size());
  return mg;
}

SimilarityMatrix model_similarity(const ComVectors& vectors,
                                  const std::vector<std::string>& exclude, std::string method) {
  const std::size_t nm = vectors.models.size();
  const std::size_t nf = vectors.features.size();
  if (vectors.com.size() != nm) throw DataError("similarity: one COM vector per model required");
  for (std::size_t m = 0; m < nm; ++m)
    if (vectors.com[m].size() != nf)
      throw DataError("similarity: COM vector of model " + vectors.models[m] +
                      " does not match the feature list");

  std::set<std::string> excluded(exclude.begin(), exclude.end());
  for (const auto& f : excluded)
    if (std::find(vectors.features.begin(), vectors.features.end(), f) == vectors.features.end())
      throw DataError("similarity: excluded feature \"" + f + "\" is not present");
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < nf; ++f)
    if (!excluded.count(vectors.features[f])) kept.push_back(f);
  if (kept.size() < 3)
    throw DataError("similarity: " + std::to_string(kept.size()) +
                    " features remain after exclusion, need at least 3");

  SimilarityMatrix s;
  s.method = std::move(method);
  s.models = vectors.models;
  s.excluded_features.assign(excluded.begin(), excluded.end());
  s.rho.assign(nm, std::vector<double>(nm, 1.0));
  s.shared.assign(nm, std::vector<std::size_t>(nm, 0));
  for (std::size_t a = 0; a < nm; ++a) {
    for (std::size_t f : kept) s.shared[a][a] += vectors.com[a][f].has_value();
    for (std::size_t b = a + 1; b < nm; ++b) {
      std::vector<double> x, y;
      for (std::size_t f : kept) {
        if (vectors.com[a][f] && vectors.com[b][f]) {
          x.push_back(*vectors.com[a][f]);
          y.push_back(*vectors.com[b][f]);
        }
      }
      if (x.size() < 3)
        throw DataError("similarity: models " + vectors.models[a] + " and " + vectors.models[b] +
                        " share only " + std::to_string(x.size()) +
                        " features with defined COM, need at least 3");
      double r;
      try {
        r = spearman(x, y);
      } catch (const DataError& e) {
        throw DataError("similarity: models " + vectors.models[a] + " and " + vectors.models[b] +
                        ": " + e.what());
      }
      s.rho[a][b] = s.rho[b][a] = r;
      s.shared[a][b] = s.shared[b][a] = x.size();
    }
  }
  return s;
}

}  // namespace layerprobe
