#include "layerprobe/synth.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "layerprobe/errors.hpp"
#include "layerprobe/rng.hpp"

namespace layerprobe {

namespace {

constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kDirectionStream = 3;

double signal_scale(const PlantedFeature& f, std::size_t layer) {
  if (layer == 0) return 0.0;
  const double dist = std::abs(static_cast<double>(layer) - static_cast<double>(f.planted_layer));
  return f.snr_peak * std::pow(f.decay, dist);
}

}  // namespace

std::vector<PlantedFeature> SynthSpec::features() const {
  std::vector<PlantedFeature> out;
  out.push_back({feature_name, category, planted_layer, snr_peak, decay});
  out.insert(out.end(), extra_features.begin(), extra_features.end());
  return out;
}

void SynthSpec::validate() const {
  if (L < 1) throw DataError("synth: L must be >= 1");
  if (d < 1) throw DataError("synth: d must be >= 1");
  if (W < 1) throw DataError("synth: W must be >= 1");
  std::set<std::string> names;
  for (const auto& f : features()) {
    if (f.name.empty()) throw DataError("synth: feature name must be non-empty");
    if (!names.insert(f.name).second) throw DataError("synth: duplicate feature " + f.name);
    if (f.planted_layer < 1 || f.planted_layer > L)
      throw DataError("synth: planted layer of " + f.name + " must lie in 1..L");
    if (!(f.snr_peak >= 0.0) || !std::isfinite(f.snr_peak))
      throw DataError("synth: snr_peak of " + f.name + " must be a finite value >= 0");
    if (!(f.decay >= 0.0 && f.decay < 1.0))
      throw DataError("synth: decay of " + f.name + " must lie in [0, 1)");
  }
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const auto features = spec.features();
  const auto W = static_cast<Eigen::Index>(spec.W);
  const auto d = static_cast<Eigen::Index>(spec.d);

  SynthData out;
  out.manifest = {spec.model_name, spec.method, spec.L + 1, spec.d, spec.W, "f32le"};
  out.words.reserve(spec.W);
  for (std::size_t i = 0; i < spec.W; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%06zu", i);
    out.words.emplace_back(buf);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> targets;
  for (std::size_t k = 0; k < features.size(); ++k) {
    Engine eng = make_engine(mix_seed({spec.seed, kTargetStream, k}));
    Eigen::VectorXd y(W);
    for (Eigen::Index i = 0; i < W; ++i) y(i) = normal(eng);
    targets.push_back(std::move(y));
  }

  for (std::size_t l = 0; l <= spec.L; ++l) {
    Engine noise_eng = make_engine(mix_seed({spec.seed, kNoiseStream, l}));
    Eigen::MatrixXd layer(W, d);
    for (Eigen::Index i = 0; i < W; ++i)
      for (Eigen::Index j = 0; j < d; ++j) layer(i, j) = normal(noise_eng);

    for (std::size_t k = 0; k < features.size(); ++k) {
      const double s = signal_scale(features[k], l);
      if (s == 0.0) continue;
      Engine dir_eng = make_engine(mix_seed({spec.seed, kDirectionStream, k, l}));
      Eigen::VectorXd u(d);
      for (Eigen::Index j = 0; j < d; ++j) u(j) = normal(dir_eng);
      u.normalize();
      layer.noalias() += s * targets[k] * u.transpose();
    }
    out.layers.push_back(layer.cast<float>());
  }

  std::vector<std::string> names;
  std::map<std::string, std::string> categories;
  for (const auto& f : features) {
    names.push_back(f.name);
    categories[f.name] = f.category;
  }
  std::vector<double> values(spec.W * features.size());
  for (std::size_t i = 0; i < spec.W; ++i)
    for (std::size_t k = 0; k < features.size(); ++k)
      values[i * features.size() + k] = targets[k](static_cast<Eigen::Index>(i));
  std::vector<std::uint8_t> present(values.size(), 1);
  out.table = NormTable(out.words, std::move(names), std::move(values), std::move(present),
                        std::move(categories));
  return out;
}

std::vector<double> expected_profile(const SynthSpec& spec) {
  spec.validate();
  const auto primary = spec.features().front();
  std::vector<double> r2(spec.L + 1);
  for (std::size_t l = 0; l <= spec.L; ++l) {
    const double s = signal_scale(primary, l);
    r2[l] = s * s / (s * s + 1.0);
  }
  return r2;
}

SynthPaths write_synth(const std::filesystem::path& dir, const SynthData& data) {
  SynthPaths paths{dir / "store", dir / "norms.tsv", dir / "categories.tsv"};
  std::filesystem::create_directories(dir);
  write_store(paths.store, data.manifest, data.words, data.layers);
  write_norm_table(paths.norms, data.table);
  write_category_map(paths.categories, data.table.categories(), data.table.features());
  return paths;
}

}  // namespace layerprobe
