#pragma once

// Synthetic stores with planted, depth-localized linear signal.
//
// Each feature target y ~ N(0, 1) over W words. Layer l (1..L) holds
// unit-variance Gaussian noise plus, per feature, s_l * y * u_l' where u_l is
// a random unit direction drawn independently per layer and
// s_l = snr_peak * decay^|l - planted_layer|. Layer 0 is pure noise. With a
// single feature the population R^2 of a linear probe at layer l is
// s_l^2 / (s_l^2 + 1).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layerprobe/embedding_store.hpp"
#include "layerprobe/norm_data.hpp"

namespace layerprobe {

struct PlantedFeature {
  std::string name;
  std::string category = "Synthetic";
  std::size_t planted_layer = 1;
  double snr_peak = 1.0;
  double decay = 0.5;
};

struct SynthSpec {
  std::size_t L = 8;
  std::size_t d = 64;
  std::size_t W = 2000;
  std::size_t planted_layer = 5;
  double snr_peak = 2.0;
  double decay = 0.5;
  std::uint64_t seed = 0;

  std::string model_name = "synthetic";
  ExtractionMethod method = ExtractionMethod::kIsolated;
  std::string feature_name = "planted";
  std::string category = "Synthetic";
  std::vector<PlantedFeature> extra_features;

  void validate() const;  // throws DataError
  std::vector<PlantedFeature> features() const;  // primary first, then extras
};

struct SynthData {
  StoreManifest manifest;
  std::vector<std::string> words;
  std::vector<EmbeddingMatrix> layers;
  NormTable table;
};

SynthData generate(const SynthSpec& spec);

// Population R^2 per layer 0..L for the primary feature.
std::vector<double> expected_profile(const SynthSpec& spec);

struct SynthPaths {
  std::filesystem::path store;
  std::filesystem::path norms;
  std::filesystem::path categories;
};

// Writes <dir>/store/, <dir>/norms.tsv and <dir>/categories.tsv.
SynthPaths write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace layerprobe
