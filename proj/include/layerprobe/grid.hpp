#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "layerprobe/embedding_store.hpp"
#include "layerprobe/norm_data.hpp"
#include "layerprobe/probe.hpp"
#include "layerprobe/tables.hpp"

namespace layerprobe {

struct ProbeEstimate {
  std::string feature;
  std::size_t layer = 0;
  double r2_obs_mean = 0.0;
  double r2_rand_mean = 0.0;
  double selectivity = 0.0;
  std::vector<double> r2_obs_fold_values;
  std::vector<double> r2_rand_fold_values;
  std::vector<double> chosen_alphas;  // observed pass, one per fold

  // Most frequent chosen alpha; ties go to the larger value.
  double alpha_mode() const;
};

struct GridOptions {
  std::size_t workers = 1;
  // Upper bound on decoded layer payloads held at once (float32 bytes).
  std::uintmax_t max_resident_bytes = std::uintmax_t{2} << 30;
};

struct GridResult {
  StoreManifest manifest;
  std::vector<ProbeEstimate> estimates;  // feature-major, then layer

  ResultTable table() const;
};

// Seed of one (feature, layer) cell. Observed and permuted passes share it;
// the permutation stream is separated by its own tag inside the probe.
std::uint64_t cell_seed(std::uint64_t seed, std::string_view feature, std::size_t layer);

// Fits every (feature, layer) cell for both the observed and the permuted
// pass. Empty `features` / `layers` mean all of them. The output is a pure
// function of the inputs and config, independent of `options.workers`.
GridResult run_grid(const EmbeddingStore& store, const NormTable& table,
                    const std::vector<std::string>& features,
                    const std::vector<std::size_t>& layers, const ProbeConfig& config,
                    const GridOptions& options = {});

}  // namespace layerprobe
