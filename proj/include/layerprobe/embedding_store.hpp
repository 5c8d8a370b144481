#pragma once

// On-disk layer-indexed embedding stores.
//
// Layout of a store directory:
//   manifest.json   model_name, extraction_method, num_layers, hidden_dim,
//                   word_count, dtype ("f32le")
//   words.txt       one word per line; line i is row i of every layer
//   layer_000.bin   raw row-major float32 little-endian, W*d values
//   ...
//   layer_{L}.bin   layer 0 is the input embedding, 1..L block outputs

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "layerprobe/norm_data.hpp"

namespace layerprobe {

enum class ExtractionMethod { kIsolated, kTemplate, kAveraged };

std::string_view to_string(ExtractionMethod m);
ExtractionMethod parse_extraction_method(std::string_view tag);  // throws DataError

using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StoreManifest {
  std::string model_name;
  ExtractionMethod extraction_method = ExtractionMethod::kIsolated;
  std::size_t num_layers = 0;  // L + 1
  std::size_t hidden_dim = 0;
  std::size_t word_count = 0;
  std::string dtype = "f32le";

  std::size_t block_count() const { return num_layers - 1; }
  std::uintmax_t layer_bytes() const {
    return static_cast<std::uintmax_t>(word_count) * hidden_dim * sizeof(float);
  }
};

struct LayerMatrix {
  std::size_t layer_index = 0;
  EmbeddingMatrix data;
};

class EmbeddingStore {
 public:
  EmbeddingStore(std::filesystem::path dir, StoreManifest manifest,
                 std::vector<std::string> words);

  const std::filesystem::path& dir() const { return dir_; }
  const StoreManifest& manifest() const { return manifest_; }
  const std::vector<std::string>& words() const { return words_; }
  std::filesystem::path layer_path(std::size_t layer) const;

 private:
  std::filesystem::path dir_;
  StoreManifest manifest_;
  std::vector<std::string> words_;
};

std::string layer_file_name(std::size_t layer);

// Validates manifest fields, words.txt line count, and every layer file
// size. Layer payloads are not read.
EmbeddingStore open_store(const std::filesystem::path& dir);

LayerMatrix load_layer(const EmbeddingStore& store, std::size_t layer_index);

// Writes a complete store. `layers` must hold num_layers matrices of
// word_count x hidden_dim; words must match word_count.
void write_store(const std::filesystem::path& dir, const StoreManifest& manifest,
                 const std::vector<std::string>& words,
                 const std::vector<EmbeddingMatrix>& layers);

// Incremental writer for stores too large to hold in memory at once.
class StoreWriter {
 public:
  StoreWriter(std::filesystem::path dir, StoreManifest manifest,
              const std::vector<std::string>& words);
  void write_layer(std::size_t layer_index, const EmbeddingMatrix& data);

 private:
  std::filesystem::path dir_;
  StoreManifest manifest_;
};

// For each subset entry (a NormTable row), the matching store row.
std::vector<std::size_t> align_words(const EmbeddingStore& store, const WordSubset& subset,
                                     const NormTable& table);

}  // namespace layerprobe
