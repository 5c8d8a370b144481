#include "layerprobe/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"

namespace layerprobe {

namespace fs = std::filesystem;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::string_view to_string(ExtractionMethod m) {
  switch (m) {
    case ExtractionMethod::kIsolated:
      return "isolated";
    case ExtractionMethod::kTemplate:
      return "template";
    case ExtractionMethod::kAveraged:
      return "averaged";
  }
  return "isolated";
}

ExtractionMethod parse_extraction_method(std::string_view tag) {
  if (tag == "isolated") return ExtractionMethod::kIsolated;
  if (tag == "template") return ExtractionMethod::kTemplate;
  if (tag == "averaged") return ExtractionMethod::kAveraged;
  throw DataError("unknown extraction_method \"" + std::string(tag) +
                  "\" (expected isolated, template or averaged)");
}

std::string layer_file_name(std::size_t layer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "layer_%03zu.bin", layer);
  return buf;
}

EmbeddingStore::EmbeddingStore(fs::path dir, StoreManifest manifest,
                               std::vector<std::string> words)
    : dir_(std::move(dir)), manifest_(std::move(manifest)), words_(std::move(words)) {}

fs::path EmbeddingStore::layer_path(std::size_t layer) const {
  return dir_ / layer_file_name(layer);
}

namespace {

std::size_t required_count(const nlohmann::json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw DataError(file.string() + ": missing key \"" + key + "\"");
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw DataError(file.string() + ": \"" + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string required_string(const nlohmann::json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw DataError(file.string() + ": missing key \"" + key + "\"");
  if (!j.at(key).is_string())
    throw DataError(file.string() + ": \"" + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

void validate_manifest(const StoreManifest& m, const fs::path& where) {
  if (m.num_layers < 2)
    throw DataError(where.string() + ": num_layers must be >= 2 (input layer plus blocks)");
  if (m.hidden_dim < 1) throw DataError(where.string() + ": hidden_dim must be >= 1");
  if (m.word_count < 1) throw DataError(where.string() + ": word_count must be >= 1");
  if (m.dtype != "f32le")
    throw DataError(where.string() + ": unsupported dtype \"" + m.dtype + "\"");
}

std::string manifest_json(const StoreManifest& m) {
  nlohmann::ordered_json j;
  j["model_name"] = m.model_name;
  j["extraction_method"] = std::string(to_string(m.extraction_method));
  j["num_layers"] = m.num_layers;
  j["hidden_dim"] = m.hidden_dim;
  j["word_count"] = m.word_count;
  j["dtype"] = m.dtype;
  return j.dump(2) + "\n";
}

void encode_f32le(const float* src, std::size_t count, std::string& out) {
  out.resize(count * 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), src, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(src[i]);
      for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
}

}  // namespace

EmbeddingStore open_store(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::is_regular_file(manifest_path))
    throw DataError("store " + dir.string() + ": missing manifest.json");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(manifest_path.string() + ": expected a JSON object");

  StoreManifest m;
  m.model_name = required_string(j, "model_name", manifest_path);
  m.extraction_method =
      parse_extraction_method(required_string(j, "extraction_method", manifest_path));
  m.num_layers = required_count(j, "num_layers", manifest_path);
  m.hidden_dim = required_count(j, "hidden_dim", manifest_path);
  m.word_count = required_count(j, "word_count", manifest_path);
  m.dtype = required_string(j, "dtype", manifest_path);
  validate_manifest(m, manifest_path);

  const fs::path words_path = dir / "words.txt";
  if (!fs::is_regular_file(words_path))
    throw DataError("store " + dir.string() + ": missing words.txt");
  auto words = text::read_lines(words_path);
  if (words.size() != m.word_count)
    throw DataError(words_path.string() + ": word count mismatch: manifest declares " +
                    std::to_string(m.word_count) + ", file has " +
                    std::to_string(words.size()) + " lines");

  for (std::size_t l = 0; l < m.num_layers; ++l) {
    const fs::path p = dir / layer_file_name(l);
    if (!fs::is_regular_file(p)) throw DataError("store " + dir.string() + ": missing " + p.filename().string());
    const auto actual = fs::file_size(p);
    if (actual != m.layer_bytes())
      throw DataError(p.string() + ": size mismatch: expected " +
                      std::to_string(m.layer_bytes()) + " bytes, found " +
                      std::to_string(actual));
  }
  return EmbeddingStore(dir, std::move(m), std::move(words));
}

LayerMatrix load_layer(const EmbeddingStore& store, std::size_t layer_index) {
  const auto& m = store.manifest();
  if (layer_index >= m.num_layers)
    throw DataError("layer index " + std::to_string(layer_index) + " out of range [0, " +
                    std::to_string(m.num_layers - 1) + "]");
  const fs::path p = store.layer_path(layer_index);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());

  LayerMatrix out{layer_index, EmbeddingMatrix(m.word_count, m.hidden_dim)};
  const std::size_t count = m.word_count * m.hidden_dim;
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(count * 4));
    if (!in) throw DataError(p.string() + ": short read");
  } else {
    std::string raw(count * 4, '\0');
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) throw DataError(p.string() + ": short read");
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + b])) << (8 * b);
      out.data.data()[i] = std::bit_cast<float>(bits);
    }
  }

  const float* d = out.data.data();
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(d[i]))
      throw DataError(p.string() + ": non-finite value at (row " +
                      std::to_string(i / m.hidden_dim) + ", col " +
                      std::to_string(i % m.hidden_dim) + ")");
  }
  return out;
}

StoreWriter::StoreWriter(fs::path dir, StoreManifest manifest,
                         const std::vector<std::string>& words)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  validate_manifest(manifest_, dir_);
  if (words.size() != manifest_.word_count)
    throw DataError("store " + dir_.string() + ": " + std::to_string(words.size()) +
                    " words given, manifest declares " + std::to_string(manifest_.word_count));
  std::set<std::string_view> seen;
  std::string listing;
  for (const auto& w : words) {
    if (w.empty() || w.find('\n') != std::string::npos || w.find('\r') != std::string::npos)
      throw DataError("store word must be non-empty and single-line");
    if (!seen.insert(w).second) throw DataError("store: duplicate word \"" + w + "\"");
    listing += w;
    listing += '\n';
  }
  fs::create_directories(dir_);
  text::write_file(dir_ / "manifest.json", manifest_json(manifest_));
  text::write_file(dir_ / "words.txt", listing);
}

void StoreWriter::write_layer(std::size_t layer_index, const EmbeddingMatrix& data) {
  if (layer_index >= manifest_.num_layers)
    throw DataError("layer index " + std::to_string(layer_index) + " out of range");
  if (static_cast<std::size_t>(data.rows()) != manifest_.word_count ||
      static_cast<std::size_t>(data.cols()) != manifest_.hidden_dim)
    throw DataError("layer " + std::to_string(layer_index) + ": matrix is " +
                    std::to_string(data.rows()) + "x" + std::to_string(data.cols()) +
                    ", expected " + std::to_string(manifest_.word_count) + "x" +
                    std::to_string(manifest_.hidden_dim));
  if (!data.allFinite())
    throw DataError("layer " + std::to_string(layer_index) + ": non-finite values");
  std::string bytes;
  encode_f32le(data.data(), static_cast<std::size_t>(data.size()), bytes);
  text::write_file(dir_ / layer_file_name(layer_index), bytes);
}

void write_store(const fs::path& dir, const StoreManifest& manifest,
                 const std::vector<std::string>& words,
                 const std::vector<EmbeddingMatrix>& layers) {
  if (layers.size() != manifest.num_layers)
    throw DataError("write_store: " + std::to_string(layers.size()) +
                    " layers given, manifest declares " + std::to_string(manifest.num_layers));
  StoreWriter writer(dir, manifest, words);
  for (std::size_t l = 0; l < layers.size(); ++l) writer.write_layer(l, layers[l]);
}

std::vector<std::size_t> align_words(const EmbeddingStore& store, const WordSubset& subset,
                                     const NormTable& table) {
  std::map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < store.words().size(); ++i) {
    if (!row_of.emplace(store.words()[i], i).second)
      throw DataError("store " + store.dir().string() + ": duplicate word \"" +
                      store.words()[i] + "\" in words.txt");
  }
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  std::vector<std::string> missing;
  for (std::size_t row : subset.indices) {
    if (row >= table.word_count()) throw DataError("align_words: subset row out of range");
    auto it = row_of.find(table.words()[row]);
    if (it == row_of.end()) {
      missing.push_back(table.words()[row]);
      continue;
    }
    out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string list;
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > shown) list += ", ... (" + std::to_string(missing.size()) + " total)";
    throw DataError("store " + store.dir().string() + " lacks words: " + list);
  }
  return out;
}

}  // namespace layerprobe
