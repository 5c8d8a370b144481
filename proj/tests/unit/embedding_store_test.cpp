#include "layerprobe/embedding_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"
#include "unit/test_util.hpp"

namespace layerprobe {
namespace {

namespace fs = std::filesystem;
using testing_util::scratch_dir;

struct Fixture {
  StoreManifest manifest;
  std::vector<std::string> words;
  std::vector<EmbeddingMatrix> layers;
};

Fixture make_fixture(std::size_t layers = 3, std::size_t words = 5, std::size_t dim = 4) {
  Fixture f;
  f.manifest = {"tiny", ExtractionMethod::kTemplate, layers, dim, words, "f32le"};
  std::mt19937 gen(1);
  std::normal_distribution<float> z;
  for (std::size_t i = 0; i < words; ++i) f.words.push_back("word" + std::to_string(i));
  for (std::size_t l = 0; l < layers; ++l) {
    EmbeddingMatrix m(words, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(gen);
    f.layers.push_back(m);
  }
  // Values that stress the bit pattern round trip.
  f.layers[1](0, 0) = -0.0f;
  f.layers[1](0, 1) = std::numeric_limits<float>::denorm_min();
  f.layers[1](0, 2) = std::numeric_limits<float>::max();
  return f;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(EmbeddingStore, RoundTripIsBitExact) {
  const auto dir = scratch_dir() / "store";
  const auto f = make_fixture();
  write_store(dir, f.manifest, f.words, f.layers);
  const auto store = open_store(dir);
  EXPECT_EQ(store.manifest().model_name, "tiny");
  EXPECT_EQ(store.manifest().extraction_method, ExtractionMethod::kTemplate);
  EXPECT_EQ(store.manifest().block_count(), 2u);
  EXPECT_EQ(store.words(), f.words);
  for (std::size_t l = 0; l < f.layers.size(); ++l) {
    const auto m = load_layer(store, l);
    EXPECT_EQ(m.layer_index, l);
    ASSERT_EQ(m.data.rows(), 5);
    ASSERT_EQ(m.data.cols(), 4);
    EXPECT_EQ(std::memcmp(m.data.data(), f.layers[l].data(), sizeof(float) * m.data.size()), 0);
  }
}

TEST(EmbeddingStore, LayerFilesAreLittleEndianRowMajor) {
  const auto dir = scratch_dir() / "store";
  auto f = make_fixture(2, 2, 2);
  f.layers[0] << 1.0f, 2.0f, 3.0f, 4.0f;
  write_store(dir, f.manifest, f.words, f.layers);
  EXPECT_EQ(layer_file_name(0), "layer_000.bin");
  const auto bytes = text::read_file(dir / "layer_000.bin");
  ASSERT_EQ(bytes.size(), 16u);
  // 2.0f = 0x40000000 stored little-endian as the second float.
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x40);
  // 3.0f = 0x40400000 opens the second row.
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 0x40);
  EXPECT_EQ(static_cast<unsigned char>(bytes[11]), 0x40);
}

TEST(EmbeddingStore, ManifestCarriesRequiredKeys) {
  const auto dir = scratch_dir() / "store";
  const auto f = make_fixture();
  write_store(dir, f.manifest, f.words, f.layers);
  const auto json = text::read_file(dir / "manifest.json");
  for (const char* key : {"model_name", "extraction_method", "num_layers", "hidden_dim",
                          "word_count", "dtype"})
    EXPECT_NE(json.find(std::string("\"") + key + "\""), std::string::npos) << key;
  EXPECT_NE(json.find("\"template\""), std::string::npos);
}

TEST(EmbeddingStore, TruncatedLayerReportsExpectedAndFoundBytes) {
  const auto dir = scratch_dir() / "store";
  const auto f = make_fixture(3, 3, 2);  // 3 x 2 x 4 = 24 bytes per layer
  write_store(dir, f.manifest, f.words, f.layers);
  fs::resize_file(dir / "layer_002.bin", 20);
  const auto msg = error_of([&] { open_store(dir); });
  EXPECT_NE(msg.find("layer_002.bin"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected 24"), std::string::npos) << msg;
  EXPECT_NE(msg.find("20"), std::string::npos) << msg;
}

TEST(EmbeddingStore, RejectsInconsistentStores) {
  const auto root = scratch_dir();
  const auto f = make_fixture();

  write_store(root / "missing_layer", f.manifest, f.words, f.layers);
  fs::remove(root / "missing_layer" / "layer_001.bin");
  EXPECT_NE(error_of([&] { open_store(root / "missing_layer"); }).find("layer_001.bin"),
            std::string::npos);

  write_store(root / "words", f.manifest, f.words, f.layers);
  text::write_file(root / "words" / "words.txt", "a\nb\n");
  EXPECT_NE(error_of([&] { open_store(root / "words"); }).find("word count"), std::string::npos);

  write_store(root / "dtype", f.manifest, f.words, f.layers);
  auto j = text::read_file(root / "dtype" / "manifest.json");
  j.replace(j.find("f32le"), 5, "f16le");
  text::write_file(root / "dtype" / "manifest.json", j);
  EXPECT_NE(error_of([&] { open_store(root / "dtype"); }).find("dtype"), std::string::npos);

  write_store(root / "key", f.manifest, f.words, f.layers);
  text::write_file(root / "key" / "manifest.json",
                   R"({"model_name":"m","extraction_method":"isolated","num_layers":3,)"
                   R"("hidden_dim":4,"dtype":"f32le"})");
  EXPECT_NE(error_of([&] { open_store(root / "key"); }).find("word_count"), std::string::npos);

  EXPECT_THROW(open_store(root / "nothing"), DataError);
}

TEST(EmbeddingStore, ExtraManifestKeysAreTolerated) {
  const auto dir = scratch_dir() / "store";
  const auto f = make_fixture();
  write_store(dir, f.manifest, f.words, f.layers);
  auto j = text::read_file(dir / "manifest.json");
  j.insert(j.find('{') + 1, "\"contexts_per_word\": 50,");
  text::write_file(dir / "manifest.json", j);
  EXPECT_NO_THROW(open_store(dir));
}

TEST(EmbeddingStore, NonFiniteValuesAreRejectedWithPosition) {
  const auto dir = scratch_dir() / "store";
  auto f = make_fixture();
  write_store(dir, f.manifest, f.words, f.layers);
  // Overwrite element (row 2, col 1) of layer 0 with a NaN.
  std::fstream out(dir / "layer_000.bin", std::ios::in | std::ios::out | std::ios::binary);
  out.seekp((2 * 4 + 1) * 4);
  const unsigned char nan_bytes[4] = {0x00, 0x00, 0xc0, 0x7f};
  out.write(reinterpret_cast<const char*>(nan_bytes), 4);
  out.close();
  const auto store = open_store(dir);
  const auto msg = error_of([&] { load_layer(store, 0); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_THROW(load_layer(store, 3), DataError);

  f.layers[1](1, 1) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(write_store(scratch_dir() / "inf", f.manifest, f.words, f.layers), DataError);
}

TEST(EmbeddingStore, AlignWordsMapsTableRowsToStoreRows) {
  const auto dir = scratch_dir() / "store";
  const auto f = make_fixture();
  write_store(dir, f.manifest, f.words, f.layers);
  const auto store = open_store(dir);
  const NormTable table({"word3", "word0", "ghost"}, {"v"}, {1, 2, 3}, {1, 1, 1}, {{"v", "V"}});
  EXPECT_EQ(align_words(store, WordSubset{{0, 1}, 0}, table),
            (std::vector<std::size_t>{3, 0}));
  const auto msg = error_of([&] { align_words(store, WordSubset{{2}, 0}, table); });
  EXPECT_NE(msg.find("ghost"), std::string::npos) << msg;
}

TEST(EmbeddingStore, MethodTagsRoundTrip) {
  for (auto m : {ExtractionMethod::kIsolated, ExtractionMethod::kTemplate,
                 ExtractionMethod::kAveraged})
    EXPECT_EQ(parse_extraction_method(to_string(m)), m);
  EXPECT_THROW(parse_extraction_method("pooled"), DataError);
}

}  // namespace
}  // namespace layerprobe
