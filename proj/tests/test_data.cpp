#include "iegan/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "iegan/common.hpp"

using namespace iegan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("iegan_data_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Normalize, RoundTripExactForAllLevels) {
  auto levels = torch::arange(0, 256, torch::kUInt8).reshape({1, 16, 16});
  auto u8 = levels.expand({3, 16, 16}).contiguous();
  auto back = denormalize_image(normalize_image(u8));
  EXPECT_TRUE(torch::equal(back, u8));
}

TEST(Normalize, EndpointValues) {
  auto black = torch::zeros({3, 2, 2}, torch::kUInt8);
  EXPECT_DOUBLE_EQ(normalize_image(black).min().item<double>(), -1.0);
  EXPECT_DOUBLE_EQ(normalize_image(black).max().item<double>(), -1.0);
  auto white = torch::full({3, 2, 2}, 255, torch::kUInt8);
  EXPECT_DOUBLE_EQ(normalize_image(white).max().item<double>(), 1.0);
}

TEST(SaveLoad, PngRoundTripIsLossless) {
  auto dir = temp_dir("png");
  torch::manual_seed(0);
  auto u8 = torch::randint(0, 256, {3, 20, 24}, torch::kUInt8);
  auto img = normalize_image(u8);
  save_image(img, dir / "a.png");
  auto loaded = load_image(dir / "a.png");
  ASSERT_TRUE(loaded.has_value());
  EXPECT_TRUE(torch::equal(denormalize_image(*loaded), u8));
}

TEST(SaveLoad, UndecodableFileReturnsNullopt) {
  auto dir = temp_dir("bad");
  std::ofstream(dir / "junk.png") << "this is not a png";
  EXPECT_FALSE(load_image(dir / "junk.png").has_value());
}

TEST(ListImages, SortedAndFiltered) {
  auto dir = temp_dir("list");
  auto img = torch::zeros({3, 4, 4});
  save_image(img, dir / "b.png");
  save_image(img, dir / "a.jpg");
  std::ofstream(dir / "notes.txt") << "skip me";
  auto files = list_images(dir);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.jpg");
  EXPECT_EQ(files[1].filename(), "b.png");
}

TEST(SynthShapes, DeterministicByteIdentical) {
  SynthShapesConfig cfg;
  cfg.side = 32;
  cfg.train_a = 6;
  cfg.train_b = 6;
  cfg.test_a = 3;
  cfg.test_b = 3;
  auto d1 = temp_dir("synth1");
  auto d2 = temp_dir("synth2");
  auto ds1 = generate_synth_shapes(cfg, d1);
  auto ds2 = generate_synth_shapes(cfg, d2);
  ASSERT_EQ(ds1.train_a.size(), 6u);
  ASSERT_EQ(ds1.test_b.size(), 3u);
  for (size_t i = 0; i < ds1.train_a.size(); ++i) {
    EXPECT_EQ(ds1.train_a[i].filename(), ds2.train_a[i].filename());
    EXPECT_EQ(read_bytes(ds1.train_a[i]), read_bytes(ds2.train_a[i]));
  }
}

TEST(SynthShapes, SeedChangesContent) {
  SynthShapesConfig cfg;
  cfg.side = 32;
  cfg.train_a = 2;
  cfg.train_b = 2;
  cfg.test_a = 1;
  cfg.test_b = 1;
  auto ds1 = generate_synth_shapes(cfg, temp_dir("seed_a"));
  cfg.seed = 8;
  auto ds2 = generate_synth_shapes(cfg, temp_dir("seed_b"));
  EXPECT_NE(read_bytes(ds1.train_a[0]), read_bytes(ds2.train_a[0]));
}

TEST(SynthShapes, ClassifierSelfConsistency) {
  SynthShapesConfig cfg;
  cfg.side = 64;
  cfg.train_a = 40;
  cfg.train_b = 40;
  cfg.test_a = 10;
  cfg.test_b = 10;
  auto ds = generate_synth_shapes(cfg, temp_dir("consistency"));
  int square_hits = 0, circle_hits = 0, total_a = 0, total_b = 0;
  for (const auto& split : {ds.train_a, ds.test_a}) {
    for (const auto& f : split) {
      ++total_a;
      if (heuristic_shape_classifier(*load_image(f)) == ShapeLabel::Square)
        ++square_hits;
    }
  }
  for (const auto& split : {ds.train_b, ds.test_b}) {
    for (const auto& f : split) {
      ++total_b;
      if (heuristic_shape_classifier(*load_image(f)) == ShapeLabel::Circle)
        ++circle_hits;
    }
  }
  EXPECT_GE(square_hits, static_cast<int>(0.99 * total_a));
  EXPECT_GE(circle_hits, static_cast<int>(0.99 * total_b));
}

TEST(Classifier, BlankImageIsUnknown) {
  EXPECT_EQ(heuristic_shape_classifier(torch::zeros({3, 64, 64})),
            ShapeLabel::Unknown);
  EXPECT_EQ(heuristic_shape_classifier(torch::full({3, 64, 64}, 0.6f)),
            ShapeLabel::Unknown);
}

TEST(Classifier, LabelNames) {
  EXPECT_STREQ(shape_label_name(ShapeLabel::Square), "square");
  EXPECT_STREQ(shape_label_name(ShapeLabel::Circle), "circle");
  EXPECT_STREQ(shape_label_name(ShapeLabel::Unknown), "unknown");
}

TEST(UnpairedDatasetTest, MissingSplitIsNamedInError) {
  SynthShapesConfig cfg;
  cfg.side = 32;
  cfg.train_a = 2;
  cfg.train_b = 2;
  cfg.test_a = 1;
  cfg.test_b = 1;
  auto root = temp_dir("missing");
  generate_synth_shapes(cfg, root);
  fs::remove_all(root / "testB");
  try {
    UnpairedDataset::load(root);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("testB"), std::string::npos);
  }
}

TEST(UnpairedDatasetTest, LoadsGeneratedDataset) {
  SynthShapesConfig cfg;
  cfg.side = 32;
  cfg.train_a = 3;
  cfg.train_b = 4;
  cfg.test_a = 2;
  cfg.test_b = 2;
  auto root = temp_dir("load");
  generate_synth_shapes(cfg, root);
  auto ds = UnpairedDataset::load(root);
  EXPECT_EQ(ds.train_a.size(), 3u);
  EXPECT_EQ(ds.train_b.size(), 4u);
  EXPECT_EQ(ds.test_a.size(), 2u);
  EXPECT_EQ(ds.test_b.size(), 2u);
  EXPECT_EQ(ds.skipped, 0);
}

TEST(UnpairedDatasetTest, UndecodableFilesAreSkippedWithCount) {
  SynthShapesConfig cfg;
  cfg.side = 32;
  cfg.train_a = 2;
  cfg.train_b = 2;
  cfg.test_a = 1;
  cfg.test_b = 1;
  auto root = temp_dir("skip");
  generate_synth_shapes(cfg, root);
  std::ofstream(root / "trainA" / "corrupt.png") << "nope";
  auto ds = UnpairedDataset::load(root);
  EXPECT_EQ(ds.train_a.size(), 2u);
  EXPECT_EQ(ds.skipped, 1);
}
