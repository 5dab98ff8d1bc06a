#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace iegan {

// Pixel normalization: 8-bit [0,255] <-> [-1,1] via v/127.5 - 1. The round
// trip is exact for all 256 levels.
torch::Tensor normalize_image(const torch::Tensor& u8_chw);
torch::Tensor denormalize_image(const torch::Tensor& float_chw);

// PNG/JPEG decode to a float (3, H, W) tensor in [-1,1]; alpha dropped.
// Returns nullopt for undecodable files.
std::optional<torch::Tensor> load_image(const std::filesystem::path& path);
// Encode a [-1,1] (3, H, W) tensor; format chosen by extension.
void save_image(const torch::Tensor& image, const std::filesystem::path& path);

// Unpaired dataset rooted at a directory holding trainA/, trainB/,
// testA/, testB/. All four splits must exist and contain at least one
// decodable image.
struct UnpairedDataset {
  std::filesystem::path root;
  std::vector<std::filesystem::path> train_a, train_b, test_a, test_b;
  int64_t skipped = 0;  // undecodable files dropped during validation

  static UnpairedDataset load(const std::filesystem::path& root);
};

// Synthetic shapes dataset: domain A holds one filled square per image,
// domain B one filled circle; colors are drawn from a shared palette so
// shape is the only systematic difference between domains.
struct SynthShapesConfig {
  int64_t side = 64;
  int64_t train_a = 200, train_b = 200, test_a = 50, test_b = 50;
  uint64_t seed = 7;
};

UnpairedDataset generate_synth_shapes(const SynthShapesConfig& cfg,
                                      const std::filesystem::path& out_root);

enum class ShapeLabel { Square, Circle, Unknown };

// Thresholds the dominant non-background blob and classifies by the fill
// ratio of its bounding box: >= 0.92 square, [0.68, 0.86] circle.
ShapeLabel heuristic_shape_classifier(const torch::Tensor& image);

const char* shape_label_name(ShapeLabel label);

// Sorted list of image files (.png/.jpg/.jpeg) directly under dir.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace iegan
