#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace iegan {

// Architecture-scale knobs shared by encoders, generators, discriminators.
struct EncoderConfig {
  int64_t ch = 64;        // base channel count
  int64_t image_size = 256;  // S; must be divisible by 32
  bool use_dsi = true;    // merge all pyramid levels (ablation toggle)
  bool use_lat = true;    // linear attention block at the deepest level

  static constexpr int kLevels = 4;  // pyramid levels n in {-3,-2,-1,0}

  void validate() const;

  // Spatial side of pyramid level index i (0 = shallowest, n = 0).
  int64_t level_side(int i) const { return (image_size / 4) >> i; }
  // Channel count of pyramid level index i.
  int64_t level_channels(int i) const { return ch << i; }
  // Merged DSI shape: (S/2) x (S/2) x (ch/4).
  int64_t merged_side() const { return image_size / 2; }
  int64_t merged_channels() const { return ch / 4; }
};

struct LossWeights {
  double lambda_feature = 10.0;
  double lambda_adversarial = 1.0;
  double lambda_cycle = 10.0;
  double lambda_identity = 10.0;
};

struct TrainConfig {
  EncoderConfig enc;
  LossWeights weights;
  int64_t iterations = 100000;
  int64_t batch_size = 1;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int64_t resize_size = 286;
  int64_t crop_size = 256;
  bool hflip = true;
  uint64_t seed = 1;
  int64_t checkpoint_every = 500;
  bool cam_in_adv = true;  // fold CAM logits into the adversarial loss

  void validate() const;
};

// Flat key=value run configuration. Unknown keys are rejected.
struct RunConfig {
  TrainConfig train;

  // Parses "key = value" lines; '#' starts a comment. Throws ConfigError
  // naming the offending key or value.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  // Applies the documented desk-scale profile (ch=16, S=64, 2000 iters).
  void apply_desk_profile();

  void set(const std::string& key, const std::string& value);

  // Fully resolved key=value text, defaults applied.
  std::string to_text() const;
};

}  // namespace iegan
