#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <random>

#include "iegan/config.hpp"
#include "iegan/data.hpp"
#include "iegan/discriminator.hpp"
#include "iegan/encoder.hpp"
#include "iegan/generator.hpp"
#include "iegan/losses.hpp"

namespace iegan {

enum class Direction { AtoB, BtoA };

// Selects which of the three train_step sub-updates actually step their
// optimizer; losses are computed and reported either way.
struct SubUpdates {
  bool encoders = true;
  bool discriminators = true;
  bool generators = true;
};

// All trainable state: the two independent encoders, both generators and
// discriminators, the three optimizers, the iteration counter and the RNG
// driving augmentation. Checkpoints round-trip this bit-exactly.
struct TrainState {
  TrainConfig cfg;
  IndependentEncoder enc_x{nullptr}, enc_y{nullptr};
  Generator gen_xy{nullptr}, gen_yx{nullptr};  // G: x->y, F: y->x
  Discriminator disc_x{nullptr}, disc_y{nullptr};
  std::unique_ptr<torch::optim::AdamW> opt_enc, opt_disc, opt_gen;
  int64_t iteration = 0;
  std::mt19937_64 rng;

  static TrainState create(const TrainConfig& cfg);

  // One iteration: (1) encoders/decoders step on the feature loss,
  // (2) discriminators step on the LSGAN loss with detached fakes,
  // (3) generators step on adversarial + cycle + identity with encoder
  // and discriminator parameters frozen; rho is clipped afterwards.
  LossReport train_step(const torch::Tensor& batch_x,
                        const torch::Tensor& batch_y,
                        const SubUpdates& updates = SubUpdates());

  // source-domain encode -> merge -> translate, eval mode, no grad.
  torch::Tensor translate(const torch::Tensor& images, Direction dir);
  // encode -> decode reconstruction, eval mode, no grad.
  torch::Tensor reconstruct(const torch::Tensor& images, Direction dir);
};

// Resize to resize_size, uniform-random crop to crop_size, optional
// horizontal flip with p = 0.5. image is (3, H, W) in [-1,1].
torch::Tensor augment(const torch::Tensor& image, std::mt19937_64& rng,
                      const TrainConfig& cfg);

// Deterministic per-epoch shuffle of [0, n); every index appears exactly
// once per epoch.
std::vector<size_t> epoch_order(size_t n, uint64_t seed, uint64_t domain_tag,
                                uint64_t epoch);

// Index of the sample used at global position pos (= iter * batch + slot).
size_t sample_index(size_t n, uint64_t seed, uint64_t domain_tag, size_t pos);

void checkpoint_save(TrainState& state, const std::filesystem::path& path);
TrainState checkpoint_load(const std::filesystem::path& path);

struct TranslateStats {
  int64_t written = 0;
  int64_t skipped = 0;
};

// Translates every readable image in domain_dir and writes the result
// under out_dir with the source basename. Unreadable files are skipped
// and counted.
TranslateStats translate_dataset(TrainState& state,
                                 const std::filesystem::path& domain_dir,
                                 Direction dir,
                                 const std::filesystem::path& out_dir);

struct TrainHooks {
  // Called after every step with the report; return false to stop early.
  std::function<bool(const LossReport&)> on_step;
};

// Full training loop: loss log (JSON lines), periodic checkpoints and
// input|translated|cycled grids under out_dir. Resumes from
// state.iteration when nonzero.
void run_training(TrainState& state, const UnpairedDataset& data,
                  const std::filesystem::path& out_dir,
                  const TrainHooks& hooks = {});

}  // namespace iegan
