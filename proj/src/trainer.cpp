#include "iegan/trainer.hpp"

#include <fstream>
#include <iostream>
#include <numeric>

#include "iegan/common.hpp"

namespace iegan {

namespace fs = std::filesystem;
namespace F = torch::nn::functional;

namespace {

void set_requires_grad(torch::nn::Module& m, bool value) {
  for (auto& p : m.parameters()) p.set_requires_grad(value);
}

uint64_t mix_seed(uint64_t seed, uint64_t tag, uint64_t salt) {
  uint64_t h = seed ^ (tag * 0x9e3779b97f4a7c15ULL) ^
               (salt * 0xbf58476d1ce4e5b9ULL);
  h ^= h >> 31;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 29;
  return h;
}

}  // namespace

std::vector<size_t> epoch_order(size_t n, uint64_t seed, uint64_t domain_tag,
                                uint64_t epoch) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, domain_tag, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

size_t sample_index(size_t n, uint64_t seed, uint64_t domain_tag, size_t pos) {
  const uint64_t epoch = pos / n;
  return epoch_order(n, seed, domain_tag, epoch)[pos % n];
}

torch::Tensor augment(const torch::Tensor& image, std::mt19937_64& rng,
                      const TrainConfig& cfg) {
  if (image.dim() != 3 || image.size(1) < 1 || image.size(2) < 1) {
    throw DataError("augment: degenerate input image");
  }
  auto resized = F::interpolate(
      image.unsqueeze(0),
      F::InterpolateFuncOptions()
          .size(std::vector<int64_t>{cfg.resize_size, cfg.resize_size})
          .mode(torch::kBilinear)
          .align_corners(false))
                     .squeeze(0);
  const int64_t range = cfg.resize_size - cfg.crop_size;
  std::uniform_int_distribution<int64_t> offset(0, range);
  const int64_t oy = offset(rng);
  const int64_t ox = offset(rng);
  auto cropped = resized.slice(1, oy, oy + cfg.crop_size)
                     .slice(2, ox, ox + cfg.crop_size);
  if (cfg.hflip) {
    std::uniform_int_distribution<int> coin(0, 1);
    if (coin(rng)) cropped = cropped.flip(2);
  }
  return cropped.contiguous();
}

TrainState TrainState::create(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.crop_size != cfg.enc.image_size) {
    throw ConfigError("crop_size must equal image_size (encoder input side)");
  }
  torch::manual_seed(cfg.seed);

  TrainState s;
  s.cfg = cfg;
  s.enc_x = IndependentEncoder(cfg.enc);
  s.enc_y = IndependentEncoder(cfg.enc);
  s.gen_xy = Generator(cfg.enc);
  s.gen_yx = Generator(cfg.enc);
  s.disc_x = Discriminator(cfg.enc);
  s.disc_y = Discriminator(cfg.enc);
  s.rng.seed(cfg.seed);

  auto opts = torch::optim::AdamWOptions(cfg.lr)
                  .betas({cfg.adam_beta1, cfg.adam_beta2})
                  .weight_decay(cfg.weight_decay);
  std::vector<torch::Tensor> enc_params = s.enc_x->parameters();
  auto enc_y_params = s.enc_y->parameters();
  enc_params.insert(enc_params.end(), enc_y_params.begin(), enc_y_params.end());
  std::vector<torch::Tensor> gen_params = s.gen_xy->parameters();
  auto gen_yx_params = s.gen_yx->parameters();
  gen_params.insert(gen_params.end(), gen_yx_params.begin(), gen_yx_params.end());
  std::vector<torch::Tensor> disc_params = s.disc_x->parameters();
  auto disc_y_params = s.disc_y->parameters();
  disc_params.insert(disc_params.end(), disc_y_params.begin(), disc_y_params.end());

  s.opt_enc = std::make_unique<torch::optim::AdamW>(enc_params, opts);
  s.opt_disc = std::make_unique<torch::optim::AdamW>(disc_params, opts);
  s.opt_gen = std::make_unique<torch::optim::AdamW>(gen_params, opts);
  return s;
}

LossReport TrainState::train_step(const torch::Tensor& batch_x,
                                  const torch::Tensor& batch_y,
                                  const SubUpdates& updates) {
  const auto& w = cfg.weights;
  const bool cam = cfg.cam_in_adv;
  LossReport report;
  report.iter = iteration + 1;

  // (1) Encoders/decoders: feature loss only.
  auto rec_x = enc_x->decode(enc_x->encode(batch_x));
  auto rec_y = enc_y->decode(enc_y->encode(batch_y));
  auto lfea_x = feature_loss(batch_x, rec_x);
  auto lfea_y = feature_loss(batch_y, rec_y);
  if (updates.encoders) {
    opt_enc->zero_grad();
    (w.lambda_feature * (lfea_x + lfea_y)).backward();
    opt_enc->step();
  }

  // Encoders stay frozen for the adversarial, cycle and identity losses;
  // they remain differentiable as functions of their inputs.
  set_requires_grad(*enc_x, false);
  set_requires_grad(*enc_y, false);

  auto merged_x = enc_x->merge(enc_x->encode(batch_x));
  auto merged_y = enc_y->merge(enc_y->encode(batch_y));
  auto fake_y = gen_xy->forward(merged_x);
  auto fake_x = gen_yx->forward(merged_y);

  // (2) Discriminators, fakes detached.
  torch::Tensor fake_merged_y_d, fake_merged_x_d;
  {
    torch::NoGradGuard no_grad;
    fake_merged_y_d = enc_y->merge(enc_y->encode(fake_y.detach()));
    fake_merged_x_d = enc_x->merge(enc_x->encode(fake_x.detach()));
  }
  auto d_loss =
      adversarial_loss_d(disc_y->forward(merged_y.detach()),
                         disc_y->forward(fake_merged_y_d), cam) +
      adversarial_loss_d(disc_x->forward(merged_x.detach()),
                         disc_x->forward(fake_merged_x_d), cam);
  if (updates.discriminators) {
    opt_disc->zero_grad();
    (w.lambda_adversarial * d_loss).backward();
    opt_disc->step();
  }

  // (3) Generators; discriminators frozen as well.
  set_requires_grad(*disc_x, false);
  set_requires_grad(*disc_y, false);
  auto fake_merged_y = enc_y->merge(enc_y->encode(fake_y));
  auto fake_merged_x = enc_x->merge(enc_x->encode(fake_x));
  auto adv_g = adversarial_loss_g(disc_y->forward(fake_merged_y), cam) +
               adversarial_loss_g(disc_x->forward(fake_merged_x), cam);
  auto l_cyc = cycle_loss(batch_x, gen_yx->forward(fake_merged_y)) +
               cycle_loss(batch_y, gen_xy->forward(fake_merged_x));
  auto l_ide = identity_loss(batch_x, gen_yx->forward(merged_x)) +
               identity_loss(batch_y, gen_xy->forward(merged_y));
  if (updates.generators) {
    opt_gen->zero_grad();
    auto g_loss = w.lambda_adversarial * adv_g + w.lambda_cycle * l_cyc +
                  w.lambda_identity * l_ide;
    g_loss.backward();
    opt_gen->step();
    gen_xy->clip_rho();
    gen_yx->clip_rho();
  }

  set_requires_grad(*enc_x, true);
  set_requires_grad(*enc_y, true);
  set_requires_grad(*disc_x, true);
  set_requires_grad(*disc_y, true);

  report.l_fea_x = lfea_x.item<double>();
  report.l_fea_y = lfea_y.item<double>();
  report.l_adv_d = d_loss.item<double>();
  report.l_adv_g = adv_g.item<double>();
  report.l_cyc = l_cyc.item<double>();
  report.l_ide = l_ide.item<double>();
  report.total = total_objective(
      {report.l_fea_x + report.l_fea_y, report.l_adv_g, report.l_cyc,
       report.l_ide},
      w);
  ++iteration;

  if (!report.all_finite()) {
    throw NumericError("non-finite loss at iteration " +
                       std::to_string(report.iter) + ": " +
                       report.to_json_line());
  }
  return report;
}

torch::Tensor TrainState::translate(const torch::Tensor& images, Direction dir) {
  torch::NoGradGuard no_grad;
  auto& enc = (dir == Direction::AtoB) ? enc_x : enc_y;
  auto& gen = (dir == Direction::AtoB) ? gen_xy : gen_yx;
  return gen->forward(enc->merge(enc->encode(images)));
}

torch::Tensor TrainState::reconstruct(const torch::Tensor& images,
                                      Direction dir) {
  torch::NoGradGuard no_grad;
  auto& enc = (dir == Direction::AtoB) ? enc_x : enc_y;
  return enc->decode(enc->encode(images));
}

TranslateStats translate_dataset(TrainState& state, const fs::path& domain_dir,
                                 Direction dir, const fs::path& out_dir) {
  auto files = list_images(domain_dir);
  if (files.empty()) {
    throw DataError("no images found in " + domain_dir.string());
  }
  fs::create_directories(out_dir);
  const auto side = state.cfg.enc.image_size;
  TranslateStats stats;
  for (const auto& file : files) {
    auto img = load_image(file);
    if (!img.has_value()) {
      std::cerr << "warning: skipping unreadable image " << file << "\n";
      ++stats.skipped;
      continue;
    }
    auto resized = F::interpolate(
        img->unsqueeze(0),
        F::InterpolateFuncOptions()
            .size(std::vector<int64_t>{side, side})
            .mode(torch::kBilinear)
            .align_corners(false));
    auto out = state.translate(resized, dir);
    save_image(out.squeeze(0), out_dir / file.filename());
    ++stats.written;
  }
  return stats;
}

namespace {

torch::Tensor load_batch(const std::vector<fs::path>& files, uint64_t seed,
                         uint64_t domain_tag, int64_t iter,
                         const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<torch::Tensor> batch;
  for (int64_t j = 0; j < cfg.batch_size; ++j) {
    const size_t pos = static_cast<size_t>(iter) * cfg.batch_size + j;
    const auto idx = sample_index(files.size(), seed, domain_tag, pos);
    auto img = load_image(files[idx]);
    if (!img.has_value()) {
      throw DataError("unreadable training image: " + files[idx].string());
    }
    batch.push_back(augment(*img, rng, cfg));
  }
  return torch::stack(batch);
}

// Rows: one sample per row; columns: input | translated | cycled.
torch::Tensor image_grid(const torch::Tensor& input,
                         const torch::Tensor& translated,
                         const torch::Tensor& cycled) {
  std::vector<torch::Tensor> rows;
  for (int64_t i = 0; i < input.size(0); ++i) {
    rows.push_back(torch::cat({input[i], translated[i], cycled[i]}, 2));
  }
  return torch::cat(rows, 1);
}

void write_grids(TrainState& state, const torch::Tensor& batch_x,
                 const torch::Tensor& batch_y, const fs::path& grid_dir) {
  torch::NoGradGuard no_grad;
  char name[64];
  auto fake_y = state.translate(batch_x, Direction::AtoB);
  auto cyc_x = state.translate(fake_y, Direction::BtoA);
  std::snprintf(name, sizeof(name), "iter_%06lld_a2b.png",
                static_cast<long long>(state.iteration));
  save_image(image_grid(batch_x, fake_y, cyc_x), grid_dir / name);

  auto fake_x = state.translate(batch_y, Direction::BtoA);
  auto cyc_y = state.translate(fake_x, Direction::AtoB);
  std::snprintf(name, sizeof(name), "iter_%06lld_b2a.png",
                static_cast<long long>(state.iteration));
  save_image(image_grid(batch_y, fake_x, cyc_y), grid_dir / name);
}

}  // namespace

void run_training(TrainState& state, const UnpairedDataset& data,
                  const fs::path& out_dir, const TrainHooks& hooks) {
  const auto& cfg = state.cfg;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "grids");

  const bool resuming = state.iteration > 0;
  std::ofstream log(out_dir / "loss_log.jsonl",
                    resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write loss log in " + out_dir.string());

  while (state.iteration < cfg.iterations) {
    const int64_t iter = state.iteration;
    auto batch_x = load_batch(data.train_a, cfg.seed, 0xA, iter, cfg, state.rng);
    auto batch_y = load_batch(data.train_b, cfg.seed, 0xB, iter, cfg, state.rng);
    auto report = state.train_step(batch_x, batch_y);
    log << report.to_json_line() << "\n";

    if (cfg.checkpoint_every > 0 &&
        state.iteration % cfg.checkpoint_every == 0) {
      checkpoint_save(state, out_dir / "checkpoint_latest.ckpt");
      write_grids(state, batch_x, batch_y, out_dir / "grids");
    }
    if (hooks.on_step && !hooks.on_step(report)) break;
  }
  log.flush();
  checkpoint_save(state, out_dir / "checkpoint_final.ckpt");
}

}  // namespace iegan
