#include "iegan/trainer.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "iegan/common.hpp"

using namespace iegan;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.enc.ch = 8;
  cfg.enc.image_size = 32;
  cfg.batch_size = 2;
  cfg.resize_size = 32;
  cfg.crop_size = 32;
  cfg.hflip = false;
  cfg.iterations = 4;
  cfg.seed = 11;
  return cfg;
}

std::pair<torch::Tensor, torch::Tensor> tiny_batches(int64_t side = 32) {
  torch::manual_seed(42);
  auto x = torch::rand({2, 3, side, side}) * 2 - 1;
  auto y = torch::rand({2, 3, side, side}) * 2 - 1;
  return {x, y};
}

std::map<std::string, torch::Tensor> snapshot(TrainState& s) {
  std::map<std::string, torch::Tensor> out;
  auto grab = [&](const std::string& prefix, const torch::nn::Module& m) {
    for (const auto& p : m.named_parameters()) {
      out[prefix + p.key()] = p.value().detach().clone();
    }
  };
  grab("enc_x.", *s.enc_x);
  grab("enc_y.", *s.enc_y);
  grab("gen_xy.", *s.gen_xy);
  grab("gen_yx.", *s.gen_yx);
  grab("disc_x.", *s.disc_x);
  grab("disc_y.", *s.disc_y);
  return out;
}

bool snapshots_equal(const std::map<std::string, torch::Tensor>& a,
                     const std::map<std::string, torch::Tensor>& b,
                     const std::string& prefix) {
  for (const auto& [k, v] : a) {
    if (k.rfind(prefix, 0) != 0) continue;
    if (!torch::equal(v, b.at(k))) return false;
  }
  return true;
}

fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("iegan_trainer_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void set_lr(torch::optim::AdamW& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
  }
}

void set_weight_decay(torch::optim::AdamW& opt, double wd) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamWOptions&>(group.options()).weight_decay(wd);
  }
}

UnpairedDataset tiny_dataset(const fs::path& root) {
  SynthShapesConfig scfg;
  scfg.side = 32;
  scfg.train_a = 4;
  scfg.train_b = 4;
  scfg.test_a = 2;
  scfg.test_b = 2;
  return generate_synth_shapes(scfg, root);
}

}  // namespace

TEST(TrainStep, ZeroLearningRateLeavesParametersUnchanged) {
  auto state = TrainState::create(tiny_config());
  set_lr(*state.opt_enc, 0.0);
  set_lr(*state.opt_disc, 0.0);
  set_lr(*state.opt_gen, 0.0);
  set_weight_decay(*state.opt_enc, 0.0);
  set_weight_decay(*state.opt_disc, 0.0);
  set_weight_decay(*state.opt_gen, 0.0);
  auto before = snapshot(state);
  auto [x, y] = tiny_batches();
  auto report = state.train_step(x, y);
  auto after = snapshot(state);
  EXPECT_TRUE(report.all_finite());
  EXPECT_TRUE(snapshots_equal(before, after, ""));
}

TEST(TrainStep, SubUpdateIsolationMatrix) {
  auto [x, y] = tiny_batches();
  struct Case {
    SubUpdates updates;
    bool enc_moves, disc_moves, gen_moves;
  };
  const Case cases[] = {
      {{true, false, false}, true, false, false},
      {{false, true, false}, false, true, false},
      {{false, false, true}, false, false, true},
  };
  for (const auto& c : cases) {
    auto state = TrainState::create(tiny_config());
    auto before = snapshot(state);
    state.train_step(x, y, c.updates);
    auto after = snapshot(state);
    const bool enc_same = snapshots_equal(before, after, "enc_");
    const bool disc_same = snapshots_equal(before, after, "disc_");
    const bool gen_same = snapshots_equal(before, after, "gen_");
    EXPECT_EQ(!enc_same, c.enc_moves);
    EXPECT_EQ(!disc_same, c.disc_moves);
    EXPECT_EQ(!gen_same, c.gen_moves);
  }
}

TEST(TrainStep, GeneratorUpdateLeavesEncoderGradsUntouched) {
  auto state = TrainState::create(tiny_config());
  auto [x, y] = tiny_batches();
  // Generator-only step: encoder parameters must not accumulate gradients.
  state.train_step(x, y, {false, false, true});
  for (const auto& p : state.enc_x->parameters()) {
    if (p.grad().defined()) {
      EXPECT_DOUBLE_EQ(p.grad().abs().max().item<double>(), 0.0);
    }
  }
  // Encoder-only step: at least one encoder gradient is nonzero.
  state.train_step(x, y, {true, false, false});
  double max_grad = 0;
  for (const auto& p : state.enc_x->parameters()) {
    if (p.grad().defined()) {
      max_grad = std::max(max_grad, p.grad().abs().max().item<double>());
    }
  }
  EXPECT_GT(max_grad, 0.0);
}

TEST(TrainStep, DeterministicAcrossRuns) {
  auto [x, y] = tiny_batches();
  auto run = [&] {
    auto state = TrainState::create(tiny_config());
    std::vector<std::string> lines;
    for (int i = 0; i < 5; ++i) {
      lines.push_back(state.train_step(x, y).to_json_line());
    }
    return std::make_pair(lines, snapshot(state));
  };
  auto [lines1, snap1] = run();
  auto [lines2, snap2] = run();
  EXPECT_EQ(lines1, lines2);
  EXPECT_TRUE(snapshots_equal(snap1, snap2, ""));
}

TEST(Optimizer, DecoupledWeightDecayExactShrink) {
  // With zero gradients AdamW multiplies every parameter by (1 - lr * wd).
  auto cfg = tiny_config();
  auto state = TrainState::create(cfg);
  auto params = state.opt_gen->param_groups()[0].params();
  for (auto& p : params) {
    p.mutable_grad() = torch::zeros_like(p);
  }
  auto p0 = params[0].detach().clone();
  state.opt_gen->step();
  const double factor = 1.0 - cfg.lr * cfg.weight_decay;
  EXPECT_LT((params[0].detach() - p0 * factor).abs().max().item<double>(),
            1e-10);
}

TEST(Augment, NoOpWhenResizeEqualsCropAndNoFlip) {
  auto cfg = tiny_config();
  auto [x, y] = tiny_batches();
  std::mt19937_64 rng(3);
  auto out = augment(x[0], rng, cfg);
  EXPECT_LT((out - x[0]).abs().max().item<double>(), 1e-6);
}

TEST(Augment, SeededReplayIsIdentical) {
  auto cfg = tiny_config();
  cfg.resize_size = 40;
  cfg.crop_size = 32;
  cfg.hflip = true;
  auto [x, y] = tiny_batches();
  std::mt19937_64 rng1(9), rng2(9);
  for (int i = 0; i < 4; ++i) {
    auto a = augment(x[0], rng1, cfg);
    auto b = augment(x[0], rng2, cfg);
    EXPECT_TRUE(torch::equal(a, b));
    ASSERT_EQ(a.size(1), 32);
    ASSERT_EQ(a.size(2), 32);
  }
}

TEST(Augment, CropStaysInBounds) {
  auto cfg = tiny_config();
  cfg.resize_size = 36;
  cfg.crop_size = 32;
  cfg.hflip = false;
  // A gradient image: every crop is a contiguous window, so the output
  // range must be inside the input range.
  auto ramp = torch::linspace(-1, 1, 48 * 48).reshape({1, 48, 48}).expand({3, 48, 48});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 8; ++i) {
    auto out = augment(ramp.contiguous(), rng, cfg);
    EXPECT_GE(out.min().item<double>(), -1.0 - 1e-6);
    EXPECT_LE(out.max().item<double>(), 1.0 + 1e-6);
  }
}

TEST(Sampling, EpochOrderIsPermutation) {
  auto order = epoch_order(7, 123, 0xA, 4);
  std::set<size_t> seen(order.begin(), order.end());
  EXPECT_EQ(order.size(), 7u);
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(*seen.rbegin(), 6u);
  // Distinct epochs give distinct orders (with overwhelming probability).
  EXPECT_NE(order, epoch_order(7, 123, 0xA, 5));
  // Same arguments replay exactly.
  EXPECT_EQ(order, epoch_order(7, 123, 0xA, 4));
}

TEST(Sampling, SampleIndexCoversEveryEpoch) {
  const size_t n = 5;
  for (uint64_t epoch = 0; epoch < 3; ++epoch) {
    std::set<size_t> seen;
    for (size_t k = 0; k < n; ++k) {
      seen.insert(sample_index(n, 77, 0xB, epoch * n + k));
    }
    EXPECT_EQ(seen.size(), n);
  }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  auto dir = temp_dir("roundtrip");
  auto state = TrainState::create(tiny_config());
  auto [x, y] = tiny_batches();
  state.train_step(x, y);
  state.train_step(x, y);
  auto p1 = dir / "a.ckpt";
  auto p2 = dir / "b.ckpt";
  checkpoint_save(state, p1);
  auto loaded = checkpoint_load(p1);
  checkpoint_save(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  ASSERT_FALSE(b1.empty());
  EXPECT_EQ(b1, b2);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(checkpoint_load("/nonexistent/final.ckpt"), IoError);
}

TEST(Checkpoint, TruncatedFileIsDataError) {
  auto dir = temp_dir("truncated");
  auto state = TrainState::create(tiny_config());
  auto full = dir / "full.ckpt";
  checkpoint_save(state, full);
  std::ifstream in(full, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream out(dir / "cut.ckpt", std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  EXPECT_THROW(checkpoint_load(dir / "cut.ckpt"), DataError);
}

TEST(Checkpoint, BadMagicIsDataError) {
  auto dir = temp_dir("magic");
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "NOTACKPTFILE";
  EXPECT_THROW(checkpoint_load(dir / "bad.ckpt"), DataError);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  auto data = tiny_dataset(temp_dir("resume_data"));

  auto cfg = tiny_config();
  cfg.iterations = 10;
  cfg.checkpoint_every = 100;  // no mid-run checkpoints

  // Uninterrupted 10-step run.
  auto full_dir = temp_dir("resume_full");
  auto full_state = TrainState::create(cfg);
  run_training(full_state, data, full_dir);

  // 5 steps, checkpoint, reload, 5 more.
  auto part_dir = temp_dir("resume_part");
  auto cfg_half = cfg;
  cfg_half.iterations = 5;
  auto half_state = TrainState::create(cfg_half);
  run_training(half_state, data, part_dir);
  checkpoint_save(half_state, part_dir / "pause.ckpt");

  auto resumed = checkpoint_load(part_dir / "pause.ckpt");
  EXPECT_EQ(resumed.iteration, 5);
  resumed.cfg.iterations = 10;
  run_training(resumed, data, part_dir);

  auto full_snap = snapshot(full_state);
  auto resumed_snap = snapshot(resumed);
  EXPECT_TRUE(snapshots_equal(full_snap, resumed_snap, ""));
  EXPECT_EQ(resumed.iteration, 10);
}

TEST(TranslateDataset, WritesAllBasenamesInRange) {
  auto data = tiny_dataset(temp_dir("translate_data"));
  auto state = TrainState::create(tiny_config());
  auto out_dir = temp_dir("translate_out");
  auto stats =
      translate_dataset(state, data.root / "testA", Direction::AtoB, out_dir);
  EXPECT_EQ(stats.written, 2);
  EXPECT_EQ(stats.skipped, 0);
  for (const auto& src : data.test_a) {
    auto out_file = out_dir / src.filename();
    ASSERT_TRUE(fs::exists(out_file)) << out_file;
    auto img = load_image(out_file);
    ASSERT_TRUE(img.has_value());
    EXPECT_GE(img->min().item<double>(), -1.0);
    EXPECT_LE(img->max().item<double>(), 1.0);
  }
}

TEST(TranslateDataset, RerunIsByteIdentical) {
  auto data = tiny_dataset(temp_dir("translate_rerun"));
  auto state = TrainState::create(tiny_config());
  auto out1 = temp_dir("translate_o1");
  auto out2 = temp_dir("translate_o2");
  translate_dataset(state, data.root / "testB", Direction::BtoA, out1);
  translate_dataset(state, data.root / "testB", Direction::BtoA, out2);
  for (const auto& src : data.test_b) {
    std::ifstream f1(out1 / src.filename(), std::ios::binary);
    std::ifstream f2(out2 / src.filename(), std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    EXPECT_EQ(b1, b2);
  }
}

TEST(RunTraining, WritesLogAndCheckpoints) {
  auto data = tiny_dataset(temp_dir("runtrain_data"));
  auto cfg = tiny_config();
  cfg.iterations = 4;
  cfg.checkpoint_every = 2;
  auto out = temp_dir("runtrain_out");
  auto state = TrainState::create(cfg);
  int steps = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const LossReport& r) {
    ++steps;
    EXPECT_TRUE(r.all_finite());
    return true;
  };
  run_training(state, data, out, hooks);
  EXPECT_EQ(steps, 4);
  EXPECT_TRUE(fs::exists(out / "loss_log.jsonl"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_latest.ckpt"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_final.ckpt"));
  std::ifstream log(out / "loss_log.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(log, line)) {
    if (!line.empty()) ++lines;
  }
  EXPECT_EQ(lines, 4);
}

TEST(RunTraining, EarlyStopThroughHook) {
  auto data = tiny_dataset(temp_dir("earlystop_data"));
  auto cfg = tiny_config();
  cfg.iterations = 50;
  auto state = TrainState::create(cfg);
  int steps = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const LossReport&) { return ++steps < 3; };
  run_training(state, data, temp_dir("earlystop_out"), hooks);
  EXPECT_EQ(steps, 3);
  EXPECT_EQ(state.iteration, 3);
}
