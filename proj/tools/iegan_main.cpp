// Command-line surface: train | translate | evaluate | reconstruct |
// synth-data. Exit codes: 0 ok, 2 config, 3 data, 4 numeric, 5 I/O.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "iegan/common.hpp"
#include "iegan/config.hpp"
#include "iegan/data.hpp"
#include "iegan/metrics.hpp"
#include "iegan/trainer.hpp"

namespace fs = std::filesystem;
using namespace iegan;

namespace {

Direction parse_direction(const std::string& token) {
  if (token == "a2b") return Direction::AtoB;
  if (token == "b2a") return Direction::BtoA;
  throw ConfigError("direction must be a2b or b2a, got '" + token + "'");
}

void write_resolved_config(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "config_resolved.txt");
  if (!out) throw IoError("cannot write resolved config in " + out_dir.string());
  out << cfg.to_text();
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name,
                                                 const std::string& weights) {
  if (name == "stub") return std::make_unique<StubConvExtractor>();
  if (name == "inception") return std::make_unique<TorchScriptExtractor>(weights);
  throw ConfigError("unknown extractor: " + name);
}

torch::Tensor load_dir_images(const fs::path& dir, int64_t side) {
  auto files = list_images(dir);
  if (files.empty()) throw DataError("no images in directory: " + dir.string());
  std::vector<torch::Tensor> images;
  for (const auto& f : files) {
    auto img = load_image(f);
    if (!img.has_value()) continue;
    images.push_back(torch::nn::functional::interpolate(
                         img->unsqueeze(0),
                         torch::nn::functional::InterpolateFuncOptions()
                             .size(std::vector<int64_t>{side, side})
                             .mode(torch::kBilinear)
                             .align_corners(false))
                         .squeeze(0));
  }
  if (images.empty()) throw DataError("no decodable images in: " + dir.string());
  return torch::stack(images);
}

int cmd_train(const std::string& config_path, const std::string& data_root,
              const std::string& out_dir, int64_t seed_override,
              int64_t iters_override) {
  RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
  if (seed_override >= 0) cfg.train.seed = static_cast<uint64_t>(seed_override);
  if (iters_override >= 0) cfg.train.iterations = iters_override;
  cfg.train.validate();
  write_resolved_config(cfg, out_dir);

  auto dataset = UnpairedDataset::load(data_root);
  auto state = TrainState::create(cfg.train);
  run_training(state, dataset, out_dir);
  std::cout << "trained " << state.iteration << " iterations; checkpoint at "
            << (fs::path(out_dir) / "checkpoint_final.ckpt").string() << "\n";
  return 0;
}

int cmd_translate(const std::string& ckpt, const std::string& direction,
                  const std::string& in_dir, const std::string& out_dir) {
  auto dir = parse_direction(direction);
  auto state = checkpoint_load(ckpt);
  auto stats = translate_dataset(state, in_dir, dir, out_dir);
  std::cout << "translated " << stats.written << " images ("
            << stats.skipped << " skipped)\n";
  return 0;
}

int cmd_evaluate(const std::string& real_dir, const std::string& fake_dir,
                 const std::string& metrics_list, const std::string& extractor_name,
                 const std::string& weights, int64_t side) {
  auto extractor = make_extractor(extractor_name, weights);
  auto real = extractor->extract(load_dir_images(real_dir, side));
  auto fake = extractor->extract(load_dir_images(fake_dir, side));

  const bool want_fid = metrics_list.find("fid") != std::string::npos;
  const bool want_kid = metrics_list.find("kid") != std::string::npos;
  if (!want_fid && !want_kid) {
    throw ConfigError("metrics list must mention fid and/or kid: " + metrics_list);
  }
  auto report = [&](const char* metric, double value) {
    std::cout << "metric=" << metric << " direction=real_vs_fake"
              << " value=" << value << " n_real=" << real.count()
              << " n_fake=" << fake.count() << " extractor="
              << extractor->name() << "\n";
  };
  if (want_fid) {
    report("fid", fid(gaussian_stats(real), gaussian_stats(fake)));
  }
  if (want_kid) {
    report("kid_x100", 100.0 * kid(real, fake));
  }
  return 0;
}

int cmd_reconstruct(const std::string& ckpt, const std::string& in_dir,
                    const std::string& out_dir, const std::string& direction) {
  auto dir = parse_direction(direction);
  auto state = checkpoint_load(ckpt);
  auto files = list_images(in_dir);
  if (files.empty()) throw DataError("no images in directory: " + in_dir);
  fs::create_directories(out_dir);

  const auto side = state.cfg.enc.image_size;
  double total_l1 = 0.0;
  int64_t count = 0;
  for (const auto& f : files) {
    auto img = load_image(f);
    if (!img.has_value()) {
      std::cerr << "warning: skipping unreadable image " << f << "\n";
      continue;
    }
    auto input = torch::nn::functional::interpolate(
        img->unsqueeze(0), torch::nn::functional::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{side, side})
                               .mode(torch::kBilinear)
                               .align_corners(false));
    auto rec = state.reconstruct(input, dir);
    total_l1 += (input - rec).abs().mean().item<double>();
    ++count;
    save_image(torch::cat({input.squeeze(0), rec.squeeze(0)}, 2),
               fs::path(out_dir) / f.filename());
  }
  if (count == 0) throw DataError("no decodable images in: " + in_dir);
  std::cout << "mean_l1 " << (total_l1 / static_cast<double>(count)) << "\n";
  return 0;
}

int cmd_synth_data(const std::string& out_root, int64_t side, int64_t train_n,
                   int64_t test_n, int64_t seed) {
  SynthShapesConfig cfg;
  cfg.side = side;
  cfg.train_a = cfg.train_b = train_n;
  cfg.test_a = cfg.test_b = test_n;
  cfg.seed = static_cast<uint64_t>(seed);
  auto ds = generate_synth_shapes(cfg, out_root);
  std::cout << "generated " << ds.train_a.size() << "/" << ds.train_b.size()
            << " train and " << ds.test_a.size() << "/" << ds.test_b.size()
            << " test images under " << out_root << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IEGAN-style unpaired image-to-image translation"};
  app.require_subcommand(1);

  std::string config_path, data_root, out_dir, ckpt, direction = "a2b";
  std::string in_dir, real_dir, fake_dir, metrics_list = "fid,kid";
  std::string extractor = "stub", weights;
  int64_t seed = -1, iterations = -1, side = 64, train_n = 200, test_n = 50;
  int64_t synth_seed = 7;

  auto* train = app.add_subcommand("train", "Train on an unpaired dataset");
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--data", data_root, "dataset root (trainA/trainB/testA/testB)")
      ->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "seed override");
  train->add_option("--iterations", iterations, "iteration override");

  auto* translate = app.add_subcommand("translate", "Translate a directory");
  translate->add_option("--checkpoint", ckpt)->required();
  translate->add_option("--direction", direction, "a2b or b2a")->required();
  translate->add_option("--in", in_dir)->required();
  translate->add_option("--out", out_dir)->required();

  auto* evaluate = app.add_subcommand("evaluate", "FID / KIDx100 report");
  evaluate->add_option("--real", real_dir)->required();
  evaluate->add_option("--fake", fake_dir)->required();
  evaluate->add_option("--metrics", metrics_list, "e.g. fid,kid");
  evaluate->add_option("--extractor", extractor, "stub or inception");
  evaluate->add_option("--weights", weights, "TorchScript weights for inception");
  evaluate->add_option("--side", side, "resize side before extraction");

  auto* reconstruct = app.add_subcommand("reconstruct", "Encoder round trips");
  reconstruct->add_option("--checkpoint", ckpt)->required();
  reconstruct->add_option("--in", in_dir)->required();
  reconstruct->add_option("--out", out_dir)->required();
  reconstruct->add_option("--direction", direction, "a2b uses the A-domain encoder");

  auto* synth = app.add_subcommand("synth-data", "Generate the shapes dataset");
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--side", side);
  synth->add_option("--train-count", train_n);
  synth->add_option("--test-count", test_n);
  synth->add_option("--seed", synth_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return cmd_train(config_path, data_root, out_dir, seed, iterations);
    }
    if (translate->parsed()) {
      return cmd_translate(ckpt, direction, in_dir, out_dir);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(real_dir, fake_dir, metrics_list, extractor, weights,
                          side);
    }
    if (reconstruct->parsed()) {
      return cmd_reconstruct(ckpt, in_dir, out_dir, direction);
    }
    if (synth->parsed()) {
      return cmd_synth_data(out_dir, side, train_n, test_n, synth_seed);
    }
  } catch (const Error& e) {
    const char* category = e.category() == ErrorCategory::Config ? "config"
                           : e.category() == ErrorCategory::Data ? "data"
                           : e.category() == ErrorCategory::Numeric ? "numeric"
                                                                    : "io";
    std::cerr << "error[" << category << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
