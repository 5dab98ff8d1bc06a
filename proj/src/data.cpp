#include "iegan/data.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "iegan/common.hpp"

namespace iegan {

namespace fs = std::filesystem;

torch::Tensor normalize_image(const torch::Tensor& u8_chw) {
  return u8_chw.to(torch::kFloat32) / 127.5 - 1.0;
}

torch::Tensor denormalize_image(const torch::Tensor& float_chw) {
  return ((float_chw.clamp(-1.0, 1.0) + 1.0) * 127.5)
      .round()
      .clamp(0, 255)
      .to(torch::kUInt8);
}

std::optional<torch::Tensor> load_image(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) return std::nullopt;
  auto hwc = torch::from_blob(bgr.data, {bgr.rows, bgr.cols, 3}, torch::kUInt8)
                 .clone();
  auto chw = hwc.permute({2, 0, 1});
  chw = chw.flip(0);  // BGR -> RGB
  return normalize_image(chw);
}

void save_image(const torch::Tensor& image, const fs::path& path) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw DataError("save_image: expected (3, H, W) tensor, got " +
                    c10::str(image.sizes()));
  }
  auto u8 = denormalize_image(image.detach().cpu());
  auto bgr_hwc = u8.flip(0).permute({1, 2, 0}).contiguous();
  cv::Mat mat(static_cast<int>(u8.size(1)), static_cast<int>(u8.size(2)),
              CV_8UC3, bgr_hwc.data_ptr<uint8_t>());
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) {
    throw IoError("cannot write image: " + path.string());
  }
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

UnpairedDataset UnpairedDataset::load(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw DataError("dataset root does not exist: " + root.string());
  }
  UnpairedDataset ds;
  ds.root = root;
  struct Split {
    const char* name;
    std::vector<fs::path>* target;
  };
  Split splits[] = {{"trainA", &ds.train_a},
                    {"trainB", &ds.train_b},
                    {"testA", &ds.test_a},
                    {"testB", &ds.test_b}};
  for (auto& split : splits) {
    auto dir = root / split.name;
    if (!fs::is_directory(dir)) {
      throw DataError("missing split directory: " + std::string(split.name));
    }
    for (auto& f : list_images(dir)) {
      if (load_image(f).has_value()) {
        split.target->push_back(f);
      } else {
        ++ds.skipped;
      }
    }
    if (split.target->empty()) {
      throw DataError("split has no decodable images: " +
                      std::string(split.name));
    }
  }
  return ds;
}

namespace {

// Saturated shape colors shared by both domains (RGB).
constexpr std::array<std::array<uint8_t, 3>, 6> kShapePalette = {{
    {220, 50, 47},   // red
    {38, 139, 210},  // blue
    {133, 153, 0},   // green
    {211, 54, 130},  // magenta
    {203, 75, 22},   // orange
    {42, 161, 152},  // teal
}};

torch::Tensor render_shape(bool circle, int64_t side, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bg_dist(205, 240);
  std::uniform_int_distribution<size_t> color_dist(0, kShapePalette.size() - 1);
  const int bg = bg_dist(rng);
  const auto color = kShapePalette[color_dist(rng)];

  const double min_r = 0.15 * static_cast<double>(side);
  const double max_r = 0.30 * static_cast<double>(side);
  std::uniform_real_distribution<double> r_dist(min_r, max_r);
  const double radius = r_dist(rng);
  std::uniform_real_distribution<double> c_dist(radius + 2.0,
                                                static_cast<double>(side) - radius - 2.0);
  const double cx = c_dist(rng);
  const double cy = c_dist(rng);

  auto img = torch::full({3, side, side}, bg, torch::kUInt8);
  auto acc = img.accessor<uint8_t, 3>();
  for (int64_t y = 0; y < side; ++y) {
    for (int64_t x = 0; x < side; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const bool inside = circle
                              ? (dx * dx + dy * dy <= radius * radius)
                              : (std::abs(dx) <= radius && std::abs(dy) <= radius);
      if (inside) {
        for (int c = 0; c < 3; ++c) acc[c][y][x] = color[c];
      }
    }
  }
  return img;
}

}  // namespace

UnpairedDataset generate_synth_shapes(const SynthShapesConfig& cfg,
                                      const fs::path& out_root) {
  std::mt19937_64 rng(cfg.seed);
  struct Split {
    const char* name;
    int64_t count;
    bool circle;
  };
  Split splits[] = {{"trainA", cfg.train_a, false},
                    {"trainB", cfg.train_b, true},
                    {"testA", cfg.test_a, false},
                    {"testB", cfg.test_b, true}};
  for (auto& split : splits) {
    auto dir = out_root / split.name;
    fs::create_directories(dir);
    for (int64_t i = 0; i < split.count; ++i) {
      auto img = render_shape(split.circle, cfg.side, rng);
      char name[32];
      std::snprintf(name, sizeof(name), "%05lld.png",
                    static_cast<long long>(i));
      save_image(normalize_image(img), dir / name);
    }
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.seed;
  manifest["side"] = cfg.side;
  manifest["train_a"] = cfg.train_a;
  manifest["train_b"] = cfg.train_b;
  manifest["test_a"] = cfg.test_a;
  manifest["test_b"] = cfg.test_b;
  std::ofstream out(out_root / "manifest.json");
  if (!out) throw IoError("cannot write manifest: " + out_root.string());
  out << manifest.dump(2) << "\n";

  return UnpairedDataset::load(out_root);
}

const char* shape_label_name(ShapeLabel label) {
  switch (label) {
    case ShapeLabel::Square: return "square";
    case ShapeLabel::Circle: return "circle";
    default: return "unknown";
  }
}

ShapeLabel heuristic_shape_classifier(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw DataError("classifier: expected (3, H, W) tensor");
  }
  const auto h = image.size(1), w = image.size(2);
  auto img = image.detach().to(torch::kFloat32).contiguous();

  // Background estimate: per-channel median over the one-pixel border.
  auto top = img.index({torch::indexing::Slice(), 0});
  auto bottom = img.index({torch::indexing::Slice(), h - 1});
  auto left = img.index({torch::indexing::Slice(), torch::indexing::Slice(), 0});
  auto right =
      img.index({torch::indexing::Slice(), torch::indexing::Slice(), w - 1});
  auto border = torch::cat({top, bottom, left, right}, 1);
  auto bg = std::get<0>(border.median(1)).view({3, 1, 1});

  auto dist = (img - bg).abs().mean(0);
  auto mask = (dist > 0.25).to(torch::kUInt8);
  auto macc = mask.accessor<uint8_t, 2>();

  // Largest 4-connected foreground component.
  std::vector<int8_t> seen(static_cast<size_t>(h * w), 0);
  int64_t best_area = 0, best_x0 = 0, best_x1 = 0, best_y0 = 0, best_y1 = 0;
  for (int64_t sy = 0; sy < h; ++sy) {
    for (int64_t sx = 0; sx < w; ++sx) {
      if (!macc[sy][sx] || seen[sy * w + sx]) continue;
      int64_t area = 0, x0 = sx, x1 = sx, y0 = sy, y1 = sy;
      std::deque<std::pair<int64_t, int64_t>> queue{{sy, sx}};
      seen[sy * w + sx] = 1;
      while (!queue.empty()) {
        auto [y, x] = queue.front();
        queue.pop_front();
        ++area;
        x0 = std::min(x0, x); x1 = std::max(x1, x);
        y0 = std::min(y0, y); y1 = std::max(y1, y);
        const int64_t ny[] = {y - 1, y + 1, y, y};
        const int64_t nx[] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
          if (!macc[ny[k]][nx[k]] || seen[ny[k] * w + nx[k]]) continue;
          seen[ny[k] * w + nx[k]] = 1;
          queue.emplace_back(ny[k], nx[k]);
        }
      }
      if (area > best_area) {
        best_area = area;
        best_x0 = x0; best_x1 = x1; best_y0 = y0; best_y1 = y1;
      }
    }
  }

  if (best_area < (h * w) / 200) return ShapeLabel::Unknown;
  const double box = static_cast<double>((best_x1 - best_x0 + 1) *
                                         (best_y1 - best_y0 + 1));
  const double fill = static_cast<double>(best_area) / box;
  if (fill >= 0.92) return ShapeLabel::Square;
  if (fill >= 0.68 && fill <= 0.86) return ShapeLabel::Circle;
  return ShapeLabel::Unknown;
}

}  // namespace iegan
