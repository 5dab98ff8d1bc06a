#include "iegan/encoder.hpp"

#include "iegan/common.hpp"

namespace iegan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr double kNormEps = 1e-5;

nn::Sequential conv_in_relu(int64_t in_ch, int64_t out_ch, int64_t stride) {
  return nn::Sequential(
      nn::Conv2d(nn::Conv2dOptions(in_ch, out_ch, 3).stride(stride).padding(1)),
      nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out_ch).eps(kNormEps).affine(true)),
      nn::ReLU());
}

torch::Tensor upsample2x(const torch::Tensor& x) {
  return F::interpolate(
      x, F::InterpolateFuncOptions()
             .scale_factor(std::vector<double>{2.0, 2.0})
             .mode(torch::kNearest));
}

}  // namespace

torch::Tensor linear_attention_core(const torch::Tensor& q,
                                    const torch::Tensor& k,
                                    const torch::Tensor& v) {
  auto phi_q = torch::elu(q) + 1.0;  // strictly positive kernel features
  auto phi_k = torch::elu(k) + 1.0;
  // kv: (N, C_k, C_v), z: (N, C_k)
  auto kv = torch::einsum("nlc,nld->ncd", {phi_k, v});
  auto z = phi_k.sum(1);
  auto num = torch::einsum("nlc,ncd->nld", {phi_q, kv});
  auto den = torch::einsum("nlc,nc->nl", {phi_q, z}).unsqueeze(-1);
  return num / den;
}

LinearAttentionImpl::LinearAttentionImpl(int64_t channels) {
  norm_ = register_module(
      "norm", nn::InstanceNorm2d(
                  nn::InstanceNorm2dOptions(channels).eps(kNormEps).affine(true)));
  to_q_ = register_module("to_q", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
  to_k_ = register_module("to_k", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
  to_v_ = register_module("to_v", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
  to_out_ = register_module("to_out", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
}

torch::Tensor LinearAttentionImpl::forward(torch::Tensor x) {
  const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  auto y = norm_(x);
  auto flat = [&](const torch::Tensor& t) {
    return t.reshape({n, c, h * w}).transpose(1, 2);  // (N, L, C)
  };
  auto attended =
      linear_attention_core(flat(to_q_(y)), flat(to_k_(y)), flat(to_v_(y)));
  auto out = to_out_(attended.transpose(1, 2).reshape({n, c, h, w}));
  return x + out;
}

IndependentEncoderImpl::IndependentEncoderImpl(const EncoderConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  const auto ch = cfg_.ch;

  // Stem: two stride-2 convolutions take S to S/4 before level 0.
  stem_ = register_module(
      "stem", nn::Sequential(
                  nn::Conv2d(nn::Conv2dOptions(3, ch / 2, 3).stride(2).padding(1)),
                  nn::InstanceNorm2d(
                      nn::InstanceNorm2dOptions(ch / 2).eps(kNormEps).affine(true)),
                  nn::ReLU(),
                  nn::Conv2d(nn::Conv2dOptions(ch / 2, ch, 3).stride(2).padding(1)),
                  nn::InstanceNorm2d(
                      nn::InstanceNorm2dOptions(ch).eps(kNormEps).affine(true)),
                  nn::ReLU()));

  for (int i = 1; i < EncoderConfig::kLevels; ++i) {
    auto block = conv_in_relu(cfg_.level_channels(i - 1), cfg_.level_channels(i), 2);
    down_.push_back(register_module("down" + std::to_string(i), block));
  }

  if (cfg_.use_lat) {
    lat_ = register_module(
        "lat", LinearAttention(cfg_.level_channels(EncoderConfig::kLevels - 1)));
  }

  // Decoder: three up blocks, each concatenating the skip from one level.
  for (int i = EncoderConfig::kLevels - 1; i >= 1; --i) {
    const auto in_ch = cfg_.level_channels(i) + cfg_.level_channels(i - 1);
    auto block = conv_in_relu(in_ch, cfg_.level_channels(i - 1), 1);
    up_.push_back(register_module("up" + std::to_string(i), block));
  }

  tail_ = register_module(
      "tail",
      nn::Sequential(
          nn::Conv2d(nn::Conv2dOptions(ch, ch / 2, 3).padding(1)),
          nn::InstanceNorm2d(
              nn::InstanceNorm2dOptions(ch / 2).eps(kNormEps).affine(true)),
          nn::ReLU(),
          nn::Conv2d(nn::Conv2dOptions(ch / 2, ch / 4, 3).padding(1)),
          nn::InstanceNorm2d(
              nn::InstanceNorm2dOptions(ch / 4).eps(kNormEps).affine(true)),
          nn::ReLU(),
          nn::Conv2d(nn::Conv2dOptions(ch / 4, 3, 7).padding(3)), nn::Tanh()));

  for (int i = 0; i < EncoderConfig::kLevels; ++i) {
    auto proj = nn::Conv2d(
        nn::Conv2dOptions(cfg_.level_channels(i), cfg_.merged_channels(), 1));
    merge_proj_.push_back(register_module("merge_proj" + std::to_string(i), proj));
  }
}

DsiPyramid IndependentEncoderImpl::encode(torch::Tensor image) {
  if (image.dim() != 4 || image.size(1) != 3 ||
      image.size(2) != cfg_.image_size || image.size(3) != cfg_.image_size) {
    throw DataError("encode: expected input of shape (N, 3, " +
                    std::to_string(cfg_.image_size) + ", " +
                    std::to_string(cfg_.image_size) + "), got " +
                    c10::str(image.sizes()));
  }
  DsiPyramid pyramid;
  auto h = stem_->forward(image);
  pyramid.push_back(h);
  for (auto& block : down_) {
    h = block->forward(h);
    pyramid.push_back(h);
  }
  if (cfg_.use_lat) {
    pyramid.back() = lat_(pyramid.back());
  }
  return pyramid;
}

void IndependentEncoderImpl::check_pyramid(const DsiPyramid& pyramid) const {
  if (pyramid.size() != EncoderConfig::kLevels) {
    throw DataError("pyramid must have 4 levels, got " +
                    std::to_string(pyramid.size()));
  }
  for (int i = 0; i < EncoderConfig::kLevels; ++i) {
    const auto& t = pyramid[i];
    if (t.dim() != 4 || t.size(1) != cfg_.level_channels(i) ||
        t.size(2) != cfg_.level_side(i) || t.size(3) != cfg_.level_side(i)) {
      throw DataError("pyramid level " + std::to_string(i) +
                      " has shape " + c10::str(t.sizes()) +
                      ", inconsistent with config");
    }
  }
}

torch::Tensor IndependentEncoderImpl::decode(const DsiPyramid& pyramid) {
  check_pyramid(pyramid);
  auto h = pyramid.back();
  // up_[j] consumes levels deepest-first; skip comes from level (2 - j).
  for (size_t j = 0; j < up_.size(); ++j) {
    const auto& skip = pyramid[EncoderConfig::kLevels - 2 - j];
    h = up_[j]->forward(torch::cat({upsample2x(h), skip}, 1));
  }
  // h is at S/4; two more doublings restore the input resolution.
  h = upsample2x(h);
  h = upsample2x(h);
  return tail_->forward(h);
}

torch::Tensor IndependentEncoderImpl::merge(const DsiPyramid& pyramid) {
  check_pyramid(pyramid);
  const auto side = cfg_.merged_side();
  auto resize = [&](const torch::Tensor& t) {
    return F::interpolate(t, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{side, side})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
  };
  const int deepest = EncoderConfig::kLevels - 1;
  auto merged = resize(merge_proj_[deepest](pyramid[deepest]));
  if (cfg_.use_dsi) {
    for (int i = 0; i < deepest; ++i) {
      merged = merged + resize(merge_proj_[i](pyramid[i]));
    }
  }
  return merged;
}

}  // namespace iegan
