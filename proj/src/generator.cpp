#include "iegan/generator.hpp"

#include "iegan/common.hpp"

namespace iegan {

namespace nn = torch::nn;

namespace {
constexpr double kNormEps = 1e-5;
constexpr int kNumResBlocks = 6;
}  // namespace

torch::Tensor adailn(const torch::Tensor& x, const torch::Tensor& gamma,
                     const torch::Tensor& beta, const torch::Tensor& rho,
                     double eps) {
  auto in_mean = x.mean({2, 3}, /*keepdim=*/true);
  auto in_var = x.var({2, 3}, /*unbiased=*/false, /*keepdim=*/true);
  auto in_hat = (x - in_mean) / torch::sqrt(in_var + eps);

  auto ln_mean = x.mean({1, 2, 3}, /*keepdim=*/true);
  auto ln_var = x.var({1, 2, 3}, /*unbiased=*/false, /*keepdim=*/true);
  auto ln_hat = (x - ln_mean) / torch::sqrt(ln_var + eps);

  auto r = rho.view({1, -1, 1, 1});
  auto mixed = r * in_hat + (1.0 - r) * ln_hat;
  return gamma.unsqueeze(-1).unsqueeze(-1) * mixed +
         beta.unsqueeze(-1).unsqueeze(-1);
}

AdaILNResBlockImpl::AdaILNResBlockImpl(int64_t channels) {
  conv1_ = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1)));
  conv2_ = register_module(
      "conv2", nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1)));
  rho1_ = register_parameter("rho1", torch::full({channels}, 0.9));
  rho2_ = register_parameter("rho2", torch::full({channels}, 0.9));
}

torch::Tensor AdaILNResBlockImpl::forward(torch::Tensor x,
                                          const torch::Tensor& gamma,
                                          const torch::Tensor& beta) {
  auto h = torch::relu(adailn(conv1_(x), gamma, beta, rho1_));
  h = adailn(conv2_(h), gamma, beta, rho2_);
  return x + h;
}

SubPixelUpsampleImpl::SubPixelUpsampleImpl(int64_t in_channels,
                                           int64_t out_channels)
    : in_channels_(in_channels), out_channels_(out_channels) {
  if (in_channels % 4 != 0) {
    throw ConfigError("sub-pixel upsample requires channel count divisible "
                      "by 4, got " + std::to_string(in_channels));
  }
  conv_ = register_module(
      "conv",
      nn::Conv2d(nn::Conv2dOptions(in_channels, 4 * out_channels, 3).padding(1)));
}

torch::Tensor SubPixelUpsampleImpl::forward(torch::Tensor x) {
  if (x.size(1) != in_channels_) {
    throw DataError("sub-pixel upsample: expected " +
                    std::to_string(in_channels_) + " channels, got " +
                    std::to_string(x.size(1)));
  }
  return torch::pixel_shuffle(conv_(x), 2);
}

GeneratorImpl::GeneratorImpl(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto ch = cfg_.ch;
  const auto bottleneck = 4 * ch;

  stem_ = register_module(
      "stem",
      nn::Sequential(
          nn::Conv2d(
              nn::Conv2dOptions(cfg_.merged_channels(), bottleneck, 3)
                  .stride(2)
                  .padding(1)),
          nn::InstanceNorm2d(
              nn::InstanceNorm2dOptions(bottleneck).eps(kNormEps).affine(true)),
          nn::ReLU()));

  style_hidden_ = register_module(
      "style_hidden", nn::Linear(cfg_.merged_channels(), bottleneck));
  style_gamma_ = register_module("style_gamma", nn::Linear(bottleneck, bottleneck));
  style_beta_ = register_module("style_beta", nn::Linear(bottleneck, bottleneck));

  for (int i = 0; i < kNumResBlocks; ++i) {
    blocks_.push_back(
        register_module("res" + std::to_string(i), AdaILNResBlock(bottleneck)));
  }

  up1_ = register_module("up1", SubPixelUpsample(bottleneck, 2 * ch));
  up2_ = register_module("up2", SubPixelUpsample(2 * ch, ch));

  out_ = register_module(
      "out", nn::Sequential(
                 nn::Conv2d(nn::Conv2dOptions(ch, 3, 7).padding(3)), nn::Tanh()));
}

std::pair<torch::Tensor, torch::Tensor> GeneratorImpl::style_params(
    const torch::Tensor& dsi) {
  auto pooled = dsi.mean({2, 3});
  auto h = torch::relu(style_hidden_(pooled));
  return {style_gamma_(h), style_beta_(h)};
}

torch::Tensor GeneratorImpl::forward(torch::Tensor dsi) {
  if (dsi.dim() != 4 || dsi.size(1) != cfg_.merged_channels() ||
      dsi.size(2) != cfg_.merged_side() || dsi.size(3) != cfg_.merged_side()) {
    throw DataError("generator: expected merged DSI of shape (N, " +
                    std::to_string(cfg_.merged_channels()) + ", " +
                    std::to_string(cfg_.merged_side()) + ", " +
                    std::to_string(cfg_.merged_side()) + "), got " +
                    c10::str(dsi.sizes()));
  }
  auto [gamma, beta] = style_params(dsi);
  auto h = stem_->forward(dsi);
  for (auto& block : blocks_) {
    h = block(h, gamma, beta);
  }
  h = torch::relu(up1_(h));
  h = torch::relu(up2_(h));
  return out_->forward(h);
}

void GeneratorImpl::clip_rho() {
  torch::NoGradGuard guard;
  for (auto& p : named_parameters()) {
    if (p.key().find("rho") != std::string::npos) {
      p.value().clamp_(0.0, 1.0);
    }
  }
}

}  // namespace iegan
