#pragma once

#include <torch/torch.h>

#include "iegan/config.hpp"

namespace iegan {

// Adaptive instance-layer normalization:
//   out = gamma * (rho * IN(x) + (1 - rho) * LN(x)) + beta
// IN standardizes per (sample, channel) over spatial positions, LN per
// sample over all channels and positions. gamma/beta are (N, C) style
// vectors, rho a per-channel mix in [0, 1].
torch::Tensor adailn(const torch::Tensor& x, const torch::Tensor& gamma,
                     const torch::Tensor& beta, const torch::Tensor& rho,
                     double eps = 1e-5);

class AdaILNResBlockImpl : public torch::nn::Module {
 public:
  explicit AdaILNResBlockImpl(int64_t channels);
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& gamma,
                        const torch::Tensor& beta);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::Tensor rho1_, rho2_;  // clipped to [0,1] after optimizer steps
};
TORCH_MODULE(AdaILNResBlock);

// Sub-pixel up-sampling: channel-expanding conv then pixel shuffle;
// spatial side doubles.
class SubPixelUpsampleImpl : public torch::nn::Module {
 public:
  SubPixelUpsampleImpl(int64_t in_channels, int64_t out_channels);
  torch::Tensor forward(torch::Tensor x);

 private:
  int64_t in_channels_, out_channels_;
  torch::nn::Conv2d conv_{nullptr};
};
TORCH_MODULE(SubPixelUpsample);

// Encoder-free generator: stride-2 stem into a 4*ch bottleneck, six AdaILN
// residual blocks styled by (gamma, beta) from the pooled merged DSI, two
// sub-pixel doublings, 7x7 output conv with tanh.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const EncoderConfig& cfg);

  // Pools the merged DSI and emits the (gamma, beta) pair shared by all
  // residual blocks; each is (N, 4*ch).
  std::pair<torch::Tensor, torch::Tensor> style_params(const torch::Tensor& dsi);

  torch::Tensor forward(torch::Tensor dsi);

  // Clamps every rho parameter to [0, 1] in place.
  void clip_rho();

 private:
  EncoderConfig cfg_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::Linear style_hidden_{nullptr}, style_gamma_{nullptr},
      style_beta_{nullptr};
  std::vector<AdaILNResBlock> blocks_;
  SubPixelUpsample up1_{nullptr}, up2_{nullptr};
  torch::nn::Sequential out_{nullptr};
};
TORCH_MODULE(Generator);

}  // namespace iegan
