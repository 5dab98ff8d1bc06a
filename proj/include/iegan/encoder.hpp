#pragma once

#include <torch/torch.h>

#include <vector>

#include "iegan/config.hpp"

namespace iegan {

// Feature pyramid produced by the encoder, shallowest level first:
// maps[i] has spatial side (S/4)/2^i and ch*2^i channels, i in 0..3.
using DsiPyramid = std::vector<torch::Tensor>;

// Kernelized attention with feature map elu(x)+1. q, k, v are (N, L, C);
// returns (N, L, C). Cost is linear in L; the implicit weights over keys
// form a convex combination at every query position.
torch::Tensor linear_attention_core(const torch::Tensor& q,
                                    const torch::Tensor& k,
                                    const torch::Tensor& v);

// Pre-normalized single-head linear attention block with residual add.
// Shape preserving on (N, C, H, W).
class LinearAttentionImpl : public torch::nn::Module {
 public:
  explicit LinearAttentionImpl(int64_t channels);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::InstanceNorm2d norm_{nullptr};
  torch::nn::Conv2d to_q_{nullptr}, to_k_{nullptr}, to_v_{nullptr},
      to_out_{nullptr};
};
TORCH_MODULE(LinearAttention);

// U-Net encoder/decoder pair for one domain. encode() taps the four-level
// feature pyramid, decode() restores the image through skip connections,
// merge() superimposes the pyramid into the single tensor consumed by the
// generator and discriminator.
class IndependentEncoderImpl : public torch::nn::Module {
 public:
  explicit IndependentEncoderImpl(const EncoderConfig& cfg);

  DsiPyramid encode(torch::Tensor image);
  torch::Tensor decode(const DsiPyramid& pyramid);
  torch::Tensor merge(const DsiPyramid& pyramid);

  const EncoderConfig& config() const { return cfg_; }

 private:
  void check_pyramid(const DsiPyramid& pyramid) const;

  EncoderConfig cfg_;
  torch::nn::Sequential stem_{nullptr};            // S -> S/4, level 0
  std::vector<torch::nn::Sequential> down_;        // levels 1..3
  LinearAttention lat_{nullptr};                   // deepest level only
  std::vector<torch::nn::Sequential> up_;          // skip-merging ups
  torch::nn::Sequential tail_{nullptr};            // S/4 -> S, tanh
  std::vector<torch::nn::Conv2d> merge_proj_;      // per-level 1x1 to ch/4
};
TORCH_MODULE(IndependentEncoder);

}  // namespace iegan
