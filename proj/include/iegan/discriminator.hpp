#pragma once

#include <torch/torch.h>

#include <vector>

#include "iegan/config.hpp"

namespace iegan {

struct DiscriminatorOutput {
  std::vector<torch::Tensor> scale_logits;  // one patch-logit map per scale
  torch::Tensor cam_logit;                  // (N, 2) pooled classifier logits
  torch::Tensor heatmap;                    // (N, 1, H, W) diagnostic
};

// Class-activation-map attention: auxiliary classifier weights over
// average- and max-pooled features reweight channels; the two attended
// maps are fused by a bias-free 1x1 conv.
class CamAttentionImpl : public torch::nn::Module {
 public:
  explicit CamAttentionImpl(int64_t channels);

  // Returns (attended features, cam_logit (N,2), heatmap (N,1,H,W)).
  std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> forward(
      torch::Tensor x);

 private:
  torch::nn::Linear gap_fc_{nullptr}, gmp_fc_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(CamAttention);

// Encoder-free discriminator over the merged DSI: CAM attention followed
// by a stride-2 stack with patch-logit heads after 2 and 4 down-samplings.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const EncoderConfig& cfg);

  DiscriminatorOutput forward(torch::Tensor dsi);

 private:
  EncoderConfig cfg_;
  CamAttention cam_{nullptr};
  torch::nn::Sequential down1_{nullptr}, down2_{nullptr};  // 2 + 2 stride-2 convs
  torch::nn::Conv2d head_fine_{nullptr}, head_coarse_{nullptr};
};
TORCH_MODULE(Discriminator);

}  // namespace iegan
