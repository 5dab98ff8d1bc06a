#include "iegan/discriminator.hpp"

#include "iegan/common.hpp"

namespace iegan {

namespace nn = torch::nn;

namespace {
constexpr double kLeakySlope = 0.2;

void append_down_block(nn::Sequential& seq, int64_t in_ch, int64_t out_ch) {
  seq->push_back(
      nn::Conv2d(nn::Conv2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
  seq->push_back(
      nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
}
}  // namespace

CamAttentionImpl::CamAttentionImpl(int64_t channels) {
  gap_fc_ = register_module("gap_fc", nn::Linear(channels, 1));
  gmp_fc_ = register_module("gmp_fc", nn::Linear(channels, 1));
  fuse_ = register_module(
      "fuse",
      nn::Conv2d(nn::Conv2dOptions(2 * channels, channels, 1).bias(false)));
}

std::tuple<torch::Tensor, torch::Tensor, torch::Tensor>
CamAttentionImpl::forward(torch::Tensor x) {
  auto gap = x.mean({2, 3});
  auto gmp = std::get<0>(x.flatten(2).max(2));

  auto gap_logit = gap_fc_(gap);
  auto gmp_logit = gmp_fc_(gmp);

  auto gap_weight = gap_fc_->weight.view({1, -1, 1, 1});
  auto gmp_weight = gmp_fc_->weight.view({1, -1, 1, 1});
  auto attended = torch::leaky_relu(
      fuse_(torch::cat({x * gap_weight, x * gmp_weight}, 1)), kLeakySlope);

  auto cam_logit = torch::cat({gap_logit, gmp_logit}, 1);
  auto heatmap = attended.sum(1, /*keepdim=*/true);
  return {attended, cam_logit, heatmap};
}

DiscriminatorImpl::DiscriminatorImpl(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto ch = cfg_.ch;
  const auto c_in = cfg_.merged_channels();

  cam_ = register_module("cam", CamAttention(c_in));
  nn::Sequential down1;
  append_down_block(down1, c_in, ch);
  append_down_block(down1, ch, 2 * ch);
  down1_ = register_module("down1", down1);
  nn::Sequential down2;
  append_down_block(down2, 2 * ch, 4 * ch);
  append_down_block(down2, 4 * ch, 8 * ch);
  down2_ = register_module("down2", down2);
  head_fine_ = register_module(
      "head_fine", nn::Conv2d(nn::Conv2dOptions(2 * ch, 1, 3).padding(1)));
  head_coarse_ = register_module(
      "head_coarse", nn::Conv2d(nn::Conv2dOptions(8 * ch, 1, 3).padding(1)));
}

DiscriminatorOutput DiscriminatorImpl::forward(torch::Tensor dsi) {
  if (dsi.dim() != 4 || dsi.size(1) != cfg_.merged_channels() ||
      dsi.size(2) != cfg_.merged_side() || dsi.size(3) != cfg_.merged_side()) {
    throw DataError("discriminator: expected merged DSI of shape (N, " +
                    std::to_string(cfg_.merged_channels()) + ", " +
                    std::to_string(cfg_.merged_side()) + ", " +
                    std::to_string(cfg_.merged_side()) + "), got " +
                    c10::str(dsi.sizes()));
  }
  auto [attended, cam_logit, heatmap] = cam_(dsi);
  auto mid = down1_->forward(attended);
  auto deep = down2_->forward(mid);

  DiscriminatorOutput out;
  out.scale_logits = {head_fine_(mid), head_coarse_(deep)};
  out.cam_logit = cam_logit;
  out.heatmap = heatmap;
  return out;
}

}  // namespace iegan
