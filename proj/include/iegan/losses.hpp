#pragma once

#include <torch/torch.h>

#include "iegan/config.hpp"
#include "iegan/discriminator.hpp"

namespace iegan {

// Mean absolute error over all elements; the form shared by the feature,
// cycle and identity losses.
torch::Tensor l1_mean(const torch::Tensor& a, const torch::Tensor& b);

inline torch::Tensor feature_loss(const torch::Tensor& x,
                                  const torch::Tensor& reconstruction) {
  return l1_mean(x, reconstruction);
}
inline torch::Tensor cycle_loss(const torch::Tensor& x,
                                const torch::Tensor& cycled) {
  return l1_mean(x, cycled);
}
inline torch::Tensor identity_loss(const torch::Tensor& x,
                                   const torch::Tensor& identity_out) {
  return l1_mean(x, identity_out);
}

// Least-squares discriminator loss, averaged over logit heads (patch
// scales plus CAM when include_cam): mean of (real - 1)^2 + (fake - 0)^2.
torch::Tensor adversarial_loss_d(const DiscriminatorOutput& real_out,
                                 const DiscriminatorOutput& fake_out,
                                 bool include_cam = true);

// Least-squares generator loss: mean over heads of (fake - 1)^2.
torch::Tensor adversarial_loss_g(const DiscriminatorOutput& fake_out,
                                 bool include_cam = true);

struct LossComponents {
  double feature = 0;
  double adversarial = 0;
  double cycle = 0;
  double identity = 0;
};

// Weighted sum: lambda1*L_fea + lambda2*L_adv + lambda3*L_cyc + lambda4*L_ide.
double total_objective(const LossComponents& c, const LossWeights& w);

// Per-iteration log record.
struct LossReport {
  int64_t iter = 0;
  double l_fea_x = 0, l_fea_y = 0;
  double l_adv_d = 0, l_adv_g = 0;
  double l_cyc = 0, l_ide = 0;
  double total = 0;

  bool all_finite() const;
  std::string to_json_line() const;
};

}  // namespace iegan
