#include "iegan/losses.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "iegan/common.hpp"

namespace iegan {

namespace {

std::vector<torch::Tensor> heads(const DiscriminatorOutput& out,
                                 bool include_cam) {
  auto hs = out.scale_logits;
  if (include_cam) hs.push_back(out.cam_logit);
  return hs;
}

}  // namespace

torch::Tensor l1_mean(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) {
    throw DataError("l1_mean: shape mismatch " + c10::str(a.sizes()) +
                    " vs " + c10::str(b.sizes()));
  }
  return (a - b).abs().mean();
}

torch::Tensor adversarial_loss_d(const DiscriminatorOutput& real_out,
                                 const DiscriminatorOutput& fake_out,
                                 bool include_cam) {
  auto real_heads = heads(real_out, include_cam);
  auto fake_heads = heads(fake_out, include_cam);
  torch::Tensor loss = torch::zeros({}, real_heads[0].options());
  for (size_t i = 0; i < real_heads.size(); ++i) {
    loss = loss + (real_heads[i] - 1.0).square().mean() +
           fake_heads[i].square().mean();
  }
  return loss / static_cast<double>(real_heads.size());
}

torch::Tensor adversarial_loss_g(const DiscriminatorOutput& fake_out,
                                 bool include_cam) {
  auto fake_heads = heads(fake_out, include_cam);
  torch::Tensor loss = torch::zeros({}, fake_heads[0].options());
  for (auto& h : fake_heads) {
    loss = loss + (h - 1.0).square().mean();
  }
  return loss / static_cast<double>(fake_heads.size());
}

double total_objective(const LossComponents& c, const LossWeights& w) {
  return w.lambda_feature * c.feature + w.lambda_adversarial * c.adversarial +
         w.lambda_cycle * c.cycle + w.lambda_identity * c.identity;
}

bool LossReport::all_finite() const {
  for (double v : {l_fea_x, l_fea_y, l_adv_d, l_adv_g, l_cyc, l_ide, total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string LossReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["l_fea_x"] = l_fea_x;
  j["l_fea_y"] = l_fea_y;
  j["l_adv_d"] = l_adv_d;
  j["l_adv_g"] = l_adv_g;
  j["l_cyc"] = l_cyc;
  j["l_ide"] = l_ide;
  j["total"] = total;
  return j.dump();
}

}  // namespace iegan
