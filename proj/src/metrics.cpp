#include "iegan/metrics.hpp"

#include <filesystem>
#include <iostream>

#include <torch/script.h>

#include "iegan/common.hpp"

namespace iegan {

GaussianStats gaussian_stats(const FeatureSet& features) {
  const auto n = features.count();
  if (n < 2) {
    throw DataError("gaussian_stats requires at least 2 samples, got " +
                    std::to_string(n));
  }
  if (n < features.dim() + 1) {
    std::cerr << "warning: only " << n << " samples for dimension "
              << features.dim() << "; covariance may be ill-conditioned\n";
  }
  auto x = features.features.to(torch::kFloat64);
  auto mean = x.mean(0);
  auto centered = x - mean.unsqueeze(0);
  auto cov = centered.t().mm(centered) / static_cast<double>(n - 1);
  return {mean, (cov + cov.t()) / 2.0};
}

namespace {

// Square root of a symmetric PSD matrix; negative eigenvalues (noise from
// near-singular sample covariances) are clamped to zero.
torch::Tensor psd_sqrt(const torch::Tensor& m) {
  auto [vals, vecs] = torch::linalg_eigh(m);
  auto clamped = vals.clamp_min(0.0);
  return vecs.mm(torch::diag(clamped.sqrt())).mm(vecs.t());
}

void check_symmetric(const torch::Tensor& cov, const char* which) {
  auto asym = (cov - cov.t()).abs().max().item<double>();
  auto scale = cov.abs().max().item<double>() + 1e-12;
  if (asym > 1e-6 * scale) {
    throw DataError(std::string("fid: covariance ") + which +
                    " is not symmetric");
  }
}

}  // namespace

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size(0) != b.mean.size(0)) {
    throw DataError("fid: dimension mismatch");
  }
  check_symmetric(a.cov, "a");
  check_symmetric(b.cov, "b");

  auto mu_a = a.mean.to(torch::kFloat64);
  auto mu_b = b.mean.to(torch::kFloat64);
  auto sa = a.cov.to(torch::kFloat64);
  auto sb = b.cov.to(torch::kFloat64);

  auto sa_half = psd_sqrt(sa);
  auto inner = sa_half.mm(sb).mm(sa_half);
  inner = (inner + inner.t()) / 2.0;
  auto vals = std::get<0>(torch::linalg_eigh(inner));
  const double tol = 1e-8 * vals.abs().max().item<double>();
  auto clamped = torch::where(vals < tol, torch::zeros_like(vals), vals);
  const double trace_sqrt = clamped.clamp_min(0.0).sqrt().sum().item<double>();

  const double mean_term = (mu_a - mu_b).square().sum().item<double>();
  return mean_term + sa.trace().item<double>() + sb.trace().item<double>() -
         2.0 * trace_sqrt;
}

namespace {

torch::Tensor poly_kernel(const torch::Tensor& x, const torch::Tensor& y) {
  const double d = static_cast<double>(x.size(1));
  return (x.mm(y.t()) / d + 1.0).pow(3);
}

double kid_block(const torch::Tensor& a, const torch::Tensor& b) {
  const auto na = static_cast<double>(a.size(0));
  const auto nb = static_cast<double>(b.size(0));
  auto kaa = poly_kernel(a, a);
  auto kbb = poly_kernel(b, b);
  auto kab = poly_kernel(a, b);
  const double term_a =
      (kaa.sum() - kaa.diagonal().sum()).item<double>() / (na * (na - 1.0));
  const double term_b =
      (kbb.sum() - kbb.diagonal().sum()).item<double>() / (nb * (nb - 1.0));
  const double cross = kab.mean().item<double>();
  return term_a + term_b - 2.0 * cross;
}

}  // namespace

double kid(const FeatureSet& a, const FeatureSet& b,
           std::optional<int64_t> block_size) {
  if (a.dim() != b.dim()) {
    throw DataError("kid: dimension mismatch");
  }
  if (a.count() < 2 || b.count() < 2) {
    throw DataError("kid requires at least 2 samples per set");
  }
  auto xa = a.features.to(torch::kFloat64);
  auto xb = b.features.to(torch::kFloat64);
  if (!block_size.has_value()) {
    return kid_block(xa, xb);
  }
  const int64_t bs = *block_size;
  const int64_t n = std::min(xa.size(0), xb.size(0));
  const int64_t blocks = std::max<int64_t>(1, n / bs);
  double acc = 0.0;
  for (int64_t i = 0; i < blocks; ++i) {
    const int64_t lo = i * bs;
    const int64_t hi = (i == blocks - 1) ? n : lo + bs;
    acc += kid_block(xa.slice(0, lo, hi), xb.slice(0, lo, hi));
  }
  return acc / static_cast<double>(blocks);
}

StubConvExtractor::StubConvExtractor(uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  w1_ = torch::randn({16, 3, 3, 3}, gen) * 0.2;
  w2_ = torch::randn({32, 16, 3, 3}, gen) * 0.1;
  w3_ = torch::randn({kDim, 32, 3, 3}, gen) * 0.1;
}

FeatureSet StubConvExtractor::extract(const torch::Tensor& images) {
  torch::NoGradGuard guard;
  namespace F = torch::nn::functional;
  auto opts = F::Conv2dFuncOptions().stride(2).padding(1);
  auto h = torch::relu(F::conv2d(images.to(torch::kFloat32), w1_, opts));
  h = torch::relu(F::conv2d(h, w2_, opts));
  h = torch::relu(F::conv2d(h, w3_, opts));
  return {h.mean({2, 3}).to(torch::kFloat64), name()};
}

struct TorchScriptExtractor::Impl {
  torch::jit::script::Module module;
};

TorchScriptExtractor::TorchScriptExtractor(const std::string& weights_path) {
  if (weights_path.empty() || !std::filesystem::exists(weights_path)) {
    throw ConfigError("extractor unavailable: pretrained weights not found at '" +
                      weights_path + "'");
  }
  impl_ = std::make_shared<Impl>();
  try {
    impl_->module = torch::jit::load(weights_path);
    impl_->module.eval();
  } catch (const c10::Error& e) {
    throw ConfigError("extractor unavailable: cannot load TorchScript module: " +
                      std::string(e.what_without_backtrace()));
  }
}

FeatureSet TorchScriptExtractor::extract(const torch::Tensor& images) {
  torch::NoGradGuard guard;
  auto out = impl_->module.forward({images.to(torch::kFloat32)}).toTensor();
  if (out.dim() > 2) out = out.flatten(1);
  return {out.to(torch::kFloat64), name()};
}

}  // namespace iegan
