#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>

namespace iegan {

// N x d feature matrix with an extractor provenance tag.
struct FeatureSet {
  torch::Tensor features;  // (N, d), float64
  std::string extractor;

  int64_t count() const { return features.size(0); }
  int64_t dim() const { return features.size(1); }
};

struct GaussianStats {
  torch::Tensor mean;  // (d)
  torch::Tensor cov;   // (d, d), symmetric
};

// Sample mean and unbiased sample covariance; requires N >= 2. Warns to
// stderr when N < d + 1 (poorly conditioned covariance).
GaussianStats gaussian_stats(const FeatureSet& features);

// Frechet distance ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}); the
// matrix square root is taken through a symmetric eigendecomposition of
// Sa^{1/2} Sb Sa^{1/2} with negative eigenvalues clamped to zero.
double fid(const GaussianStats& a, const GaussianStats& b);

// Unbiased squared MMD with polynomial kernel k(x,y) = (x.y/d + 1)^3.
// block_size, when set, averages the estimator over consecutive blocks.
double kid(const FeatureSet& a, const FeatureSet& b,
           std::optional<int64_t> block_size = std::nullopt);

// Feature extractor interface. images: (N, 3, H, W) in [-1,1].
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureSet extract(const torch::Tensor& images) = 0;
  virtual std::string name() const = 0;
};

// Seeded random conv net for offline tests; deterministic for a fixed
// seed and input. Emits 64-d pooled features.
class StubConvExtractor : public FeatureExtractor {
 public:
  explicit StubConvExtractor(uint64_t seed = 1234);
  FeatureSet extract(const torch::Tensor& images) override;
  std::string name() const override { return "stub"; }

  static constexpr int64_t kDim = 64;

 private:
  torch::Tensor w1_, w2_, w3_;
};

// TorchScript-based extractor (e.g. an exported Inception network with
// 2048-d pooled features). Throws a distinct unavailable-extractor error
// when the weights file is missing.
class TorchScriptExtractor : public FeatureExtractor {
 public:
  explicit TorchScriptExtractor(const std::string& weights_path);
  FeatureSet extract(const torch::Tensor& images) override;
  std::string name() const override { return "inception"; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace iegan
