#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace otune {

/// Training inputs are stored row-per-observation; row-major keeps each
/// observation contiguous for the kernel loops.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Index layout of a surrogate input vector: normalized configuration
/// components grouped by kind, plus trailing workload-context features.
struct KernelLayout {
  std::vector<std::size_t> numeric_dims;
  std::vector<std::size_t> categorical_dims;
  std::vector<std::size_t> context_dims;

  std::size_t total() const {
    return numeric_dims.size() + categorical_dims.size() + context_dims.size();
  }
};

/// Mixed product kernel: Matern-5/2 over numeric dims, Hamming over
/// categorical dims, squared-exponential over context dims.
struct KernelSpec {
  std::vector<double> numeric_lengthscales;
  std::vector<double> categorical_weights;
  std::vector<double> context_lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;  // tau^2
};

double kernel_value(std::span<const double> a, std::span<const double> b, const KernelSpec& spec,
                    const KernelLayout& layout);

struct PredictResult {
  double mean = 0.0;
  double variance = 0.0;
};

/// Common prediction surface for plain GP models and the meta ensemble.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual PredictResult predict(std::span<const double> point) const = 0;
};

struct FitOptions {
  std::uint64_t seed = 0;
  int restarts = 5;
  int local_steps = 50;
  // When set, tau^2 is pinned instead of optimized.
  std::optional<double> fixed_noise;
  double lengthscale_low = 1e-3;
  double lengthscale_high = 1e3;
  double noise_low = 1e-8;
  double noise_high = 1.0;
};

/// Gaussian-process posterior over standardized targets with a cached
/// Cholesky factorization of (K + tau^2 I).
class GPModel : public Surrogate {
 public:
  GPModel() = default;

  /// Fits kernel hyperparameters by maximizing the log marginal likelihood
  /// with a seeded multi-start coordinate search.
  static GPModel fit(const RowMatrix& X, const Eigen::VectorXd& y,
                     const KernelLayout& layout, const FitOptions& options = {});

  /// Builds the posterior for fixed hyperparameters (no optimization).
  static GPModel fit_fixed(const RowMatrix& X, const Eigen::VectorXd& y,
                           const KernelLayout& layout, const KernelSpec& spec);

  PredictResult predict(std::span<const double> point) const override;

  bool fitted() const { return n_ > 0; }
  std::size_t num_points() const { return n_; }
  const KernelSpec& spec() const { return spec_; }
  const KernelLayout& layout() const { return layout_; }
  const RowMatrix& inputs() const { return X_; }
  const Eigen::VectorXd& raw_targets() const { return y_raw_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  double jitter() const { return jitter_; }

  /// Closed-form leave-one-out posterior means at the training inputs,
  /// de-standardized.
  Eigen::VectorXd loo_means() const;

 private:
  static GPModel build(const RowMatrix& X, const Eigen::VectorXd& y,
                       const KernelLayout& layout, const KernelSpec& spec);

  std::size_t n_ = 0;
  RowMatrix X_;
  Eigen::VectorXd y_raw_;
  Eigen::VectorXd y_std_;
  KernelSpec spec_;
  KernelLayout layout_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  double log_marginal_ = 0.0;

 public:
  double log_marginal_likelihood() const { return log_marginal_; }
};

/// Similarity-weighted combination of task surrogates; weights sum to 1.
class EnsembleSurrogate : public Surrogate {
 public:
  EnsembleSurrogate(std::vector<std::shared_ptr<const GPModel>> models,
                    std::vector<double> weights);

  PredictResult predict(std::span<const double> point) const override;

  const std::vector<double>& weights() const { return weights_; }
  std::size_t num_models() const { return models_.size(); }

 private:
  std::vector<std::shared_ptr<const GPModel>> models_;
  std::vector<double> weights_;
};

}  // namespace otune
