#include "otune/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "otune/errors.hpp"
#include "otune/rng.hpp"

namespace otune {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;

double matern52(double scaled_sq_dist) {
  const double r = std::sqrt(scaled_sq_dist);
  return (1.0 + kSqrt5 * r + 5.0 / 3.0 * scaled_sq_dist) * std::exp(-kSqrt5 * r);
}

double kernel_impl(const double* a, const double* b, const KernelSpec& spec,
                   const KernelLayout& layout) {
  double numeric_sq = 0.0;
  for (std::size_t j = 0; j < layout.numeric_dims.size(); ++j) {
    const double d = (a[layout.numeric_dims[j]] - b[layout.numeric_dims[j]]) /
                     spec.numeric_lengthscales[j];
    numeric_sq += d * d;
  }
  double hamming_sum = 0.0;
  for (std::size_t j = 0; j < layout.categorical_dims.size(); ++j) {
    if (a[layout.categorical_dims[j]] != b[layout.categorical_dims[j]])
      hamming_sum += spec.categorical_weights[j];
  }
  double context_sq = 0.0;
  for (std::size_t j = 0; j < layout.context_dims.size(); ++j) {
    const double d = (a[layout.context_dims[j]] - b[layout.context_dims[j]]) /
                     spec.context_lengthscales[j];
    context_sq += d * d;
  }
  double k = spec.signal_variance;
  if (!layout.numeric_dims.empty()) k *= matern52(numeric_sq);
  if (!layout.categorical_dims.empty()) k *= std::exp(-hamming_sum);
  if (!layout.context_dims.empty()) k *= std::exp(-0.5 * context_sq);
  return k;
}

void check_spec(const KernelSpec& spec, const KernelLayout& layout) {
  if (spec.numeric_lengthscales.size() != layout.numeric_dims.size() ||
      spec.categorical_weights.size() != layout.categorical_dims.size() ||
      spec.context_lengthscales.size() != layout.context_dims.size())
    throw ShapeError("kernel spec does not match layout");
  for (double l : spec.numeric_lengthscales)
    if (!(l > 0.0)) throw ArgumentError("numeric lengthscale must be > 0");
  for (double l : spec.context_lengthscales)
    if (!(l > 0.0)) throw ArgumentError("context lengthscale must be > 0");
  if (!(spec.signal_variance > 0.0)) throw ArgumentError("signal variance must be > 0");
  if (spec.noise_variance < 0.0) throw ArgumentError("noise variance must be >= 0");
}

Eigen::MatrixXd kernel_matrix(const RowMatrix& X, const KernelSpec& spec,
                              const KernelLayout& layout) {
  const auto n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_impl(X.row(i).data(), X.row(j).data(), spec, layout);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

// Hyperparameters packed in log space for the coordinate search.
struct HyperPack {
  std::vector<double> values;  // log lengthscales, log cat weights, log ctx lengthscales,
                               // log signal var, log noise var (when optimized)
  bool optimize_noise = true;

  KernelSpec unpack(const KernelLayout& layout, std::optional<double> fixed_noise) const {
    KernelSpec spec;
    std::size_t k = 0;
    spec.numeric_lengthscales.resize(layout.numeric_dims.size());
    for (auto& l : spec.numeric_lengthscales) l = std::exp(values[k++]);
    spec.categorical_weights.resize(layout.categorical_dims.size());
    for (auto& w : spec.categorical_weights) w = std::exp(values[k++]);
    spec.context_lengthscales.resize(layout.context_dims.size());
    for (auto& l : spec.context_lengthscales) l = std::exp(values[k++]);
    spec.signal_variance = std::exp(values[k++]);
    spec.noise_variance = optimize_noise ? std::exp(values[k++]) : *fixed_noise;
    return spec;
  }
};

}  // namespace

double kernel_value(std::span<const double> a, std::span<const double> b, const KernelSpec& spec,
                    const KernelLayout& layout) {
  if (a.size() != b.size() || a.size() != layout.total())
    throw ShapeError("kernel_value: point dimension mismatch");
  check_spec(spec, layout);
  return kernel_impl(a.data(), b.data(), spec, layout);
}

GPModel GPModel::build(const RowMatrix& X, const Eigen::VectorXd& y,
                       const KernelLayout& layout, const KernelSpec& spec) {
  GPModel m;
  m.n_ = static_cast<std::size_t>(X.rows());
  m.X_ = X;
  m.y_raw_ = y;
  m.layout_ = layout;
  m.spec_ = spec;

  m.y_mean_ = y.mean();
  const double var =
      m.n_ > 1 ? (y.array() - m.y_mean_).square().sum() / static_cast<double>(m.n_ - 1) : 0.0;
  m.y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  m.y_std_ = (y.array() - m.y_mean_) / m.y_scale_;

  Eigen::MatrixXd K = kernel_matrix(X, spec, layout);
  K.diagonal().array() += spec.noise_variance;

  // Jitter escalation: 1e-8, x10 each retry, up to 1e-2.
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter;
    m.llt_.compute(Kj);
    if (m.llt_.info() == Eigen::Success) break;
    jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0;
    if (jitter > 1e-2) throw DataError("kernel matrix is singular even with maximal jitter");
  }
  m.jitter_ = jitter;
  m.alpha_ = m.llt_.solve(m.y_std_);

  const auto& L = m.llt_.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det_half += std::log(L(i, i));
  m.log_marginal_ = -0.5 * m.y_std_.dot(m.alpha_) - log_det_half -
                    0.5 * static_cast<double>(m.n_) * std::log(2.0 * M_PI);
  return m;
}

GPModel GPModel::fit_fixed(const RowMatrix& X, const Eigen::VectorXd& y,
                           const KernelLayout& layout, const KernelSpec& spec) {
  if (X.rows() < 1) throw ArgumentError("fit requires at least one observation");
  if (static_cast<std::size_t>(X.cols()) != layout.total())
    throw ShapeError("input matrix does not match layout");
  if (X.rows() != y.size()) throw ShapeError("inputs/targets length mismatch");
  if (!y.array().isFinite().all()) throw DataError("non-finite target value");
  check_spec(spec, layout);
  return build(X, y, layout, spec);
}

GPModel GPModel::fit(const RowMatrix& X, const Eigen::VectorXd& y,
                     const KernelLayout& layout, const FitOptions& options) {
  if (X.rows() < 1) throw ArgumentError("fit requires at least one observation");
  if (static_cast<std::size_t>(X.cols()) != layout.total())
    throw ShapeError("input matrix does not match layout");
  if (X.rows() != y.size()) throw ShapeError("inputs/targets length mismatch");
  if (!y.array().isFinite().all()) throw DataError("non-finite target value");

  const std::size_t n_scales =
      layout.numeric_dims.size() + layout.categorical_dims.size() + layout.context_dims.size();
  const bool optimize_noise = !options.fixed_noise.has_value();
  const std::size_t n_hyper = n_scales + 1 + (optimize_noise ? 1 : 0);

  const double log_ls_low = std::log(options.lengthscale_low);
  const double log_ls_high = std::log(options.lengthscale_high);
  const double log_sv_low = std::log(1e-3);
  const double log_sv_high = std::log(1e3);
  const double log_noise_low = std::log(options.noise_low);
  const double log_noise_high = std::log(options.noise_high);

  auto clamp_pack = [&](HyperPack& pack) {
    for (std::size_t i = 0; i < n_scales; ++i)
      pack.values[i] = std::clamp(pack.values[i], log_ls_low, log_ls_high);
    pack.values[n_scales] = std::clamp(pack.values[n_scales], log_sv_low, log_sv_high);
    if (optimize_noise)
      pack.values[n_scales + 1] =
          std::clamp(pack.values[n_scales + 1], log_noise_low, log_noise_high);
  };

  auto evaluate = [&](const HyperPack& pack) -> double {
    try {
      const KernelSpec spec = pack.unpack(layout, options.fixed_noise);
      return build(X, y, layout, spec).log_marginal_likelihood();
    } catch (const DataError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  auto rng = make_rng(mix64(options.seed, 0x47504649ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  HyperPack best_pack;
  double best_lml = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < options.restarts; ++restart) {
    HyperPack pack;
    pack.optimize_noise = optimize_noise;
    pack.values.resize(n_hyper);
    if (restart == 0) {
      // Canonical start: unit lengthscales, unit signal, modest noise.
      for (std::size_t i = 0; i < n_scales; ++i) pack.values[i] = 0.0;
      pack.values[n_scales] = 0.0;
      if (optimize_noise) pack.values[n_scales + 1] = std::log(1e-4);
    } else {
      for (std::size_t i = 0; i < n_scales; ++i)
        pack.values[i] = std::log(0.05) + unit(rng) * (std::log(5.0) - std::log(0.05));
      pack.values[n_scales] = std::log(0.2) + unit(rng) * (std::log(5.0) - std::log(0.2));
      if (optimize_noise)
        pack.values[n_scales + 1] = log_noise_low + unit(rng) * (log_noise_high - log_noise_low);
    }
    clamp_pack(pack);

    double current = evaluate(pack);
    double step = std::log(2.0);
    std::size_t stale = 0;
    for (int iter = 0; iter < options.local_steps; ++iter) {
      const std::size_t coord = static_cast<std::size_t>(iter) % n_hyper;
      bool improved = false;
      for (double direction : {+1.0, -1.0}) {
        HyperPack trial = pack;
        trial.values[coord] += direction * step;
        clamp_pack(trial);
        const double lml = evaluate(trial);
        if (lml > current) {
          current = lml;
          pack = trial;
          improved = true;
          break;
        }
      }
      if (!improved) {
        if (++stale >= n_hyper) {
          step *= 0.5;
          stale = 0;
          if (step < 1e-3) break;
        }
      } else {
        stale = 0;
      }
    }

    if (current > best_lml) {
      best_lml = current;
      best_pack = pack;
    }
  }

  if (!std::isfinite(best_lml))
    throw DataError("marginal-likelihood search found no factorizable kernel");
  return build(X, y, layout, best_pack.unpack(layout, options.fixed_noise));
}

PredictResult GPModel::predict(std::span<const double> point) const {
  if (!fitted()) throw StateError("predict on unfitted model");
  if (point.size() != layout_.total()) throw ShapeError("predict: point dimension mismatch");

  Eigen::VectorXd k_star(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i)
    k_star(static_cast<Eigen::Index>(i)) =
        kernel_impl(X_.row(static_cast<Eigen::Index>(i)).data(), point.data(), spec_, layout_);

  const double mean_std = k_star.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(k_star);
  const double k_self = kernel_impl(point.data(), point.data(), spec_, layout_);
  const double var_std = std::max(0.0, k_self - v.squaredNorm());

  PredictResult out;
  out.mean = y_mean_ + y_scale_ * mean_std;
  out.variance = y_scale_ * y_scale_ * var_std;
  return out;
}

Eigen::VectorXd GPModel::loo_means() const {
  if (!fitted()) throw StateError("loo_means on unfitted model");
  const auto n = static_cast<Eigen::Index>(n_);
  const Eigen::MatrixXd K_inv = llt_.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu_std = y_std_(i) - alpha_(i) / K_inv(i, i);
    out(i) = y_mean_ + y_scale_ * mu_std;
  }
  return out;
}

EnsembleSurrogate::EnsembleSurrogate(std::vector<std::shared_ptr<const GPModel>> models,
                                     std::vector<double> weights)
    : models_(std::move(models)), weights_(std::move(weights)) {
  if (models_.empty()) throw StateError("ensemble requires at least one model");
  if (models_.size() != weights_.size()) throw ShapeError("ensemble models/weights mismatch");
  double sum = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw ArgumentError("ensemble weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("ensemble weights must sum to 1");
}

PredictResult EnsembleSurrogate::predict(std::span<const double> point) const {
  PredictResult out;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    const PredictResult p = models_[i]->predict(point);
    out.mean += weights_[i] * p.mean;
    out.variance += weights_[i] * weights_[i] * p.variance;
  }
  return out;
}

}  // namespace otune
