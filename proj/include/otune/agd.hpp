#pragma once

#include <span>
#include <string>
#include <vector>

#include "otune/space.hpp"
#include "otune/surrogate.hpp"

namespace otune {

/// Approximate-gradient-descent settings: learning rate eta, BO/AGD
/// alternation period, and the normalized perturbation used for the
/// runtime finite differences.
struct AGDConfig {
  double eta = 0.001;
  int period = 5;  // every period-th iteration is an AGD step
  double eps = 0.01;
  double max_eta_factor = 8.0;
};

/// Analytic resource model: value plus partial derivatives with respect to
/// native parameter values.
class ResourceFunction {
 public:
  virtual ~ResourceFunction() = default;
  virtual double value(const Configuration& config) const = 0;
  virtual double partial(const Configuration& config, const std::string& param) const = 0;
};

/// Central-difference runtime gradient over the numeric configuration
/// dimensions of `point` (normalized config followed by context features).
/// Perturbed points are clamped to [0,1] and the divisor uses the actual
/// displacement; categorical dimensions get 0.
std::vector<double> approx_runtime_gradient(const Surrogate& runtime_model,
                                            std::span<const double> point,
                                            const ConfigurationSpace& space,
                                            const AGDConfig& cfg);

/// Gradient of f = T^beta * R^(1-beta) given the metric values and their
/// gradients. beta = 1 and beta = 0 return grad_t / grad_r exactly.
std::vector<double> objective_gradient(double t, double r, std::span<const double> grad_t,
                                       std::span<const double> grad_r, double beta);

/// One descent step from the best configuration. If the step rounds back
/// onto the same configuration, eta is doubled (up to max_eta_factor) for
/// this step only; as a last resort the steepest dimension is nudged by
/// one grid step.
Configuration agd_step(const Configuration& x_best, const Surrogate& runtime_model,
                       const ResourceFunction& resource_fn, double beta, const AGDConfig& cfg,
                       const ConfigurationSpace& space, std::span<const double> context);

}  // namespace otune
