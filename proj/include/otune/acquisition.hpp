#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otune/space.hpp"
#include "otune/surrogate.hpp"

namespace otune {

/// Upper-bound requirement on one observed metric.
struct ConstraintSpec {
  std::string name;
  std::string metric;  // which metric's surrogate to consult
  double threshold = 0.0;
};

/// gamma in (0,1] scales the optimistic bound mu + gamma * sigma.
struct SafetyConfig {
  double gamma = 1.0;
};

struct ConstraintModel {
  const Surrogate* model = nullptr;
  ConstraintSpec spec;
};

double normal_cdf(double z);
double normal_pdf(double z);

/// Closed-form expected improvement for minimization.
double expected_improvement(double mean, double variance, double y_best);

/// Probability that the constrained metric stays at or below the threshold.
double feasibility_probability(const Surrogate& model, std::span<const double> point,
                               double threshold);

/// EI times the product of per-constraint feasibility probabilities.
double eic(std::span<const double> point, const Surrogate& objective_model,
           const std::vector<ConstraintModel>& constraints, double y_best);

double upper_bound(double mean, double variance, const SafetyConfig& cfg);

/// True iff mu + gamma * sigma <= threshold for every constraint.
bool is_safe(std::span<const double> point, const std::vector<ConstraintModel>& constraints,
             const SafetyConfig& cfg);

struct AcquisitionOptions {
  std::size_t candidates = 2000;
  std::size_t refine_top = 5;
  std::size_t refine_passes = 10;
  double refine_step = 1.0 / 64.0;
  bool safety_enabled = true;     // when false, the safe-region filter is skipped
  bool use_feasibility = true;    // when false, EIC degrades to plain EI
};

struct AcquisitionResult {
  Configuration config;
  double eic = 0.0;
  bool fallback = false;  // no safe candidate existed; minimal-violation choice
};

/// Maximizes EIC over the safe candidates of a sub-space: low-discrepancy
/// sampling, safety filtering, then coordinate-wise refinement from the
/// top safe candidates. When no candidate is safe, returns the candidate
/// with the smallest total bound violation so the loop stays alive.
AcquisitionResult maximize_eic(const Surrogate& objective_model,
                               const std::vector<ConstraintModel>& constraints,
                               const SubSpace& region, const ConfigurationSpace& space,
                               std::span<const double> context, const SafetyConfig& cfg,
                               double y_best, std::uint64_t seed,
                               const AcquisitionOptions& options = {});

}  // namespace otune
