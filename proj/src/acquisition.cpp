#include "otune/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otune/errors.hpp"
#include "otune/rng.hpp"
#include "otune/sampling.hpp"

namespace otune {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double expected_improvement(double mean, double variance, double y_best) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || !std::isfinite(y_best))
    throw ArgumentError("expected_improvement: non-finite input");
  if (variance < 0.0) throw ArgumentError("expected_improvement: negative variance");
  const double sigma = std::sqrt(variance);
  if (sigma == 0.0) return std::max(y_best - mean, 0.0);
  const double gamma = (y_best - mean) / sigma;
  return std::max(0.0, sigma * (gamma * normal_cdf(gamma) + normal_pdf(gamma)));
}

double feasibility_probability(const Surrogate& model, std::span<const double> point,
                               double threshold) {
  const PredictResult p = model.predict(point);
  const double sigma = std::sqrt(p.variance);
  if (sigma == 0.0) return p.mean <= threshold ? 1.0 : 0.0;
  return normal_cdf((threshold - p.mean) / sigma);
}

double eic(std::span<const double> point, const Surrogate& objective_model,
           const std::vector<ConstraintModel>& constraints, double y_best) {
  const PredictResult p = objective_model.predict(point);
  double value = expected_improvement(p.mean, p.variance, y_best);
  for (const auto& c : constraints) {
    if (value == 0.0) break;
    value *= feasibility_probability(*c.model, point, c.spec.threshold);
  }
  return value;
}

double upper_bound(double mean, double variance, const SafetyConfig& cfg) {
  return mean + cfg.gamma * std::sqrt(std::max(0.0, variance));
}

bool is_safe(std::span<const double> point, const std::vector<ConstraintModel>& constraints,
             const SafetyConfig& cfg) {
  for (const auto& c : constraints) {
    const PredictResult p = c.model->predict(point);
    if (upper_bound(p.mean, p.variance, cfg) > c.spec.threshold) return false;
  }
  return true;
}

namespace {

double total_violation(std::span<const double> point,
                       const std::vector<ConstraintModel>& constraints,
                       const SafetyConfig& cfg) {
  double v = 0.0;
  for (const auto& c : constraints) {
    const PredictResult p = c.model->predict(point);
    v += std::max(0.0, upper_bound(p.mean, p.variance, cfg) - c.spec.threshold);
  }
  return v;
}

struct Candidate {
  Configuration config;
  std::vector<double> point;  // full normalized vector + context
  double eic = 0.0;
  double violation = 0.0;
  bool safe = false;
  std::size_t index = 0;
};

}  // namespace

AcquisitionResult maximize_eic(const Surrogate& objective_model,
                               const std::vector<ConstraintModel>& constraints,
                               const SubSpace& region, const ConfigurationSpace& space,
                               std::span<const double> context, const SafetyConfig& cfg,
                               double y_best, std::uint64_t seed,
                               const AcquisitionOptions& options) {
  if (region.member_names.empty()) throw ArgumentError("maximize_eic: degenerate sub-space");

  const std::size_t n_params = space.dimension();
  const std::vector<ConstraintModel> no_constraints;
  const auto& eic_constraints = options.use_feasibility ? constraints : no_constraints;

  std::vector<std::size_t> member_idx;
  member_idx.reserve(region.member_names.size());
  for (const auto& name : region.member_names) member_idx.push_back(space.index_of(name));

  const std::vector<double> anchor_unit = normalize(region.anchor, space);

  // One normalized vector per candidate: config components then context.
  auto assemble = [&](const Configuration& config) {
    std::vector<double> point = normalize(config, space);
    point.insert(point.end(), context.begin(), context.end());
    return point;
  };

  auto config_from_unit = [&](const std::vector<double>& unit) {
    return denormalize(std::span<const double>(unit.data(), n_params), space);
  };

  auto score = [&](Candidate& cand) {
    cand.eic = eic(cand.point, objective_model, eic_constraints, y_best);
    if (options.safety_enabled) {
      cand.safe = is_safe(cand.point, constraints, cfg);
      cand.violation = cand.safe ? 0.0 : total_violation(cand.point, constraints, cfg);
    } else {
      cand.safe = true;
      cand.violation = 0.0;
    }
  };

  HaltonSampler sampler(region.member_names.size(), mix64(seed, 0x45494331ULL));
  std::vector<Candidate> candidates;
  candidates.reserve(options.candidates);
  for (std::size_t i = 0; i < options.candidates; ++i) {
    const std::vector<double> sub_unit = sampler.next();
    std::vector<double> unit = anchor_unit;
    for (std::size_t j = 0; j < member_idx.size(); ++j) unit[member_idx[j]] = sub_unit[j];
    Candidate cand;
    cand.index = i;
    cand.config = config_from_unit(unit);
    cand.point = assemble(cand.config);
    score(cand);
    candidates.push_back(std::move(cand));
  }

  std::vector<std::size_t> safe_order;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].safe) safe_order.push_back(i);

  if (safe_order.empty()) {
    // Fallback: keep the loop alive with the least-violating candidate.
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
      if (candidates[i].violation < candidates[best].violation) best = i;
    AcquisitionResult out;
    out.config = candidates[best].config;
    out.eic = candidates[best].eic;
    out.fallback = true;
    return out;
  }

  std::stable_sort(safe_order.begin(), safe_order.end(), [&](std::size_t a, std::size_t b) {
    if (candidates[a].eic != candidates[b].eic) return candidates[a].eic > candidates[b].eic;
    return candidates[a].index < candidates[b].index;
  });
  if (safe_order.size() > options.refine_top) safe_order.resize(options.refine_top);

  // Coordinate-wise refinement around the leading safe candidates.
  Candidate best = candidates[safe_order[0]];
  for (std::size_t rank = 0; rank < safe_order.size(); ++rank) {
    Candidate current = candidates[safe_order[rank]];
    std::vector<double> unit = normalize(current.config, space);
    for (std::size_t pass = 0; pass < options.refine_passes; ++pass) {
      bool moved = false;
      for (std::size_t j = 0; j < member_idx.size(); ++j) {
        const std::size_t dim = member_idx[j];
        if (!space.param(dim).is_numeric()) continue;
        for (double direction : {+1.0, -1.0}) {
          std::vector<double> trial_unit = unit;
          trial_unit[dim] = std::clamp(trial_unit[dim] + direction * options.refine_step, 0.0, 1.0);
          Candidate trial;
          trial.index = current.index;
          trial.config = config_from_unit(trial_unit);
          trial.point = assemble(trial.config);
          score(trial);
          if (trial.safe && trial.eic > current.eic) {
            current = trial;
            unit = std::move(trial_unit);
            moved = true;
            break;
          }
        }
      }
      if (!moved) break;
    }
    const bool better = current.eic > best.eic ||
                        (current.eic == best.eic && current.index < best.index);
    if (better) best = current;
  }

  AcquisitionResult out;
  out.config = best.config;
  out.eic = best.eic;
  out.fallback = false;
  return out;
}

}  // namespace otune
