#include "otune/agd.hpp"

#include <algorithm>
#include <cmath>

#include "otune/errors.hpp"

namespace otune {

std::vector<double> approx_runtime_gradient(const Surrogate& runtime_model,
                                            std::span<const double> point,
                                            const ConfigurationSpace& space,
                                            const AGDConfig& cfg) {
  const std::size_t n = space.dimension();
  std::vector<double> grad(n, 0.0);
  std::vector<double> plus(point.begin(), point.end());
  std::vector<double> minus(point.begin(), point.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (!space.param(i).is_numeric()) continue;
    const double hi = std::min(1.0, point[i] + cfg.eps);
    const double lo = std::max(0.0, point[i] - cfg.eps);
    const double displacement = hi - lo;
    if (displacement <= 0.0) continue;
    plus[i] = hi;
    minus[i] = lo;
    const double t_plus = runtime_model.predict(plus).mean;
    const double t_minus = runtime_model.predict(minus).mean;
    grad[i] = (t_plus - t_minus) / displacement;
    plus[i] = point[i];
    minus[i] = point[i];
  }
  return grad;
}

std::vector<double> objective_gradient(double t, double r, std::span<const double> grad_t,
                                       std::span<const double> grad_r, double beta) {
  if (!(t > 0.0) || !(r > 0.0))
    throw DomainError("objective_gradient requires positive runtime and resource");
  if (grad_t.size() != grad_r.size()) throw ShapeError("objective_gradient: gradient size mismatch");
  if (beta == 1.0) return {grad_t.begin(), grad_t.end()};
  if (beta == 0.0) return {grad_r.begin(), grad_r.end()};
  const double ratio = t / r;
  const double ct = beta * std::pow(ratio, beta - 1.0);
  const double cr = (1.0 - beta) * std::pow(ratio, beta);
  std::vector<double> grad(grad_t.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = ct * grad_t[i] + cr * grad_r[i];
  return grad;
}

Configuration agd_step(const Configuration& x_best, const Surrogate& runtime_model,
                       const ResourceFunction& resource_fn, double beta, const AGDConfig& cfg,
                       const ConfigurationSpace& space, std::span<const double> context) {
  const std::size_t n = space.dimension();
  std::vector<double> unit = normalize(x_best, space);
  std::vector<double> point = unit;
  point.insert(point.end(), context.begin(), context.end());

  const std::vector<double> grad_t = approx_runtime_gradient(runtime_model, point, space, cfg);

  // Surrogate means can dip non-positive; the objective power law only
  // needs the local ratio, so floor T at a tiny positive value.
  const double t_pred = std::max(runtime_model.predict(point).mean, 1e-12);
  const double r_value = resource_fn.value(x_best);

  std::vector<double> grad_r(n, 0.0);
  if (beta < 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& def = space.param(i);
      if (!def.is_numeric()) continue;
      grad_r[i] = resource_fn.partial(x_best, def.name) * native_slope(def, unit[i]);
    }
  }

  const std::vector<double> grad = objective_gradient(t_pred, r_value, grad_t, grad_r, beta);

  for (double factor = 1.0; factor <= cfg.max_eta_factor; factor *= 2.0) {
    std::vector<double> moved = unit;
    for (std::size_t i = 0; i < n; ++i) {
      if (!space.param(i).is_numeric()) continue;
      moved[i] = std::clamp(unit[i] - cfg.eta * factor * grad[i], 0.0, 1.0);
    }
    Configuration candidate = denormalize(moved, space);
    if (!(candidate == x_best)) return candidate;
  }

  // Escape: one grid step along the steepest numeric dimension.
  std::size_t steepest = n;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!space.param(i).is_numeric()) continue;
    if (steepest == n) steepest = i;  // zero gradient falls back to the first numeric dim
    if (std::abs(grad[i]) > best_mag) {
      best_mag = std::abs(grad[i]);
      steepest = i;
    }
  }
  if (steepest == n) return x_best;  // no numeric dimension to perturb

  const auto& def = space.param(steepest);
  double direction = grad[steepest] > 0.0 ? -1.0 : 1.0;
  Configuration out = x_best;
  if (def.kind == ParamKind::Integer) {
    double v = std::get<double>(out.values.at(def.name));
    if (v + direction > def.high || v + direction < def.low) direction = -direction;
    v = std::clamp(v + direction, std::ceil(def.low), std::floor(def.high));
    out.values[def.name] = v;
  } else {
    double u = unit[steepest];
    if (u + direction / 64.0 > 1.0 || u + direction / 64.0 < 0.0) direction = -direction;
    u = std::clamp(u + direction / 64.0, 0.0, 1.0);
    out.values[def.name] = denormalize_component(def, u);
  }
  return out;
}

}  // namespace otune
