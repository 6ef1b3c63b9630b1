#include "otune/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "otune/errors.hpp"
#include "otune/sampling.hpp"

namespace otune {

bool value_equal(const ParamValue& a, const ParamValue& b) { return a == b; }

bool operator==(const Configuration& a, const Configuration& b) { return a.values == b.values; }

double Configuration::numeric(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw SchemaError("configuration missing parameter '" + name + "'", name);
  if (!std::holds_alternative<double>(it->second))
    throw DomainError("parameter '" + name + "' is not numeric");
  return std::get<double>(it->second);
}

namespace {

void validate_def(const ParameterDef& def) {
  if (def.name.empty()) throw ArgumentError("parameter name must be non-empty");
  if (def.kind == ParamKind::Categorical) {
    if (def.choices.empty())
      throw ArgumentError("categorical parameter '" + def.name + "' needs at least one choice");
    std::set<std::string> uniq(def.choices.begin(), def.choices.end());
    if (uniq.size() != def.choices.size())
      throw ArgumentError("categorical parameter '" + def.name + "' has duplicate choices");
    if (!std::holds_alternative<std::string>(def.default_value) ||
        std::find(def.choices.begin(), def.choices.end(),
                  std::get<std::string>(def.default_value)) == def.choices.end())
      throw DomainError("default of '" + def.name + "' is not one of its choices");
  } else {
    if (!(def.low < def.high))
      throw ArgumentError("parameter '" + def.name + "' requires low < high");
    if (def.log_scale && !(def.low > 0.0))
      throw ArgumentError("log-scale parameter '" + def.name + "' requires low > 0");
    if (!std::holds_alternative<double>(def.default_value))
      throw DomainError("default of '" + def.name + "' must be numeric");
    const double d = std::get<double>(def.default_value);
    if (!(d >= def.low && d <= def.high))
      throw DomainError("default of '" + def.name + "' lies outside its range");
    if (def.kind == ParamKind::Integer && d != std::floor(d))
      throw DomainError("integer parameter '" + def.name + "' has non-integral default");
  }
}

void validate_value(const ParameterDef& def, const ParamValue& value) {
  if (def.kind == ParamKind::Categorical) {
    if (!std::holds_alternative<std::string>(value))
      throw DomainError("parameter '" + def.name + "' expects a categorical choice");
    const auto& s = std::get<std::string>(value);
    if (std::find(def.choices.begin(), def.choices.end(), s) == def.choices.end())
      throw DomainError("value '" + s + "' is not a choice of parameter '" + def.name + "'");
    return;
  }
  if (!std::holds_alternative<double>(value))
    throw DomainError("parameter '" + def.name + "' expects a numeric value");
  const double v = std::get<double>(value);
  if (!std::isfinite(v) || v < def.low || v > def.high)
    throw DomainError("value of parameter '" + def.name + "' lies outside its range");
  if (def.kind == ParamKind::Integer && v != std::floor(v))
    throw DomainError("integer parameter '" + def.name + "' holds a non-integral value");
}

std::size_t choice_index(const ParameterDef& def, const std::string& s) {
  auto it = std::find(def.choices.begin(), def.choices.end(), s);
  if (it == def.choices.end())
    throw DomainError("value '" + s + "' is not a choice of parameter '" + def.name + "'");
  return static_cast<std::size_t>(it - def.choices.begin());
}

}  // namespace

ConfigurationSpace::ConfigurationSpace(std::vector<ParameterDef> params,
                                       std::vector<std::string> expert_ranking)
    : params_(std::move(params)), expert_ranking_(std::move(expert_ranking)) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    validate_def(params_[i]);
    if (!index_.emplace(params_[i].name, i).second)
      throw ArgumentError("duplicate parameter name '" + params_[i].name + "'");
  }
  if (expert_ranking_.empty()) {
    for (const auto& p : params_) expert_ranking_.push_back(p.name);
  } else {
    if (expert_ranking_.size() != params_.size())
      throw ArgumentError("expert ranking must list every parameter exactly once");
    for (const auto& name : expert_ranking_)
      if (!index_.count(name))
        throw ArgumentError("expert ranking names unknown parameter '" + name + "'");
    std::set<std::string> uniq(expert_ranking_.begin(), expert_ranking_.end());
    if (uniq.size() != expert_ranking_.size())
      throw ArgumentError("expert ranking repeats a parameter");
  }
}

const ParameterDef& ConfigurationSpace::param(const std::string& name) const {
  return params_[index_of(name)];
}

const ParameterDef* ConfigurationSpace::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ConfigurationSpace::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw NotFoundError("unknown parameter '" + name + "'");
  return it->second;
}

Configuration ConfigurationSpace::default_configuration() const {
  Configuration c;
  for (const auto& p : params_) c.values.emplace(p.name, p.default_value);
  return c;
}

void ConfigurationSpace::validate(const Configuration& config) const {
  if (config.values.size() != params_.size())
    throw ShapeError("configuration assigns " + std::to_string(config.values.size()) +
                     " parameters, space has " + std::to_string(params_.size()));
  for (const auto& p : params_) {
    auto it = config.values.find(p.name);
    if (it == config.values.end())
      throw ShapeError("configuration missing parameter '" + p.name + "'");
    validate_value(p, it->second);
  }
}

double normalize_component(const ParameterDef& def, const ParamValue& value) {
  validate_value(def, value);
  if (def.kind == ParamKind::Categorical) {
    if (def.choices.size() == 1) return 0.0;
    const auto idx = choice_index(def, std::get<std::string>(value));
    return static_cast<double>(idx) / static_cast<double>(def.choices.size() - 1);
  }
  const double v = std::get<double>(value);
  if (def.log_scale) return (std::log(v) - std::log(def.low)) / (std::log(def.high) - std::log(def.low));
  return (v - def.low) / (def.high - def.low);
}

ParamValue denormalize_component(const ParameterDef& def, double component) {
  if (!(component >= 0.0 && component <= 1.0))
    throw DomainError("normalized component of '" + def.name + "' lies outside [0,1]");
  if (def.kind == ParamKind::Categorical) {
    if (def.choices.size() == 1) return def.choices[0];
    const double raw = component * static_cast<double>(def.choices.size() - 1);
    auto idx = static_cast<std::size_t>(std::round(raw));
    idx = std::min(idx, def.choices.size() - 1);
    return def.choices[idx];
  }
  double v;
  if (def.log_scale) {
    v = std::exp(std::log(def.low) + component * (std::log(def.high) - std::log(def.low)));
  } else {
    v = def.low + component * (def.high - def.low);
  }
  v = std::clamp(v, def.low, def.high);
  if (def.kind == ParamKind::Integer) {
    v = std::round(v);  // std::round is half-away-from-zero
    v = std::clamp(v, std::ceil(def.low), std::floor(def.high));
  }
  return v;
}

std::vector<double> normalize(const Configuration& config, const ConfigurationSpace& space) {
  if (config.values.size() != space.dimension())
    throw ShapeError("configuration/space dimension mismatch");
  std::vector<double> unit(space.dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& def = space.param(i);
    auto it = config.values.find(def.name);
    if (it == config.values.end())
      throw ShapeError("configuration missing parameter '" + def.name + "'");
    unit[i] = normalize_component(def, it->second);
  }
  return unit;
}

Configuration denormalize(std::span<const double> unit, const ConfigurationSpace& space) {
  if (unit.size() != space.dimension()) throw ShapeError("vector/space dimension mismatch");
  Configuration c;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& def = space.param(i);
    c.values.emplace(def.name, denormalize_component(def, unit[i]));
  }
  return c;
}

Configuration lift(const Configuration& sub_config, const SubSpace& sub,
                   const ConfigurationSpace& space) {
  if (sub_config.values.size() != sub.member_names.size())
    throw ShapeError("sub-configuration assigns " + std::to_string(sub_config.values.size()) +
                     " parameters, sub-space has " + std::to_string(sub.member_names.size()));
  for (const auto& name : sub.member_names)
    if (!sub_config.values.count(name))
      throw ShapeError("sub-configuration missing member '" + name + "'");
  Configuration out = sub.anchor;
  for (const auto& name : sub.member_names) out.values[name] = sub_config.values.at(name);
  space.validate(out);
  return out;
}

std::vector<Configuration> sample_low_discrepancy(const ConfigurationSpace& space, std::size_t n,
                                                  std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sample count must be >= 1");
  HaltonSampler sampler(space.dimension(), seed);
  std::vector<Configuration> out;
  std::set<std::vector<double>> seen;
  out.reserve(n);
  while (out.size() < n) {
    auto point = sampler.next();
    if (!seen.insert(point).second) continue;  // keep pre-rounding points pairwise distinct
    out.push_back(denormalize(point, space));
  }
  return out;
}

double native_slope(const ParameterDef& def, double u) {
  if (def.kind == ParamKind::Categorical) return 0.0;
  if (def.log_scale) {
    const double span = std::log(def.high) - std::log(def.low);
    return std::exp(std::log(def.low) + u * span) * span;
  }
  return def.high - def.low;
}

std::string to_display_string(const ParamValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v));
  return buf;
}

}  // namespace otune
