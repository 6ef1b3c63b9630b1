#pragma once

#include <memory>
#include <string>
#include <vector>

#include "otune/space.hpp"

namespace otune::testing {

inline ParameterDef real_param(const std::string& name, double low, double high,
                               double default_value, bool log_scale = false) {
  ParameterDef def;
  def.name = name;
  def.kind = ParamKind::Real;
  def.low = low;
  def.high = high;
  def.log_scale = log_scale;
  def.default_value = default_value;
  return def;
}

inline ParameterDef int_param(const std::string& name, double low, double high,
                              double default_value, bool log_scale = false) {
  ParameterDef def = real_param(name, low, high, default_value, log_scale);
  def.kind = ParamKind::Integer;
  return def;
}

inline ParameterDef cat_param(const std::string& name, std::vector<std::string> choices,
                              const std::string& default_value) {
  ParameterDef def;
  def.name = name;
  def.kind = ParamKind::Categorical;
  def.choices = std::move(choices);
  def.default_value = default_value;
  return def;
}

inline Configuration make_config(std::vector<std::pair<std::string, ParamValue>> values) {
  Configuration c;
  for (auto& [name, value] : values) c.values.emplace(std::move(name), std::move(value));
  return c;
}

}  // namespace otune::testing
