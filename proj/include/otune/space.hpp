#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace otune {

enum class ParamKind { Integer, Real, Categorical };

/// Native parameter value: a number for integer/real kinds, a choice for categorical.
using ParamValue = std::variant<double, std::string>;

bool value_equal(const ParamValue& a, const ParamValue& b);

/// One tunable parameter: typed domain plus a default.
struct ParameterDef {
  std::string name;
  ParamKind kind = ParamKind::Real;
  double low = 0.0;
  double high = 0.0;                  // numeric kinds only, native units
  std::vector<std::string> choices;   // categorical only
  bool log_scale = false;             // numeric kinds only; requires low > 0
  ParamValue default_value;

  bool is_numeric() const { return kind != ParamKind::Categorical; }
};

/// A complete assignment of native values, keyed by parameter name.
struct Configuration {
  std::map<std::string, ParamValue> values;

  friend bool operator==(const Configuration& a, const Configuration& b);
  double numeric(const std::string& name) const;  // throws DomainError on categorical
};

/// Ordered, immutable set of parameter definitions.
class ConfigurationSpace {
 public:
  ConfigurationSpace() = default;
  explicit ConfigurationSpace(std::vector<ParameterDef> params,
                              std::vector<std::string> expert_ranking = {});

  std::size_t dimension() const { return params_.size(); }
  const std::vector<ParameterDef>& params() const { return params_; }
  const ParameterDef& param(std::size_t i) const { return params_.at(i); }
  const ParameterDef& param(const std::string& name) const;
  const ParameterDef* find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  /// Expert prior ordering used before importance data exists; defaults to
  /// declaration order.
  const std::vector<std::string>& expert_ranking() const { return expert_ranking_; }

  Configuration default_configuration() const;
  /// Throws DomainError/ShapeError when the configuration is not valid here.
  void validate(const Configuration& config) const;

 private:
  std::vector<ParameterDef> params_;
  std::vector<std::string> expert_ranking_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Restriction of a space to its K most important parameters; the anchor
/// supplies values for everything else.
struct SubSpace {
  std::vector<std::string> member_names;
  Configuration anchor;

  std::size_t size() const { return member_names.size(); }
};

/// Maps a configuration onto [0,1]^N. Numeric kinds map affinely
/// (log-affinely when log_scale), categorical kinds map to
/// choice_index / (num_choices - 1), or 0 for a single choice.
std::vector<double> normalize(const Configuration& config, const ConfigurationSpace& space);

/// Single-component transforms used by samplers and gradient code.
double normalize_component(const ParameterDef& def, const ParamValue& value);
ParamValue denormalize_component(const ParameterDef& def, double component);

/// Inverse of normalize up to integer/categorical rounding
/// (round-half-away-from-zero).
Configuration denormalize(std::span<const double> unit, const ConfigurationSpace& space);

/// Completes a sub-space assignment with the anchor's values.
Configuration lift(const Configuration& sub_config, const SubSpace& sub,
                   const ConfigurationSpace& space);

/// Deterministic scrambled low-discrepancy sample of n configurations.
std::vector<Configuration> sample_low_discrepancy(const ConfigurationSpace& space, std::size_t n,
                                                  std::uint64_t seed);

/// Derivative of the native value with respect to the normalized component,
/// evaluated at normalized position u. Zero for categorical kinds.
double native_slope(const ParameterDef& def, double u);

std::string to_display_string(const ParamValue& v);

}  // namespace otune
