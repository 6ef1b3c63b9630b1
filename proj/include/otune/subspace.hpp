#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otune/space.hpp"

namespace otune {

/// Variance-fraction importance of single parameters and parameter pairs.
struct ImportanceReport {
  std::vector<std::pair<std::string, double>> single_scores;  // space order
  std::map<std::pair<std::string, std::string>, double> pairwise_scores;
  std::size_t sample_count = 0;
  bool low_confidence = false;  // prior ranking substituted for data
  std::vector<std::string> prior_ranking;

  /// Parameter names sorted by descending score; ties broken by the prior
  /// expert ranking, then by name.
  std::vector<std::string> ranking() const;
  double score_of(const std::string& name) const;
};

/// Evolution state of the sub-space size K.
struct SubSpaceState {
  int k = 10;
  int success_count = 0;
  int failure_count = 0;
  int k_min = 4;
  int k_max = 0;
  int k_init = 10;
  int tau_success = 3;
  int tau_fail = 5;
  std::vector<std::string> ranking;

  static SubSpaceState initial(std::size_t space_dimension);
};

/// fANOVA over a seeded random forest (16 trees, depth <= 8) fitted on
/// normalized configurations. With fewer than 10 observations the prior
/// ranking is returned with low_confidence set.
ImportanceReport importance_scores(std::span<const Configuration> configs,
                                   std::span<const double> objectives,
                                   const ConfigurationSpace& space, std::uint64_t seed);

/// Averages single and pairwise scores over per-task reports.
ImportanceReport average_reports(std::span<const ImportanceReport> reports);

/// Top-K parameters by importance, anchored for the rest.
SubSpace build_subspace(const ImportanceReport& report, std::size_t k, Configuration anchor);

/// Success/failure counter update; grows or shrinks K by 2 at the
/// thresholds and zeroes both counters on any change of direction.
SubSpaceState update_size(const SubSpaceState& state, bool improved);

}  // namespace otune
