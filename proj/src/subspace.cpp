#include "otune/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "otune/errors.hpp"
#include "otune/rng.hpp"
#include "otune/tree.hpp"

namespace otune {

namespace {

std::map<std::string, std::size_t> prior_positions(const std::vector<std::string>& prior) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < prior.size(); ++i) pos.emplace(prior[i], i);
  return pos;
}

// Piecewise-constant marginal variance of one tree along a single dimension.
double single_marginal_variance(const std::vector<RegressionTree::Leaf>& leaves, std::size_t d,
                                double grand_mean) {
  std::vector<double> breaks{0.0, 1.0};
  for (const auto& leaf : leaves) {
    breaks.push_back(leaf.lo[d]);
    breaks.push_back(leaf.hi[d]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const std::size_t n_seg = breaks.size() - 1;
  std::vector<double> marginal(n_seg, 0.0);
  for (const auto& leaf : leaves) {
    double partial = leaf.value;
    for (std::size_t i = 0; i < leaf.lo.size(); ++i) {
      if (i == d) continue;
      partial *= leaf.hi[i] - leaf.lo[i];
    }
    const auto first = static_cast<std::size_t>(
        std::lower_bound(breaks.begin(), breaks.end(), leaf.lo[d]) - breaks.begin());
    const auto last = static_cast<std::size_t>(
        std::lower_bound(breaks.begin(), breaks.end(), leaf.hi[d]) - breaks.begin());
    for (std::size_t s = first; s < last; ++s) marginal[s] += partial;
  }

  double second_moment = 0.0;
  for (std::size_t s = 0; s < n_seg; ++s) {
    const double len = breaks[s + 1] - breaks[s];
    second_moment += len * marginal[s] * marginal[s];
  }
  return std::max(0.0, second_moment - grand_mean * grand_mean);
}

double pair_marginal_variance(const std::vector<RegressionTree::Leaf>& leaves, std::size_t a,
                              std::size_t b, double grand_mean) {
  std::vector<double> breaks_a{0.0, 1.0}, breaks_b{0.0, 1.0};
  for (const auto& leaf : leaves) {
    breaks_a.push_back(leaf.lo[a]);
    breaks_a.push_back(leaf.hi[a]);
    breaks_b.push_back(leaf.lo[b]);
    breaks_b.push_back(leaf.hi[b]);
  }
  std::sort(breaks_a.begin(), breaks_a.end());
  breaks_a.erase(std::unique(breaks_a.begin(), breaks_a.end()), breaks_a.end());
  std::sort(breaks_b.begin(), breaks_b.end());
  breaks_b.erase(std::unique(breaks_b.begin(), breaks_b.end()), breaks_b.end());

  const std::size_t na = breaks_a.size() - 1;
  const std::size_t nb = breaks_b.size() - 1;
  // Difference array so each leaf touches O(1) cells before integration.
  std::vector<double> diff((na + 1) * (nb + 1), 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return diff[i * (nb + 1) + j]; };

  for (const auto& leaf : leaves) {
    double partial = leaf.value;
    for (std::size_t i = 0; i < leaf.lo.size(); ++i) {
      if (i == a || i == b) continue;
      partial *= leaf.hi[i] - leaf.lo[i];
    }
    const auto ra0 = static_cast<std::size_t>(
        std::lower_bound(breaks_a.begin(), breaks_a.end(), leaf.lo[a]) - breaks_a.begin());
    const auto ra1 = static_cast<std::size_t>(
        std::lower_bound(breaks_a.begin(), breaks_a.end(), leaf.hi[a]) - breaks_a.begin());
    const auto rb0 = static_cast<std::size_t>(
        std::lower_bound(breaks_b.begin(), breaks_b.end(), leaf.lo[b]) - breaks_b.begin());
    const auto rb1 = static_cast<std::size_t>(
        std::lower_bound(breaks_b.begin(), breaks_b.end(), leaf.hi[b]) - breaks_b.begin());
    at(ra0, rb0) += partial;
    at(ra1, rb0) -= partial;
    at(ra0, rb1) -= partial;
    at(ra1, rb1) += partial;
  }

  double second_moment = 0.0;
  std::vector<double> row_acc(nb + 1, 0.0);
  for (std::size_t i = 0; i < na; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      row_acc[j] += diff[i * (nb + 1) + j];
      acc += row_acc[j];
      const double area = (breaks_a[i + 1] - breaks_a[i]) * (breaks_b[j + 1] - breaks_b[j]);
      second_moment += area * acc * acc;
    }
  }
  return std::max(0.0, second_moment - grand_mean * grand_mean);
}

}  // namespace

std::vector<std::string> ImportanceReport::ranking() const {
  const auto pos = prior_positions(prior_ranking);
  std::vector<std::pair<std::string, double>> entries = single_scores;
  std::stable_sort(entries.begin(), entries.end(), [&](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    const auto px = pos.find(x.first), py = pos.find(y.first);
    const std::size_t ix = px == pos.end() ? pos.size() : px->second;
    const std::size_t iy = py == pos.end() ? pos.size() : py->second;
    if (ix != iy) return ix < iy;
    return x.first < y.first;
  });
  std::vector<std::string> names;
  names.reserve(entries.size());
  for (const auto& [name, _] : entries) names.push_back(name);
  return names;
}

double ImportanceReport::score_of(const std::string& name) const {
  for (const auto& [n, s] : single_scores)
    if (n == name) return s;
  throw NotFoundError("no importance score for parameter '" + name + "'");
}

SubSpaceState SubSpaceState::initial(std::size_t space_dimension) {
  SubSpaceState s;
  s.k_max = static_cast<int>(space_dimension);
  s.k_min = std::min(4, s.k_max);
  s.k_init = std::min(10, s.k_max);
  s.k = s.k_init;
  return s;
}

ImportanceReport importance_scores(std::span<const Configuration> configs,
                                   std::span<const double> objectives,
                                   const ConfigurationSpace& space, std::uint64_t seed) {
  if (configs.size() != objectives.size())
    throw ShapeError("importance_scores: configs/objectives length mismatch");

  ImportanceReport report;
  report.prior_ranking = space.expert_ranking();
  report.sample_count = configs.size();

  const std::size_t d = space.dimension();
  if (configs.size() < 10) {
    // Not enough data: fall back to the expert prior, flagged.
    report.low_confidence = true;
    std::map<std::string, std::size_t> pos = prior_positions(report.prior_ranking);
    const double denom = static_cast<double>(d) * static_cast<double>(d + 1) / 2.0;
    for (const auto& p : space.params()) {
      const double score = static_cast<double>(d - pos.at(p.name)) / denom;
      report.single_scores.emplace_back(p.name, score);
    }
    return report;
  }

  RowMatrix X(static_cast<Eigen::Index>(configs.size()), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(configs.size()));
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto unit = normalize(configs[i], space);
    for (std::size_t j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = unit[j];
    y(static_cast<Eigen::Index>(i)) = objectives[i];
  }
  // Standardized targets keep split decisions (and therefore the variance
  // ratios) invariant under affine rescaling of the objective.
  const double y_mean = y.mean();
  const double y_sd = y.size() > 1 ? std::sqrt((y.array() - y_mean).square().sum() /
                                               static_cast<double>(y.size() - 1))
                                   : 0.0;
  if (y_sd > 0.0) y = (y.array() - y_mean) / y_sd;

  RegressionTree::FitConfig cfg;
  cfg.max_depth = 8;
  cfg.min_samples_split = 4;
  const RandomForest forest = RandomForest::fit(X, y, 16, cfg, mix64(seed, 0x46414e4fULL));

  std::vector<double> singles(d, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, double> pairs;
  const std::size_t n_trees = forest.trees().size();

  for (const auto& tree : forest.trees()) {
    const auto leaves = tree.leaves(d);
    double mean = 0.0, second = 0.0;
    for (const auto& leaf : leaves) {
      double vol = 1.0;
      for (std::size_t i = 0; i < d; ++i) vol *= leaf.hi[i] - leaf.lo[i];
      mean += leaf.value * vol;
      second += leaf.value * leaf.value * vol;
    }
    const double var_total = second - mean * mean;
    if (var_total <= 1e-15) continue;  // constant tree contributes nothing

    std::vector<double> tree_singles(d);
    for (std::size_t dim = 0; dim < d; ++dim) {
      tree_singles[dim] = single_marginal_variance(leaves, dim, mean);
      singles[dim] += tree_singles[dim] / var_total;
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        const double pair_var = pair_marginal_variance(leaves, a, b, mean);
        const double interaction = std::max(0.0, pair_var - tree_singles[a] - tree_singles[b]);
        pairs[{a, b}] += interaction / var_total;
      }
    }
  }

  for (std::size_t dim = 0; dim < d; ++dim)
    report.single_scores.emplace_back(space.param(dim).name, singles[dim] / static_cast<double>(n_trees));
  for (const auto& [key, v] : pairs) {
    const double averaged = v / static_cast<double>(n_trees);
    if (averaged > 0.0)
      report.pairwise_scores[{space.param(key.first).name, space.param(key.second).name}] = averaged;
  }
  return report;
}

ImportanceReport average_reports(std::span<const ImportanceReport> reports) {
  if (reports.empty()) throw ArgumentError("average_reports: empty input");
  ImportanceReport out;
  out.prior_ranking = reports.front().prior_ranking;
  std::map<std::string, double> singles;
  std::map<std::pair<std::string, std::string>, double> pairs;
  for (const auto& r : reports) {
    out.sample_count += r.sample_count;
    out.low_confidence = out.low_confidence || r.low_confidence;
    for (const auto& [name, s] : r.single_scores) singles[name] += s;
    for (const auto& [key, s] : r.pairwise_scores) pairs[key] += s;
  }
  const double n = static_cast<double>(reports.size());
  for (const auto& [name, _] : reports.front().single_scores)
    out.single_scores.emplace_back(name, singles.at(name) / n);
  for (const auto& [key, s] : pairs) out.pairwise_scores[key] = s / n;
  return out;
}

SubSpace build_subspace(const ImportanceReport& report, std::size_t k, Configuration anchor) {
  if (k < 1) throw ArgumentError("sub-space size must be >= 1");
  if (k > report.single_scores.size())
    throw ArgumentError("sub-space size exceeds parameter count");
  auto ranked = report.ranking();
  SubSpace sub;
  sub.member_names.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
  sub.anchor = std::move(anchor);
  return sub;
}

SubSpaceState update_size(const SubSpaceState& state, bool improved) {
  SubSpaceState next = state;
  if (improved) {
    next.success_count += 1;
    next.failure_count = 0;
    if (next.success_count >= next.tau_success) {
      next.k = std::min(next.k_max, next.k + 2);
      next.success_count = 0;
      next.failure_count = 0;
    }
  } else {
    next.failure_count += 1;
    next.success_count = 0;
    if (next.failure_count >= next.tau_fail) {
      next.k = std::max(next.k_min, next.k - 2);
      next.success_count = 0;
      next.failure_count = 0;
    }
  }
  return next;
}

}  // namespace otune
