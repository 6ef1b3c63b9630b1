#pragma once

#include <cstdint>
#include <vector>

namespace otune {

/// Scrambled Halton sequence over [0,1]^dim. Digit permutations are drawn
/// once per dimension from the seed, so the sequence is deterministic and
/// two samplers with the same (dim, seed) emit identical streams.
class HaltonSampler {
 public:
  HaltonSampler(std::size_t dim, std::uint64_t seed);

  std::vector<double> next();
  std::size_t dimension() const { return bases_.size(); }

 private:
  std::vector<std::uint32_t> bases_;
  std::vector<std::vector<std::uint32_t>> perms_;  // one digit permutation per dimension
  std::uint64_t index_ = 0;
};

/// Convenience: the first n points of a scrambled Halton sequence.
std::vector<std::vector<double>> low_discrepancy_points(std::size_t dim, std::size_t n,
                                                        std::uint64_t seed);

}  // namespace otune
