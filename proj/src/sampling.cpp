#include "otune/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "otune/errors.hpp"
#include "otune/rng.hpp"

namespace otune {

namespace {

std::vector<std::uint32_t> first_primes(std::size_t count) {
  std::vector<std::uint32_t> primes;
  std::uint32_t candidate = 2;
  while (primes.size() < count) {
    bool is_prime = true;
    for (std::uint32_t p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

}  // namespace

HaltonSampler::HaltonSampler(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ArgumentError("HaltonSampler: dimension must be >= 1");
  bases_ = first_primes(dim);
  perms_.reserve(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<std::uint32_t> perm(bases_[d]);
    std::iota(perm.begin(), perm.end(), 0u);
    auto rng = make_rng(mix64(seed, 0x48414c54ULL, d));
    std::shuffle(perm.begin(), perm.end(), rng);
    perms_.push_back(std::move(perm));
  }
}

std::vector<double> HaltonSampler::next() {
  ++index_;  // start at 1 so the all-zeros point never appears
  std::vector<double> point(bases_.size());
  for (std::size_t d = 0; d < bases_.size(); ++d) {
    const double base = static_cast<double>(bases_[d]);
    const double inv_base = 1.0 / base;
    const auto& perm = perms_[d];
    std::uint64_t a = index_;
    double inv_base_n = 1.0;
    std::uint64_t reversed = 0;
    while (a != 0) {
      const std::uint64_t next_a = a / bases_[d];
      const std::uint64_t digit = a - next_a * bases_[d];
      reversed = reversed * bases_[d] + perm[digit];
      inv_base_n *= inv_base;
      a = next_a;
    }
    // The tail accounts for the scrambled infinite run of zero digits.
    const double tail = inv_base * perm[0] / (1.0 - inv_base);
    double v = inv_base_n * (static_cast<double>(reversed) + tail);
    point[d] = std::min(v, 1.0 - 1e-12);
  }
  return point;
}

std::vector<std::vector<double>> low_discrepancy_points(std::size_t dim, std::size_t n,
                                                        std::uint64_t seed) {
  HaltonSampler sampler(dim, seed);
  std::vector<std::vector<double>> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) points.push_back(sampler.next());
  return points;
}

}  // namespace otune
