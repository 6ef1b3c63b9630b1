#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "otune/acquisition.hpp"
#include "otune/errors.hpp"

using namespace otune;
using namespace otune::testing;

namespace {

// Constant-prediction surrogate for closed-form checks.
class FixedSurrogate : public Surrogate {
 public:
  FixedSurrogate(double mean, double variance) : mean_(mean), variance_(variance) {}
  PredictResult predict(std::span<const double>) const override { return {mean_, variance_}; }

 private:
  double mean_, variance_;
};

// Mean varies linearly along one input dimension.
class LinearSurrogate : public Surrogate {
 public:
  LinearSurrogate(std::size_t dim, double slope, double offset, double variance)
      : dim_(dim), slope_(slope), offset_(offset), variance_(variance) {}
  PredictResult predict(std::span<const double> x) const override {
    return {offset_ + slope_ * x[dim_], variance_};
  }

 private:
  std::size_t dim_;
  double slope_, offset_, variance_;
};

double monte_carlo_ei(double mean, double sigma, double y_best, std::size_t draws,
                      std::uint64_t seed, double* standard_error) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mean, sigma);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double imp = std::max(y_best - normal(rng), 0.0);
    sum += imp;
    sum_sq += imp * imp;
  }
  const double n = static_cast<double>(draws);
  const double estimate = sum / n;
  if (standard_error) {
    const double var = std::max(0.0, sum_sq / n - estimate * estimate);
    *standard_error = std::sqrt(var / n);
  }
  return estimate;
}

}  // namespace

TEST_CASE("expected improvement closed-form values") {
  CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
  // mu = y_best, sigma = 1 -> phi(0)
  CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-6));
  CHECK(expected_improvement(-3.0, 0.0, 0.0) == doctest::Approx(3.0));
  CHECK(expected_improvement(5.0, 0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(expected_improvement(std::nan(""), 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS(expected_improvement(0.0, -1.0, 0.0), ArgumentError);
}

TEST_CASE("closed-form EI matches Monte Carlo within three standard errors") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double mean = -2.0 + 4.0 * unit(rng);
    const double sigma = 0.1 + 2.0 * unit(rng);
    const double y_best = -2.0 + 4.0 * unit(rng);
    double se = 0.0;
    const double mc = monte_carlo_ei(mean, sigma, y_best, 200000, 1000 + trial, &se);
    const double closed = expected_improvement(mean, sigma * sigma, y_best);
    CHECK(std::abs(closed - mc) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("feasibility probability from the posterior") {
  const FixedSurrogate at_threshold(10.0, 4.0);
  CHECK(feasibility_probability(at_threshold, std::vector<double>{0.0}, 10.0) ==
        doctest::Approx(0.5));

  const FixedSurrogate far_below(0.0, 1.0);
  CHECK(feasibility_probability(far_below, std::vector<double>{0.0}, 10.0) ==
        doctest::Approx(1.0).epsilon(1e-6));

  // mu = threshold + sigma -> Phi(-1)
  const FixedSurrogate one_sigma_above(11.0, 1.0);
  CHECK(feasibility_probability(one_sigma_above, std::vector<double>{0.0}, 10.0) ==
        doctest::Approx(0.1586552539).epsilon(1e-6));

  const FixedSurrogate deterministic(5.0, 0.0);
  CHECK(feasibility_probability(deterministic, std::vector<double>{0.0}, 10.0) == 1.0);
  CHECK(feasibility_probability(deterministic, std::vector<double>{0.0}, 4.0) == 0.0);
}

TEST_CASE("eic multiplies EI by the feasibility probabilities") {
  const FixedSurrogate objective(0.0, 1.0);
  const std::vector<double> x{0.0};
  const double ei = expected_improvement(0.0, 1.0, 0.0);

  const FixedSurrogate certain(0.0, 0.0);
  ConstraintSpec spec;
  spec.metric = "runtime";
  spec.threshold = 1.0;
  CHECK(eic(x, objective, {{&certain, spec}}, 0.0) == doctest::Approx(ei));

  const FixedSurrogate violated(2.0, 0.0);
  CHECK(eic(x, objective, {{&violated, spec}}, 0.0) == 0.0);

  // Two half-probable constraints quarter the EI.
  const FixedSurrogate half(1.0, 1e-30);
  ConstraintSpec at;
  at.metric = "m";
  at.threshold = 1.0;
  const FixedSurrogate half2(1.0, 1e-30);
  const double quartered = eic(x, objective, {{&half, at}, {&half2, at}}, 0.0);
  CHECK(quartered == doctest::Approx(0.25 * ei).epsilon(1e-6));

  CHECK(eic(x, objective, {}, 0.0) == ei);  // empty constraints reduce to EI
}

TEST_CASE("eic is bounded by EI pointwise") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const FixedSurrogate objective(unit(rng) * 4 - 2, 0.1 + unit(rng));
    const FixedSurrogate constraint(unit(rng) * 4 - 2, 0.1 + unit(rng));
    ConstraintSpec spec;
    spec.metric = "m";
    spec.threshold = unit(rng) * 2 - 1;
    const std::vector<double> x{0.0};
    const double with = eic(x, objective, {{&constraint, spec}}, 0.5);
    const double without = eic(x, objective, {}, 0.5);
    CHECK(with <= without + 1e-15);
  }
}

TEST_CASE("upper bound is mu plus gamma sigma") {
  CHECK(upper_bound(3.0, 0.0, {1.0}) == 3.0);
  CHECK(upper_bound(10.0, 4.0, {1.0}) == doctest::Approx(12.0));
  const double full = upper_bound(1.0, 9.0, {1.0});
  const double half = upper_bound(1.0, 9.0, {0.5});
  CHECK(full - 1.0 == doctest::Approx(2.0 * (half - 1.0)));
}

TEST_CASE("is_safe intersects all constraints with a closed boundary") {
  const std::vector<double> x{0.0};
  CHECK(is_safe(x, {}, {1.0}));

  const FixedSurrogate exact(8.0, 4.0);  // bound = 10 with gamma 1
  ConstraintSpec spec;
  spec.metric = "m";
  spec.threshold = 10.0;
  CHECK(is_safe(x, {{&exact, spec}}, {1.0}));  // boundary is inside the region

  const FixedSurrogate over(9.0, 4.0);
  CHECK_FALSE(is_safe(x, {{&exact, spec}, {&over, spec}}, {1.0}));
}

TEST_CASE("is_safe is monotone in gamma") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const FixedSurrogate c(unit(rng) * 10, unit(rng) * 4);
    ConstraintSpec spec;
    spec.metric = "m";
    spec.threshold = unit(rng) * 10;
    const std::vector<double> x{0.0};
    const double g_small = 0.2 + 0.3 * unit(rng);
    const double g_large = g_small + (1.0 - g_small) * unit(rng);
    if (is_safe(x, {{&c, spec}}, {g_large})) CHECK(is_safe(x, {{&c, spec}}, {g_small}));
  }
}

TEST_CASE("maximize_eic prefers the feasible side when EI is flat") {
  const ConfigurationSpace space({real_param("a", 0.0, 1.0, 0.5), real_param("b", 0.0, 1.0, 0.5)});
  SubSpace region;
  region.member_names = {"a", "b"};
  region.anchor = space.default_configuration();

  const FixedSurrogate objective(0.0, 1.0);  // EI constant everywhere
  // Constraint metric rises along dimension a: low a is feasible.
  const LinearSurrogate constraint(0, 10.0, 0.0, 0.01);
  ConstraintSpec spec;
  spec.metric = "m";
  spec.threshold = 5.0;

  AcquisitionOptions options;
  options.candidates = 400;
  const AcquisitionResult result = maximize_eic(objective, {{&constraint, spec}}, region, space,
                                                {}, {1.0}, 0.0, 3, options);
  CHECK_FALSE(result.fallback);
  CHECK(std::get<double>(result.config.values.at("a")) < 0.52);
}

TEST_CASE("maximize_eic reaches 0.99 of the brute-force EIC on an 8x8 grid") {
  const ConfigurationSpace space({int_param("a", 1, 8, 4), int_param("b", 1, 8, 4)});
  SubSpace region;
  region.member_names = {"a", "b"};
  region.anchor = space.default_configuration();

  // Smooth objective surface with an interior optimum.
  class Bowl : public Surrogate {
   public:
    PredictResult predict(std::span<const double> x) const override {
      const double dx = x[0] - 0.6, dy = x[1] - 0.3;
      return {dx * dx + dy * dy, 0.05 + 0.1 * x[0]};
    }
  } objective;
  const LinearSurrogate constraint(1, 2.0, 0.0, 0.01);
  ConstraintSpec spec;
  spec.metric = "m";
  spec.threshold = 1.6;
  const double y_best = 0.2;

  double grid_best = 0.0;
  for (int a = 1; a <= 8; ++a) {
    for (int b = 1; b <= 8; ++b) {
      Configuration c = make_config({{"a", double(a)}, {"b", double(b)}});
      const auto x = normalize(c, space);
      if (!is_safe(x, {{&constraint, spec}}, {1.0})) continue;
      grid_best = std::max(grid_best, eic(x, objective, {{&constraint, spec}}, y_best));
    }
  }
  REQUIRE(grid_best > 0.0);

  const AcquisitionResult result =
      maximize_eic(objective, {{&constraint, spec}}, region, space, {}, {1.0}, y_best, 11);
  CHECK(result.eic >= 0.99 * grid_best);
}

TEST_CASE("maximize_eic returns a minimal-violation fallback when nothing is safe") {
  const ConfigurationSpace space({real_param("a", 0.0, 1.0, 0.5)});
  SubSpace region;
  region.member_names = {"a"};
  region.anchor = space.default_configuration();

  const FixedSurrogate objective(0.0, 1.0);
  const LinearSurrogate constraint(0, 5.0, 10.0, 0.0);  // bound in [10, 15], threshold below
  ConstraintSpec spec;
  spec.metric = "m";
  spec.threshold = 1.0;

  AcquisitionOptions options;
  options.candidates = 200;
  const AcquisitionResult result =
      maximize_eic(objective, {{&constraint, spec}}, region, space, {}, {1.0}, 0.0, 5, options);
  CHECK(result.fallback);
  // Violation shrinks with a, so the fallback sits near the low end.
  CHECK(std::get<double>(result.config.values.at("a")) < 0.02);
}

TEST_CASE("maximize_eic stays inside the lifted sub-space domains") {
  const ConfigurationSpace space({int_param("a", 1, 8, 4), real_param("b", 0.0, 1.0, 0.5),
                                  cat_param("c", {"x", "y"}, "x")});
  SubSpace region;
  region.member_names = {"a"};
  region.anchor = make_config({{"a", 4.0}, {"b", 0.25}, {"c", std::string("y")}});

  const FixedSurrogate objective(0.0, 1.0);
  const AcquisitionResult result = maximize_eic(objective, {}, region, space, {}, {1.0}, 0.0, 9);
  CHECK_NOTHROW(space.validate(result.config));
  CHECK(std::get<double>(result.config.values.at("b")) == 0.25);
  CHECK(std::get<std::string>(result.config.values.at("c")) == "y");
}

TEST_CASE("maximize_eic is deterministic per seed") {
  const ConfigurationSpace space({real_param("a", 0.0, 1.0, 0.5), real_param("b", 0.0, 1.0, 0.5)});
  SubSpace region;
  region.member_names = {"a", "b"};
  region.anchor = space.default_configuration();
  const LinearSurrogate objective(0, -1.0, 1.0, 0.3);
  const AcquisitionResult r1 = maximize_eic(objective, {}, region, space, {}, {1.0}, 0.5, 77);
  const AcquisitionResult r2 = maximize_eic(objective, {}, region, space, {}, {1.0}, 0.5, 77);
  CHECK(r1.config == r2.config);
  CHECK(r1.eic == r2.eic);
}
