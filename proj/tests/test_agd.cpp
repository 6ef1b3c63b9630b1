#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "otune/agd.hpp"
#include "otune/engine.hpp"
#include "otune/errors.hpp"

using namespace otune;
using namespace otune::testing;

namespace {

class FixedSurrogate : public Surrogate {
 public:
  explicit FixedSurrogate(double mean) : mean_(mean) {}
  PredictResult predict(std::span<const double>) const override { return {mean_, 0.0}; }

 private:
  double mean_;
};

class LinearSurrogate : public Surrogate {
 public:
  LinearSurrogate(std::vector<double> slopes, double offset)
      : slopes_(std::move(slopes)), offset_(offset) {}
  PredictResult predict(std::span<const double> x) const override {
    double v = offset_;
    for (std::size_t i = 0; i < slopes_.size(); ++i) v += slopes_[i] * x[i];
    return {v, 0.0};
  }

 private:
  std::vector<double> slopes_;
  double offset_;
};

GPModel fit_dense_line(double slope) {
  KernelLayout layout;
  layout.numeric_dims = {0};
  std::vector<double> xs;
  for (int i = 0; i <= 40; ++i) xs.push_back(i / 40.0);
  RowMatrix X(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = xs[i];
    y(static_cast<Eigen::Index>(i)) = slope * xs[i];
  }
  FitOptions options;
  options.fixed_noise = 1e-8;
  options.seed = 3;
  return GPModel::fit(X, y, layout, options);
}

}  // namespace

TEST_CASE("runtime gradient recovers the slope of a linear surface") {
  const ConfigurationSpace space({real_param("x", 0.0, 1.0, 0.5)});
  const GPModel model = fit_dense_line(3.0);
  const std::vector<double> point{0.5};
  const auto grad = approx_runtime_gradient(model, point, space, {});
  REQUIRE(grad.size() == 1);
  CHECK(grad[0] == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("constant surrogate yields a zero gradient") {
  const ConfigurationSpace space({real_param("x", 0.0, 1.0, 0.5), real_param("y", 0.0, 1.0, 0.5)});
  const FixedSurrogate model(7.0);
  const auto grad = approx_runtime_gradient(model, std::vector<double>{0.3, 0.8}, space, {});
  CHECK(grad == std::vector<double>{0.0, 0.0});
}

TEST_CASE("boundary points use the one-sided displacement") {
  const ConfigurationSpace space({real_param("x", 0.0, 1.0, 0.5)});
  const LinearSurrogate model({2.0}, 1.0);
  const auto grad = approx_runtime_gradient(model, std::vector<double>{0.0}, space, {});
  CHECK(std::isfinite(grad[0]));
  CHECK(grad[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("categorical dimensions receive zero gradient") {
  const ConfigurationSpace space({real_param("x", 0.0, 1.0, 0.5), cat_param("c", {"a", "b"}, "a")});
  const LinearSurrogate model({1.0, 5.0}, 0.0);
  const auto grad = approx_runtime_gradient(model, std::vector<double>{0.5, 0.0}, space, {});
  CHECK(grad[1] == 0.0);
  CHECK(grad[0] != 0.0);
}

TEST_CASE("objective gradient degenerates at the beta endpoints") {
  const std::vector<double> grad_t{2.0, -1.0}, grad_r{5.0, 3.0};
  CHECK(objective_gradient(4.0, 2.0, grad_t, grad_r, 1.0) == grad_t);
  CHECK(objective_gradient(4.0, 2.0, grad_t, grad_r, 0.0) == grad_r);
  CHECK_THROWS_AS(objective_gradient(0.0, 1.0, grad_t, grad_r, 0.5), DomainError);
  CHECK_THROWS_AS(objective_gradient(1.0, -1.0, grad_t, grad_r, 0.5), DomainError);
}

TEST_CASE("objective gradient matches the hand-evaluated composition") {
  // T=4, R=1, beta=0.5, gradT=(2), gradR=(0): 0.5 * 4^(-0.5) * 2 = 0.5
  const auto grad =
      objective_gradient(4.0, 1.0, std::vector<double>{2.0}, std::vector<double>{0.0}, 0.5);
  CHECK(grad[0] == doctest::Approx(0.5));
}

TEST_CASE("objective gradient matches finite differences of the composed objective") {
  // T(u) = 2 + sin(u1) + 0.5 u2^2, R(u) = 1 + u1^2 + 0.3 u2.
  auto t_fn = [](double a, double b) { return 2.0 + std::sin(a) + 0.5 * b * b; };
  auto r_fn = [](double a, double b) { return 1.0 + a * a + 0.3 * b; };

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  for (double beta : {0.0, 0.3, 0.5, 1.0}) {
    for (int i = 0; i < 25; ++i) {
      const double a = unit(rng), b = unit(rng);
      const double t = t_fn(a, b), r = r_fn(a, b);
      const std::vector<double> grad_t{std::cos(a), b};
      const std::vector<double> grad_r{2.0 * a, 0.3};
      const auto grad = objective_gradient(t, r, grad_t, grad_r, beta);

      const double h = 1e-6;
      auto f = [&](double x, double y) {
        return std::pow(t_fn(x, y), beta) * std::pow(r_fn(x, y), 1.0 - beta);
      };
      const double fd_a = (f(a + h, b) - f(a - h, b)) / (2 * h);
      const double fd_b = (f(a, b + h) - f(a, b - h)) / (2 * h);
      CHECK(grad[0] == doctest::Approx(fd_a).epsilon(1e-6));
      CHECK(grad[1] == doctest::Approx(fd_b).epsilon(1e-6));
    }
  }
}

TEST_CASE("agd_step with a zero gradient perturbs the first dimension by one grid step") {
  const ConfigurationSpace space({int_param("instances", 1, 8, 4), int_param("memory", 1, 8, 4)});
  const FixedSurrogate runtime(10.0);
  ResourceFunctionSpec resource;
  resource.instances_param = "instances";
  resource.cores_param = "";
  resource.memory_param = "memory";

  const Configuration best = space.default_configuration();
  // beta = 1 ignores the resource term; a constant runtime has zero gradient.
  const Configuration next = agd_step(best, runtime, resource, 1.0, {}, space, {});
  CHECK_FALSE(next == best);
  CHECK(std::get<double>(next.values.at("instances")) == 5.0);
  CHECK(std::get<double>(next.values.at("memory")) == 4.0);
}

TEST_CASE("agd_step with beta 0 descends the analytic resource gradient") {
  const ConfigurationSpace space({int_param("instances", 1, 64, 32), int_param("memory", 1, 8, 4)});
  const FixedSurrogate runtime(10.0);
  ResourceFunctionSpec resource;
  resource.instances_param = "instances";
  resource.cores_param = "";
  resource.memory_param = "memory";
  resource.coefficient = 0.5;

  AGDConfig cfg;
  cfg.eta = 0.01;
  const Configuration best = space.default_configuration();
  const Configuration next = agd_step(best, runtime, resource, 0.0, cfg, space, {});
  CHECK(std::get<double>(next.values.at("instances")) < 32.0);
}

TEST_CASE("agd_step with beta 1 is bitwise independent of the resource function") {
  const ConfigurationSpace space({real_param("x", 0.0, 64.0, 32.0), real_param("y", 1.0, 9.0, 4.0)});
  const LinearSurrogate runtime2({4.0, -2.0}, 3.0);
  ResourceFunctionSpec cheap;
  cheap.instances_param = "x";
  cheap.cores_param = "";
  cheap.memory_param = "y";
  cheap.coefficient = 0.01;
  ResourceFunctionSpec expensive = cheap;
  expensive.coefficient = 100.0;

  AGDConfig cfg;
  cfg.eta = 0.05;
  const Configuration best = space.default_configuration();
  const Configuration a = agd_step(best, runtime2, cheap, 1.0, cfg, space, {});
  const Configuration b = agd_step(best, runtime2, expensive, 1.0, cfg, space, {});
  CHECK(a == b);
  CHECK_FALSE(a == best);
}

TEST_CASE("agd_step never emits out-of-domain values") {
  const ConfigurationSpace space({int_param("instances", 1, 8, 1), real_param("memory", 1.0, 8.0, 1.0)});
  const LinearSurrogate runtime({50.0, 50.0}, 0.0);  // steep gradient pushing below the domain
  ResourceFunctionSpec resource;
  resource.instances_param = "instances";
  resource.cores_param = "";
  resource.memory_param = "memory";

  AGDConfig cfg;
  cfg.eta = 10.0;  // deliberately huge step
  const Configuration best = space.default_configuration();
  const Configuration next = agd_step(best, runtime, resource, 0.5, cfg, space, {});
  CHECK_NOTHROW(space.validate(next));
}

TEST_CASE("agd_step escalates eta until the rounded configuration moves") {
  const ConfigurationSpace space({int_param("n", 1, 100, 50)});
  const LinearSurrogate runtime({8.0}, 1.0);
  ResourceFunctionSpec resource;
  resource.instances_param = "n";
  resource.cores_param = "";
  resource.memory_param = "";

  // One eta step of 0.001 * 8 = 0.008 rounds back onto 50/100; doubling
  // eventually crosses the half-cell boundary or falls back to a grid step.
  AGDConfig cfg;
  const Configuration best = space.default_configuration();
  const Configuration next = agd_step(best, runtime, resource, 1.0, cfg, space, {});
  CHECK_FALSE(next == best);
  CHECK(std::get<double>(next.values.at("n")) < 50.0);
}
