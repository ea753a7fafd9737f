#include <doctest.h>

#include <cmath>
#include <limits>

#include "cycleik/log.hpp"
#include "cycleik/mlp.hpp"
#include "cycleik/random.hpp"
#include "gradcheck.hpp"

using namespace cycleik;

namespace {

template <typename S>
RowMatrix<S> random_input(Eigen::Index rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix<S> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<S>(rng.uniform(-1.0, 1.0));
  return x;
}

// Scalar reference: one explicit loop per neuron, double precision throughout.
Eigen::VectorXd reference_forward(const MlpModel& model, Eigen::VectorXd a) {
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z(layers[l].kernel.cols());
    for (Eigen::Index o = 0; o < z.size(); ++o) {
      double sum = layers[l].bias(o);
      for (Eigen::Index i = 0; i < a.size(); ++i) sum += a(i) * layers[l].kernel(i, o);
      const bool last = l + 1 == layers.size();
      z(o) = last ? std::tanh(sum) : 0.5 * sum * (1.0 + std::erf(sum / std::sqrt(2.0)));
    }
    a = z;
  }
  return a;
}

struct QuietWarnings {
  WarningHandler previous = set_warning_handler([](std::string_view) {});
  ~QuietWarnings() { set_warning_handler(previous); }
};

}  // namespace

TEST_CASE("GELU uses the exact erf form") {
  CHECK(gelu(1.0) == doctest::Approx(0.841345).epsilon(1e-6));
  CHECK(std::abs(gelu(1.0) - 0.8413447460685429) < 1e-12);
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(-10.0) == doctest::Approx(0.0).epsilon(1e-12));
  for (double x : {-3.0, -0.7, 0.1, 2.5}) {
    const double h = 1e-6;
    CHECK(gelu_derivative(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("layer layout validation") {
  QuietWarnings quiet;
  CHECK_THROWS_AS(validate_layer_sizes({6, 16, 2}), DimensionError);
  CHECK_THROWS_AS(validate_layer_sizes({7, 2}), ValueError);
  CHECK_THROWS_AS(validate_layer_sizes({7, 0, 2}), ValueError);
  CHECK_NOTHROW(validate_layer_sizes({7, 16, 2}));
  std::vector<std::string> seen;
  set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  validate_layer_sizes({7, 16, 16, 2});
  CHECK(seen.size() == 1);
  validate_layer_sizes({7, 8, 8, 8, 8, 8, 8, 2});
  CHECK(seen.size() == 1);
}

TEST_CASE("parameter count of the Panda configuration") {
  const MlpModel model({7, 1370, 880, 2980, 1000, 2710, 2290, 880, 7});
  std::size_t expected = 0;
  const std::vector<std::size_t> s{7, 1370, 880, 2980, 1000, 2710, 2290, 880, 7};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) expected += s[i] * s[i + 1] + s[i + 1];
  CHECK(model.parameter_count() == expected);
  CHECK(model.parameter_count() == 17'766'967);
  CHECK(std::abs(static_cast<double>(model.parameter_count()) / 1e6 - 17.767) < 0.001);
}

TEST_CASE("initialization is deterministic and bounded") {
  QuietWarnings quiet;
  const MlpModel a = init_model({7, 32, 16, 3}, 42);
  const MlpModel b = init_model({7, 32, 16, 3}, 42);
  const MlpModel c = init_model({7, 32, 16, 3}, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const auto& layer : a.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.kernel.rows()));
    CHECK(layer.kernel.cwiseAbs().maxCoeff() <= bound);
    CHECK(layer.bias.isZero());
  }
}

TEST_CASE("forward pass properties") {
  QuietWarnings quiet;
  const MlpModel zero({7, 16, 16, 4});
  const RowMatrix<float> x = random_input<float>(10, 7, 1);
  CHECK(forward(zero, x).isZero());

  const MlpModel model = init_model({7, 16, 2}, 3);
  const RowMatrix<float> big = random_input<float>(100, 7, 2) * 50.0f;
  const RowMatrix<float> out = forward(model, big);
  CHECK(out.cwiseAbs().maxCoeff() <= 1.0f);
  CHECK_THROWS_AS(forward(model, random_input<float>(3, 6, 1)), DimensionError);
}

TEST_CASE("rows are independent of their batch") {
  QuietWarnings quiet;
  const MlpModel model = init_model({7, 64, 48, 33, 6}, 8);
  const RowMatrix<float> batch = random_input<float>(100, 7, 4);
  const RowMatrix<float> all = forward(model, batch);
  for (Eigen::Index i : {0, 1, 7, 8, 50, 99}) {
    const RowMatrix<float> one = forward(model, RowMatrix<float>(batch.row(i)));
    CHECK(one.row(0) == all.row(i));
  }
}

TEST_CASE("forward matches a scalar re-implementation") {
  QuietWarnings quiet;
  const MlpModel model = init_model({7, 40, 30, 20, 5}, 13);
  const RowMatrix<float> x = random_input<float>(25, 7, 5);
  const RowMatrix<float> y = forward(model, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd ref = reference_forward(model, x.row(i).transpose().cast<double>());
    CHECK((y.row(i).transpose().cast<double>() - ref).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("backward matches central differences") {
  QuietWarnings quiet;
  MlpT<double> model = init_model({7, 8, 6, 3}, 17).cast<double>();
  for (auto& layer : model.layers()) layer.bias.setRandom();
  const RowMatrix<double> x = random_input<double>(5, 7, 6);
  const RowMatrix<double> upstream = random_input<double>(5, 3, 7);
  ForwardCacheT<double> cache;
  forward(model, x, &cache);
  const GradientsT<double> grads = backward(model, cache, upstream);
  const double err = testing::max_parameter_gradient_error(
      model, grads, [&] { return forward(model, x).cwiseProduct(upstream).sum(); }, 1e-4);
  CHECK(err < 1e-4);

  const GradientsT<double> zero = backward(model, cache, RowMatrix<double>(RowMatrix<double>::Zero(5, 3)));
  const GradientsT<double> twice = backward(model, cache, RowMatrix<double>(2.0 * upstream));
  for (std::size_t l = 0; l < grads.size(); ++l) {
    CHECK(zero[l].kernel.isZero());
    CHECK(zero[l].bias.isZero());
    CHECK(twice[l].kernel.isApprox(2.0 * grads[l].kernel, 1e-14));
    CHECK(twice[l].bias.isApprox(2.0 * grads[l].bias, 1e-14));
  }
}

TEST_CASE("Adam update") {
  QuietWarnings quiet;
  MlpModel model = init_model({7, 4, 1}, 1);
  Gradients grads = AdamState::zeros_like(model).first_moment;
  for (auto& g : grads) {
    g.kernel.setConstant(1.0f);
    g.bias.setConstant(1.0f);
  }

  SUBCASE("zero learning rate leaves parameters unchanged") {
    const MlpModel before = model;
    AdamState state = AdamState::zeros_like(model);
    adam_step(model, grads, state, 0.0f);
    CHECK(model == before);
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves each parameter by the learning rate") {
    const MlpModel before = model;
    AdamState state = AdamState::zeros_like(model);
    adam_step(model, grads, state, 0.1f);
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const RowMatrix<float> delta = before.layers()[l].kernel - model.layers()[l].kernel;
      CHECK(delta.minCoeff() == doctest::Approx(0.1).epsilon(1e-5));
      CHECK(delta.maxCoeff() == doctest::Approx(0.1).epsilon(1e-5));
      CHECK(model.layers()[l].bias.maxCoeff() == doctest::Approx(-0.1).epsilon(1e-5));
    }
  }
  SUBCASE("identical runs are bitwise identical") {
    MlpModel other = model;
    AdamState s1 = AdamState::zeros_like(model);
    AdamState s2 = AdamState::zeros_like(model);
    Rng rng(5);
    for (int step = 0; step < 20; ++step) {
      for (auto& g : grads) {
        for (Eigen::Index i = 0; i < g.kernel.size(); ++i) g.kernel.data()[i] = static_cast<float>(rng.uniform(-1, 1));
      }
      adam_step(model, grads, s1, 1e-3f);
      adam_step(other, grads, s2, 1e-3f);
    }
    CHECK(model == other);
  }
  SUBCASE("non-finite gradients and bad arguments are rejected") {
    const MlpModel before = model;
    AdamState state = AdamState::zeros_like(model);
    grads[1].bias(0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(model, grads, state, 0.1f), ValueError);
    CHECK(model == before);
    grads[1].bias(0) = 1.0f;
    CHECK_THROWS_AS(adam_step(model, grads, state, -0.1f), ValueError);
    grads.pop_back();
    CHECK_THROWS_AS(adam_step(model, grads, state, 0.1f), DimensionError);
  }
}
