// Dense-net building blocks: layouts, forward/backward passes, the pairwise
// reductions the duplication guarantees rest on, and the optimizer.

#include <cmath>
#include <vector>

#include "alignnet/matrix.hpp"
#include "alignnet/net.hpp"
#include "alignnet/rng.hpp"
#include "doctest.h"

using namespace alignnet;

TEST_CASE("pairwise_sum splits at the midpoint") {
  std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5};
  // ceil-half split: ((0.1+0.2)+0.3) + (0.4+0.5), leaves of one element.
  double expect = ((0.1 + 0.2) + 0.3) + (0.4 + 0.5);
  CHECK(pairwise_sum(v) == expect);

  SUBCASE("doubling a block doubles the sum bit-for-bit") {
    std::vector<double> once = {0.3371, -1.25, 0.077, 2.5e-9, -4.125, 0.99,
                                1e12,   -7.5,  0.111, 3.25,   -0.625, 0.2};
    std::vector<double> twice = once;
    twice.insert(twice.end(), once.begin(), once.end());
    CHECK(pairwise_sum(twice) == 2.0 * pairwise_sum(once));
    std::vector<double> quad = twice;
    quad.insert(quad.end(), twice.begin(), twice.end());
    CHECK(pairwise_sum(quad) == 4.0 * pairwise_sum(once));
  }

  SUBCASE("empty and singleton") {
    CHECK(pairwise_sum({}) == 0.0);
    std::vector<double> one = {42.5};
    CHECK(pairwise_sum(one) == 42.5);
  }
}

TEST_CASE("solve_dense inverts a small system") {
  Matrix a(2, 2);
  a.at(0, 0) = 2.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 3.0;
  std::vector<double> x = solve_dense(a, {5.0, 10.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-12));

  SUBCASE("singular matrix throws") {
    Matrix s(2, 2);
    s.at(0, 0) = 1.0;
    s.at(0, 1) = 2.0;
    s.at(1, 0) = 2.0;
    s.at(1, 1) = 4.0;
    CHECK_THROWS_AS(solve_dense(s, {1.0, 2.0}), NumericError);
  }
}

TEST_CASE("Layout::mlp wires hidden ReLU layers and a linear output") {
  Layout l = Layout::mlp(16, {64, 64, 32}, 1);
  CHECK(l.layer_count() == 4);
  CHECK(l.input_width() == 16);
  CHECK(l.output_width() == 1);
  CHECK(l.layer(0).act == Activation::Relu);
  CHECK(l.layer(3).act == Activation::Linear);
  // 16*64+64 + 64*64+64 + 64*32+32 + 32*1+1
  CHECK(l.param_count() == 1088 + 4160 + 2080 + 33);
  CHECK(l.param_count() == 7361);
}

TEST_CASE("glorot init is seed-deterministic with zero biases") {
  Layout l = Layout::mlp(3, {4}, 1);
  RngStream r1(7), r2(7), r3(8);
  ParamVector a = ParamVector::glorot(l, r1);
  ParamVector b = ParamVector::glorot(l, r2);
  ParamVector c = ParamVector::glorot(l, r3);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  // Biases of layer 0 sit after the 3*4 weights.
  for (int i = 0; i < 4; ++i) {
    CHECK(a.values[static_cast<std::size_t>(l.bias_offset(0) + i)] == 0.0);
  }
  double bound = std::sqrt(6.0 / (3 + 4));
  for (int i = 0; i < 12; ++i) {
    CHECK(std::abs(a.values[static_cast<std::size_t>(i)]) <= bound);
  }
}

TEST_CASE("mlp_forward computes a hand-checked two-layer net") {
  // 2 -> 2 (ReLU) -> 1: weights chosen so one unit clips.
  Layout l({LayerSpec{2, 2, Activation::Relu}, LayerSpec{2, 1, Activation::Linear}});
  ParamVector p = ParamVector::zeros(l);
  // layer 0 weights (input-major: w[in][out]): x0 -> h0 = 1, x0 -> h1 = -1,
  // x1 -> h0 = 0.5, x1 -> h1 = 2; biases 0.25, -0.25
  p.values = {1.0, -1.0, 0.5, 2.0, 0.25, -0.25,
              // layer 1: h0 -> y = 2, h1 -> y = -3, bias 0.125
              2.0, -3.0, 0.125};
  Matrix x(1, 2);
  x.at(0, 0) = 1.0;
  x.at(0, 1) = -2.0;
  // h0 = relu(1 - 1 + 0.25) = 0.25, h1 = relu(-1 - 4 - 0.25) = 0
  // y = 2*0.25 - 3*0 + 0.125 = 0.625
  std::vector<double> y = mlp_forward(p, x);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == 0.625);

  SUBCASE("wrong input width is a shape error") {
    Matrix bad(1, 3);
    CHECK_THROWS_AS(mlp_forward(p, bad), ShapeError);
  }
}

TEST_CASE("backward matches central differences") {
  Layout l = Layout::mlp(5, {8, 4}, 1);
  RngStream rng(21);
  ParamVector p = ParamVector::glorot(l, rng);
  // Nudge biases off zero so ReLU kinks are not sitting exactly at 0.
  for (int k = 0; k < l.layer_count(); ++k) {
    for (int i = 0; i < l.layer(k).out_width; ++i) {
      p.values[static_cast<std::size_t>(l.bias_offset(k) + i)] =
          0.05 * (i + 1);
    }
  }
  Batch batch;
  batch.inputs = Matrix(17, 5);
  for (int i = 0; i < 17; ++i) {
    for (int j = 0; j < 5; ++j) batch.inputs.at(i, j) = rng.uniform(-1.0, 1.0);
    batch.targets.push_back(rng.uniform(1.0, 5.0));
  }
  double worst = finite_difference_check(p, batch, 1e-5);
  CHECK(worst < 1e-6);
}

TEST_CASE("backward loss agrees with mse and scales with loss_weight") {
  Layout l = Layout::mlp(3, {6}, 1);
  RngStream rng(4);
  ParamVector p = ParamVector::glorot(l, rng);
  Batch batch;
  batch.inputs = Matrix(9, 3);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 3; ++j) batch.inputs.at(i, j) = rng.uniform(-1.0, 1.0);
    batch.targets.push_back(rng.uniform(1.0, 5.0));
  }
  BackwardResult full = backward(p, batch, 1.0);
  CHECK(full.loss ==
        doctest::Approx(mse(mlp_forward(p, batch.inputs), batch.targets))
            .epsilon(1e-15));

  BackwardResult half = backward(p, batch, 0.5);
  CHECK(half.loss == 0.5 * full.loss);
  for (std::size_t i = 0; i < full.grads.values.size(); ++i) {
    CHECK(half.grads.values[i] == doctest::Approx(0.5 * full.grads.values[i])
                                      .epsilon(1e-12));
  }
}

TEST_CASE("Adam drives a quadratic to its minimum") {
  // Single "parameter vector" minimising (x - 3)^2 + (y + 1)^2.
  OptimizerConfig cfg;
  Optimizer opt(cfg, 2);
  std::vector<double> x = {0.0, 0.0};
  for (int i = 0; i < 4000; ++i) {
    std::vector<double> g = {2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)};
    opt.step(x, g, 0.01);
  }
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("gradient descent optimizer takes plain steps") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::GradientDescent;
  Optimizer opt(cfg, 1);
  std::vector<double> x = {2.0};
  std::vector<double> g = {0.5};
  opt.step(x, g, 0.1);
  CHECK(x[0] == doctest::Approx(2.0 - 0.1 * 0.5).epsilon(1e-15));
}

TEST_CASE("parameter hashing detects any change") {
  std::vector<double> v = {1.0, 2.0, 3.0};
  std::uint64_t h0 = hash_values(v);
  v[2] = 3.0000000000000004;  // one ulp away
  CHECK(hash_values(v) != h0);
}
