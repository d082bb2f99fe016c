#include <cmath>

#include "ardt/ops.hpp"
#include "ardt/tensor.hpp"
#include "doctest.h"

using namespace ardt;
using nn::Tensor;

TEST_CASE("matmul computes known products and rejects bad shapes") {
  Tensor a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_values({3, 2}, {1, 0, 0, 1, 1, 1});
  Tensor c = nn::matmul(a, b);
  CHECK(c.data()[0] == doctest::Approx(4.0));
  CHECK(c.data()[1] == doctest::Approx(5.0));
  CHECK(c.data()[2] == doctest::Approx(10.0));
  CHECK(c.data()[3] == doctest::Approx(11.0));
  CHECK_THROWS_WITH_AS(nn::matmul(a, a), doctest::Contains("matmul"),
                       std::invalid_argument);
}

TEST_CASE("softmax of zeros is uniform and rows sum to one") {
  Tensor x = Tensor::from_values({1, 2}, {0.0, 0.0});
  Tensor y = nn::softmax(x);
  CHECK(y.data()[0] == doctest::Approx(0.5));
  CHECK(y.data()[1] == doctest::Approx(0.5));

  Rng rng(5);
  Tensor z = Tensor::randn({7, 9}, rng, 3.0, false);
  Tensor p = nn::softmax(z);
  for (std::size_t r = 0; r < 7; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 9; ++c) sum += p.data()[r * 9 + c];
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("causal attention output ignores future positions") {
  Rng rng(11);
  Tensor q = Tensor::randn({5, 4}, rng, 1.0, false);
  Tensor k = Tensor::randn({5, 4}, rng, 1.0, false);
  Tensor v = Tensor::randn({5, 4}, rng, 1.0, false);
  Tensor out1 = nn::causal_self_attention(q, k, v, 1, 5, 2);

  // Perturb position 4 in all of q, k, v; outputs at positions < 4 are
  // bit-identical.
  for (Tensor* t : {&q, &k, &v}) {
    for (std::size_t c = 0; c < 4; ++c) t->data()[4 * 4 + c] += 13.0;
  }
  Tensor out2 = nn::causal_self_attention(q, k, v, 1, 5, 2);
  for (std::size_t i = 0; i < 4 * 4; ++i) {
    CHECK(out1.data()[i] == out2.data()[i]);
  }
}

TEST_CASE("expectile loss matches hand values") {
  CHECK(nn::expectile_loss(Tensor::from_values({1}, {1.0}), 0.01).value() ==
        doctest::Approx(0.99));
  CHECK(nn::expectile_loss(Tensor::from_values({1}, {-1.0}), 0.01).value() ==
        doctest::Approx(0.01));
  for (const double alpha : {0.01, 0.3, 0.5, 0.9}) {
    CHECK(nn::expectile_loss(Tensor::from_values({1}, {0.0}), alpha).value() ==
          doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(nn::expectile_loss(Tensor::from_values({1}, {1.0}), 1.0),
                  std::invalid_argument);
}

TEST_CASE("expectile loss at 0.5 is half the mean square") {
  Rng rng(3);
  Tensor u = Tensor::randn({17}, rng, 2.0, false);
  double mean_sq = 0.0;
  for (const double x : u.data()) mean_sq += x * x;
  mean_sq /= 17.0;
  CHECK(nn::expectile_loss(u, 0.5).value() == doctest::Approx(0.5 * mean_sq));
}

TEST_CASE("expectile reflection identity") {
  Rng rng(29);
  Tensor u = Tensor::randn({23}, rng, 1.5, false);
  Tensor neg = nn::scale(u, -1.0);
  for (const double alpha : {0.01, 0.2, 0.37, 0.5, 0.9}) {
    CHECK(nn::expectile_loss(u, alpha).value() ==
          doctest::Approx(nn::expectile_loss(neg, 1.0 - alpha).value()));
  }
}

TEST_CASE("backward matches hand derivatives and accumulates") {
  Tensor x = Tensor::from_values({1}, {3.0}, true);
  Tensor loss = nn::mse(x, Tensor::zeros({1}));
  nn::backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  // Repeated calls accumulate.
  nn::backward(nn::mse(x, Tensor::zeros({1})));
  CHECK(x.grad()[0] == doctest::Approx(12.0));

  Tensor u = Tensor::from_values({1}, {2.0}, true);
  nn::backward(nn::expectile_loss(u, 0.01));
  CHECK(u.grad()[0] == doctest::Approx(2.0 * 0.99 * 2.0));

  CHECK_THROWS_AS(nn::backward(Tensor::zeros({3})), std::invalid_argument);
}

TEST_CASE("dropout is inverted at train time") {
  Rng rng(4);
  Tensor x = Tensor::full({10000}, 1.0);
  Tensor y = nn::dropout(x, 0.25, rng);
  double mean = 0.0;
  int zeros = 0;
  for (const double v : y.data()) {
    mean += v;
    if (v == 0.0) ++zeros;
  }
  mean /= 10000.0;
  CHECK(std::abs(mean - 1.0) < 0.05);
  CHECK(std::abs(zeros / 10000.0 - 0.25) < 0.02);
}

TEST_CASE("cross entropy with masked rows ignores them") {
  Tensor logits = Tensor::from_values({2, 2}, {10.0, -10.0, -10.0, 10.0}, true);
  const std::vector<double> weights = {1.0, 0.0};
  // Row 1 predicts class 1 but is weighted out; row 0 predicts its target.
  Tensor loss = nn::cross_entropy(logits, {0, 0}, &weights);
  CHECK(loss.value() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("layer_norm keeps rows zero-mean unit-variance before affine") {
  Rng rng(8);
  Tensor x = Tensor::randn({4, 16}, rng, 5.0, false);
  Tensor g = Tensor::full({16}, 1.0);
  Tensor b = Tensor::zeros({16});
  Tensor y = nn::layer_norm(x, g, b);
  for (std::size_t r = 0; r < 4; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 16; ++c) mean += y.data()[r * 16 + c];
    mean /= 16.0;
    for (std::size_t c = 0; c < 16; ++c) {
      const double d = y.data()[r * 16 + c] - mean;
      var += d * d;
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}
