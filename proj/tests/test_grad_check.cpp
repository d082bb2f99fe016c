#include "ardt/grad_check.hpp"
#include "ardt/ops.hpp"
#include "doctest.h"

using namespace ardt;
using nn::Tensor;

TEST_CASE("mse gradients match finite differences") {
  Rng rng(1);
  Tensor x = Tensor::randn({3, 4}, rng, 1.0);
  Tensor t = Tensor::randn({3, 4}, rng, 1.0);
  const double err = nn::grad_check(
      [&t](const std::vector<Tensor>& in) { return nn::mse(in[0], t); }, {x});
  CHECK(err < 1e-6);
}

TEST_CASE("expectile gradients away from zero residuals") {
  Tensor u = Tensor::from_values({5}, {0.8, -0.6, 1.4, -2.0, 0.3}, true);
  for (const double alpha : {0.01, 0.5, 0.99}) {
    const double err = nn::grad_check(
        [alpha](const std::vector<Tensor>& in) {
          return nn::expectile_loss(in[0], alpha);
        },
        {u});
    CHECK(err < 1e-5);
  }
}

TEST_CASE("elementwise activations") {
  Rng rng(2);
  Tensor x = Tensor::randn({2, 6}, rng, 1.0);
  for (const auto& fn :
       {+[](const Tensor& t) { return nn::gelu(t); },
        +[](const Tensor& t) { return nn::tanh_op(t); },
        +[](const Tensor& t) { return nn::sigmoid(t); }}) {
    const double err = nn::grad_check(
        [fn](const std::vector<Tensor>& in) { return nn::mean_all(fn(in[0])); },
        {x});
    CHECK(err < 1e-5);
  }
}

TEST_CASE("two-layer network with layer_norm and attention") {
  Rng rng(3);
  const std::size_t B = 2, T = 3, D = 4;
  Tensor x = Tensor::randn({B * T, D}, rng, 1.0);
  Tensor wq = Tensor::randn({D, D}, rng, 0.5);
  Tensor wk = Tensor::randn({D, D}, rng, 0.5);
  Tensor wv = Tensor::randn({D, D}, rng, 0.5);
  Tensor gain = Tensor::full({D}, 1.0, true);
  Tensor bias = Tensor::zeros({D}, true);
  Tensor w_out = Tensor::randn({D, 2}, rng, 0.5);
  const double err = nn::grad_check(
      [B, T](const std::vector<Tensor>& in) {
        Tensor normed = nn::layer_norm(in[0], in[4], in[5]);
        Tensor attn = nn::causal_self_attention(
            nn::matmul(normed, in[1]), nn::matmul(normed, in[2]),
            nn::matmul(normed, in[3]), B, T, 2);
        Tensor logits = nn::matmul(nn::gelu(attn), in[6]);
        return nn::cross_entropy(logits, {0, 1, 0, 1, 0, 1});
      },
      {x, wq, wk, wv, gain, bias, w_out});
  CHECK(err < 1e-4);
}

TEST_CASE("attention with a pad mask") {
  Rng rng(5);
  const std::size_t B = 2, T = 4, D = 4;
  Tensor q = Tensor::randn({B * T, D}, rng, 1.0);
  Tensor k = Tensor::randn({B * T, D}, rng, 1.0);
  Tensor v = Tensor::randn({B * T, D}, rng, 1.0);
  const std::vector<double> mask = {0, 1, 1, 1, 0, 0, 1, 1};
  const double err = nn::grad_check(
      [B, T, &mask](const std::vector<Tensor>& in) {
        return nn::mean_all(
            nn::causal_self_attention(in[0], in[1], in[2], B, T, 2, &mask));
      },
      {q, k, v});
  CHECK(err < 1e-4);
}

TEST_CASE("lstm-style gate composition") {
  Rng rng(6);
  const std::size_t B = 3, F = 5, H = 4;
  Tensor x = Tensor::randn({B, F}, rng, 1.0);
  Tensor h0 = Tensor::randn({B, H}, rng, 1.0);
  Tensor c0 = Tensor::randn({B, H}, rng, 1.0);
  Tensor wx = Tensor::randn({F, 4 * H}, rng, 0.5);
  Tensor wh = Tensor::randn({H, 4 * H}, rng, 0.5);
  Tensor bg = Tensor::zeros({4 * H}, true);
  const double err = nn::grad_check(
      [H](const std::vector<Tensor>& in) {
        Tensor gates = nn::add(
            nn::add(nn::matmul(in[0], in[3]), nn::matmul(in[1], in[4])),
            in[5]);
        Tensor ig = nn::sigmoid(nn::slice_cols(gates, 0, H));
        Tensor fg = nn::sigmoid(nn::slice_cols(gates, H, H));
        Tensor gg = nn::tanh_op(nn::slice_cols(gates, 2 * H, H));
        Tensor og = nn::sigmoid(nn::slice_cols(gates, 3 * H, H));
        Tensor c = nn::add(nn::mul(fg, in[2]), nn::mul(ig, gg));
        Tensor h = nn::mul(og, nn::tanh_op(c));
        return nn::mean_all(h);
      },
      {x, h0, c0, wx, wh, bg});
  CHECK(err < 1e-4);
}

TEST_CASE("embedding gather and concat/slice plumbing") {
  Rng rng(7);
  Tensor table = Tensor::randn({6, 4}, rng, 1.0);
  Tensor other = Tensor::randn({2, 4}, rng, 1.0);
  const double err = nn::grad_check(
      [](const std::vector<Tensor>& in) {
        Tensor picked = nn::gather_rows(in[0], {1, 4, 1});
        Tensor stacked = nn::concat_rows({picked, in[1]});
        return nn::mean_all(nn::slice_cols(stacked, 1, 2));
      },
      {table, other});
  CHECK(err < 1e-5);
}
