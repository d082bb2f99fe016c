#include <benchmark/benchmark.h>

#include "ardt/ops.hpp"
#include "ardt/tensor.hpp"

namespace {

using ardt::Rng;
using ardt::nn::Tensor;

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = Tensor::randn({128, n}, rng, 1.0);
  Tensor b = Tensor::randn({n, n}, rng, 1.0);
  for (auto _ : state) {
    a.zero_grad();
    b.zero_grad();
    Tensor loss = ardt::nn::mean_all(ardt::nn::matmul(a, b));
    ardt::nn::backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
  state.SetItemsProcessed(state.iterations() * 128 * n * n * 2);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(128)->Arg(256);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const auto tokens = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const std::size_t batch = 32, dim = 64;
  Tensor q = Tensor::randn({batch * tokens, dim}, rng, 1.0);
  Tensor k = Tensor::randn({batch * tokens, dim}, rng, 1.0);
  Tensor v = Tensor::randn({batch * tokens, dim}, rng, 1.0);
  for (auto _ : state) {
    q.zero_grad();
    k.zero_grad();
    v.zero_grad();
    Tensor out = ardt::nn::causal_self_attention(q, k, v, batch, tokens, 2);
    ardt::nn::backward(ardt::nn::mean_all(out));
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_AttentionForwardBackward)->Arg(12)->Arg(30);

void BM_ExpectileLoss(benchmark::State& state) {
  Rng rng(3);
  Tensor u = Tensor::randn({4096}, rng, 1.0);
  for (auto _ : state) {
    u.zero_grad();
    Tensor loss = ardt::nn::expectile_loss(u, 0.01);
    ardt::nn::backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_ExpectileLoss);

}  // namespace
