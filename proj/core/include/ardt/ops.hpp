#pragma once

#include <cstdint>
#include <vector>

#include "ardt/rng.hpp"
#include "ardt/tensor.hpp"

namespace ardt::nn {

// Dense primitives. Shapes are checked and errors name the primitive.
// Unless stated otherwise, tensors are matrices [m, n] or vectors [n].

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add, or row-broadcast of a vector over a matrix.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form
Tensor tanh_op(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
// Row-wise softmax; outputs sum to 1 along the last axis.
Tensor softmax(const Tensor& x);

// Rows of `table` selected by index; also serves as embedding lookup.
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& indices);
Tensor embedding_gather(const Tensor& table,
                        const std::vector<std::size_t>& indices);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t len);
// Vertical stack of same-width matrices.
Tensor concat_rows(const std::vector<Tensor>& parts);

// Fused multi-head causal self-attention over a [batch*seq, dim] layout.
// Position i attends to positions <= i within its own sequence. `pad_mask`
// (optional, length batch*seq, 1 real / 0 pad) removes padded positions
// from the attended set entirely.
Tensor causal_self_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             std::size_t batch, std::size_t seq,
                             std::size_t heads,
                             const std::vector<double>* pad_mask = nullptr);

// Inverted dropout; training-time only (evaluation paths simply skip it).
Tensor dropout(const Tensor& x, double p, Rng& rng);

// Mean cross-entropy over rows, weighted per row (pad rows get weight 0).
Tensor cross_entropy(const Tensor& logits,
                     const std::vector<std::size_t>& targets,
                     const std::vector<double>* row_weights = nullptr);
// Mean squared error over all elements.
Tensor mse(const Tensor& pred, const Tensor& target);
// Mean over elements of |alpha - 1(u > 0)| * u^2; the indicator at u = 0
// contributes the (1 - alpha) branch weight times zero either way.
Tensor expectile_loss(const Tensor& residuals, double alpha);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Value copy cut off from the tape (fixed-parameter targets).
Tensor detach(const Tensor& x);

}  // namespace ardt::nn
