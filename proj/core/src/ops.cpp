#include "ardt/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace ardt::nn {
namespace {

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>;

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string(op) + ": bad shape " +
                              a.shape_string());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              a.shape_string() + " vs " + b.shape_string());
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) shape_error(op, t);
}

// Elementwise unary op with derivative expressed in terms of (x, y).
template <typename Fwd, typename Bwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Bwd bwd) {
  (void)name;
  Tensor out = make_op_result(
      x.shape(), {x},
      [x, bwd](detail::TensorNode& node) {
        auto* xn = x.raw();
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < node.values.size(); ++i) {
          xn->grad[i] += node.grad[i] * bwd(xn->values[i], node.values[i]);
        }
      });
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = fwd(src[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Tensor out = make_op_result(
      {a.dim(0), b.dim(1)}, {a, b},
      [a, b, m, k, n](detail::TensorNode& node) {
        ConstMatMap g(node.grad.data(), m, n);
        if (a.requires_grad()) {
          ConstMatMap bm(b.raw()->values.data(), k, n);
          MatMap ga(a.raw()->grad.data(), m, k);
          ga.noalias() += g * bm.transpose();
        }
        if (b.requires_grad()) {
          ConstMatMap am(a.raw()->values.data(), m, k);
          MatMap gb(b.raw()->grad.data(), k, n);
          gb.noalias() += am.transpose() * g;
        }
      });
  ConstMatMap am(a.data().data(), m, k);
  ConstMatMap bm(b.data().data(), k, n);
  MatMap om(out.data().data(), m, n);
  om.noalias() = am * bm;
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool row_broadcast =
      a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0);
  if (!same && !row_broadcast) shape_error("add", a, b);
  Tensor out = make_op_result(
      a.shape(), {a, b},
      [a, b, same](detail::TensorNode& node) {
        if (a.requires_grad()) {
          for (std::size_t i = 0; i < node.grad.size(); ++i) {
            a.raw()->grad[i] += node.grad[i];
          }
        }
        if (b.requires_grad()) {
          if (same) {
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
              b.raw()->grad[i] += node.grad[i];
            }
          } else {
            const std::size_t n = b.raw()->values.size();
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
              b.raw()->grad[i % n] += node.grad[i];
            }
          }
        }
      });
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  if (same) {
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  } else {
    const std::size_t n = bv.size();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i % n];
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_op_result(
      a.shape(), {a},
      [a, c](detail::TensorNode& node) {
        if (!a.requires_grad()) return;
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
          a.raw()->grad[i] += node.grad[i] * c;
        }
      });
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  Tensor out = make_op_result(
      a.shape(), {a, b},
      [a, b](detail::TensorNode& node) {
        if (a.requires_grad()) {
          for (std::size_t i = 0; i < node.grad.size(); ++i) {
            a.raw()->grad[i] += node.grad[i] * b.raw()->values[i];
          }
        }
        if (b.requires_grad()) {
          for (std::size_t i = 0; i < node.grad.size(); ++i) {
            b.raw()->grad[i] += node.grad[i] * a.raw()->values[i];
          }
        }
      });
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  return out;
}

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_op(
      "gelu", x,
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        return cdf + v * pdf;
      });
}

Tensor tanh_op(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  require_matrix("layer_norm", x);
  if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != x.dim(1) ||
      bias.dim(0) != x.dim(1)) {
    shape_error("layer_norm", x, gain);
  }
  const std::size_t m = x.dim(0), n = x.dim(1);
  // Cache per-row mean and inverse stddev for the backward pass.
  auto stats = std::make_shared<std::vector<double>>(2 * m);
  Tensor out = make_op_result(
      x.shape(), {x, gain, bias},
      [x, gain, bias, stats, m, n](detail::TensorNode& node) {
        const auto& xv = x.raw()->values;
        const auto& gv = gain.raw()->values;
        for (std::size_t r = 0; r < m; ++r) {
          const double mean = (*stats)[2 * r];
          const double inv_std = (*stats)[2 * r + 1];
          const double* xr = xv.data() + r * n;
          const double* gr = node.grad.data() + r * n;
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            const double xhat = (xr[c] - mean) * inv_std;
            const double dxhat = gr[c] * gv[c];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            if (gain.requires_grad()) gain.raw()->grad[c] += gr[c] * xhat;
            if (bias.requires_grad()) bias.raw()->grad[c] += gr[c];
          }
          if (x.requires_grad()) {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t c = 0; c < n; ++c) {
              const double xhat = (xr[c] - mean) * inv_std;
              const double dxhat = gr[c] * gv[c];
              x.raw()->grad[r * n + c] +=
                  inv_std * (dxhat - inv_n * sum_dxhat -
                             xhat * inv_n * sum_dxhat_xhat);
            }
          }
        }
      });
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  auto ov = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = xv.data() + r * n;
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += xr[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    (*stats)[2 * r] = mean;
    (*stats)[2 * r + 1] = inv_std;
    for (std::size_t c = 0; c < n; ++c) {
      ov[r * n + c] = (xr[c] - mean) * inv_std * gv[c] + bv[c];
    }
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  require_matrix("softmax", x);
  const std::size_t m = x.dim(0), n = x.dim(1);
  Tensor out = make_op_result(
      x.shape(), {x},
      [x, m, n](detail::TensorNode& node) {
        if (!x.requires_grad()) return;
        for (std::size_t r = 0; r < m; ++r) {
          const double* p = node.values.data() + r * n;
          const double* g = node.grad.data() + r * n;
          double dot = 0.0;
          for (std::size_t c = 0; c < n; ++c) dot += p[c] * g[c];
          for (std::size_t c = 0; c < n; ++c) {
            x.raw()->grad[r * n + c] += p[c] * (g[c] - dot);
          }
        }
      });
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = xv.data() + r * n;
    double mx = xr[0];
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double e = std::exp(xr[c] - mx);
      ov[r * n + c] = e;
      sum += e;
    }
    for (std::size_t c = 0; c < n; ++c) ov[r * n + c] /= sum;
  }
  return out;
}

Tensor gather_rows(const Tensor& table,
                   const std::vector<std::size_t>& indices) {
  require_matrix("gather_rows", table);
  const std::size_t n = table.dim(1);
  for (const std::size_t i : indices) {
    if (i >= table.dim(0)) {
      throw std::invalid_argument("gather_rows: index out of range");
    }
  }
  Tensor out = make_op_result(
      {indices.size(), n}, {table},
      [table, indices, n](detail::TensorNode& node) {
        if (!table.requires_grad()) return;
        for (std::size_t r = 0; r < indices.size(); ++r) {
          double* dst = table.raw()->grad.data() + indices[r] * n;
          const double* src = node.grad.data() + r * n;
          for (std::size_t c = 0; c < n; ++c) dst[c] += src[c];
        }
      });
  auto tv = table.data();
  auto ov = out.data();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = tv.data() + indices[r] * n;
    std::copy(src, src + n, ov.data() + r * n);
  }
  return out;
}

Tensor embedding_gather(const Tensor& table,
                        const std::vector<std::size_t>& indices) {
  return gather_rows(table, indices);
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t len) {
  require_matrix("slice_cols", x);
  if (start + len > x.dim(1)) {
    throw std::invalid_argument("slice_cols: range out of bounds for " +
                                x.shape_string());
  }
  const std::size_t m = x.dim(0), n = x.dim(1);
  Tensor out = make_op_result(
      {m, len}, {x},
      [x, start, len, m, n](detail::TensorNode& node) {
        if (!x.requires_grad()) return;
        for (std::size_t r = 0; r < m; ++r) {
          double* dst = x.raw()->grad.data() + r * n + start;
          const double* src = node.grad.data() + r * len;
          for (std::size_t c = 0; c < len; ++c) dst[c] += src[c];
        }
      });
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* src = xv.data() + r * n + start;
    std::copy(src, src + len, ov.data() + r * len);
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    throw std::invalid_argument("concat_rows: no inputs");
  }
  const std::size_t n = parts[0].rank() == 2 ? parts[0].dim(1) : 0;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_matrix("concat_rows", p);
    if (p.dim(1) != n) shape_error("concat_rows", parts[0], p);
    rows += p.dim(0);
  }
  Tensor out = make_op_result(
      {rows, n}, parts,
      [parts, n](detail::TensorNode& node) {
        std::size_t row = 0;
        for (const auto& p : parts) {
          const std::size_t count = p.dim(0) * n;
          if (p.requires_grad()) {
            const double* src = node.grad.data() + row * n;
            for (std::size_t i = 0; i < count; ++i) {
              p.raw()->grad[i] += src[i];
            }
          }
          row += p.dim(0);
        }
      });
  auto ov = out.data();
  std::size_t row = 0;
  for (const auto& p : parts) {
    const auto pv = p.data();
    std::copy(pv.begin(), pv.end(), ov.data() + row * n);
    row += p.dim(0);
  }
  return out;
}

Tensor causal_self_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             std::size_t batch, std::size_t seq,
                             std::size_t heads,
                             const std::vector<double>* pad_mask) {
  require_matrix("causal_self_attention", q);
  if (q.shape() != k.shape() || q.shape() != v.shape()) {
    shape_error("causal_self_attention", q, k);
  }
  const std::size_t dim = q.dim(1);
  if (q.dim(0) != batch * seq || heads == 0 || dim % heads != 0) {
    throw std::invalid_argument(
        "causal_self_attention: layout mismatch for " + q.shape_string());
  }
  if (pad_mask != nullptr && pad_mask->size() != batch * seq) {
    throw std::invalid_argument("causal_self_attention: pad mask length");
  }
  const std::size_t hd = dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  // Attention probabilities are kept for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(batch * heads * seq * seq,
                                                     0.0);
  std::vector<double> mask_copy;
  if (pad_mask != nullptr) mask_copy = *pad_mask;

  Tensor out = make_op_result(
      q.shape(), {q, k, v},
      [q, k, v, probs, batch, seq, heads, hd, dim,
       inv_sqrt](detail::TensorNode& node) {
        std::vector<double> dp(seq * seq);
        std::vector<double> ds(seq * seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* p = probs->data() + (b * heads + h) * seq * seq;
            const auto row0 = b * seq;
            const auto col0 = h * hd;
            const auto idx = [&](std::size_t t, std::size_t c) {
              return (row0 + t) * dim + col0 + c;
            };
            // dP = dO V^T ; dV += P^T dO
            for (std::size_t i = 0; i < seq; ++i) {
              for (std::size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < hd; ++c) {
                  acc += node.grad[idx(i, c)] * v.raw()->values[idx(j, c)];
                }
                dp[i * seq + j] = acc;
              }
            }
            if (v.requires_grad()) {
              for (std::size_t j = 0; j < seq; ++j) {
                for (std::size_t c = 0; c < hd; ++c) {
                  double acc = 0.0;
                  for (std::size_t i = j; i < seq; ++i) {
                    acc += p[i * seq + j] * node.grad[idx(i, c)];
                  }
                  v.raw()->grad[idx(j, c)] += acc;
                }
              }
            }
            // dS = P o (dP - rowdot(dP, P))
            for (std::size_t i = 0; i < seq; ++i) {
              double dot = 0.0;
              for (std::size_t j = 0; j <= i; ++j) {
                dot += dp[i * seq + j] * p[i * seq + j];
              }
              for (std::size_t j = 0; j <= i; ++j) {
                ds[i * seq + j] =
                    p[i * seq + j] * (dp[i * seq + j] - dot) * inv_sqrt;
              }
            }
            if (q.requires_grad()) {
              for (std::size_t i = 0; i < seq; ++i) {
                for (std::size_t c = 0; c < hd; ++c) {
                  double acc = 0.0;
                  for (std::size_t j = 0; j <= i; ++j) {
                    acc += ds[i * seq + j] * k.raw()->values[idx(j, c)];
                  }
                  q.raw()->grad[idx(i, c)] += acc;
                }
              }
            }
            if (k.requires_grad()) {
              for (std::size_t j = 0; j < seq; ++j) {
                for (std::size_t c = 0; c < hd; ++c) {
                  double acc = 0.0;
                  for (std::size_t i = j; i < seq; ++i) {
                    acc += ds[i * seq + j] * q.raw()->values[idx(i, c)];
                  }
                  k.raw()->grad[idx(j, c)] += acc;
                }
              }
            }
          }
        }
      });

  auto qv = q.data();
  auto kv = k.data();
  auto vv = v.data();
  auto ov = out.data();
  std::vector<double> scores(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* p = probs->data() + (b * heads + h) * seq * seq;
      const auto row0 = b * seq;
      const auto col0 = h * hd;
      const auto idx = [&](std::size_t t, std::size_t c) {
        return (row0 + t) * dim + col0 + c;
      };
      for (std::size_t i = 0; i < seq; ++i) {
        const bool i_is_pad =
            pad_mask != nullptr && mask_copy[row0 + i] == 0.0;
        double mx = -1e300;
        for (std::size_t j = 0; j <= i; ++j) {
          if (pad_mask != nullptr && mask_copy[row0 + j] == 0.0) {
            scores[j] = -1e300;
            continue;
          }
          double acc = 0.0;
          for (std::size_t c = 0; c < hd; ++c) {
            acc += qv[idx(i, c)] * kv[idx(j, c)];
          }
          scores[j] = acc * inv_sqrt;
          mx = std::max(mx, scores[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double e = scores[j] <= -1e300 ? 0.0 : std::exp(scores[j] - mx);
          p[i * seq + j] = e;
          sum += e;
        }
        // A fully-padded prefix row attends to nothing; emit zeros.
        const double inv_sum = (sum > 0.0 && !i_is_pad) ? 1.0 / sum : 0.0;
        for (std::size_t j = 0; j <= i; ++j) p[i * seq + j] *= inv_sum;
        for (std::size_t c = 0; c < hd; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j <= i; ++j) {
            acc += p[i * seq + j] * vv[idx(j, c)];
          }
          ov[idx(i, c)] = acc;
        }
      }
    }
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0, 1)");
  }
  if (p == 0.0) return x;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (auto& m : *mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = make_op_result(
      x.shape(), {x},
      [x, mask](detail::TensorNode& node) {
        if (!x.requires_grad()) return;
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
          x.raw()->grad[i] += node.grad[i] * (*mask)[i];
        }
      });
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * (*mask)[i];
  return out;
}

Tensor cross_entropy(const Tensor& logits,
                     const std::vector<std::size_t>& targets,
                     const std::vector<double>* row_weights) {
  require_matrix("cross_entropy", logits);
  const std::size_t m = logits.dim(0), n = logits.dim(1);
  if (targets.size() != m) {
    throw std::invalid_argument("cross_entropy: target count mismatch");
  }
  for (const std::size_t t : targets) {
    if (t >= n) throw std::invalid_argument("cross_entropy: class out of range");
  }
  if (row_weights != nullptr && row_weights->size() != m) {
    throw std::invalid_argument("cross_entropy: weight count mismatch");
  }
  auto probs = std::make_shared<std::vector<double>>(m * n);
  auto weights = std::make_shared<std::vector<double>>(
      row_weights != nullptr ? *row_weights : std::vector<double>(m, 1.0));
  double weight_sum = 0.0;
  for (const double w : *weights) weight_sum += w;
  if (weight_sum <= 0.0) {
    throw std::invalid_argument("cross_entropy: all rows have zero weight");
  }

  Tensor out = make_op_result(
      {1}, {logits},
      [logits, targets, probs, weights, weight_sum, m, n](
          detail::TensorNode& node) {
        if (!logits.requires_grad()) return;
        const double g = node.grad[0] / weight_sum;
        for (std::size_t r = 0; r < m; ++r) {
          const double w = (*weights)[r];
          if (w == 0.0) continue;
          for (std::size_t c = 0; c < n; ++c) {
            const double indicator = c == targets[r] ? 1.0 : 0.0;
            logits.raw()->grad[r * n + c] +=
                g * w * ((*probs)[r * n + c] - indicator);
          }
        }
      });

  auto lv = logits.data();
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = lv.data() + r * n;
    double mx = row[0];
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += std::exp(row[c] - mx);
    const double log_z = mx + std::log(sum);
    for (std::size_t c = 0; c < n; ++c) {
      (*probs)[r * n + c] = std::exp(row[c] - log_z);
    }
    loss += (*weights)[r] * (log_z - row[targets[r]]);
  }
  out.data()[0] = loss / weight_sum;
  return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) shape_error("mse", pred, target);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  Tensor out = make_op_result(
      {1}, {pred, target},
      [pred, target, inv_n](detail::TensorNode& node) {
        const double g = node.grad[0] * 2.0 * inv_n;
        for (std::size_t i = 0; i < pred.raw()->values.size(); ++i) {
          const double d = pred.raw()->values[i] - target.raw()->values[i];
          if (pred.requires_grad()) pred.raw()->grad[i] += g * d;
          if (target.requires_grad()) target.raw()->grad[i] -= g * d;
        }
      });
  auto pv = pred.data();
  auto tv = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  out.data()[0] = acc * inv_n;
  return out;
}

Tensor expectile_loss(const Tensor& residuals, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("expectile_loss: alpha must be in (0, 1)");
  }
  const double inv_n = 1.0 / static_cast<double>(residuals.size());
  Tensor out = make_op_result(
      {1}, {residuals},
      [residuals, alpha, inv_n](detail::TensorNode& node) {
        if (!residuals.requires_grad()) return;
        const double g = node.grad[0] * 2.0 * inv_n;
        for (std::size_t i = 0; i < residuals.raw()->values.size(); ++i) {
          const double u = residuals.raw()->values[i];
          const double w = std::abs(alpha - (u > 0.0 ? 1.0 : 0.0));
          residuals.raw()->grad[i] += g * w * u;
        }
      });
  auto uv = residuals.data();
  double acc = 0.0;
  for (const double u : uv) {
    const double w = std::abs(alpha - (u > 0.0 ? 1.0 : 0.0));
    acc += w * u * u;
  }
  out.data()[0] = acc * inv_n;
  return out;
}

Tensor sum_all(const Tensor& x) {
  Tensor out = make_op_result(
      {1}, {x},
      [x](detail::TensorNode& node) {
        if (!x.requires_grad()) return;
        for (auto& g : x.raw()->grad) g += node.grad[0];
      });
  double acc = 0.0;
  for (const double v : x.data()) acc += v;
  out.data()[0] = acc;
  return out;
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor detach(const Tensor& x) {
  return Tensor::from_values(x.shape(),
                             std::vector<double>(x.data().begin(),
                                                 x.data().end()),
                             false);
}

}  // namespace ardt::nn
