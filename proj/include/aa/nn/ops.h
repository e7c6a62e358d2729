#ifndef AA_NN_OPS_H_
#define AA_NN_OPS_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aa/error.h"
#include "aa/nn/tensor.h"
#include "aa/rng.h"

namespace aa::nn {

enum class Activation { kRelu, kTanh };

// One filter bank per window size; weights[i] is maps x (windows[i] * input_dim),
// so filter j's weights over a window are a contiguous row.
template <typename T>
struct ConvBank {
  std::vector<int> windows;
  size_t maps = 0;
  size_t input_dim = 0;
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;

  static ConvBank zeros(std::vector<int> windows, size_t maps, size_t input_dim) {
    for (int w : windows) {
      if (w < 1) throw Error(ErrorKind::kConfig, "convolution window must be >= 1");
    }
    if (maps < 1) throw Error(ErrorKind::kConfig, "need at least one feature map");
    ConvBank bank;
    bank.windows = std::move(windows);
    bank.maps = maps;
    bank.input_dim = input_dim;
    for (int w : bank.windows) {
      bank.weights.emplace_back(std::vector<size_t>{maps, static_cast<size_t>(w) * input_dim});
      bank.biases.emplace_back(std::vector<size_t>{maps});
    }
    return bank;
  }

  int max_window() const {
    int m = 0;
    for (int w : windows) m = std::max(m, w);
    return m;
  }
  size_t output_dim() const { return windows.size() * maps; }
};

template <typename T>
Tensor<T> embed_lookup(std::span<const int> indices, const Tensor<T>& table) {
  const size_t dim = table.cols();
  Tensor<T> out({indices.size(), dim});
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<size_t>(idx) >= table.rows()) {
      throw Error(ErrorKind::kIndexOutOfRange,
                  "index " + std::to_string(idx) + " outside vocabulary of " +
                      std::to_string(table.rows()));
    }
    std::copy_n(table.data() + idx * dim, dim, out.data() + i * dim);
  }
  return out;
}

// Accumulates row gradients into the table gradient. The padding row stays
// frozen at its initial value.
template <typename T>
void embed_backward(std::span<const int> indices, const Tensor<T>& d_out, Tensor<T>& d_table,
                    int pad_index = 0) {
  const size_t dim = d_table.cols();
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] == pad_index) continue;
    T* dst = d_table.data() + indices[i] * dim;
    const T* src = d_out.data() + i * dim;
    for (size_t d = 0; d < dim; ++d) dst[d] += src[d];
  }
}

template <typename T>
T activate(T x, Activation act) {
  return act == Activation::kRelu ? (x > T(0) ? x : T(0)) : std::tanh(x);
}

// Derivative expressed through the activation's output.
template <typename T>
T activation_grad(T y, Activation act) {
  return act == Activation::kRelu ? (y > T(0) ? T(1) : T(0)) : T(1) - y * y;
}

// Valid, stride-1 convolution of a len x dim sequence. Returns one
// (len - w + 1) x maps activated feature map per window size.
template <typename T>
std::vector<Tensor<T>> conv1d_bank(const Tensor<T>& seq, const ConvBank<T>& bank,
                                   Activation act = Activation::kRelu) {
  const size_t len = seq.rows();
  const size_t dim = bank.input_dim;
  if (seq.cols() != dim && len > 0) {
    throw Error(ErrorKind::kShapeMismatch, "sequence width " + std::to_string(seq.cols()) +
                                               " vs filter input " + std::to_string(dim));
  }
  if (len < static_cast<size_t>(bank.max_window())) {
    throw Error(ErrorKind::kSequenceTooShort,
                "sequence of " + std::to_string(len) + " steps is shorter than window " +
                    std::to_string(bank.max_window()));
  }
  const size_t m = bank.maps;
  std::vector<Tensor<T>> maps;
  std::vector<T> transposed;
  for (size_t wi = 0; wi < bank.windows.size(); ++wi) {
    const size_t span = static_cast<size_t>(bank.windows[wi]) * dim;
    const Tensor<T>& w = bank.weights[wi];
    // Input-major copy of the filters so the inner loop runs over maps.
    transposed.assign(span * m, T(0));
    for (size_t j = 0; j < m; ++j) {
      for (size_t k = 0; k < span; ++k) transposed[k * m + j] = w(j, k);
    }
    const size_t steps = len - bank.windows[wi] + 1;
    Tensor<T> out({steps, m});
    const T* bias = bank.biases[wi].data();
    for (size_t t = 0; t < steps; ++t) {
      T* z = out.data() + t * m;
      std::copy_n(bias, m, z);
      const T* x = seq.data() + t * dim;
      for (size_t k = 0; k < span; ++k) {
        const T xk = x[k];
        if (xk == T(0)) continue;
        const T* wk = transposed.data() + k * m;
        for (size_t j = 0; j < m; ++j) z[j] += wk[j] * xk;
      }
      for (size_t j = 0; j < m; ++j) z[j] = activate(z[j], act);
    }
    maps.push_back(std::move(out));
  }
  return maps;
}

// Backward through activation and convolution. Positions whose map gradient
// is zero are skipped, which makes the pass proportional to the number of
// pooled positions after max-over-time.
template <typename T>
void conv1d_bank_backward(const Tensor<T>& seq, const ConvBank<T>& bank,
                          const std::vector<Tensor<T>>& maps,
                          const std::vector<Tensor<T>>& d_maps, Activation act,
                          ConvBank<T>& grad, Tensor<T>* d_seq) {
  const size_t dim = bank.input_dim;
  const size_t m = bank.maps;
  for (size_t wi = 0; wi < bank.windows.size(); ++wi) {
    const size_t span = static_cast<size_t>(bank.windows[wi]) * dim;
    const Tensor<T>& w = bank.weights[wi];
    Tensor<T>& dw = grad.weights[wi];
    Tensor<T>& db = grad.biases[wi];
    const size_t steps = maps[wi].rows();
    for (size_t t = 0; t < steps; ++t) {
      const T* x = seq.data() + t * dim;
      for (size_t j = 0; j < m; ++j) {
        const T g = d_maps[wi](t, j);
        if (g == T(0)) continue;
        const T dz = g * activation_grad(maps[wi](t, j), act);
        if (dz == T(0)) continue;
        db[j] += dz;
        T* dwj = dw.data() + j * span;
        for (size_t k = 0; k < span; ++k) dwj[k] += dz * x[k];
        if (d_seq) {
          const T* wj = w.data() + j * span;
          T* dx = d_seq->data() + t * dim;
          for (size_t k = 0; k < span; ++k) dx[k] += dz * wj[k];
        }
      }
    }
  }
}

template <typename T>
struct Pooled {
  std::vector<T> values;       // maps.size() * m entries, window-major
  std::vector<size_t> argmax;  // time step feeding each value
};

template <typename T>
Pooled<T> max_over_time(const std::vector<Tensor<T>>& maps) {
  Pooled<T> out;
  for (const Tensor<T>& map : maps) {
    if (map.rows() == 0) throw Error(ErrorKind::kEmptyMap, "feature map has no time steps");
    const size_t m = map.cols();
    for (size_t j = 0; j < m; ++j) {
      size_t best = 0;
      for (size_t t = 1; t < map.rows(); ++t) {
        if (map(t, j) > map(best, j)) best = t;  // strict: ties keep the earliest step
      }
      out.values.push_back(map(best, j));
      out.argmax.push_back(best);
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> max_over_time_backward(std::span<const T> d_pooled, const Pooled<T>& pooled,
                                              const std::vector<Tensor<T>>& maps) {
  std::vector<Tensor<T>> d_maps;
  size_t offset = 0;
  for (const Tensor<T>& map : maps) {
    Tensor<T> d(map.shape());
    for (size_t j = 0; j < map.cols(); ++j) {
      d(pooled.argmax[offset + j], j) = d_pooled[offset + j];
    }
    offset += map.cols();
    d_maps.push_back(std::move(d));
  }
  return d_maps;
}

// Inverted dropout. `mask` holds the per-element multiplier (0 or
// 1/keep_prob) so the backward pass is an elementwise product.
template <typename T>
struct DropoutResult {
  std::vector<T> values;
  std::vector<T> mask;
};

template <typename T>
DropoutResult<T> dropout(std::span<const T> input, double keep_prob, Rng& rng, bool training) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw Error(ErrorKind::kConfig, "keep_prob must be in (0, 1]");
  }
  DropoutResult<T> out;
  out.values.assign(input.begin(), input.end());
  out.mask.assign(input.size(), T(1));
  if (!training || keep_prob == 1.0) return out;
  const T scale = T(1) / static_cast<T>(keep_prob);
  for (size_t i = 0; i < input.size(); ++i) {
    out.mask[i] = rng.bernoulli(keep_prob) ? scale : T(0);
    out.values[i] *= out.mask[i];
  }
  return out;
}

template <typename T>
struct SoftmaxXent {
  T loss;
  std::vector<T> probs;
  std::vector<T> grad;  // d loss / d logits
};

template <typename T>
SoftmaxXent<T> softmax_xent(std::span<const T> logits, size_t label) {
  if (label >= logits.size()) {
    throw Error(ErrorKind::kIndexOutOfRange, "label " + std::to_string(label) +
                                                 " outside " + std::to_string(logits.size()) +
                                                 " classes");
  }
  T hi = -std::numeric_limits<T>::infinity();
  for (T v : logits) hi = std::max(hi, v);
  SoftmaxXent<T> out;
  out.probs.resize(logits.size());
  T total = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - hi);
    total += out.probs[i];
  }
  for (T& p : out.probs) p /= total;
  // log-sum-exp form keeps the loss finite even when probs underflow.
  out.loss = std::log(total) - (logits[label] - hi);
  out.grad = out.probs;
  out.grad[label] -= T(1);
  return out;
}

}  // namespace aa::nn

#endif  // AA_NN_OPS_H_
