#ifndef AA_NN_ADAM_H_
#define AA_NN_ADAM_H_

#include <cmath>
#include <cstdint>
#include <vector>

#include "aa/nn/tensor.h"

namespace aa::nn {

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t t = 0;
  std::vector<Tensor<T>> first;
  std::vector<Tensor<T>> second;
};

// One bias-corrected Adam update over every parameter tensor. Moments are
// created lazily on the first step.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, double lr = 0.001) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::kShapeMismatch, "parameter and gradient counts differ");
  }
  if (state.first.empty()) {
    for (const Tensor<T>* p : params) {
      state.first.emplace_back(p->shape());
      state.second.emplace_back(p->shape());
    }
  }
  if (state.first.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer state tracks a different parameter set");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "adam gradient");
    require_same_shape(*params[i], state.first[i], "adam moment");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T step = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(state.epsilon);
  for (size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    const T* g = grads[i]->data();
    T* m = state.first[i].data();
    T* v = state.second[i].data();
    const size_t n = params[i]->size();
    for (size_t k = 0; k < n; ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      p[k] -= step * m[k] / (std::sqrt(v[k] * inv_c2) + eps);
    }
  }
}

}  // namespace aa::nn

#endif  // AA_NN_ADAM_H_
