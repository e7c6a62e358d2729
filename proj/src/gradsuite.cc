#include "aa/gradsuite.h"

#include <algorithm>

#include "aa/rng.h"

namespace aa {

namespace {

std::vector<int> random_tokens(Rng& rng, size_t length, size_t vocab) {
  std::vector<int> out(length);
  for (auto& t : out) t = 1 + static_cast<int>(rng.below(vocab - 1));
  return out;
}

}  // namespace

GradSuiteResult run_grad_suite(ModelKind kind, size_t instances, uint64_t seed,
                               double tolerance) {
  GradSuiteResult result;
  result.kind = kind;
  for (size_t n = 0; n < instances; ++n) {
    Rng rng(Rng::mix(seed, n));
    ModelDims dims;
    dims.kind = kind;
    dims.n_classes = 2 + rng.below(3);
    dims.char_vocab = 5 + rng.below(6);
    dims.char_dim = 2 + rng.below(4);
    dims.windows = {2, 3};
    dims.maps = 2 + rng.below(3);
    dims.activation = n % 2 == 0 ? nn::Activation::kRelu : nn::Activation::kTanh;
    if (kind == ModelKind::kCnn2De) {
      dims.disc_vocab = 4 + rng.below(5);
      dims.disc_dim = 2 + rng.below(3);
      dims.disc_windows = {1, 2};
      dims.disc_maps = 2 + rng.below(2);
    }
    if (kind == ModelKind::kCnn2Pv) dims.pv_dim = 3 + rng.below(5);

    auto params = init_params<double>(dims, rng.next());
    // Push weights away from the tiny initial scale so every path carries
    // gradient signal; padding rows stay zero.
    for (auto& [name, t] : params.tensors()) {
      for (size_t i = 0; i < t->size(); ++i) (*t)[i] += rng.uniform(-0.5, 0.5);
    }
    for (auto& v : params.char_emb.row(0)) v = 0.0;
    if (kind == ModelKind::kCnn2De) {
      for (auto& v : params.disc_emb.row(0)) v = 0.0;
    }

    ModelInput input;
    input.chars = random_tokens(rng, 6 + rng.below(5), dims.char_vocab);
    if (kind == ModelKind::kCnn2De) {
      input.disc = random_tokens(rng, 4 + rng.below(4), dims.disc_vocab);
    }
    if (kind == ModelKind::kCnn2Pv) {
      double total = 0.0;
      for (size_t i = 0; i < dims.pv_dim; ++i) {
        input.pv.push_back(rng.uniform());
        total += input.pv.back();
      }
      for (auto& p : input.pv) p /= total;
    }
    const size_t label = rng.below(dims.n_classes);
    const DropoutSpec dropout{true, 0.75, rng.next()};

    auto grad = ModelParams<double>::zeros(dims);
    loss_and_gradient(params, input, label, dropout, grad);
    std::vector<nn::NamedParam> named;
    auto values = params.tensors();
    auto grads = grad.tensors();
    for (size_t i = 0; i < values.size(); ++i) {
      named.push_back({values[i].first, values[i].second, grads[i].second});
    }
    const auto loss = [&] {
      auto scratch = ModelParams<double>::zeros(dims);
      return loss_and_gradient(params, input, label, dropout, scratch);
    };
    nn::GradCheckOptions options;
    options.seed = Rng::mix(seed, 1000 + n);
    result.instances.push_back(nn::grad_check(loss, named, tolerance, options));
    result.max_rel_error = std::max(result.max_rel_error, result.instances.back().max_rel_error);
  }
  return result;
}

}  // namespace aa
