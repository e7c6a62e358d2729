#ifndef AA_NN_GRADCHECK_H_
#define AA_NN_GRADCHECK_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aa/nn/tensor.h"
#include "aa/rng.h"

namespace aa::nn {

struct GradCheckOptions {
  double step = 1e-5;
  // Tensors above this size are checked on a random sample of
  // `sample_size` elements instead of exhaustively.
  size_t exhaustive_limit = 4096;
  size_t sample_size = 1000;
  // Denominator floor so that gradients that are zero on both sides do not
  // turn round-off into a large relative error.
  double floor = 1e-6;
  uint64_t seed = 7;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  size_t checked = 0;
  std::string worst_tensor;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed() const { return max_rel_error < tolerance; }
};

struct NamedParam {
  std::string name;
  Tensor<double>* value;
  const Tensor<double>* analytic;
};

// Compares analytic gradients against central differences of `loss`, which
// must read the current parameter values each time it is called.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  const std::vector<NamedParam>& params, double tolerance,
                                  const GradCheckOptions& options = {}) {
  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(options.seed);
  for (const NamedParam& p : params) {
    require_same_shape(*p.value, *p.analytic, "grad_check");
    std::vector<size_t> elements;
    if (p.value->size() <= options.exhaustive_limit) {
      for (size_t i = 0; i < p.value->size(); ++i) elements.push_back(i);
    } else {
      for (size_t i = 0; i < options.sample_size; ++i) {
        elements.push_back(rng.below(p.value->size()));
      }
    }
    for (size_t i : elements) {
      double& x = (*p.value)[i];
      const double saved = x;
      x = saved + options.step;
      const double up = loss();
      x = saved - options.step;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = (*p.analytic)[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || std::isnan(rel)) {
        report.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        report.worst_tensor = p.name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace aa::nn

#endif  // AA_NN_GRADCHECK_H_
