#ifndef AA_GRADSUITE_H_
#define AA_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "aa/models.h"
#include "aa/nn/gradcheck.h"

namespace aa {

struct GradSuiteResult {
  ModelKind kind = ModelKind::kCnn2;
  std::vector<nn::GradCheckReport> instances;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Finite-difference check of loss_and_gradient in double precision on
// `instances` random tiny models (random shapes, weights, inputs, labels and
// dropout masks). Inputs avoid the padding index, whose row is frozen.
GradSuiteResult run_grad_suite(ModelKind kind, size_t instances, uint64_t seed,
                               double tolerance = 1e-4);

}  // namespace aa

#endif  // AA_GRADSUITE_H_
