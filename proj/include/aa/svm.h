#ifndef AA_SVM_H_
#define AA_SVM_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aa/featurize.h"

namespace aa {

struct SparseVector {
  std::vector<std::pair<uint32_t, double>> entries;  // strictly increasing indices
  size_t dim = 0;

  double dot(const std::vector<double>& dense) const;
  double squared_norm() const;
  SparseVector scaled(double factor) const;
};

// Character-bigram feature space built from training chunks only.
class BigramFeatures {
 public:
  BigramFeatures() = default;
  explicit BigramFeatures(const std::vector<std::string>& training_texts);

  size_t dim() const { return vocab_.size() - 2; }
  const Vocab& vocab() const { return vocab_; }

  // Raw bigram counts over the vocabulary, L2-normalised. Out-of-vocabulary
  // bigrams are ignored, so an all-OOV text maps to the zero vector.
  SparseVector counts(std::string_view text) const;

 private:
  Vocab vocab_;
};

// Appends the PV as a dense block after the existing dimensions.
SparseVector append_pv(const SparseVector& x, const ProbabilityVector& pv, size_t pv_dim);

struct SvmOptions {
  double tol = 1e-5;
  int max_iter = 1500;
  double c = 1.0;
};

struct LinearModel {
  size_t dim = 0;
  std::vector<std::vector<double>> weights;  // one row per class
  std::vector<double> bias;
  std::string stop_reason;                   // "tol" or "max_iter"
  int iterations = 0;                        // largest count over the sub-problems
  // Per class, the primal hinge objective of the best solution after each
  // pass over the data.
  std::vector<std::vector<double>> objective_trace;

  size_t n_classes() const { return weights.size(); }
};

// One-vs-rest L2-regularised hinge-loss SVM, solved per class by cyclic dual
// coordinate descent with the bias folded in as a constant feature.
LinearModel train_linear(const std::vector<SparseVector>& xs, const std::vector<int>& labels,
                         size_t n_classes, const SvmOptions& options = {});

struct SvmPrediction {
  int label = 0;
  std::vector<double> scores;
};

SvmPrediction predict(const LinearModel& model, const SparseVector& x);

void save_linear_model(const LinearModel& model, const nlohmann::json& meta,
                       const std::filesystem::path& path);
LinearModel load_linear_model(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace aa

#endif  // AA_SVM_H_
