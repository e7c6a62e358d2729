#ifndef AA_HARNESS_H_
#define AA_HARNESS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aa/corpus.h"
#include "aa/featurize.h"
#include "aa/grid.h"
#include "aa/models.h"
#include "aa/svm.h"
#include "json.hpp"

namespace aa {

enum class DiscType { kNone, kGr, kRst };
enum class Reading { kNone, kLocal, kGlobal, kEduOrder };

std::string_view disc_type_name(DiscType d);
DiscType parse_disc_type(std::string_view s);
std::string_view reading_name(Reading r);
Reading parse_reading(std::string_view s);

// One row of the experimental grid: model x discourse type x reading.
struct ModelSpec {
  std::string model = "cnn2";  // cnn2 | cnn2-pv | cnn2-de | svm2 | svm2-pv
  DiscType disc = DiscType::kNone;
  Reading reading = Reading::kNone;
  GapMode gaps = GapMode::kCompress;
  TrainConfig train;
  SvmOptions svm;

  bool is_svm() const { return model == "svm2" || model == "svm2-pv"; }
  bool uses_pv() const { return model == "cnn2-pv" || model == "svm2-pv"; }
  bool uses_sequence() const { return model == "cnn2-de"; }
  void validate() const;  // throws ErrorKind::kConfig
  std::string label() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

struct AnnotatedDocument {
  Document doc;
  std::optional<AnnotationRecord> annotation;
};

std::vector<AnnotatedDocument> load_annotations(const std::vector<Document>& docs);

// A chunk with its chunk-scoped annotation.
struct Sample {
  std::string id;
  std::string doc_id;
  std::string author;
  std::string text;
  std::optional<AnnotationRecord> annotation;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> authors() const;  // sorted, unique
};

Dataset build_dataset(const std::vector<AnnotatedDocument>& docs, size_t chunk_size);

// Turns a sample's annotation into the grid-derived features a spec asks for.
class DiscourseFeaturizer {
 public:
  DiscourseFeaturizer(DiscType disc, Reading reading, GapMode gaps = GapMode::kCompress)
      : disc_(disc), reading_(reading), gaps_(gaps) {}

  DiscourseSequence sequence(const Sample& s) const;
  // Relation labels seen in the sample's RST grid (used to build the RST PV
  // vocabulary).
  std::vector<std::string> relation_labels(const Sample& s) const;
  // Empty when the grid has no transitions / relations.
  std::optional<ProbabilityVector> pv(const Sample& s, const Vocab& relation_vocab) const;
  size_t pv_dim(const Vocab& relation_vocab) const;

 private:
  const AnnotationRecord& annotation(const Sample& s) const;

  DiscType disc_;
  Reading reading_;
  GapMode gaps_;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(std::span<const Sample* const> train, std::span<const int> labels,
                   size_t n_classes, uint64_t seed) = 0;
  virtual std::vector<int> predict(std::span<const Sample* const> test) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

class CnnClassifier : public Classifier {
 public:
  explicit CnnClassifier(ModelSpec spec);
  void fit(std::span<const Sample* const> train, std::span<const int> labels, size_t n_classes,
           uint64_t seed) override;
  std::vector<int> predict(std::span<const Sample* const> test) const override;

  const ModelParams<float>& params() const { return params_; }
  const Vocab& char_vocab() const { return char_vocab_; }
  const Vocab& disc_vocab() const { return disc_vocab_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  nlohmann::json vocab_meta() const;

 private:
  ModelInput encode(const Sample& s) const;

  ModelSpec spec_;
  ModelKind kind_;
  DiscourseFeaturizer featurizer_;
  Vocab char_vocab_;
  Vocab disc_vocab_;
  Vocab relation_vocab_;
  size_t pv_dim_ = 0;
  ModelParams<float> params_;
  std::vector<double> loss_trace_;
};

class SvmClassifier : public Classifier {
 public:
  explicit SvmClassifier(ModelSpec spec);
  void fit(std::span<const Sample* const> train, std::span<const int> labels, size_t n_classes,
           uint64_t seed) override;
  std::vector<int> predict(std::span<const Sample* const> test) const override;

  const LinearModel& model() const { return model_; }

 private:
  SparseVector encode(const Sample& s) const;

  ModelSpec spec_;
  DiscourseFeaturizer featurizer_;
  BigramFeatures bigrams_;
  Vocab relation_vocab_;
  size_t pv_dim_ = 0;
  LinearModel model_;
};

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec);

struct FoldPlan {
  size_t k = 5;
  uint64_t seed = 0;
  std::vector<std::vector<std::string>> test_docs;  // per fold, sorted
  std::vector<std::vector<std::string>> train_ids;  // per fold, sample ids
  std::vector<std::vector<std::string>> test_ids;
  std::vector<size_t> fold_of_sample;  // parallel to Dataset::samples
};

// Document-level folds, stratified by author: each author's documents are
// shuffled and dealt round-robin, continuing the deal across authors so the
// per-fold document counts differ by at most one.
FoldPlan kfold_split(const Dataset& data, size_t k, uint64_t seed);

using Confusion = std::vector<std::vector<long>>;  // [true][predicted]

// Unweighted mean of per-class F1; a class with no true or predicted
// instances scores 0.
double macro_f1(const Confusion& confusion);
double accuracy(const Confusion& confusion);

struct ExperimentOptions {
  size_t k = 5;
  uint64_t seed = 1;
  int jobs = 1;
  bool oversample = false;
};

struct PairResult {
  std::string first, second;
  std::vector<double> folds;  // accuracy per fold
  double mean = 0.0;
};

struct ExperimentResult {
  std::string task;  // "multiclass" or "pairwise"
  std::string model;
  std::string disc_type = "none";
  std::string reading = "none";
  size_t chunk_size = 0;
  std::string metric;  // "macro_f1" or "accuracy"
  std::vector<std::string> classes;
  std::vector<double> folds;
  double mean = 0.0;
  Confusion confusion;  // summed over folds (multiclass)
  std::vector<Confusion> fold_confusions;
  std::vector<PairResult> pairs;
  size_t n_samples = 0;
};

void describe(ExperimentResult& result, const ModelSpec& spec, size_t chunk_size);

ExperimentResult run_multiclass(const Dataset& data, const ClassifierFactory& factory,
                                const ExperimentOptions& options);

// Every author pair gets its own cross-validation; fold accuracies are
// averaged per pair and the pair means are averaged.
ExperimentResult run_pairwise(const Dataset& data, const ClassifierFactory& factory,
                              const ExperimentOptions& options);

std::vector<size_t> default_sweep_sizes();  // 200, 400, ..., 2000

struct SweepRow {
  size_t size = 0;
  std::string model;
  std::string disc_type;
  std::string reading;
  size_t n_chunks = 0;
  double macro_f1 = 0.0;
  ExperimentResult result;
};

std::vector<SweepRow> chunk_sweep(const std::vector<AnnotatedDocument>& docs,
                                  const std::vector<size_t>& sizes,
                                  const std::vector<ModelSpec>& specs,
                                  const ExperimentOptions& options);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct Neighbor {
  std::string token;
  double similarity = 0.0;
};

// Cosine neighbours of a token's embedding row, excluding the token itself,
// PAD and UNK; ties break lexicographically.
std::vector<Neighbor> nearest_neighbors(const nn::Tensor<float>& embeddings, const Vocab& vocab,
                                        std::string_view token, size_t top_k = 5);

nlohmann::json result_to_json(const ExperimentResult& result);

// Flat rows: experiment,model,disc_type,reading,size,fold,metric,value
std::string results_csv_header();
std::string results_csv_rows(const std::string& experiment, const ExperimentResult& result);

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& body);

}  // namespace aa

#endif  // AA_HARNESS_H_
