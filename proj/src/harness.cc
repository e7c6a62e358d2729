#include "aa/harness.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "aa/error.h"
#include "aa/rng.h"

namespace aa {

std::string_view disc_type_name(DiscType d) {
  switch (d) {
    case DiscType::kNone: return "none";
    case DiscType::kGr: return "gr";
    case DiscType::kRst: return "rst";
  }
  return "none";
}

DiscType parse_disc_type(std::string_view s) {
  if (s == "none") return DiscType::kNone;
  if (s == "gr") return DiscType::kGr;
  if (s == "rst") return DiscType::kRst;
  throw Error(ErrorKind::kConfig, "unknown discourse type '" + std::string(s) + "'");
}

std::string_view reading_name(Reading r) {
  switch (r) {
    case Reading::kNone: return "none";
    case Reading::kLocal: return "local";
    case Reading::kGlobal: return "global";
    case Reading::kEduOrder: return "edu-order";
  }
  return "none";
}

Reading parse_reading(std::string_view s) {
  if (s == "none") return Reading::kNone;
  if (s == "local") return Reading::kLocal;
  if (s == "global") return Reading::kGlobal;
  if (s == "edu-order") return Reading::kEduOrder;
  throw Error(ErrorKind::kConfig, "unknown reading '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, what); };
  static const std::set<std::string> known = {"cnn2", "cnn2-pv", "cnn2-de", "svm2", "svm2-pv"};
  if (!known.count(model)) fail("unknown model '" + model + "'");
  if (disc == DiscType::kNone && reading != Reading::kNone) {
    fail("a reading only applies to discourse features (disc is none)");
  }
  if ((model == "cnn2" || model == "svm2") && disc != DiscType::kNone) {
    fail(model + " takes no discourse features; use " + model + "-pv or cnn2-de");
  }
  if (uses_pv()) {
    if (disc == DiscType::kNone) fail(model + " requires --disc gr or --disc rst");
    if (reading != Reading::kNone) fail("probability vectors have no reading");
  }
  if (uses_sequence()) {
    if (disc == DiscType::kNone) fail("cnn2-de requires --disc gr or --disc rst");
    if (reading == Reading::kNone) fail("cnn2-de requires --reading local, global or edu-order");
    if (reading == Reading::kEduOrder && disc != DiscType::kRst) {
      fail("the edu-order reading is defined for RST relations only");
    }
  }
  if (!is_svm()) train.validate();
}

std::string ModelSpec::label() const {
  std::string out = model;
  if (disc != DiscType::kNone) {
    out += "(" + std::string(disc_type_name(disc));
    if (reading != Reading::kNone) out += "," + std::string(reading_name(reading));
    out += ")";
  }
  return out;
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["disc"] = std::string(disc_type_name(disc));
  j["reading"] = std::string(reading_name(reading));
  j["gaps"] = gaps == GapMode::kCompress ? "compress" : "adjacent";
  j["train"] = train.to_json();
  j["svm"] = {{"tol", svm.tol}, {"max_iter", svm.max_iter}, {"c", svm.c}};
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.model = j.value("model", s.model);
  s.disc = parse_disc_type(j.value("disc", std::string("none")));
  s.reading = parse_reading(j.value("reading", std::string("none")));
  s.gaps = j.value("gaps", std::string("compress")) == "adjacent" ? GapMode::kAdjacentOnly
                                                                  : GapMode::kCompress;
  if (j.contains("train")) s.train = TrainConfig::from_json(j["train"]);
  if (j.contains("svm")) {
    s.svm.tol = j["svm"].value("tol", s.svm.tol);
    s.svm.max_iter = j["svm"].value("max_iter", s.svm.max_iter);
    s.svm.c = j["svm"].value("c", s.svm.c);
  }
  return s;
}

std::vector<AnnotatedDocument> load_annotations(const std::vector<Document>& docs) {
  std::vector<AnnotatedDocument> out;
  out.reserve(docs.size());
  for (const Document& d : docs) {
    AnnotatedDocument ad{d, std::nullopt};
    if (d.annotation_ref) ad.annotation = load_annotation(*d.annotation_ref);
    out.push_back(std::move(ad));
  }
  return out;
}

std::vector<std::string> Dataset::authors() const {
  std::set<std::string> s;
  for (const auto& x : samples) s.insert(x.author);
  return {s.begin(), s.end()};
}

Dataset build_dataset(const std::vector<AnnotatedDocument>& docs, size_t chunk_size) {
  Dataset data;
  for (const AnnotatedDocument& ad : docs) {
    const std::vector<Chunk> chunks = chunk_document(ad.doc, chunk_size);
    const size_t total_words = split_words(ad.doc.text).size();
    for (const Chunk& c : chunks) {
      Sample s;
      s.id = c.id();
      s.doc_id = c.doc_id;
      s.author = c.author;
      s.text = c.char_text;
      if (ad.annotation) {
        s.annotation =
            scope_to_words(*ad.annotation, c.word_begin, c.word_begin + c.words.size(), total_words);
      }
      data.samples.push_back(std::move(s));
    }
  }
  return data;
}

const AnnotationRecord& DiscourseFeaturizer::annotation(const Sample& s) const {
  if (!s.annotation) {
    throw Error(ErrorKind::kMissingFile,
                "sample '" + s.id + "' has no annotation but discourse features were requested");
  }
  return *s.annotation;
}

DiscourseSequence DiscourseFeaturizer::sequence(const Sample& s) const {
  const AnnotationRecord& ann = annotation(s);
  if (disc_ == DiscType::kGr) {
    const EntityGrid grid = build_gr_grid(ann);
    if (reading_ == Reading::kLocal) return gr_de_local(grid);
    if (reading_ == Reading::kGlobal) return gr_de_global(grid, gaps_);
  } else if (disc_ == DiscType::kRst) {
    if (reading_ == Reading::kEduOrder) return rst_de_edu_order(ann);
    const RstGrid grid = build_rst_grid(ann);
    if (reading_ == Reading::kLocal) return rst_de_local(grid);
    if (reading_ == Reading::kGlobal) return rst_de_global(grid);
  }
  throw Error(ErrorKind::kConfig, "no discourse sequence for disc '" +
                                      std::string(disc_type_name(disc_)) + "', reading '" +
                                      std::string(reading_name(reading_)) + "'");
}

std::vector<std::string> DiscourseFeaturizer::relation_labels(const Sample& s) const {
  std::vector<std::string> out;
  if (disc_ != DiscType::kRst) return out;
  const RstGrid grid = build_rst_grid(annotation(s));
  for (const auto& row : grid.cells) {
    for (const auto& cell : row) {
      for (const auto& label : cell) out.push_back(label.render());
    }
  }
  return out;
}

std::optional<ProbabilityVector> DiscourseFeaturizer::pv(const Sample& s,
                                                         const Vocab& relation_vocab) const {
  const AnnotationRecord& ann = annotation(s);
  try {
    if (disc_ == DiscType::kGr) return gr_transition_pv(build_gr_grid(ann));
    if (disc_ == DiscType::kRst) return rst_pv(build_rst_grid(ann), relation_vocab);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInsufficientContext) return std::nullopt;
    throw;
  }
  throw Error(ErrorKind::kConfig, "probability vectors need disc gr or rst");
}

size_t DiscourseFeaturizer::pv_dim(const Vocab& relation_vocab) const {
  return disc_ == DiscType::kGr ? gr_transition_labels().size() : relation_vocab.size() - 1;
}

namespace {

std::vector<double> pv_or_zeros(const std::optional<ProbabilityVector>& pv, size_t dim) {
  if (!pv) return std::vector<double>(dim, 0.0);
  if (pv->size() != dim) {
    throw Error(ErrorKind::kDimensionMismatch, "probability vector length changed");
  }
  return pv->probs;
}

Vocab relation_vocab_for(const DiscourseFeaturizer& f, std::span<const Sample* const> train) {
  std::vector<DiscourseSequence> seqs;
  for (const Sample* s : train) seqs.push_back({f.relation_labels(*s)});
  return build_vocab(seqs, 1);
}

ProbabilityVector as_pv(std::vector<double> probs) {
  ProbabilityVector pv;
  pv.labels.resize(probs.size());
  pv.probs = std::move(probs);
  return pv;
}

}  // namespace

CnnClassifier::CnnClassifier(ModelSpec spec)
    : spec_(std::move(spec)),
      kind_(parse_model_kind(spec_.model)),
      featurizer_(spec_.disc, spec_.reading, spec_.gaps) {
  spec_.validate();
}

ModelInput CnnClassifier::encode(const Sample& s) const {
  const TrainConfig& cfg = spec_.train;
  ModelInput in;
  in.chars = pad_or_truncate(char_vocab_.encode(char_bigrams(s.text).tokens), cfg.max_char_len,
                             kPadIndex);
  if (kind_ == ModelKind::kCnn2De) {
    in.disc = pad_or_truncate(disc_vocab_.encode(featurizer_.sequence(s).tokens),
                              cfg.max_disc_len, kPadIndex);
  } else if (kind_ == ModelKind::kCnn2Pv) {
    in.pv = pv_or_zeros(featurizer_.pv(s, relation_vocab_), pv_dim_);
  }
  return in;
}

void CnnClassifier::fit(std::span<const Sample* const> train, std::span<const int> labels,
                        size_t n_classes, uint64_t seed) {
  std::vector<DiscourseSequence> bigram_seqs;
  for (const Sample* s : train) bigram_seqs.push_back({char_bigrams(s->text).tokens});
  char_vocab_ = build_vocab(bigram_seqs, 1);
  if (kind_ == ModelKind::kCnn2De) {
    std::vector<DiscourseSequence> seqs;
    for (const Sample* s : train) seqs.push_back(featurizer_.sequence(*s));
    disc_vocab_ = build_vocab(seqs, 1);
  }
  if (kind_ == ModelKind::kCnn2Pv) {
    relation_vocab_ = relation_vocab_for(featurizer_, train);
    pv_dim_ = featurizer_.pv_dim(relation_vocab_);
  }
  std::vector<Example> examples;
  examples.reserve(train.size());
  for (size_t i = 0; i < train.size(); ++i) examples.push_back({encode(*train[i]), labels[i]});
  TrainConfig cfg = spec_.train;
  cfg.seed = seed;
  const ModelDims dims =
      make_dims(kind_, cfg, n_classes, char_vocab_.size(), disc_vocab_.size(), pv_dim_);
  TrainResult r = aa::train(dims, examples, cfg);
  params_ = std::move(r.params);
  loss_trace_ = std::move(r.epoch_loss);
}

std::vector<int> CnnClassifier::predict(std::span<const Sample* const> test) const {
  std::vector<int> out;
  out.reserve(test.size());
  for (const Sample* s : test) out.push_back(predict_class(params_, encode(*s)));
  return out;
}

nlohmann::json CnnClassifier::vocab_meta() const {
  nlohmann::json j;
  j["char_vocab"] = char_vocab_.tokens();
  j["char_vocab_hash"] = char_vocab_.hash();
  j["disc_vocab"] = disc_vocab_.tokens();
  j["disc_vocab_hash"] = disc_vocab_.hash();
  j["relation_vocab"] = relation_vocab_.tokens();
  j["relation_vocab_hash"] = relation_vocab_.hash();
  j["spec"] = spec_.to_json();
  return j;
}

SvmClassifier::SvmClassifier(ModelSpec spec)
    : spec_(std::move(spec)), featurizer_(spec_.disc, spec_.reading, spec_.gaps) {
  spec_.validate();
}

SparseVector SvmClassifier::encode(const Sample& s) const {
  SparseVector x = bigrams_.counts(s.text);
  if (spec_.uses_pv()) {
    x = append_pv(x, as_pv(pv_or_zeros(featurizer_.pv(s, relation_vocab_), pv_dim_)), pv_dim_);
  }
  return x;
}

void SvmClassifier::fit(std::span<const Sample* const> train, std::span<const int> labels,
                        size_t n_classes, uint64_t) {
  std::vector<std::string> texts;
  for (const Sample* s : train) texts.push_back(s->text);
  bigrams_ = BigramFeatures(texts);
  if (spec_.uses_pv()) {
    relation_vocab_ = relation_vocab_for(featurizer_, train);
    pv_dim_ = featurizer_.pv_dim(relation_vocab_);
  }
  std::vector<SparseVector> xs;
  xs.reserve(train.size());
  for (const Sample* s : train) xs.push_back(encode(*s));
  model_ = train_linear(xs, std::vector<int>(labels.begin(), labels.end()), n_classes, spec_.svm);
}

std::vector<int> SvmClassifier::predict(std::span<const Sample* const> test) const {
  std::vector<int> out;
  for (const Sample* s : test) out.push_back(aa::predict(model_, encode(*s)).label);
  return out;
}

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec) {
  if (spec.is_svm()) return std::make_unique<SvmClassifier>(spec);
  return std::make_unique<CnnClassifier>(spec);
}

FoldPlan kfold_split(const Dataset& data, size_t k, uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kConfig, "k-fold needs k >= 2");
  std::map<std::string, std::set<std::string>> docs_by_author;
  for (const Sample& s : data.samples) docs_by_author[s.author].insert(s.doc_id);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.test_docs.resize(k);
  std::map<std::string, size_t> fold_of_doc;
  size_t dealt = 0;
  uint64_t salt = 0;
  for (const auto& [author, doc_set] : docs_by_author) {
    if (doc_set.size() < k) {
      throw Error(ErrorKind::kTooFewDocuments,
                  "author '" + author + "' has " + std::to_string(doc_set.size()) +
                      " documents, " + std::to_string(k) + "-fold CV needs at least " +
                      std::to_string(k));
    }
    std::vector<std::string> docs(doc_set.begin(), doc_set.end());
    Rng rng(Rng::mix(seed, salt++));
    for (size_t i = docs.size(); i > 1; --i) std::swap(docs[i - 1], docs[rng.below(i)]);
    for (const std::string& d : docs) {
      const size_t fold = dealt++ % k;
      fold_of_doc[d] = fold;
      plan.test_docs[fold].push_back(d);
    }
  }
  for (auto& docs : plan.test_docs) std::sort(docs.begin(), docs.end());
  plan.train_ids.resize(k);
  plan.test_ids.resize(k);
  for (const Sample& s : data.samples) {
    const size_t fold = fold_of_doc.at(s.doc_id);
    plan.fold_of_sample.push_back(fold);
    for (size_t f = 0; f < k; ++f) {
      (f == fold ? plan.test_ids : plan.train_ids)[f].push_back(s.id);
    }
  }
  return plan;
}

double macro_f1(const Confusion& confusion) {
  const size_t n = confusion.size();
  if (n == 0) throw Error(ErrorKind::kEmptyMatrix, "confusion matrix is empty");
  for (const auto& row : confusion) {
    if (row.size() != n) throw Error(ErrorKind::kShapeMismatch, "confusion matrix is not square");
  }
  double total = 0.0;
  for (size_t c = 0; c < n; ++c) {
    long tp = confusion[c][c], predicted = 0, actual = 0;
    for (size_t o = 0; o < n; ++o) {
      predicted += confusion[o][c];
      actual += confusion[c][o];
    }
    // F1 = 2TP / (predicted + actual); zero when the class never occurs.
    if (predicted + actual > 0) total += 2.0 * tp / static_cast<double>(predicted + actual);
  }
  return total / static_cast<double>(n);
}

double accuracy(const Confusion& confusion) {
  long right = 0, all = 0;
  for (size_t r = 0; r < confusion.size(); ++r) {
    for (size_t c = 0; c < confusion[r].size(); ++c) {
      all += confusion[r][c];
      if (r == c) right += confusion[r][c];
    }
  }
  return all == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(all);
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& body) {
  const size_t workers = std::min<size_t>(n, static_cast<size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex mu;
  size_t next = 0;
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n) return;
          i = next++;
        }
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct FoldOutcome {
  Confusion confusion;
};

// Trains and evaluates fold `fold` of `plan` over `data`.
FoldOutcome run_fold(const Dataset& data, const FoldPlan& plan, size_t fold,
                     const std::vector<std::string>& classes, const ClassifierFactory& factory,
                     const ExperimentOptions& options, uint64_t seed) {
  std::map<std::string, int> label_of;
  for (size_t i = 0; i < classes.size(); ++i) label_of[classes[i]] = static_cast<int>(i);
  std::vector<const Sample*> train, test;
  for (size_t i = 0; i < data.samples.size(); ++i) {
    (plan.fold_of_sample[i] == fold ? test : train).push_back(&data.samples[i]);
  }
  if (options.oversample) {
    std::map<std::string, std::vector<const Sample*>> groups;
    for (const Sample* s : train) groups[s->author].push_back(s);
    groups = oversample(std::move(groups), Rng::mix(seed, 17));
    train.clear();
    for (auto& [author, items] : groups) train.insert(train.end(), items.begin(), items.end());
  }
  std::vector<int> labels;
  for (const Sample* s : train) labels.push_back(label_of.at(s->author));
  std::unique_ptr<Classifier> clf = factory();
  clf->fit(train, labels, classes.size(), seed);
  const std::vector<int> predicted = clf->predict(test);
  FoldOutcome out;
  out.confusion.assign(classes.size(), std::vector<long>(classes.size(), 0));
  for (size_t i = 0; i < test.size(); ++i) {
    ++out.confusion[label_of.at(test[i]->author)][predicted[i]];
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void describe(ExperimentResult& result, const ModelSpec& spec, size_t chunk_size) {
  result.model = spec.model;
  result.disc_type = std::string(disc_type_name(spec.disc));
  result.reading = std::string(reading_name(spec.reading));
  result.chunk_size = chunk_size;
}

ExperimentResult run_multiclass(const Dataset& data, const ClassifierFactory& factory,
                                const ExperimentOptions& options) {
  ExperimentResult result;
  result.task = "multiclass";
  result.metric = "macro_f1";
  result.classes = data.authors();
  result.n_samples = data.samples.size();
  if (result.classes.size() < 2) {
    throw Error(ErrorKind::kDegenerateDataset, "multi-class task needs at least two authors");
  }
  const FoldPlan plan = kfold_split(data, options.k, options.seed);
  std::vector<FoldOutcome> outcomes(options.k);
  parallel_for(options.k, options.jobs, [&](size_t f) {
    outcomes[f] = run_fold(data, plan, f, result.classes, factory, options,
                           Rng::mix(options.seed, 100 + f));
  });
  const size_t n = result.classes.size();
  result.confusion.assign(n, std::vector<long>(n, 0));
  for (const FoldOutcome& o : outcomes) {
    result.folds.push_back(macro_f1(o.confusion));
    result.fold_confusions.push_back(o.confusion);
    for (size_t r = 0; r < n; ++r) {
      for (size_t c = 0; c < n; ++c) result.confusion[r][c] += o.confusion[r][c];
    }
  }
  result.mean = mean_of(result.folds);
  return result;
}

ExperimentResult run_pairwise(const Dataset& data, const ClassifierFactory& factory,
                              const ExperimentOptions& options) {
  ExperimentResult result;
  result.task = "pairwise";
  result.metric = "accuracy";
  result.classes = data.authors();
  result.n_samples = data.samples.size();
  const size_t n = result.classes.size();
  if (n < 2) throw Error(ErrorKind::kDegenerateDataset, "pairwise task needs at least two authors");
  struct PairData {
    std::vector<std::string> classes;
    Dataset subset;
    FoldPlan plan;
  };
  std::vector<PairData> pairs;
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = a + 1; b < n; ++b) {
      PairData p;
      p.classes = {result.classes[a], result.classes[b]};
      for (const Sample& s : data.samples) {
        if (s.author == p.classes[0] || s.author == p.classes[1]) p.subset.samples.push_back(s);
      }
      p.plan = kfold_split(p.subset, options.k, Rng::mix(options.seed, pairs.size()));
      pairs.push_back(std::move(p));
    }
  }
  const size_t tasks = pairs.size() * options.k;
  std::vector<FoldOutcome> outcomes(tasks);
  parallel_for(tasks, options.jobs, [&](size_t t) {
    const size_t p = t / options.k, f = t % options.k;
    outcomes[t] = run_fold(pairs[p].subset, pairs[p].plan, f, pairs[p].classes, factory, options,
                           Rng::mix(Rng::mix(options.seed, p), 100 + f));
  });
  result.folds.assign(options.k, 0.0);
  for (size_t p = 0; p < pairs.size(); ++p) {
    PairResult pr;
    pr.first = pairs[p].classes[0];
    pr.second = pairs[p].classes[1];
    for (size_t f = 0; f < options.k; ++f) {
      const Confusion& cm = outcomes[p * options.k + f].confusion;
      pr.folds.push_back(accuracy(cm));
      result.folds[f] += pr.folds.back() / static_cast<double>(pairs.size());
      result.fold_confusions.push_back(cm);
    }
    pr.mean = mean_of(pr.folds);
    result.pairs.push_back(std::move(pr));
  }
  result.mean = mean_of(result.folds);
  return result;
}

std::vector<size_t> default_sweep_sizes() {
  std::vector<size_t> sizes;
  for (size_t s = 200; s <= 2000; s += 200) sizes.push_back(s);
  return sizes;
}

std::vector<SweepRow> chunk_sweep(const std::vector<AnnotatedDocument>& docs,
                                  const std::vector<size_t>& sizes,
                                  const std::vector<ModelSpec>& specs,
                                  const ExperimentOptions& options) {
  std::vector<SweepRow> rows;
  for (size_t size : sizes) {
    const Dataset data = build_dataset(docs, size);
    for (const ModelSpec& spec : specs) {
      SweepRow row;
      row.size = size;
      row.model = spec.model;
      row.disc_type = std::string(disc_type_name(spec.disc));
      row.reading = std::string(reading_name(spec.reading));
      row.n_chunks = data.samples.size();
      row.result = run_multiclass(data, [&] { return make_classifier(spec); }, options);
      describe(row.result, spec, size);
      row.macro_f1 = row.result.mean;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string format_double(double v) {
  // Shortest form that round-trips, matching the JSON output.
  return nlohmann::json(v).dump();
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "size,model,disc_type,reading,n_chunks,macro_f1\n";
  for (const SweepRow& r : rows) {
    out << r.size << ',' << r.model << ',' << r.disc_type << ',' << r.reading << ',' << r.n_chunks
        << ',' << format_double(r.macro_f1) << '\n';
  }
  return out.str();
}

std::vector<Neighbor> nearest_neighbors(const nn::Tensor<float>& embeddings, const Vocab& vocab,
                                        std::string_view token, size_t top_k) {
  if (!vocab.contains(token) || token == kPadToken || token == kUnkToken) {
    throw Error(ErrorKind::kUnknownToken, "'" + std::string(token) + "' is not in the vocabulary");
  }
  if (embeddings.rows() != vocab.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "embedding rows do not match the vocabulary");
  }
  const auto row_norm = [&](size_t r) {
    double s = 0.0;
    for (float v : embeddings.row(r)) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  };
  const size_t q = static_cast<size_t>(vocab.index(token));
  const double qn = row_norm(q);
  std::vector<Neighbor> all;
  for (size_t r = 2; r < vocab.size(); ++r) {
    if (r == q) continue;
    double dot = 0.0;
    const auto a = embeddings.row(q), b = embeddings.row(r);
    for (size_t d = 0; d < a.size(); ++d) dot += static_cast<double>(a[d]) * b[d];
    const double denom = qn * row_norm(r);
    all.push_back({vocab.token(static_cast<int>(r)), denom > 0 ? dot / denom : 0.0});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.token < b.token;
  });
  if (all.size() > top_k) all.resize(top_k);
  return all;
}

nlohmann::json result_to_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["task"] = r.task;
  j["model"] = r.model;
  j["disc_type"] = r.disc_type;
  j["reading"] = r.reading;
  j["chunk_size"] = r.chunk_size;
  j["metric"] = r.metric;
  j["classes"] = r.classes;
  j["folds"] = r.folds;
  j["mean"] = r.mean;
  j["n_samples"] = r.n_samples;
  if (!r.confusion.empty()) j["confusion"] = r.confusion;
  j["fold_confusions"] = r.fold_confusions;
  if (!r.pairs.empty()) {
    j["pairs"] = nlohmann::json::array();
    for (const PairResult& p : r.pairs) {
      j["pairs"].push_back({{"authors", {p.first, p.second}}, {"folds", p.folds}, {"mean", p.mean}});
    }
  }
  return j;
}

std::string results_csv_header() { return "experiment,model,disc_type,reading,size,fold,metric,value\n"; }

std::string results_csv_rows(const std::string& experiment, const ExperimentResult& r) {
  std::ostringstream out;
  const auto line = [&](const std::string& fold, double value) {
    out << experiment << ',' << r.model << ',' << r.disc_type << ',' << r.reading << ','
        << r.chunk_size << ',' << fold << ',' << r.metric << ',' << format_double(value) << '\n';
  };
  for (size_t f = 0; f < r.folds.size(); ++f) line(std::to_string(f), r.folds[f]);
  line("mean", r.mean);
  return out.str();
}

}  // namespace aa
