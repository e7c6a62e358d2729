#include "aa/svm.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aa/checkpoint.h"
#include "aa/corpus.h"
#include "aa/error.h"

namespace aa {

double SparseVector::dot(const std::vector<double>& dense) const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += dense[i] * v;
  return s;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second * e.second;
  return s;
}

SparseVector SparseVector::scaled(double factor) const {
  SparseVector out = *this;
  for (auto& e : out.entries) e.second *= factor;
  return out;
}

BigramFeatures::BigramFeatures(const std::vector<std::string>& training_texts) {
  std::vector<DiscourseSequence> seqs;
  seqs.reserve(training_texts.size());
  for (const auto& text : training_texts) seqs.push_back({char_bigrams(text).tokens});
  vocab_ = build_vocab(seqs, 1);
}

SparseVector BigramFeatures::counts(std::string_view text) const {
  std::map<uint32_t, double> counts;
  for (const auto& bigram : char_bigrams(text).tokens) {
    const int idx = vocab_.index(bigram);
    if (idx >= 2) counts[static_cast<uint32_t>(idx - 2)] += 1.0;
  }
  SparseVector x;
  x.dim = dim();
  x.entries.assign(counts.begin(), counts.end());
  const double norm = std::sqrt(x.squared_norm());
  if (norm > 0) {
    for (auto& e : x.entries) e.second /= norm;
  }
  return x;
}

SparseVector append_pv(const SparseVector& x, const ProbabilityVector& pv, size_t pv_dim) {
  if (pv.size() != pv_dim) {
    throw Error(ErrorKind::kDimensionMismatch, "probability vector has " +
                                                   std::to_string(pv.size()) + " entries, expected " +
                                                   std::to_string(pv_dim));
  }
  SparseVector out = x;
  for (size_t i = 0; i < pv.size(); ++i) {
    if (pv.probs[i] != 0.0) {
      out.entries.emplace_back(static_cast<uint32_t>(x.dim + i), pv.probs[i]);
    }
  }
  out.dim = x.dim + pv_dim;
  return out;
}

namespace {

struct BinaryResult {
  std::vector<double> w;
  double b = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Dual coordinate descent for min 0.5 (|w|^2 + b^2) + C sum max(0, 1 - y (w.x + b)).
BinaryResult train_binary(const std::vector<SparseVector>& xs, const std::vector<double>& y,
                          size_t dim, const SvmOptions& opt) {
  const size_t n = xs.size();
  std::vector<double> alpha(n, 0.0), qii(n);
  for (size_t i = 0; i < n; ++i) qii[i] = xs[i].squared_norm() + 1.0;
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  BinaryResult best;
  best.w = w;
  double best_primal = INFINITY;
  double previous_dual = 0.0;
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      const double g = y[i] * (xs[i].dot(w) + b) - 1.0;
      const double old = alpha[i];
      const double updated = std::clamp(old - g / qii[i], 0.0, opt.c);
      if (updated == old) continue;
      const double d = (updated - old) * y[i];
      for (const auto& [j, v] : xs[i].entries) w[j] += d * v;
      b += d;
      alpha[i] = updated;
    }
    double norm2 = b * b, hinge = 0.0, alpha_sum = 0.0;
    for (double v : w) norm2 += v * v;
    for (size_t i = 0; i < n; ++i) {
      hinge += std::max(0.0, 1.0 - y[i] * (xs[i].dot(w) + b));
      alpha_sum += alpha[i];
    }
    const double primal = 0.5 * norm2 + opt.c * hinge;
    const double dual = alpha_sum - 0.5 * norm2;
    if (primal < best_primal) {
      best_primal = primal;
      best.w = w;
      best.b = b;
    }
    best.trace.push_back(best_primal);
    best.iterations = iter;
    const double change = std::abs(dual - previous_dual);
    if (change <= opt.tol * std::max(std::abs(dual), 1e-12)) {
      best.converged = true;
      break;
    }
    previous_dual = dual;
  }
  return best;
}

}  // namespace

LinearModel train_linear(const std::vector<SparseVector>& xs, const std::vector<int>& labels,
                         size_t n_classes, const SvmOptions& options) {
  if (xs.size() != labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "feature and label counts differ");
  }
  std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2) {
    throw Error(ErrorKind::kDegenerateDataset,
                "SVM training needs at least two classes, got " + std::to_string(present.size()));
  }
  if (options.max_iter < 1 || !(options.tol > 0) || !(options.c > 0)) {
    throw Error(ErrorKind::kConfig, "SVM options must be positive");
  }
  LinearModel model;
  model.dim = xs.empty() ? 0 : xs.front().dim;
  for (const auto& x : xs) {
    if (x.dim != model.dim) throw Error(ErrorKind::kDimensionMismatch, "inconsistent feature dims");
  }
  bool all_converged = true;
  for (size_t c = 0; c < n_classes; ++c) {
    std::vector<double> y(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == static_cast<int>(c) ? 1.0 : -1.0;
    BinaryResult r = train_binary(xs, y, model.dim, options);
    model.weights.push_back(std::move(r.w));
    model.bias.push_back(r.b);
    model.objective_trace.push_back(std::move(r.trace));
    model.iterations = std::max(model.iterations, r.iterations);
    all_converged = all_converged && r.converged;
  }
  model.stop_reason = all_converged ? "tol" : "max_iter";
  return model;
}

SvmPrediction predict(const LinearModel& model, const SparseVector& x) {
  if (x.dim != model.dim) {
    throw Error(ErrorKind::kDimensionMismatch, "input has " + std::to_string(x.dim) +
                                                   " dims, model expects " +
                                                   std::to_string(model.dim));
  }
  SvmPrediction p;
  for (size_t c = 0; c < model.n_classes(); ++c) {
    p.scores.push_back(x.dot(model.weights[c]) + model.bias[c]);
    if (p.scores[c] > p.scores[p.label]) p.label = static_cast<int>(c);
  }
  return p;
}

void save_linear_model(const LinearModel& model, const nlohmann::json& meta,
                       const std::filesystem::path& path) {
  Container c;
  c.kind = "linear-svm";
  c.meta = meta.is_null() ? nlohmann::json::object() : meta;
  c.meta["dim"] = model.dim;
  c.meta["n_classes"] = model.n_classes();
  c.meta["stop_reason"] = model.stop_reason;
  c.meta["iterations"] = model.iterations;
  TensorBlob w{"weights", {model.n_classes(), model.dim}, {}};
  for (const auto& row : model.weights) {
    for (double v : row) w.data.push_back(static_cast<float>(v));
  }
  TensorBlob b{"bias", {model.n_classes()}, {}};
  for (double v : model.bias) b.data.push_back(static_cast<float>(v));
  c.tensors = {std::move(w), std::move(b)};
  write_container(path, c);
}

LinearModel load_linear_model(const std::filesystem::path& path, nlohmann::json* meta) {
  Container c = read_container(path);
  if (c.kind != "linear-svm") {
    throw Error(ErrorKind::kCorruptCheckpoint, path.string() + " holds a '" + c.kind +
                                                   "' model, not linear-svm");
  }
  LinearModel m;
  try {
    m.dim = c.meta.at("dim").get<size_t>();
    const size_t k = c.meta.at("n_classes").get<size_t>();
    m.stop_reason = c.meta.at("stop_reason").get<std::string>();
    m.iterations = c.meta.at("iterations").get<int>();
    const TensorBlob& w = c.tensor("weights");
    const TensorBlob& b = c.tensor("bias");
    if (w.data.size() != k * m.dim || b.data.size() != k) {
      throw Error(ErrorKind::kCorruptCheckpoint, "linear model tensors have wrong sizes");
    }
    for (size_t r = 0; r < k; ++r) {
      m.weights.emplace_back(w.data.begin() + r * m.dim, w.data.begin() + (r + 1) * m.dim);
      m.bias.push_back(b.data[r]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptCheckpoint, path.string() + ": " + e.what());
  }
  if (meta) *meta = c.meta;
  return m;
}

}  // namespace aa
