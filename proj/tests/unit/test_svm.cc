#include <cmath>

#include "aa/rng.h"
#include "aa/svm.h"
#include "doctest.h"
#include "excerpt.h"
#include "test_util.h"

using namespace aa;

namespace {

SparseVector dense(std::vector<double> values) {
  SparseVector x;
  x.dim = values.size();
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0) x.entries.push_back({static_cast<uint32_t>(i), values[i]});
  }
  return x;
}

// Two Gaussian-ish blobs either side of the line x + y = 0.
void separable(std::vector<SparseVector>& xs, std::vector<int>& ys, uint64_t seed, size_t n) {
  Rng rng(seed);
  while (xs.size() < n) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    if (std::abs(a + b) < 0.5) continue;
    xs.push_back(dense({a, b}));
    ys.push_back(a + b > 0 ? 1 : 0);
  }
}

// Primal objective of one one-vs-rest sub-problem with the bias treated as
// an extra weight on a constant feature.
double primal(const LinearModel& m, size_t c, const std::vector<SparseVector>& xs,
              const std::vector<int>& ys, double cost) {
  double obj = 0.5 * m.bias[c] * m.bias[c];
  for (double w : m.weights[c]) obj += 0.5 * w * w;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double y = ys[i] == static_cast<int>(c) ? 1.0 : -1.0;
    obj += cost * std::max(0.0, 1.0 - y * (xs[i].dot(m.weights[c]) + m.bias[c]));
  }
  return obj;
}

}  // namespace

TEST_CASE("bigram count features") {
  const BigramFeatures aaa({"aaa"});
  CHECK(aaa.dim() == 1);
  const SparseVector x = aaa.counts("aaa");
  REQUIRE(x.entries.size() == 1);
  CHECK(x.entries[0].second == doctest::Approx(1.0));
  CHECK(aaa.counts("xyz").entries.empty());
  CHECK(aaa.counts("xyz").dim == 1);

  const BigramFeatures abab({"abab"});
  const SparseVector y = abab.counts("abab");
  REQUIRE(y.entries.size() == 2);
  const size_t ab = abab.vocab().index("ab") - 2, ba = abab.vocab().index("ba") - 2;
  std::vector<double> v(2);
  for (const auto& [i, val] : y.entries) v[i] = val;
  CHECK(v[ab] == doctest::Approx(2 / std::sqrt(5.0)));
  CHECK(v[ba] == doctest::Approx(1 / std::sqrt(5.0)));
  CHECK(y.squared_norm() == doctest::Approx(1.0));
}

TEST_CASE("appending a probability vector") {
  const SparseVector x = dense({0.6, 0, 0.8});
  ProbabilityVector zero;
  zero.labels.assign(4, "l");
  zero.probs.assign(4, 0.0);
  const SparseVector z = append_pv(x, zero, 4);
  CHECK(z.dim == 7);
  CHECK(z.entries == x.entries);

  const ProbabilityVector pv = gr_transition_pv(build_gr_grid(test::excerpt_annotation()));
  const SparseVector t = append_pv(x, pv, 16);
  CHECK(t.dim == 19);
  REQUIRE(t.entries.size() == 6);
  // ss, so, ox and -s sit at columns 0, 1, 6 and 12 of the transition block.
  CHECK(t.entries[2] == std::pair<uint32_t, double>{3, 0.25});
  CHECK(t.entries[3].first == 4);
  CHECK(t.entries[4].first == 9);
  CHECK(t.entries[5].first == 15);

  CHECK(test::error_kind_of([&] { append_pv(x, zero, 16); }) == ErrorKind::kDimensionMismatch);
}

TEST_CASE("separable data converges with zero training error") {
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  separable(xs, ys, 1, 60);
  const LinearModel m = train_linear(xs, ys, 2);
  CHECK(m.stop_reason == "tol");
  CHECK(m.iterations < 1500);
  for (size_t i = 0; i < xs.size(); ++i) CHECK(predict(m, xs[i]).label == ys[i]);

  for (size_t c = 0; c < 2; ++c) {
    const auto& trace = m.objective_trace[c];
    REQUIRE_FALSE(trace.empty());
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(trace.back() == doctest::Approx(primal(m, c, xs, ys, 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("iteration cap") {
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  separable(xs, ys, 2, 40);
  const LinearModel m = train_linear(xs, ys, 2, {1e-5, 1, 1.0});
  CHECK(m.stop_reason == "max_iter");
  CHECK(m.iterations == 1);
}

TEST_CASE("training input errors") {
  const std::vector<SparseVector> xs = {dense({1, 0}), dense({0, 1})};
  CHECK(test::error_kind_of([&] { train_linear(xs, {1, 1}, 2); }) == ErrorKind::kDegenerateDataset);
  CHECK(test::error_kind_of([&] { train_linear(xs, {0}, 2); }) == ErrorKind::kDimensionMismatch);
  CHECK(test::error_kind_of([&] { train_linear({dense({1}), dense({0, 1})}, {0, 1}, 2); }) ==
        ErrorKind::kDimensionMismatch);
}

TEST_CASE("prediction") {
  LinearModel zero;
  zero.dim = 2;
  zero.weights.assign(3, std::vector<double>(2, 0.0));
  zero.bias.assign(3, 0.0);
  CHECK(predict(zero, dense({1, 1})).label == 0);

  LinearModel two = zero;
  two.weights.resize(2);
  two.bias = {2.0, -1.0};
  CHECK(predict(two, dense({0, 0})).label == 0);
  CHECK(test::error_kind_of([&] { predict(two, dense({1, 2, 3})); }) ==
        ErrorKind::kDimensionMismatch);

  // Multiclass on three blobs; positive rescaling keeps every argmax.
  Rng rng(3);
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  const double centres[3][2] = {{2, 0}, {-1, 2}, {-1, -2}};
  for (int i = 0; i < 90; ++i) {
    const int c = i % 3;
    xs.push_back(dense({centres[c][0] + rng.uniform(-0.5, 0.5), centres[c][1] + rng.uniform(-0.5, 0.5)}));
    ys.push_back(c);
  }
  const LinearModel m = train_linear(xs, ys, 3);
  CHECK(m.n_classes() == 3);
  for (const auto& x : xs) {
    for (double s : {0.1, 3.0, 250.0}) {
      // bias terms break exact scale invariance, so compare on bias-free scores
      LinearModel nb = m;
      nb.bias.assign(3, 0.0);
      CHECK(predict(nb, x.scaled(s)).label == predict(nb, x).label);
    }
  }
}

TEST_CASE("linear models round trip") {
  test::TempDir dir("svm");
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  separable(xs, ys, 4, 30);
  const LinearModel m = train_linear(xs, ys, 2);
  save_linear_model(m, {{"features", "bigram"}}, dir / "svm.ckpt");
  nlohmann::json meta;
  const LinearModel back = load_linear_model(dir / "svm.ckpt", &meta);
  CHECK(meta.at("features") == "bigram");
  for (const auto& x : xs) {
    const auto a = predict(m, x), b = predict(back, x);
    CHECK(a.label == b.label);
    for (size_t c = 0; c < 2; ++c) CHECK(a.scores[c] == doctest::Approx(b.scores[c]).epsilon(1e-6));
  }
}
