#include <algorithm>
#include <cmath>
#include <numeric>

#include "aa/checkpoint.h"
#include "aa/gradsuite.h"
#include "aa/models.h"
#include "doctest.h"
#include "test_util.h"

using namespace aa;

namespace {

ModelDims tiny_dims(ModelKind kind) {
  ModelDims d;
  d.kind = kind;
  d.n_classes = 3;
  d.char_vocab = 9;
  d.char_dim = 4;
  d.windows = {2, 3};
  d.maps = 3;
  if (kind == ModelKind::kCnn2De) {
    d.disc_vocab = 6;
    d.disc_dim = 3;
    d.disc_windows = {1, 2};
    d.disc_maps = 2;
  }
  if (kind == ModelKind::kCnn2Pv) d.pv_dim = 4;
  return d;
}

std::vector<int> random_tokens(size_t n, size_t vocab, Rng& rng) {
  std::vector<int> out(n);
  for (int& t : out) t = 1 + static_cast<int>(rng.below(vocab - 1));
  return out;
}

ModelInput random_input(const ModelDims& d, Rng& rng) {
  ModelInput in;
  in.chars = random_tokens(8, d.char_vocab, rng);
  if (d.kind == ModelKind::kCnn2De) in.disc = random_tokens(5, d.disc_vocab, rng);
  if (d.kind == ModelKind::kCnn2Pv) {
    in.pv.resize(d.pv_dim);
    double total = 0;
    for (double& v : in.pv) total += v = rng.uniform();
    for (double& v : in.pv) v /= total;
  }
  return in;
}

// embed -> nested-loop conv -> max -> linear -> softmax, written out from
// scratch for the character branch only.
std::vector<double> reference_cnn2(const ModelParams<double>& p, const std::vector<int>& chars) {
  const ModelDims& d = p.dims;
  std::vector<double> features;
  for (size_t wi = 0; wi < d.windows.size(); ++wi) {
    const size_t w = d.windows[wi];
    for (size_t j = 0; j < d.maps; ++j) {
      double best = -INFINITY;
      for (size_t t = 0; t + w <= chars.size(); ++t) {
        double z = p.char_conv.biases[wi][j];
        for (size_t o = 0; o < w; ++o) {
          for (size_t e = 0; e < d.char_dim; ++e) {
            z += p.char_conv.weights[wi](j, o * d.char_dim + e) * p.char_emb(chars[t + o], e);
          }
        }
        best = std::max(best, std::max(z, 0.0));
      }
      features.push_back(best);
    }
  }
  std::vector<double> logits(d.n_classes);
  for (size_t c = 0; c < d.n_classes; ++c) {
    logits[c] = p.out_b[c];
    for (size_t f = 0; f < features.size(); ++f) logits[c] += features[f] * p.out_w(f, c);
  }
  const double hi = *std::max_element(logits.begin(), logits.end());
  double total = 0;
  for (double& l : logits) total += l = std::exp(l - hi);
  for (double& l : logits) l /= total;
  return logits;
}

}  // namespace

TEST_CASE("zero softmax weights give a uniform distribution") {
  Rng rng(1);
  for (ModelKind kind : {ModelKind::kCnn2, ModelKind::kCnn2Pv, ModelKind::kCnn2De}) {
    const ModelDims d = tiny_dims(kind);
    ModelParams<double> p = init_params<double>(d, 3);
    p.out_w.fill(0);
    for (double v : forward(p, random_input(d, rng))) CHECK(v == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("outputs are distributions and match the composed reference") {
  Rng rng(2);
  const ModelDims d = tiny_dims(ModelKind::kCnn2);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams<double> p = init_params<double>(d, trial);
    for (auto& [name, t] : p.tensors()) {
      for (double& v : t->values()) v += rng.uniform(-0.5, 0.5);
    }
    const ModelInput in = random_input(d, rng);
    const auto probs = cnn2_forward<double>(p, in.chars);
    CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0));
    const auto ref = reference_cnn2(p, in.chars);
    for (size_t c = 0; c < probs.size(); ++c) CHECK(std::abs(probs[c] - ref[c]) < 1e-12);
    CHECK(forward(p, in) == probs);
  }
}

TEST_CASE("a zero probability vector acts like the plain model") {
  Rng rng(3);
  const ModelDims pv_dims = tiny_dims(ModelKind::kCnn2Pv);
  const ModelParams<double> pv = init_params<double>(pv_dims, 4);
  ModelParams<double> plain = init_params<double>(tiny_dims(ModelKind::kCnn2), 4);
  plain.char_emb = pv.char_emb;
  plain.char_conv = pv.char_conv;
  plain.out_b = pv.out_b;
  for (size_t f = 0; f < plain.dims.feature_dim(); ++f) {
    for (size_t c = 0; c < 3; ++c) plain.out_w(f, c) = pv.out_w(f, c);
  }
  const ModelInput in = random_input(pv_dims, rng);
  const std::vector<double> zeros(4, 0.0), uniform(4, 0.25);
  CHECK(cnn2_pv_forward<double>(pv, in.chars, zeros) == cnn2_forward<double>(plain, in.chars));
  CHECK(cnn2_pv_forward<double>(pv, in.chars, uniform) != cnn2_pv_forward<double>(pv, in.chars, in.pv));
  const std::vector<double> wrong(5, 0.2);
  CHECK(test::error_kind_of([&] { cnn2_pv_forward<double>(pv, in.chars, wrong); }) ==
        ErrorKind::kDimensionMismatch);
  CHECK(test::error_kind_of([&] { cnn2_forward<double>(pv, in.chars); }) ==
        ErrorKind::kDimensionMismatch);
}

TEST_CASE("discourse branch is order sensitive and tolerates padding") {
  Rng rng(4);
  const ModelDims d = tiny_dims(ModelKind::kCnn2De);
  const ModelParams<double> p = init_params<double>(d, 5);
  const ModelInput in = random_input(d, rng);
  const std::vector<int> order = {2, 3, 4, 5, 2}, swapped = {3, 2, 5, 4, 2};
  CHECK(cnn2_de_forward<double>(p, in.chars, order) != cnn2_de_forward<double>(p, in.chars, swapped));
  const std::vector<int> pads(5, 0);
  const auto probs = cnn2_de_forward<double>(p, in.chars, pads);
  CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0));
  const std::vector<int> short_disc = {2};
  CHECK(test::error_kind_of([&] { cnn2_de_forward<double>(p, in.chars, short_disc); }) ==
        ErrorKind::kSequenceTooShort);
}

TEST_CASE("padding and truncation") {
  const std::vector<int> three = {7, 8, 9}, seven = {1, 2, 3, 4, 5, 6, 7}, five = {1, 2, 3, 4, 5};
  CHECK(pad_or_truncate(three, 5) == std::vector<int>{7, 8, 9, 0, 0});
  CHECK(pad_or_truncate(seven, 5) == five);
  CHECK(pad_or_truncate(five, 5) == five);
}

TEST_CASE("gradients match finite differences for every model kind") {
  for (ModelKind kind : {ModelKind::kCnn2, ModelKind::kCnn2Pv, ModelKind::kCnn2De}) {
    const GradSuiteResult r = run_grad_suite(kind, 4, 9);
    CHECK(r.instances.size() == 4);
    CHECK_MESSAGE(r.passed(1e-4), model_kind_name(kind), " ", r.max_rel_error);
  }
}

TEST_CASE("training") {
  // Class 0 uses bigrams 2..4, class 1 uses 5..7.
  ModelDims d = tiny_dims(ModelKind::kCnn2);
  d.n_classes = 2;
  Rng rng(5);
  std::vector<Example> data;
  for (int i = 0; i < 40; ++i) {
    Example ex;
    ex.label = i % 2;
    for (int t = 0; t < 10; ++t) ex.input.chars.push_back(2 + 3 * ex.label + rng.below(3));
    data.push_back(ex);
  }
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.lr = 0.01;

  const TrainResult a = train(d, data, cfg);
  CHECK(a.epoch_loss.size() == 50);
  for (double l : a.epoch_loss) CHECK(std::isfinite(l));
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());
  size_t correct = 0;
  for (const auto& ex : data) correct += predict_class(a.params, ex.input) == ex.label;
  CHECK(correct == data.size());

  const TrainResult b = train(d, data, cfg);
  CHECK(a.params.out_w == b.params.out_w);
  CHECK(a.params.char_emb == b.params.char_emb);
  CHECK(a.epoch_loss == b.epoch_loss);

  for (auto& ex : data) ex.label = 1;
  CHECK(test::error_kind_of([&] { train(d, data, cfg); }) == ErrorKind::kDegenerateDataset);
  data[0].label = 2;
  CHECK(test::error_kind_of([&] { train(d, data, cfg); }) == ErrorKind::kIndexOutOfRange);
}

TEST_CASE("huge learning rates surface as non-finite losses") {
  ModelDims d = tiny_dims(ModelKind::kCnn2);
  d.n_classes = 2;
  std::vector<Example> data(4);
  for (size_t i = 0; i < 4; ++i) {
    data[i].label = i % 2;
    data[i].input.chars = std::vector<int>(6, 2 + static_cast<int>(i % 2));
  }
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 1e30;
  CHECK(test::error_kind_of([&] { train(d, data, cfg); }) == ErrorKind::kNonFiniteLoss);
}

TEST_CASE("checkpoints") {
  test::TempDir dir("checkpoint");
  Rng rng(6);
  for (ModelKind kind : {ModelKind::kCnn2, ModelKind::kCnn2Pv, ModelKind::kCnn2De}) {
    const ModelDims d = tiny_dims(kind);
    const ModelParams<float> p = init_params<float>(d, 7);
    const ModelInput in = random_input(d, rng);
    const auto path = dir / "m.ckpt";
    save_checkpoint(p, {{"note", "x"}}, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.meta.at("note") == "x");
    CHECK(back.params.dims.to_json() == d.to_json());
    CHECK(forward(back.params, in) == forward(p, in));
  }

  const auto path = dir / "m.ckpt";
  const std::string bytes = test::read_all(path);
  CHECK(bytes.rfind("GSTYLO01", 0) == 0);

  test::write_text(dir / "short.ckpt", bytes.substr(0, bytes.size() / 2));
  CHECK(test::error_kind_of([&] { load_checkpoint(dir / "short.ckpt"); }) ==
        ErrorKind::kCorruptCheckpoint);

  std::string flipped = bytes;
  flipped[flipped.size() - 10] ^= 0x40;
  test::write_text(dir / "flip.ckpt", flipped);
  CHECK(test::error_kind_of([&] { load_checkpoint(dir / "flip.ckpt"); }) ==
        ErrorKind::kCorruptCheckpoint);

  write_container(dir / "v2.ckpt", read_container(path), kCheckpointVersion + 1);
  try {
    load_checkpoint(dir / "v2.ckpt");
    FAIL("version bump accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCorruptCheckpoint);
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  CHECK(test::error_kind_of([&] { load_checkpoint(dir / "absent.ckpt"); }) ==
        ErrorKind::kMissingFile);
}

TEST_CASE("train config validation and round trip") {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.windows = {2, 6};
  const TrainConfig back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  cfg.batch_size = 0;
  CHECK(test::error_kind_of([&] { cfg.validate(); }) == ErrorKind::kConfig);
  cfg = TrainConfig{};
  cfg.keep_prob = 0;
  CHECK(test::error_kind_of([&] { cfg.validate(); }) == ErrorKind::kConfig);
}
