#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "aa/corpus.h"
#include "aa/featurize.h"
#include "aa/synth.h"
#include "doctest.h"
#include "test_util.h"

using namespace aa;
namespace fs = std::filesystem;

namespace {

using Counts = std::map<std::string, double>;

Counts normalised(Counts c) {
  double total = 0;
  for (const auto& [k, v] : c) total += v;
  for (auto& [k, v] : c) v /= total;
  return c;
}

// KL(p || q) with add-half smoothing over the union of supports.
double kl(const Counts& p_raw, const Counts& q_raw) {
  Counts p = p_raw, q = q_raw;
  for (const auto& [k, v] : p_raw) q[k] += 0;
  for (const auto& [k, v] : q_raw) p[k] += 0;
  for (auto& [k, v] : p) v += 0.5;
  for (auto& [k, v] : q) v += 0.5;
  p = normalised(p);
  q = normalised(q);
  double d = 0;
  for (const auto& [k, v] : p) d += v * std::log(v / q.at(k));
  return d;
}

double total_variation(const Counts& p_raw, const Counts& q_raw) {
  const Counts p = normalised(p_raw), q = normalised(q_raw);
  Counts keys = p;
  for (const auto& [k, v] : q) keys[k] = 0;
  double d = 0;
  for (const auto& [k, v] : keys) {
    const double a = p.count(k) ? p.at(k) : 0, b = q.count(k) ? q.at(k) : 0;
    d += std::abs(a - b);
  }
  return d / 2;
}

std::vector<std::string> files_under(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg = synth_preset("discourse");
  cfg.docs_per_author = 3;
  const auto a = generate_corpus(cfg), b = generate_corpus(cfg);
  REQUIRE(a.size() == 12);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].text == b[i].text);
    CHECK(annotation_to_json(*a[i].annotation) == annotation_to_json(*b[i].annotation));
  }
  cfg.seed = 2;
  CHECK(generate_corpus(cfg)[0].text != a[0].text);
  CHECK(a[0].id == "author0-d000");
  CHECK(a[11].author == "author3");
}

TEST_CASE("generated annotations satisfy the schema") {
  SynthConfig cfg = synth_preset("discourse");
  cfg.docs_per_author = 4;
  for (const auto& d : generate_corpus(cfg)) {
    REQUIRE(d.annotation.has_value());
    const AnnotationRecord back = annotation_from_json(annotation_to_json(*d.annotation));
    CHECK(validate_grid(build_gr_grid(back)).empty());
    CHECK(validate_grid(build_rst_grid(back, true)).empty());
    CHECK(back.edu_sequence.has_value());
    CHECK(back.sentence_starts->size() == back.n_sentences);
    // Sentence boundaries in the text match the recorded offsets.
    const auto words = split_words(d.text);
    for (size_t s = 1; s < back.n_sentences; ++s) {
      CHECK(words[(*back.sentence_starts)[s] - 1].back() == '.');
    }
  }
  CHECK_FALSE(generate_corpus(synth_preset("char"))[0].annotation.has_value());
}

TEST_CASE("config validation and round trip") {
  SynthConfig cfg = synth_preset("interchangeable");
  CHECK(SynthConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  cfg = SynthConfig{};
  cfg.authors = 2;
  cfg.relation_unigrams = {{{"elaboration.N", 0.5}, {"attribution.N", 0.4}},
                           {{"elaboration.N", 1.0}}};
  CHECK(test::error_kind_of([&] { cfg.validate(); }) == ErrorKind::kInvalidDistribution);
  CHECK(test::error_kind_of([&] { generate_corpus(cfg); }) == ErrorKind::kInvalidDistribution);
  cfg.relation_unigrams[0][1].second = 0.5;
  CHECK_NOTHROW(cfg.validate());

  cfg = SynthConfig{};
  cfg.authors = 1;
  CHECK(test::error_kind_of([&] { cfg.validate(); }) == ErrorKind::kConfig);
  CHECK(test::error_kind_of([] { synth_preset("nope"); }) == ErrorKind::kConfig);
}

TEST_CASE("char-identical authors share bigram statistics but not transitions") {
  SynthConfig cfg = synth_preset("discourse");
  cfg.authors = 2;
  cfg.docs_per_author = 40;
  cfg.words_per_doc = 2000;
  std::map<std::string, Counts> bigrams, transitions;
  for (const auto& d : generate_corpus(cfg)) {
    for (const auto& b : char_bigrams(d.text).tokens) bigrams[d.author][b] += 1;
    const EntityGrid g = build_gr_grid(*d.annotation);
    for (const auto& t : gr_de_local(g).tokens) transitions[d.author][t] += 1;
  }
  CHECK(kl(bigrams["author0"], bigrams["author1"]) < 0.01);
  CHECK(kl(bigrams["author1"], bigrams["author0"]) < 0.01);
  CHECK(total_variation(transitions["author0"], transitions["author1"]) > 0.3);

  cfg.char_identical = false;
  bigrams.clear();
  for (const auto& d : generate_corpus(cfg)) {
    for (const auto& b : char_bigrams(d.text).tokens) bigrams[d.author][b] += 1;
  }
  CHECK(kl(bigrams["author0"], bigrams["author1"]) > 0.1);
}

TEST_CASE("relation draws converge to an explicit distribution") {
  SynthConfig cfg;
  cfg.authors = 2;
  cfg.docs_per_author = 20;
  cfg.words_per_doc = 28000;
  cfg.successor_prob = 0.0;
  cfg.relation_unigrams = {{{"elaboration.N", 0.5}, {"attribution.S", 0.3}, {"joint.N", 0.2}},
                           {{"contrast.N", 0.6}, {"elaboration.N", 0.4}}};
  std::map<std::string, Counts> seen;
  for (const auto& d : generate_corpus(cfg)) {
    for (const auto& label : *d.annotation->edu_sequence) seen[d.author][label.render()] += 1;
  }
  for (size_t a = 0; a < 2; ++a) {
    Counts target;
    for (const auto& [label, p] : cfg.relation_unigrams[a]) target[label] = p;
    const Counts& got = seen["author" + std::to_string(a)];
    double n = 0;
    for (const auto& [k, v] : got) n += v;
    CAPTURE(n);
    CHECK(n >= 1e5);
    CHECK(total_variation(got, target) < 0.05);
  }
}

TEST_CASE("written corpora load through the manifest reader") {
  test::TempDir dir("synth");
  SynthConfig cfg = synth_preset("discourse");
  cfg.docs_per_author = 2;
  const auto docs = generate_corpus(cfg);
  write_corpus(docs, dir.path());
  const auto loaded = load_manifest(dir / "manifest.json");
  REQUIRE(loaded.size() == docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    CHECK(loaded[i].text == docs[i].text + "\n");
    CHECK(annotation_to_json(load_annotation(*loaded[i].annotation_ref)) ==
          annotation_to_json(*docs[i].annotation));
  }
}

TEST_CASE("checked-in fixtures match regeneration") {
  const fs::path fixtures = AA_FIXTURE_DIR;
  for (const char* name : {"discourse", "char", "sparse", "interchangeable"}) {
    CAPTURE(name);
    test::TempDir dir(std::string("regen_") + name);
    write_corpus(generate_corpus(synth_preset(name)), dir.path());
    const auto files = files_under(dir.path());
    REQUIRE_FALSE(files.empty());
    for (const auto& f : files) {
      CAPTURE(f);
      CHECK(test::read_all(dir / f) == test::read_all(fixtures / name / f));
    }
  }
}
