#include "aa/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "aa/error.h"
#include "aa/rng.h"

namespace aa {

namespace {

constexpr size_t kLetters = 26;
constexpr size_t kEndOfWord = kLetters;  // emission index that closes a word
constexpr size_t kMinWordLen = 2;
constexpr size_t kMaxWordLen = 9;

double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> log_normal_weights(Rng& rng, size_t n, double spread) {
  std::vector<double> w(n);
  for (auto& x : w) x = std::exp(spread * normal(rng));
  return w;
}

size_t draw(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

// Letter chain: row 0 is the word-start state, row 1 + c follows letter c.
struct LetterChain {
  std::vector<std::vector<double>> rows;

  LetterChain(Rng& rng, double spread) {
    rows.resize(kLetters + 1);
    for (auto& row : rows) {
      row = log_normal_weights(rng, kLetters + 1, spread);
      row[kEndOfWord] *= 3.0;  // keeps words short on average
    }
    rows[0][kEndOfWord] = 0.0;
  }

  std::string word(Rng& rng) const {
    std::string w;
    size_t state = 0;
    for (;;) {
      std::vector<double> row = rows[state];
      if (w.size() < kMinWordLen) row[kEndOfWord] = 0.0;
      const size_t next = w.size() >= kMaxWordLen ? kEndOfWord : draw(row, rng);
      if (next == kEndOfWord) return w;
      w.push_back(static_cast<char>('a' + next));
      state = next + 1;
    }
  }
};

struct AuthorModel {
  std::string name;
  const LetterChain* letters = nullptr;
  std::vector<double> role_start;                // s, o, x
  std::vector<std::vector<double>> role_next;    // [prev][next]
  std::vector<size_t> successor;                 // relation index -> preferred next
  std::vector<double> relation_unigram;
};

Role role_of(size_t i) { return i == 0 ? Role::kS : i == 1 ? Role::kO : Role::kX; }

struct ActiveEntity {
  std::string id;
  size_t remaining = 0;
  int last_role = -1;
  int last_relation = -1;
};

}  // namespace

std::vector<RelationLabel> synth_relation_labels(size_t count) {
  static const char* kNames[] = {"elaboration", "attribution", "joint",      "contrast",
                                 "background",  "cause",       "condition",  "temporal",
                                 "explanation", "evaluation",  "enablement", "comparison",
                                 "manner",      "summary",     "topic",      "same-unit"};
  std::vector<RelationLabel> out;
  for (size_t i = 0; i < count; ++i) {
    const size_t name = i / 2 % std::size(kNames);
    std::string relation = kNames[name];
    if (i >= 2 * std::size(kNames)) relation += std::to_string(i / (2 * std::size(kNames)));
    out.push_back({relation, i % 2 == 0 ? 'N' : 'S'});
  }
  return out;
}

void SynthConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, what); };
  if (authors < 2) fail("synthetic corpus needs at least two authors");
  if (docs_per_author == 0 || words_per_doc == 0) fail("documents must be non-empty");
  if (min_sentence_words == 0 || min_sentence_words > max_sentence_words) {
    fail("sentence length range is invalid");
  }
  if (min_entity_span == 0 || min_entity_span > max_entity_span) fail("entity span range is invalid");
  if (relation_count < 2) fail("need at least two relation labels");
  for (double p : {mention_rate, successor_prob}) {
    if (!(p >= 0 && p <= 1)) throw Error(ErrorKind::kInvalidDistribution, "probability out of [0, 1]");
  }
  if (!relation_unigrams.empty() && relation_unigrams.size() != authors) {
    fail("relation_unigrams must list one distribution per author");
  }
  const auto labels = synth_relation_labels(relation_count);
  const auto known = [&](const std::string& s) {
    return std::any_of(labels.begin(), labels.end(),
                       [&](const RelationLabel& l) { return l.render() == s; });
  };
  for (const auto& dist : relation_unigrams) {
    double total = 0.0;
    for (const auto& [label, p] : dist) {
      if (!known(label)) fail("unknown relation label '" + label + "'");
      if (!(p >= 0)) throw Error(ErrorKind::kInvalidDistribution, "negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorKind::kInvalidDistribution,
                  "relation distribution sums to " + std::to_string(total) + ", not 1");
    }
  }
  for (const auto& [a, b] : interchangeable) {
    if (!known(a) || !known(b)) fail("unknown relation in interchangeable pair");
  }
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json j = {{"seed", seed},
                      {"authors", authors},
                      {"docs_per_author", docs_per_author},
                      {"words_per_doc", words_per_doc},
                      {"char_identical", char_identical},
                      {"char_contrast", char_contrast},
                      {"min_sentence_words", min_sentence_words},
                      {"max_sentence_words", max_sentence_words},
                      {"annotate", annotate},
                      {"active_entities", active_entities},
                      {"min_entity_span", min_entity_span},
                      {"max_entity_span", max_entity_span},
                      {"mention_rate", mention_rate},
                      {"relation_count", relation_count},
                      {"successor_prob", successor_prob},
                      {"unigram_contrast", unigram_contrast}};
  j["interchangeable"] = nlohmann::json::array();
  for (const auto& [a, b] : interchangeable) j["interchangeable"].push_back({a, b});
  j["relation_unigrams"] = nlohmann::json::array();
  for (const auto& dist : relation_unigrams) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [label, p] : dist) d[label] = p;
    j["relation_unigrams"].push_back(d);
  }
  return j;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.authors = j.value("authors", c.authors);
    c.docs_per_author = j.value("docs_per_author", c.docs_per_author);
    c.words_per_doc = j.value("words_per_doc", c.words_per_doc);
    c.char_identical = j.value("char_identical", c.char_identical);
    c.char_contrast = j.value("char_contrast", c.char_contrast);
    c.min_sentence_words = j.value("min_sentence_words", c.min_sentence_words);
    c.max_sentence_words = j.value("max_sentence_words", c.max_sentence_words);
    c.annotate = j.value("annotate", c.annotate);
    c.active_entities = j.value("active_entities", c.active_entities);
    c.min_entity_span = j.value("min_entity_span", c.min_entity_span);
    c.max_entity_span = j.value("max_entity_span", c.max_entity_span);
    c.mention_rate = j.value("mention_rate", c.mention_rate);
    c.relation_count = j.value("relation_count", c.relation_count);
    c.successor_prob = j.value("successor_prob", c.successor_prob);
    c.unigram_contrast = j.value("unigram_contrast", c.unigram_contrast);
    if (j.contains("interchangeable")) {
      for (const auto& pair : j.at("interchangeable")) {
        c.interchangeable.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
    }
    if (j.contains("relation_unigrams")) {
      for (const auto& d : j.at("relation_unigrams")) {
        std::vector<std::pair<std::string, double>> dist;
        for (const auto& [label, p] : d.items()) dist.emplace_back(label, p.get<double>());
        c.relation_unigrams.push_back(std::move(dist));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("synthetic corpus config: ") + e.what());
  }
  return c;
}

SynthConfig synth_preset(std::string_view name) {
  SynthConfig c;
  if (name == "discourse") return c;
  if (name == "char") {
    c.char_identical = false;
    c.annotate = false;
    return c;
  }
  if (name == "sparse") {
    c.docs_per_author = 5;
    c.words_per_doc = 6000;
    c.min_entity_span = 100000;
    c.max_entity_span = 100000;
    c.mention_rate = 0.08;
    c.successor_prob = 0.8;
    return c;
  }
  if (name == "interchangeable") {
    c.authors = 2;
    c.docs_per_author = 10;
    c.interchangeable = {{"elaboration.N", "attribution.N"}};
    return c;
  }
  throw Error(ErrorKind::kConfig, "unknown synthetic preset '" + std::string(name) + "'");
}

std::vector<SynthDocument> generate_corpus(const SynthConfig& config) {
  config.validate();
  const std::vector<RelationLabel> labels = synth_relation_labels(config.relation_count);
  const size_t n_rel = labels.size();
  std::map<size_t, size_t> swap_to;
  for (const auto& [a, b] : config.interchangeable) {
    size_t ia = 0, ib = 0;
    for (size_t i = 0; i < n_rel; ++i) {
      if (labels[i].render() == a) ia = i;
      if (labels[i].render() == b) ib = i;
    }
    swap_to[ia] = ib;
  }

  std::vector<LetterChain> chains;
  if (config.char_identical) {
    Rng rng(Rng::mix(config.seed, 0xC0FFEE));
    chains.emplace_back(rng, 1.0);
  } else {
    for (size_t a = 0; a < config.authors; ++a) {
      Rng rng(Rng::mix(config.seed, 0xC0FFEE + 1 + a));
      chains.emplace_back(rng, config.char_contrast);
    }
  }

  std::vector<AuthorModel> authors(config.authors);
  for (size_t a = 0; a < config.authors; ++a) {
    AuthorModel& m = authors[a];
    m.name = "author" + std::to_string(a);
    m.letters = &chains[config.char_identical ? 0 : a];
    Rng rng(Rng::mix(config.seed, 0xA07 + a));
    m.role_start = log_normal_weights(rng, 3, 1.0);
    for (size_t r = 0; r < 3; ++r) m.role_next.push_back(log_normal_weights(rng, 3, 1.5));
    m.successor.resize(n_rel);
    std::iota(m.successor.begin(), m.successor.end(), 0);
    for (size_t i = n_rel; i > 1; --i) std::swap(m.successor[i - 1], m.successor[rng.below(i)]);
    if (config.relation_unigrams.empty()) {
      m.relation_unigram = log_normal_weights(rng, n_rel, config.unigram_contrast);
    } else {
      m.relation_unigram.assign(n_rel, 0.0);
      for (const auto& [label, p] : config.relation_unigrams[a]) {
        for (size_t i = 0; i < n_rel; ++i) {
          if (labels[i].render() == label) m.relation_unigram[i] = p;
        }
      }
    }
  }

  std::vector<SynthDocument> docs;
  for (size_t a = 0; a < config.authors; ++a) {
    const AuthorModel& author = authors[a];
    for (size_t d = 0; d < config.docs_per_author; ++d) {
      Rng rng(Rng::mix(config.seed, (a + 1) * 100003 + d));
      SynthDocument doc;
      char id[64];
      std::snprintf(id, sizeof id, "%s-d%03zu", author.name.c_str(), d);
      doc.id = id;
      doc.author = author.name;

      AnnotationRecord ann;
      ann.doc_id = doc.id;
      ann.sentence_starts.emplace();
      ann.edu_sequence.emplace();
      ann.edu_sentences.emplace();

      std::vector<ActiveEntity> active;
      size_t next_entity = 0;
      const auto spawn = [&] {
        ActiveEntity e;
        e.id = "e" + std::to_string(next_entity++);
        e.remaining = config.min_entity_span +
                      rng.below(config.max_entity_span - config.min_entity_span + 1);
        return e;
      };
      for (size_t i = 0; i < config.active_entities; ++i) active.push_back(spawn());

      size_t words = 0;
      size_t sentence = 0;
      while (words < config.words_per_doc) {
        size_t len = config.min_sentence_words +
                     rng.below(config.max_sentence_words - config.min_sentence_words + 1);
        len = std::min(len, config.words_per_doc - words);
        ann.sentence_starts->push_back(words);
        for (size_t w = 0; w < len; ++w) {
          if (!doc.text.empty()) doc.text += ' ';
          doc.text += author.letters->word(rng);
        }
        doc.text += '.';
        words += len;

        size_t edus_here = 0;
        for (ActiveEntity& e : active) {
          if (!rng.bernoulli(config.mention_rate)) continue;
          const size_t role = e.last_role < 0 ? draw(author.role_start, rng)
                                              : draw(author.role_next[e.last_role], rng);
          size_t rel;
          if (e.last_relation >= 0 && rng.bernoulli(config.successor_prob)) {
            rel = author.successor[e.last_relation];
          } else {
            rel = draw(author.relation_unigram, rng);
          }
          e.last_role = static_cast<int>(role);
          e.last_relation = static_cast<int>(rel);
          size_t shown = rel;
          if (auto it = swap_to.find(rel); it != swap_to.end() && rng.bernoulli(0.5)) {
            shown = it->second;
          }
          ann.mentions.push_back({e.id, sentence, role_of(role), {labels[shown]}});
          ann.edu_sequence->push_back(labels[shown]);
          ann.edu_sentences->push_back(sentence);
          ++edus_here;
        }
        if (edus_here == 0) {
          ann.edu_sequence->push_back(labels[draw(author.relation_unigram, rng)]);
          ann.edu_sentences->push_back(sentence);
        }
        for (ActiveEntity& e : active) {
          if (--e.remaining == 0) e = spawn();
        }
        ++sentence;
      }
      ann.n_sentences = sentence;
      if (config.annotate) doc.annotation = std::move(ann);
      docs.push_back(std::move(doc));
    }
  }
  return docs;
}

void write_corpus(const std::vector<SynthDocument>& docs, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "texts");
  bool any_annotation = false;
  for (const auto& d : docs) any_annotation = any_annotation || d.annotation.has_value();
  if (any_annotation) fs::create_directories(dir / "ann");
  const auto write = [](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kMissingFile, "cannot write " + path.string());
    out << content;
  };
  nlohmann::json manifest;
  manifest["documents"] = nlohmann::json::array();
  for (const SynthDocument& d : docs) {
    const std::string text_rel = "texts/" + d.id + ".txt";
    write(dir / text_rel, d.text + "\n");
    nlohmann::json entry = {{"id", d.id}, {"author", d.author}, {"text_path", text_rel}};
    if (d.annotation) {
      const std::string ann_rel = "ann/" + d.id + ".json";
      write(dir / ann_rel, annotation_to_json(*d.annotation).dump() + "\n");
      entry["annotation_path"] = ann_rel;
    } else {
      entry["annotation_path"] = nullptr;
    }
    manifest["documents"].push_back(std::move(entry));
  }
  write(dir / "manifest.json", manifest.dump(1) + "\n");
}

}  // namespace aa
