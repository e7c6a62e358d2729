#ifndef AA_SYNTH_H_
#define AA_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aa/grid.h"
#include "json.hpp"

namespace aa {

// Knobs for a generated corpus. Each author gets a signature derived from the
// seed: a letter-bigram chain (shared when `char_identical`), a role chain
// over {s,o,x}, and a relation chain that follows an author-specific
// successor map with probability `successor_prob` and otherwise draws from an
// author-skewed unigram distribution.
struct SynthConfig {
  uint64_t seed = 1;
  size_t authors = 4;
  size_t docs_per_author = 20;
  size_t words_per_doc = 600;
  bool char_identical = true;
  double char_contrast = 2.0;  // log-weight spread of per-author letter chains
  size_t min_sentence_words = 8;
  size_t max_sentence_words = 14;
  bool annotate = true;
  size_t active_entities = 3;
  size_t min_entity_span = 4;  // sentences an entity stays in play
  size_t max_entity_span = 10;
  double mention_rate = 0.7;   // chance an active entity is mentioned in a sentence
  size_t relation_count = 12;
  double successor_prob = 0.7;
  double unigram_contrast = 1.0;
  // Relation pairs whose second member replaces the first half of the time.
  std::vector<std::pair<std::string, std::string>> interchangeable;
  // Optional explicit per-author relation unigram distributions, keyed by
  // rendered label; each must sum to 1.
  std::vector<std::vector<std::pair<std::string, double>>> relation_unigrams;

  void validate() const;  // kConfig or kInvalidDistribution
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Label names used by the generator, in index order.
std::vector<RelationLabel> synth_relation_labels(size_t count);

struct SynthDocument {
  std::string id;
  std::string author;
  std::string text;
  std::optional<AnnotationRecord> annotation;
};

// Named configurations used for the test fixtures: "discourse" (authors share
// one letter chain and differ only in their annotations), "char" (distinct
// letter chains, no annotations), "sparse" (long documents with rare
// mentions) and "interchangeable" (two relations used as synonyms).
SynthConfig synth_preset(std::string_view name);

std::vector<SynthDocument> generate_corpus(const SynthConfig& config);

// Writes manifest.json, texts/<id>.txt and (when annotated) ann/<id>.json.
void write_corpus(const std::vector<SynthDocument>& docs, const std::filesystem::path& dir);

}  // namespace aa

#endif  // AA_SYNTH_H_
