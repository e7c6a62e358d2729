#ifndef AA_GRID_H_
#define AA_GRID_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace aa {

// Grammatical role of an entity in a sentence, ordered by rank.
enum class Role { kDash = 0, kX = 1, kO = 2, kS = 3 };

char role_char(Role role);  // 's', 'o', 'x' or '-'
Role role_from_char(char c);

struct RelationLabel {
  std::string relation;  // fine-grained RST relation, lowercase
  char nuclearity = 'N';  // 'N' or 'S'

  std::string render() const { return relation + "." + nuclearity; }
  static RelationLabel parse(std::string_view rendered);

  friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
};

struct Mention {
  std::string entity_id;
  size_t sentence_index = 0;
  Role role = Role::kX;
  std::vector<RelationLabel> relations;
};

// Parser output for one document. `sentence_starts` (word offset of each
// sentence) and `edu_sentences` (sentence of each EDU) are optional
// extensions used to scope a record to a chunk of the document.
struct AnnotationRecord {
  std::string doc_id;
  size_t n_sentences = 0;
  std::vector<Mention> mentions;
  std::optional<std::vector<RelationLabel>> edu_sequence;
  std::optional<std::vector<size_t>> sentence_starts;
  std::optional<std::vector<size_t>> edu_sentences;
};

AnnotationRecord annotation_from_json(const nlohmann::json& j);
nlohmann::json annotation_to_json(const AnnotationRecord& ann);
AnnotationRecord load_annotation(const std::filesystem::path& path);

// Restricts a record to the sentences that start inside words
// [word_begin, word_end) of a document with `total_words` words. Sentence
// and mention indices are renumbered from zero.
AnnotationRecord scope_to_words(const AnnotationRecord& ann, size_t word_begin,
                                size_t word_end, size_t total_words);

struct EntityGrid {
  std::vector<std::string> entity_ids;  // first-mention order
  size_t n_sentences = 0;
  std::vector<std::vector<Role>> cells;  // [sentence][entity]

  size_t n_entities() const { return entity_ids.size(); }
  Role at(size_t sentence, size_t entity) const { return cells[sentence][entity]; }
};

struct RstGrid {
  std::vector<std::string> entity_ids;
  size_t n_sentences = 0;
  std::vector<std::vector<std::vector<RelationLabel>>> cells;  // [sentence][entity]

  size_t n_entities() const { return entity_ids.size(); }
};

// Columns are entities mentioned at least twice; a cell keeps the
// highest-ranked role of the entity's mentions in that sentence.
EntityGrid build_gr_grid(const AnnotationRecord& ann);

// Same salience filter; a cell concatenates the relation lists of the
// entity's mentions in that sentence in mention order. In strict mode a
// salient mention without relations raises MissingRelations.
RstGrid build_rst_grid(const AnnotationRecord& ann, bool strict = false);

// Empty result means the grid is well formed.
std::vector<std::string> validate_grid(const EntityGrid& grid);
std::vector<std::string> validate_grid(const RstGrid& grid);

}  // namespace aa

#endif  // AA_GRID_H_
