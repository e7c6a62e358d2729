#include "aa/grid.h"

#include <algorithm>
#include <map>
#include <set>

#include "aa/corpus.h"
#include "aa/error.h"

namespace aa {
namespace {

Error schema_error(const std::string& what) {
  return Error(ErrorKind::kSchemaViolation, what);
}

// Entities in first-mention order (document order of mentions, ties by
// position in the mention list) restricted to those passing `keep`.
template <typename Keep>
std::vector<std::string> salient_entities(const AnnotationRecord& ann, Keep keep) {
  std::vector<const Mention*> ordered;
  for (const Mention& m : ann.mentions) ordered.push_back(&m);
  std::stable_sort(ordered.begin(), ordered.end(), [](const Mention* a, const Mention* b) {
    return a->sentence_index < b->sentence_index;
  });
  std::vector<std::string> order;
  std::map<std::string, std::set<size_t>> sentences;
  for (const Mention* m : ordered) {
    auto [it, inserted] = sentences.try_emplace(m->entity_id);
    if (inserted) order.push_back(m->entity_id);
    if (keep(*m)) it->second.insert(m->sentence_index);
  }
  std::vector<std::string> salient;
  for (const std::string& id : order) {
    if (sentences[id].size() >= 2) salient.push_back(id);
  }
  return salient;
}

void check_record(const AnnotationRecord& ann) {
  for (const Mention& m : ann.mentions) {
    if (m.entity_id.empty()) throw schema_error("mention with empty entity_id");
    if (m.sentence_index >= ann.n_sentences) {
      throw schema_error("mention sentence_index " + std::to_string(m.sentence_index) +
                         " >= n_sentences " + std::to_string(ann.n_sentences));
    }
  }
}

}  // namespace

char role_char(Role role) {
  switch (role) {
    case Role::kS: return 's';
    case Role::kO: return 'o';
    case Role::kX: return 'x';
    case Role::kDash: return '-';
  }
  return '-';
}

Role role_from_char(char c) {
  switch (c) {
    case 's': case 'S': return Role::kS;
    case 'o': case 'O': return Role::kO;
    case 'x': case 'X': return Role::kX;
    case '-': return Role::kDash;
    default: throw schema_error(std::string("unknown role '") + c + "'");
  }
}

RelationLabel RelationLabel::parse(std::string_view rendered) {
  const size_t dot = rendered.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 2 != rendered.size()) {
    throw schema_error("relation label '" + std::string(rendered) +
                       "' must look like name.N or name.S");
  }
  const char nuc = rendered[dot + 1];
  if (nuc != 'N' && nuc != 'S') {
    throw schema_error("relation label '" + std::string(rendered) + "' has bad nuclearity");
  }
  std::string name(rendered.substr(0, dot));
  for (char c : name) {
    if (c >= 'A' && c <= 'Z') {
      throw schema_error("relation name '" + name + "' must be lowercase");
    }
  }
  return RelationLabel{std::move(name), nuc};
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw schema_error("annotation record must be an object");
  for (const char* key : {"doc_id", "n_sentences", "mentions"}) {
    if (!j.contains(key)) throw schema_error(std::string("missing field \"") + key + "\"");
  }
  AnnotationRecord ann;
  try {
    ann.doc_id = j.at("doc_id").get<std::string>();
    if (!j.at("n_sentences").is_number_unsigned() && !j.at("n_sentences").is_number_integer()) {
      throw schema_error("n_sentences must be an integer");
    }
    const auto n = j.at("n_sentences").get<long long>();
    if (n < 0) throw schema_error("n_sentences must be non-negative");
    ann.n_sentences = static_cast<size_t>(n);
    for (const auto& jm : j.at("mentions")) {
      Mention m;
      m.entity_id = jm.at("entity_id").get<std::string>();
      const auto idx = jm.at("sentence_index").get<long long>();
      if (idx < 0) throw schema_error("negative sentence_index");
      m.sentence_index = static_cast<size_t>(idx);
      const auto role = jm.at("role").get<std::string>();
      if (role != "s" && role != "o" && role != "x") {
        throw schema_error("role must be \"s\", \"o\" or \"x\", got \"" + role + "\"");
      }
      m.role = role_from_char(role[0]);
      if (jm.contains("relations")) {
        for (const auto& r : jm.at("relations")) {
          m.relations.push_back(RelationLabel::parse(r.get<std::string>()));
        }
      }
      ann.mentions.push_back(std::move(m));
    }
    if (j.contains("edu_sequence") && !j.at("edu_sequence").is_null()) {
      std::vector<RelationLabel> edus;
      for (const auto& r : j.at("edu_sequence")) {
        edus.push_back(RelationLabel::parse(r.get<std::string>()));
      }
      ann.edu_sequence = std::move(edus);
    }
    if (j.contains("sentence_starts") && !j.at("sentence_starts").is_null()) {
      ann.sentence_starts = j.at("sentence_starts").get<std::vector<size_t>>();
      if (ann.sentence_starts->size() != ann.n_sentences) {
        throw schema_error("sentence_starts length differs from n_sentences");
      }
      if (!std::is_sorted(ann.sentence_starts->begin(), ann.sentence_starts->end())) {
        throw schema_error("sentence_starts must be non-decreasing");
      }
    }
    if (j.contains("edu_sentences") && !j.at("edu_sentences").is_null()) {
      ann.edu_sentences = j.at("edu_sentences").get<std::vector<size_t>>();
      const size_t n_edus = ann.edu_sequence ? ann.edu_sequence->size() : 0;
      if (ann.edu_sentences->size() != n_edus) {
        throw schema_error("edu_sentences length differs from edu_sequence");
      }
      for (size_t s : *ann.edu_sentences) {
        if (s >= ann.n_sentences) throw schema_error("edu_sentences index out of range");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(e.what());
  }
  check_record(ann);
  return ann;
}

nlohmann::json annotation_to_json(const AnnotationRecord& ann) {
  nlohmann::json j;
  j["doc_id"] = ann.doc_id;
  j["n_sentences"] = ann.n_sentences;
  j["mentions"] = nlohmann::json::array();
  for (const Mention& m : ann.mentions) {
    nlohmann::json jm;
    jm["entity_id"] = m.entity_id;
    jm["sentence_index"] = m.sentence_index;
    jm["role"] = std::string(1, role_char(m.role));
    jm["relations"] = nlohmann::json::array();
    for (const auto& r : m.relations) jm["relations"].push_back(r.render());
    j["mentions"].push_back(std::move(jm));
  }
  if (ann.edu_sequence) {
    j["edu_sequence"] = nlohmann::json::array();
    for (const auto& r : *ann.edu_sequence) j["edu_sequence"].push_back(r.render());
  }
  if (ann.sentence_starts) j["sentence_starts"] = *ann.sentence_starts;
  if (ann.edu_sentences) j["edu_sentences"] = *ann.edu_sentences;
  return j;
}

AnnotationRecord load_annotation(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw schema_error(path.string() + ": " + e.what());
  }
  try {
    return annotation_from_json(j);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

AnnotationRecord scope_to_words(const AnnotationRecord& ann, size_t word_begin,
                                size_t word_end, size_t total_words) {
  const size_t n = ann.n_sentences;
  std::vector<size_t> starts(n);
  for (size_t i = 0; i < n; ++i) {
    starts[i] = ann.sentence_starts ? (*ann.sentence_starts)[i] : i * total_words / n;
  }
  // Sentences are contiguous in document order, so the kept ones form a range.
  constexpr size_t kNone = static_cast<size_t>(-1);
  size_t first = kNone, last = kNone;
  for (size_t i = 0; i < n; ++i) {
    if (starts[i] >= word_begin && starts[i] < word_end) {
      if (first == kNone) first = i;
      last = i;
    }
  }
  AnnotationRecord out;
  out.doc_id = ann.doc_id;
  out.n_sentences = first == kNone ? 0 : last - first + 1;
  const auto inside = [&](size_t s) { return first != kNone && s >= first && s <= last; };
  for (const Mention& m : ann.mentions) {
    if (!inside(m.sentence_index)) continue;
    Mention scoped = m;
    scoped.sentence_index -= first;
    out.mentions.push_back(std::move(scoped));
  }
  if (ann.sentence_starts) {
    std::vector<size_t> scoped;
    for (size_t i = 0; i < n; ++i) {
      if (inside(i)) scoped.push_back(starts[i] - word_begin);
    }
    out.sentence_starts = std::move(scoped);
  }
  if (ann.edu_sequence) {
    const auto& edus = *ann.edu_sequence;
    std::vector<RelationLabel> kept;
    std::vector<size_t> kept_sentences;
    for (size_t e = 0; e < edus.size(); ++e) {
      // Without an explicit alignment, EDUs spread evenly over sentences.
      const size_t s = ann.edu_sentences ? (*ann.edu_sentences)[e] : e * n / edus.size();
      if (!inside(s)) continue;
      kept.push_back(edus[e]);
      kept_sentences.push_back(s - first);
    }
    out.edu_sequence = std::move(kept);
    if (ann.edu_sentences) out.edu_sentences = std::move(kept_sentences);
  }
  return out;
}

EntityGrid build_gr_grid(const AnnotationRecord& ann) {
  check_record(ann);
  EntityGrid grid;
  grid.entity_ids = salient_entities(ann, [](const Mention&) { return true; });
  grid.n_sentences = ann.n_sentences;
  grid.cells.assign(ann.n_sentences, std::vector<Role>(grid.entity_ids.size(), Role::kDash));
  std::map<std::string, size_t> column;
  for (size_t c = 0; c < grid.entity_ids.size(); ++c) column[grid.entity_ids[c]] = c;
  for (const Mention& m : ann.mentions) {
    auto it = column.find(m.entity_id);
    if (it == column.end()) continue;
    Role& cell = grid.cells[m.sentence_index][it->second];
    cell = std::max(cell, m.role);
  }
  return grid;
}

RstGrid build_rst_grid(const AnnotationRecord& ann, bool strict) {
  check_record(ann);
  RstGrid grid;
  grid.entity_ids =
      salient_entities(ann, [](const Mention& m) { return !m.relations.empty(); });
  grid.n_sentences = ann.n_sentences;
  grid.cells.assign(ann.n_sentences,
                    std::vector<std::vector<RelationLabel>>(grid.entity_ids.size()));
  std::map<std::string, size_t> column;
  for (size_t c = 0; c < grid.entity_ids.size(); ++c) column[grid.entity_ids[c]] = c;
  for (const Mention& m : ann.mentions) {
    auto it = column.find(m.entity_id);
    if (it == column.end()) continue;
    if (m.relations.empty() && strict) {
      throw Error(ErrorKind::kMissingRelations,
                  "mention of '" + m.entity_id + "' in sentence " +
                      std::to_string(m.sentence_index) + " has no relations");
    }
    auto& cell = grid.cells[m.sentence_index][it->second];
    cell.insert(cell.end(), m.relations.begin(), m.relations.end());
  }
  return grid;
}

namespace {

template <typename Grid, typename Filled>
std::vector<std::string> validate_shape(const Grid& grid, Filled filled) {
  std::vector<std::string> violations;
  const size_t width = grid.entity_ids.size();
  if (grid.cells.size() != grid.n_sentences) {
    violations.push_back("shape: " + std::to_string(grid.cells.size()) + " rows but n_sentences = " +
                         std::to_string(grid.n_sentences));
  }
  bool rectangular = true;
  for (size_t r = 0; r < grid.cells.size(); ++r) {
    if (grid.cells[r].size() != width) {
      rectangular = false;
      violations.push_back("shape: row " + std::to_string(r) + " has " +
                           std::to_string(grid.cells[r].size()) + " cells, expected " +
                           std::to_string(width));
    }
  }
  if (!rectangular) return violations;
  for (size_t c = 0; c < width; ++c) {
    size_t count = 0;
    for (const auto& row : grid.cells) count += filled(row[c]) ? 1 : 0;
    if (count < 2) {
      violations.push_back("salience: column '" + grid.entity_ids[c] + "' has " +
                           std::to_string(count) + " filled cell(s)");
    }
  }
  return violations;
}

}  // namespace

std::vector<std::string> validate_grid(const EntityGrid& grid) {
  return validate_shape(grid, [](Role r) { return r != Role::kDash; });
}

std::vector<std::string> validate_grid(const RstGrid& grid) {
  return validate_shape(grid, [](const std::vector<RelationLabel>& c) { return !c.empty(); });
}

}  // namespace aa
