#include "aa/featurize.h"

#include <algorithm>

#include "aa/error.h"

namespace aa {

double ProbabilityVector::at(std::string_view label) const {
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return probs[i];
  }
  return 0.0;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& tokens) {
  tokens_.emplace_back(kPadToken);
  tokens_.emplace_back(kUnkToken);
  index_.emplace(std::string(kPadToken), kPadIndex);
  index_.emplace(std::string(kUnkToken), kUnkIndex);
  for (const std::string& t : tokens) {
    if (index_.emplace(t, static_cast<int>(tokens_.size())).second) tokens_.push_back(t);
  }
}

int Vocab::index(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkIndex : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

uint64_t Vocab::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator byte that cannot occur in UTF-8
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

Vocab build_vocab(const std::vector<DiscourseSequence>& sequences, size_t min_count) {
  std::map<std::string, size_t> counts;
  for (const auto& seq : sequences) {
    for (const auto& t : seq.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, size_t>> entries;
  for (auto& [token, n] : counts) {
    if (n >= std::max<size_t>(min_count, 1) && token != kPadToken && token != kUnkToken) {
      entries.emplace_back(token, n);
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ordered;
  for (auto& e : entries) ordered.push_back(std::move(e.first));
  return Vocab(ordered);
}

const std::array<std::string, 16>& gr_transition_labels() {
  static const std::array<std::string, 16> labels = {
      "ss", "so", "sx", "s-", "os", "oo", "ox", "o-",
      "xs", "xo", "xx", "x-", "-s", "-o", "-x", "--"};
  return labels;
}

namespace {

// Index into gr_transition_labels(): row order s, o, x, -.
size_t transition_index(Role from, Role to) {
  const auto pos = [](Role r) -> size_t {
    switch (r) {
      case Role::kS: return 0;
      case Role::kO: return 1;
      case Role::kX: return 2;
      case Role::kDash: return 3;
    }
    return 3;
  };
  return pos(from) * 4 + pos(to);
}

std::string transition(Role a, Role b) { return {role_char(a), role_char(b)}; }

}  // namespace

ProbabilityVector gr_transition_pv(const EntityGrid& grid) {
  if (grid.n_entities() == 0 || grid.n_sentences < 2) {
    throw Error(ErrorKind::kInsufficientContext,
                "grid has no transitions (" + std::to_string(grid.n_entities()) +
                    " entities, " + std::to_string(grid.n_sentences) + " sentences)");
  }
  std::array<size_t, 16> counts{};
  size_t total = 0;
  for (size_t e = 0; e < grid.n_entities(); ++e) {
    for (size_t s = 0; s + 1 < grid.n_sentences; ++s) {
      ++counts[transition_index(grid.at(s, e), grid.at(s + 1, e))];
      ++total;
    }
  }
  ProbabilityVector pv;
  const auto& labels = gr_transition_labels();
  pv.labels.assign(labels.begin(), labels.end());
  pv.probs.resize(16);
  for (size_t i = 0; i < 16; ++i) pv.probs[i] = static_cast<double>(counts[i]) / total;
  return pv;
}

ProbabilityVector rst_pv(const RstGrid& grid, const Vocab& vocab) {
  // Every vocabulary entry except PAD is a dimension; UNK collects labels
  // the vocabulary has not seen.
  std::vector<size_t> counts(vocab.size(), 0);
  size_t total = 0;
  for (const auto& row : grid.cells) {
    for (const auto& cell : row) {
      for (const auto& label : cell) {
        ++counts[vocab.index(label.render())];
        ++total;
      }
    }
  }
  if (total == 0) {
    throw Error(ErrorKind::kInsufficientContext, "RST grid holds no relations");
  }
  ProbabilityVector pv;
  for (size_t i = 1; i < vocab.size(); ++i) {
    pv.labels.push_back(vocab.token(static_cast<int>(i)));
    pv.probs.push_back(static_cast<double>(counts[i]) / total);
  }
  return pv;
}

DiscourseSequence gr_de_local(const EntityGrid& grid) {
  DiscourseSequence seq;
  for (size_t s = 0; s + 1 < grid.n_sentences; ++s) {
    for (size_t e = 0; e < grid.n_entities(); ++e) {
      const Role a = grid.at(s, e), b = grid.at(s + 1, e);
      if (a != Role::kDash && b != Role::kDash) seq.tokens.push_back(transition(a, b));
    }
  }
  return seq;
}

namespace {

void append_column(DiscourseSequence& seq, std::vector<std::string> column) {
  if (column.empty()) return;
  if (!seq.tokens.empty()) seq.tokens.emplace_back(kSepToken);
  for (auto& t : column) seq.tokens.push_back(std::move(t));
}

}  // namespace

DiscourseSequence gr_de_global(const EntityGrid& grid, GapMode gaps) {
  DiscourseSequence seq;
  for (size_t e = 0; e < grid.n_entities(); ++e) {
    std::vector<std::string> column;
    if (gaps == GapMode::kCompress) {
      std::vector<Role> present;
      for (size_t s = 0; s < grid.n_sentences; ++s) {
        if (grid.at(s, e) != Role::kDash) present.push_back(grid.at(s, e));
      }
      for (size_t i = 0; i + 1 < present.size(); ++i) {
        column.push_back(transition(present[i], present[i + 1]));
      }
    } else {
      for (size_t s = 0; s + 1 < grid.n_sentences; ++s) {
        const Role a = grid.at(s, e), b = grid.at(s + 1, e);
        if (a != Role::kDash && b != Role::kDash) column.push_back(transition(a, b));
      }
    }
    append_column(seq, std::move(column));
  }
  return seq;
}

DiscourseSequence rst_de_local(const RstGrid& grid) {
  DiscourseSequence seq;
  for (const auto& row : grid.cells) {
    for (const auto& cell : row) {
      for (const auto& label : cell) seq.tokens.push_back(label.render());
    }
  }
  return seq;
}

DiscourseSequence rst_de_global(const RstGrid& grid) {
  DiscourseSequence seq;
  for (size_t e = 0; e < grid.n_entities(); ++e) {
    std::vector<std::string> column;
    for (const auto& row : grid.cells) {
      for (const auto& label : row[e]) column.push_back(label.render());
    }
    append_column(seq, std::move(column));
  }
  return seq;
}

DiscourseSequence rst_de_edu_order(const AnnotationRecord& ann) {
  if (!ann.edu_sequence) {
    throw Error(ErrorKind::kMissingEduSequence,
                "annotation for '" + ann.doc_id + "' has no edu_sequence");
  }
  DiscourseSequence seq;
  for (const auto& label : *ann.edu_sequence) seq.tokens.push_back(label.render());
  return seq;
}

}  // namespace aa
