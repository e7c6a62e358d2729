#ifndef AA_FEATURIZE_H_
#define AA_FEATURIZE_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aa/grid.h"

namespace aa {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kSepToken = "SEP";
inline constexpr int kPadIndex = 0;
inline constexpr int kUnkIndex = 1;

struct ProbabilityVector {
  std::vector<std::string> labels;
  std::vector<double> probs;

  size_t size() const { return probs.size(); }
  double at(std::string_view label) const;  // 0 for absent labels
};

struct DiscourseSequence {
  std::vector<std::string> tokens;

  size_t length() const { return tokens.size(); }
  friend bool operator==(const DiscourseSequence&, const DiscourseSequence&) = default;
};

class Vocab {
 public:
  Vocab();  // only PAD and UNK
  explicit Vocab(const std::vector<std::string>& tokens);  // tokens after PAD/UNK

  int index(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(int index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  size_t size() const { return tokens_.size(); }
  uint64_t hash() const;  // FNV-1a over the token list

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// Frequency descending, ties lexicographic.
Vocab build_vocab(const std::vector<DiscourseSequence>& sequences, size_t min_count = 1);

// The 16 length-2 transitions over {s,o,x,-} in the fixed column order
// ss so sx s- os oo ox o- xs xo xx x- -s -o -x --.
const std::array<std::string, 16>& gr_transition_labels();

ProbabilityVector gr_transition_pv(const EntityGrid& grid);
ProbabilityVector rst_pv(const RstGrid& grid, const Vocab& vocab);

// How the global GR reading treats absent cells inside a column.
enum class GapMode {
  kCompress,      // drop DASH cells, then pair consecutive roles
  kAdjacentOnly,  // only pairs of adjacent sentences that are both non-DASH
};

DiscourseSequence gr_de_local(const EntityGrid& grid);
DiscourseSequence gr_de_global(const EntityGrid& grid, GapMode gaps = GapMode::kCompress);
DiscourseSequence rst_de_local(const RstGrid& grid);
DiscourseSequence rst_de_global(const RstGrid& grid);
DiscourseSequence rst_de_edu_order(const AnnotationRecord& ann);

}  // namespace aa

#endif  // AA_FEATURIZE_H_
