#ifndef AA_TESTS_EXCERPT_H_
#define AA_TESTS_EXCERPT_H_

#include "aa/grid.h"

namespace aa::test {

// The three-sentence novel excerpt with every bracketed mention: the father
// (My father / who / him / him / the poor parson's) and the mother (My
// mother / her / she / she / her). Sentences are zero-based.
inline AnnotationRecord excerpt_annotation() {
  AnnotationRecord ann;
  ann.doc_id = "excerpt";
  ann.n_sentences = 3;
  const auto add = [&](const char* e, size_t s, Role r) { ann.mentions.push_back({e, s, r, {}}); };
  add("father", 0, Role::kS);
  add("father", 0, Role::kO);
  add("father", 0, Role::kO);
  add("mother", 1, Role::kS);
  add("father", 1, Role::kO);
  add("mother", 2, Role::kX);
  add("mother", 2, Role::kS);
  add("father", 2, Role::kX);
  add("mother", 2, Role::kS);
  add("mother", 2, Role::kX);
  return ann;
}

}  // namespace aa::test

#endif  // AA_TESTS_EXCERPT_H_
