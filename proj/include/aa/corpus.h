#ifndef AA_CORPUS_H_
#define AA_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aa/error.h"
#include "aa/rng.h"

namespace aa {

struct Document {
  std::string id;
  std::string author;
  std::string text;  // UTF-8
  std::optional<std::filesystem::path> annotation_ref;
};

struct Chunk {
  std::string doc_id;
  std::string author;
  size_t index = 0;       // position of the chunk within its document
  size_t word_begin = 0;  // offset of words[0] in the document's word list
  std::vector<std::string> words;
  std::string char_text;  // words joined by single spaces

  std::string id() const { return doc_id + "#" + std::to_string(index); }
};

struct BigramSequence {
  std::vector<std::string> tokens;
  size_t length() const { return tokens.size(); }
};

// Splits on Unicode whitespace. Punctuation stays attached to words.
std::vector<std::string> split_words(std::string_view text);

// Decodes UTF-8 into one string per code point. Bytes that do not start a
// valid sequence are passed through as single characters.
std::vector<std::string> utf8_chars(std::string_view text);

// Consecutive `size`-word chunks; a trailing remainder survives only when it
// holds at least size/2 words.
std::vector<Chunk> chunk_document(const Document& doc, size_t size);

BigramSequence char_bigrams(std::string_view text);

// Loads `{"documents": [{"id", "author", "text_path", "annotation_path"}]}`.
// Relative paths resolve against the manifest's directory.
std::vector<Document> load_manifest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

// Tops every group up to the size of the largest one by drawing duplicates
// uniformly with replacement from the group itself. Originals keep their
// positions at the front of each list.
template <typename T>
std::map<std::string, std::vector<T>> oversample(
    std::map<std::string, std::vector<T>> groups, uint64_t seed) {
  size_t target = 0;
  for (const auto& [key, items] : groups) {
    if (items.empty()) {
      throw Error(ErrorKind::kEmptyGroup, "group '" + key + "' is empty");
    }
    target = std::max(target, items.size());
  }
  uint64_t salt = 0;
  for (auto& [key, items] : groups) {
    Rng rng(Rng::mix(seed, salt++));
    const size_t original = items.size();
    items.reserve(target);
    while (items.size() < target) {
      T copy = items[rng.below(original)];
      items.push_back(std::move(copy));
    }
  }
  return groups;
}

}  // namespace aa

#endif  // AA_CORPUS_H_
