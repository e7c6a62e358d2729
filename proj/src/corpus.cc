#include "aa/corpus.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace aa {
namespace {

// Returns the code point starting at text[pos] and its encoded length.
// Malformed input decodes as a single byte.
std::pair<uint32_t, size_t> decode_utf8(std::string_view text, size_t pos) {
  const auto byte = [&](size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  size_t len = 1;
  uint32_t cp = lead;
  if (lead >= 0xF0 && lead < 0xF8) {
    len = 4;
    cp = lead & 0x07;
  } else if (lead >= 0xE0) {
    len = lead < 0xF0 ? 3 : 1;
    cp = lead & 0x0F;
  } else if (lead >= 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  }
  if (len == 1 || pos + len > text.size()) return {lead, 1};
  for (size_t i = 1; i < len; ++i) {
    if ((byte(pos + i) & 0xC0) != 0x80) return {lead, 1};
    cp = (cp << 6) | (byte(pos + i) & 0x3F);
  }
  return {cp, len};
}

bool is_unicode_space(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (size_t pos = 0; pos < text.size();) {
    const auto [cp, len] = decode_utf8(text, pos);
    if (is_unicode_space(cp)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.append(text.substr(pos, len));
    }
    pos += len;
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> chars;
  chars.reserve(text.size());
  for (size_t pos = 0; pos < text.size();) {
    const size_t len = decode_utf8(text, pos).second;
    chars.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return chars;
}

std::vector<Chunk> chunk_document(const Document& doc, size_t size) {
  if (size == 0) throw Error(ErrorKind::kConfig, "chunk size must be positive");
  std::vector<std::string> words = split_words(doc.text);
  if (words.empty()) {
    throw Error(ErrorKind::kEmptyDocument, "document '" + doc.id + "' has no words");
  }
  std::vector<Chunk> chunks;
  for (size_t begin = 0; begin < words.size(); begin += size) {
    const size_t end = std::min(words.size(), begin + size);
    // 2 * n >= size is the exact form of n >= size / 2 for odd sizes too.
    if (end - begin < size && 2 * (end - begin) < size) break;
    Chunk chunk;
    chunk.doc_id = doc.id;
    chunk.author = doc.author;
    chunk.index = chunks.size();
    chunk.word_begin = begin;
    chunk.words.assign(words.begin() + begin, words.begin() + end);
    for (size_t i = 0; i < chunk.words.size(); ++i) {
      if (i) chunk.char_text.push_back(' ');
      chunk.char_text += chunk.words[i];
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

BigramSequence char_bigrams(std::string_view text) {
  const std::vector<std::string> chars = utf8_chars(text);
  BigramSequence seq;
  if (chars.size() < 2) return seq;
  seq.tokens.reserve(chars.size() - 1);
  for (size_t i = 0; i + 1 < chars.size(); ++i) {
    seq.tokens.push_back(chars[i] + chars[i + 1]);
  }
  return seq;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<Document> load_manifest(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kSchemaViolation, path.string() + ": " + e.what());
  }
  const auto violation = [&](const std::string& what) {
    return Error(ErrorKind::kSchemaViolation, path.string() + ": " + what);
  };
  if (!manifest.is_object() || !manifest.contains("documents") ||
      !manifest["documents"].is_array()) {
    throw violation("expected an object with a \"documents\" array");
  }
  const std::filesystem::path base = path.parent_path();
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (const auto& entry : manifest["documents"]) {
    if (!entry.is_object()) throw violation("document entries must be objects");
    for (const char* key : {"id", "author", "text_path"}) {
      if (!entry.contains(key) || !entry[key].is_string()) {
        throw violation(std::string("missing string field \"") + key + "\"");
      }
    }
    Document doc;
    doc.id = entry["id"].get<std::string>();
    doc.author = entry["author"].get<std::string>();
    if (doc.id.empty()) throw violation("empty document id");
    if (doc.author.empty()) throw violation("document '" + doc.id + "' has an empty author");
    if (!seen.insert(doc.id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate document id '" + doc.id + "'");
    }
    doc.text = read_text_file(base / entry["text_path"].get<std::string>());
    if (entry.contains("annotation_path") && !entry["annotation_path"].is_null()) {
      if (!entry["annotation_path"].is_string()) {
        throw violation("annotation_path must be a string or null");
      }
      std::filesystem::path ann = base / entry["annotation_path"].get<std::string>();
      if (!std::filesystem::exists(ann)) {
        throw Error(ErrorKind::kMissingFile, "annotation file " + ann.string() + " not found");
      }
      doc.annotation_ref = ann;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyDocument: return "EmptyDocument";
    case ErrorKind::kEmptyGroup: return "EmptyGroup";
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kMissingRelations: return "MissingRelations";
    case ErrorKind::kInsufficientContext: return "InsufficientContext";
    case ErrorKind::kMissingEduSequence: return "MissingEduSequence";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kSequenceTooShort: return "SequenceTooShort";
    case ErrorKind::kEmptyMap: return "EmptyMap";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDegenerateDataset: return "DegenerateDataset";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::kTooFewDocuments: return "TooFewDocuments";
    case ErrorKind::kEmptyMatrix: return "EmptyMatrix";
    case ErrorKind::kUnknownToken: return "UnknownToken";
    case ErrorKind::kInvalidDistribution: return "InvalidDistribution";
    case ErrorKind::kConfig: return "ConfigError";
  }
  return "Error";
}

}  // namespace aa
