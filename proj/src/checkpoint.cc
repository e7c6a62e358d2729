#include "aa/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "aa/corpus.h"
#include "aa/error.h"

namespace aa {
namespace {

Error corrupt(const std::filesystem::path& path, const std::string& what) {
  return Error(ErrorKind::kCorruptCheckpoint, path.string() + ": " + what);
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const std::string& in, size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

uint32_t crc32_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<uint32_t>(crc);
}

const TensorBlob& Container::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw Error(ErrorKind::kCorruptCheckpoint, "checkpoint has no tensor '" + name + "'");
}

void write_container(const std::filesystem::path& path, const Container& container, int version) {
  nlohmann::json header;
  header["version"] = version;
  header["kind"] = container.kind;
  header["meta"] = container.meta;
  header["tensors"] = nlohmann::json::array();
  size_t offset = 0;
  for (const auto& t : container.tensors) {
    size_t count = 1;
    for (size_t d : t.shape) count *= d;
    if (count != t.data.size()) {
      throw Error(ErrorKind::kShapeMismatch, "tensor '" + t.name + "' shape does not match data");
    }
    header["tensors"].push_back(
        {{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"bytes", 4 * count}});
    offset += 4 * count;
  }
  std::string out(kCheckpointMagic, 8);
  out += header.dump();
  out.push_back('\n');
  for (const auto& t : container.tensors) {
    for (float f : t.data) put_u32(out, std::bit_cast<uint32_t>(f));
  }
  put_u32(out, crc32_of(out));
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kMissingFile, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::kMissingFile, "write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  if (raw.size() < 8 + 1 + 4) throw corrupt(path, "file too short");
  if (std::memcmp(raw.data(), kCheckpointMagic, 8) != 0) throw corrupt(path, "bad magic");
  const size_t body = raw.size() - 4;
  if (crc32_of(raw.substr(0, body)) != get_u32(raw, body)) {
    throw corrupt(path, "CRC32 mismatch (truncated or modified file)");
  }
  const size_t newline = raw.find('\n', 8);
  if (newline == std::string::npos || newline >= body) throw corrupt(path, "unterminated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(8, newline - 8));
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(path, std::string("unreadable header: ") + e.what());
  }
  Container c;
  try {
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw corrupt(path, "unsupported checkpoint version " + std::to_string(version) +
                              " (this build reads version " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    c.kind = header.at("kind").get<std::string>();
    c.meta = header.value("meta", nlohmann::json::object());
    const size_t data_begin = newline + 1;
    for (const auto& entry : header.at("tensors")) {
      TensorBlob t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<size_t>>();
      const size_t offset = entry.at("offset").get<size_t>();
      const size_t bytes = entry.at("bytes").get<size_t>();
      size_t count = 1;
      for (size_t d : t.shape) count *= d;
      if (bytes != 4 * count || data_begin + offset + bytes > body) {
        throw corrupt(path, "tensor '" + t.name + "' lies outside the data section");
      }
      t.data.resize(count);
      for (size_t i = 0; i < count; ++i) {
        t.data[i] = std::bit_cast<float>(get_u32(raw, data_begin + offset + 4 * i));
      }
      c.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(path, std::string("malformed header: ") + e.what());
  }
  return c;
}

}  // namespace aa
