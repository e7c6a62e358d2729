#ifndef AA_CHECKPOINT_H_
#define AA_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace aa {

// Container layout:
//   8-byte magic "GSTYLO01"
//   compact JSON header terminated by '\n'
//     {"version", "kind", "meta", "tensors": [{"name", "shape", "offset", "bytes"}]}
//   little-endian float32 tensor blobs in directory order
//   CRC32 (little-endian) of every preceding byte
inline constexpr char kCheckpointMagic[] = "GSTYLO01";
inline constexpr int kCheckpointVersion = 1;

struct TensorBlob {
  std::string name;
  std::vector<size_t> shape;
  std::vector<float> data;
};

struct Container {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorBlob> tensors;

  const TensorBlob& tensor(const std::string& name) const;
};

void write_container(const std::filesystem::path& path, const Container& container,
                     int version = kCheckpointVersion);
Container read_container(const std::filesystem::path& path);

uint32_t crc32_of(const std::string& bytes);

}  // namespace aa

#endif  // AA_CHECKPOINT_H_
