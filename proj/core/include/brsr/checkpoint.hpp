#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "brsr/parameter.hpp"

namespace brsr {

// Checkpoint container: little-endian binary.
//   magic "BRSG" | format version u32 | blob count u32 | blobs...
// Each blob:
//   name length u32 | UTF-8 name | shape rank u32 | dims u64 each | f32 data
// Values are stored as 32-bit floats regardless of the in-memory precision.
// Adam state lives in a sibling file "<path>.adam" with the identical layout:
// blobs "<name>.m", "<name>.v" and a one-element "<name>.step" per parameter.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBlob {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

void write_checkpoint_blobs(const std::filesystem::path& path,
                            const std::vector<CheckpointBlob>& blobs);
std::vector<CheckpointBlob> read_checkpoint_blobs(
    const std::filesystem::path& path);

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const ParameterSet<T>& params);

// Loads values into an already-constructed parameter set; every parameter
// must be present with a matching shape.
template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParameterSet<T>& params);

template <typename T>
void save_adam_state(const std::filesystem::path& checkpoint_path,
                     const ParameterSet<T>& params);
template <typename T>
void load_adam_state(const std::filesystem::path& checkpoint_path,
                     ParameterSet<T>& params);

std::filesystem::path adam_sibling_path(const std::filesystem::path& path);

}  // namespace brsr
