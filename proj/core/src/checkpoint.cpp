#include "brsr/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "brsr/common.hpp"

namespace brsr {

namespace {

constexpr char kMagic[4] = {'B', 'R', 'S', 'G'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32(std::ostream& os, const float* data, std::size_t n) {
  static_assert(sizeof(float) == 4);
  // Host is little-endian on every supported target; serialize per element to
  // keep the format definition explicit.
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    write_u32(os, bits);
  }
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  BRSR_REQUIRE(is.good(), ErrorKind::Checkpoint, "checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  BRSR_REQUIRE(is.good(), ErrorKind::Checkpoint, "checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void write_checkpoint_blobs(const std::filesystem::path& path,
                            const std::vector<CheckpointBlob>& blobs) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  BRSR_REQUIRE(os.good(), ErrorKind::Io,
               "cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& blob : blobs) {
    write_u32(os, static_cast<std::uint32_t>(blob.name.size()));
    os.write(blob.name.data(), static_cast<std::streamsize>(blob.name.size()));
    write_u32(os, static_cast<std::uint32_t>(blob.dims.size()));
    std::uint64_t n = 1;
    for (auto d : blob.dims) {
      write_u64(os, d);
      n *= d;
    }
    BRSR_REQUIRE(n == blob.data.size(), ErrorKind::Checkpoint,
                 "blob '" + blob.name + "': dims do not match data size");
    write_f32(os, blob.data.data(), blob.data.size());
  }
  os.flush();
  BRSR_REQUIRE(os.good(), ErrorKind::Io, "write failed: " + path.string());
}

std::vector<CheckpointBlob> read_checkpoint_blobs(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  BRSR_REQUIRE(is.good(), ErrorKind::Io, "cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  BRSR_REQUIRE(is.good() && std::memcmp(magic, kMagic, 4) == 0,
               ErrorKind::Checkpoint, "bad magic in " + path.string());
  const std::uint32_t version = read_u32(is);
  BRSR_REQUIRE(version == kCheckpointVersion, ErrorKind::Checkpoint,
               "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = read_u32(is);
  std::vector<CheckpointBlob> blobs(count);
  for (auto& blob : blobs) {
    const std::uint32_t name_len = read_u32(is);
    blob.name.resize(name_len);
    is.read(blob.name.data(), name_len);
    const std::uint32_t rank = read_u32(is);
    blob.dims.resize(rank);
    std::uint64_t n = 1;
    for (auto& d : blob.dims) {
      d = read_u64(is);
      n *= d;
    }
    blob.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = read_u32(is);
      std::memcpy(&blob.data[i], &bits, 4);
    }
  }
  return blobs;
}

std::filesystem::path adam_sibling_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".adam");
}

namespace {

template <typename T>
bool all_finite_values(const std::vector<T>& v) {
  for (T x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const ParameterSet<T>& params) {
  std::vector<CheckpointBlob> blobs;
  blobs.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<T>& p = params.at(i);
    CheckpointBlob blob;
    blob.name = p.name;
    blob.dims.assign(p.dims.begin(), p.dims.end());
    blob.data.assign(p.values.begin(), p.values.end());
    blobs.push_back(std::move(blob));
  }
  write_checkpoint_blobs(path, blobs);
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path,
                     ParameterSet<T>& params) {
  const auto blobs = read_checkpoint_blobs(path);
  BRSR_REQUIRE(blobs.size() == params.size(), ErrorKind::Checkpoint,
               "checkpoint has " + std::to_string(blobs.size()) +
                   " blobs, model expects " + std::to_string(params.size()));
  for (const auto& blob : blobs) {
    Parameter<T>* p = params.find(blob.name);
    BRSR_REQUIRE(p != nullptr, ErrorKind::Checkpoint,
                 "unexpected parameter in checkpoint: " + blob.name);
    std::vector<std::uint64_t> dims(p->dims.begin(), p->dims.end());
    BRSR_REQUIRE(dims == blob.dims, ErrorKind::Checkpoint,
                 "shape mismatch for parameter: " + blob.name);
    p->values.assign(blob.data.begin(), blob.data.end());
    BRSR_REQUIRE(all_finite_values(p->values), ErrorKind::Numeric,
                 "non-finite values in checkpoint parameter: " + blob.name);
  }
}

template <typename T>
void save_adam_state(const std::filesystem::path& checkpoint_path,
                     const ParameterSet<T>& params) {
  std::vector<CheckpointBlob> blobs;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<T>& p = params.at(i);
    CheckpointBlob m, v, step;
    m.name = p.name + ".m";
    m.dims.assign(p.dims.begin(), p.dims.end());
    if (p.adam_m.empty())
      m.data.assign(p.numel(), 0.0f);
    else
      m.data.assign(p.adam_m.begin(), p.adam_m.end());
    v.name = p.name + ".v";
    v.dims = m.dims;
    if (p.adam_v.empty())
      v.data.assign(p.numel(), 0.0f);
    else
      v.data.assign(p.adam_v.begin(), p.adam_v.end());
    step.name = p.name + ".step";
    step.dims = {1};
    step.data = {static_cast<float>(p.adam_step)};
    blobs.push_back(std::move(m));
    blobs.push_back(std::move(v));
    blobs.push_back(std::move(step));
  }
  write_checkpoint_blobs(adam_sibling_path(checkpoint_path), blobs);
}

template <typename T>
void load_adam_state(const std::filesystem::path& checkpoint_path,
                     ParameterSet<T>& params) {
  const auto blobs = read_checkpoint_blobs(adam_sibling_path(checkpoint_path));
  for (const auto& blob : blobs) {
    const auto dot = blob.name.rfind('.');
    BRSR_REQUIRE(dot != std::string::npos, ErrorKind::Checkpoint,
                 "malformed adam blob name: " + blob.name);
    const std::string base = blob.name.substr(0, dot);
    const std::string field = blob.name.substr(dot + 1);
    Parameter<T>* p = params.find(base);
    BRSR_REQUIRE(p != nullptr, ErrorKind::Checkpoint,
                 "adam state for unknown parameter: " + base);
    if (field == "m") {
      p->adam_m.assign(blob.data.begin(), blob.data.end());
    } else if (field == "v") {
      p->adam_v.assign(blob.data.begin(), blob.data.end());
    } else if (field == "step") {
      BRSR_REQUIRE(blob.data.size() == 1, ErrorKind::Checkpoint,
                   "step blob must hold one value");
      p->adam_step = static_cast<std::int64_t>(blob.data[0]);
    } else {
      fail(ErrorKind::Checkpoint, "unknown adam blob field: " + blob.name);
    }
  }
}

#define BRSR_INSTANTIATE_CKPT(T)                                           \
  template void save_checkpoint<T>(const std::filesystem::path&,          \
                                   const ParameterSet<T>&);               \
  template void load_checkpoint<T>(const std::filesystem::path&,          \
                                   ParameterSet<T>&);                     \
  template void save_adam_state<T>(const std::filesystem::path&,          \
                                   const ParameterSet<T>&);               \
  template void load_adam_state<T>(const std::filesystem::path&,          \
                                   ParameterSet<T>&);

BRSR_INSTANTIATE_CKPT(float)
BRSR_INSTANTIATE_CKPT(double)

#undef BRSR_INSTANTIATE_CKPT

}  // namespace brsr
