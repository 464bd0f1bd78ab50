#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brsr/rng.hpp"
#include "brsr/waveform.hpp"

namespace brsr {

enum class ArtifactKind : int { Awgn = 0, Echo = 1, Interference = 2 };
inline constexpr unsigned kAwgnBit = 1u;
inline constexpr unsigned kEchoBit = 2u;
inline constexpr unsigned kInterferenceBit = 4u;

struct ArtifactSpec {
  ArtifactKind kind = ArtifactKind::Awgn;
  double pseudo_weight = 0.0;  // simplex fraction, sums to 1 over the record
  double actual_weight = 0.0;  // pseudo * sqrt(P_rand / power)
  double power = 0.0;          // measured power of the raw component
  int echo_delay = 0;          // Echo only
  int interference_id = 0;     // Interference only
  int interference_shift = 0;  // circular time shift applied to the pool entry
};

struct CorruptionRecord {
  ComplexSignal clean;
  ComplexSignal corrupted;
  double target_snr = 0.0;           // dB
  double desired_noise_power = 0.0;  // P_rand
  double clean_power = 0.0;          // P_s
  double realized_snr = 0.0;         // dB, measured on the stored signals
  unsigned subset_mask = 0;
  std::vector<ArtifactSpec> artifacts;
  std::uint64_t sample_seed = 0;
};

// Everything random about one corruption, drawn up front so that tests can
// force specific scenarios.
struct CorruptionPlan {
  double target_snr = 0.0;
  unsigned subset_mask = kAwgnBit;
  std::array<double, 3> pseudo_weights{};  // indexed by ArtifactKind
  int echo_delay = 0;
  int interference_id = 0;
  int interference_shift = 0;
  std::uint64_t noise_seed = 0;
};

enum class DatasetMode { Brsr, BaselineAwgn };
const char* dataset_mode_name(DatasetMode mode);

struct DatasetConfig {
  DatasetMode mode = DatasetMode::Brsr;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  double snr_min = -14.0;
  double snr_max = 10.0;
  int echo_delay_min = 128;
  int echo_delay_max = 512;
  int pool_size = 100;

  std::size_t total() const { return n_train + n_val + n_test; }
};

// Adds white Gaussian noise to both channels; the returned component is
// rescaled so its measured power equals `noise_power` exactly (zero power is
// accepted as the degenerate no-noise limit). Returns (corrupted, component).
std::pair<ComplexSignal, ComplexSignal> apply_awgn(const ComplexSignal& x,
                                                   double noise_power,
                                                   Rng& rng);

// Delayed replica: component[n] = x[n - delay], zero-filled head. Attenuation
// is carried entirely by the blend weight.
ComplexSignal apply_echo(const ComplexSignal& x, int delay, int delay_min = 128,
                         int delay_max = 512);

class InterferencePool {
 public:
  static InterferencePool build(std::uint64_t pool_seed, int size = 100);
  const ComplexSignal& at(int id) const;
  int size() const { return static_cast<int>(signals_.size()); }
  std::uint64_t content_hash() const;

 private:
  std::vector<ComplexSignal> signals_;
};

CorruptionPlan draw_plan(const DatasetConfig& cfg, Rng& rng);

// Applies a fixed plan. The clean input must be normalized and have nonzero
// power. Both stored signals are quantized to 32-bit precision so that the
// in-memory record matches the container bytes exactly.
CorruptionRecord corrupt_with(const ComplexSignal& x, const CorruptionPlan& plan,
                              const InterferencePool& pool);

// Draws a plan from `seed` and applies it.
CorruptionRecord corrupt(const ComplexSignal& x, std::uint64_t seed,
                         const InterferencePool& pool, const DatasetConfig& cfg);

enum class Split { Train, Val, Test };
const char* split_name(Split split);
std::optional<Split> parse_split(const std::string& name);

struct DatasetManifest {
  int format_version = 1;
  DatasetMode mode = DatasetMode::Brsr;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::uint64_t pool_seed = 0;
  DatasetConfig config;
  std::vector<std::uint64_t> offsets;  // absolute byte offsets, one per sample
  std::string data_hash;               // FNV-1a of samples.bin

  std::size_t total() const { return n_train + n_val + n_test; }
};

// Writes `samples.bin` + `manifest.json` under out_dir. Deterministic: the
// same config yields byte-identical outputs. Baseline mode walks the fixed
// SNR grid (snr_min..snr_max in 2 dB steps) within each split and requires
// the split size to be a multiple of the level count.
DatasetManifest generate_dataset(const DatasetConfig& cfg,
                                 const std::filesystem::path& out_dir);

inline constexpr std::size_t kSamplesPerChannel = ComplexSignal::kLength;
std::size_t dataset_record_bytes();

class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  std::size_t split_size(Split split) const;

  CorruptionRecord read(Split split, std::size_t index) const;
  // Fast path for training: raw float32 payloads, each span of length 2048
  // laid out as (I then Q).
  void read_pair(Split split, std::size_t index, std::span<float> clean,
                 std::span<float> corrupted) const;
  double read_realized_snr(Split split, std::size_t index) const;

  // Per-split read counters; used to enforce that training never touches the
  // test split.
  std::size_t reads_of(Split split) const;

 private:
  std::size_t global_index(Split split, std::size_t index) const;

  std::filesystem::path dir_;
  DatasetManifest manifest_;
  mutable std::array<std::size_t, 3> read_counts_{};
};

// Streaming writer used by generate_dataset and by the second-pass dataset
// materialization.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& dir, DatasetMode mode,
                const DatasetConfig& cfg, std::uint64_t pool_seed);
  void append(const CorruptionRecord& record);
  DatasetManifest finish();  // writes the manifest

 private:
  std::filesystem::path dir_;
  DatasetManifest manifest_;
  std::vector<char> buffer_;
  std::uint64_t bytes_written_ = 0;
  std::uint64_t hash_state_;
  void* file_ = nullptr;  // std::FILE*
};

std::uint64_t fnv1a_init();
std::uint64_t fnv1a_update(std::uint64_t state, const void* data, std::size_t n);
std::string fnv1a_hex(std::uint64_t state);
std::string hash_file(const std::filesystem::path& path);

}  // namespace brsr
