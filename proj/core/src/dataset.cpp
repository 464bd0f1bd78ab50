#include "brsr/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace brsr {

namespace {

using nlohmann::json;

constexpr std::size_t kL = ComplexSignal::kLength;
constexpr std::size_t kChannelBytes = kL * sizeof(float);
constexpr std::size_t kSlotBytes = 4 + 3 * 8 + 3 * 4;             // 40
constexpr std::size_t kProvenanceBytes = 4 + 4 + 8 + 4 * 8 + 3 * kSlotBytes;
constexpr std::size_t kRecordBytes = 4 * kChannelBytes + kProvenanceBytes;

constexpr std::uint64_t kSampleStream = 0x5A17'0000ULL;
constexpr std::uint64_t kPoolStream = 0x9001'0000ULL;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<char>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_f32(std::vector<char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const char*& p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(p[i]);
  p += 4;
  return v;
}

std::uint64_t get_u64(const char*& p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(p[i]);
  p += 8;
  return v;
}

double get_f64(const char*& p) {
  const std::uint64_t bits = get_u64(p);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

float get_f32(const char*& p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

ComplexSignal circular_shift(const ComplexSignal& x, int shift) {
  ComplexSignal out;
  const std::size_t s = static_cast<std::size_t>(shift) % kL;
  for (std::size_t n = 0; n < kL; ++n) {
    const std::size_t src = (n + kL - s) % kL;
    out.i[n] = x.i[src];
    out.q[n] = x.q[src];
  }
  out.label = x.label;
  out.meta = x.meta;
  return out;
}

void quantize_to_f32(ComplexSignal& s) {
  for (std::size_t n = 0; n < kL; ++n) {
    s.i[n] = static_cast<double>(static_cast<float>(s.i[n]));
    s.q[n] = static_cast<double>(static_cast<float>(s.q[n]));
  }
}

double measured_snr_db(const ComplexSignal& clean,
                       const ComplexSignal& corrupted) {
  double sig = 0.0, res = 0.0;
  for (std::size_t n = 0; n < kL; ++n) {
    sig += clean.i[n] * clean.i[n] + clean.q[n] * clean.q[n];
    const double di = clean.i[n] - corrupted.i[n];
    const double dq = clean.q[n] - corrupted.q[n];
    res += di * di + dq * dq;
  }
  BRSR_REQUIRE(res > 0.0, ErrorKind::Numeric,
               "measured_snr: corrupted equals clean");
  return 10.0 * std::log10(sig / res);
}

void serialize_record(const CorruptionRecord& rec, std::vector<char>& out) {
  out.clear();
  out.reserve(kRecordBytes);
  for (const auto* ch : {&rec.clean.i, &rec.clean.q, &rec.corrupted.i,
                         &rec.corrupted.q})
    for (double v : *ch) put_f32(out, static_cast<float>(v));
  put_u32(out, static_cast<std::uint32_t>(rec.clean.label));
  put_u32(out, rec.subset_mask);
  put_u64(out, rec.sample_seed);
  put_f64(out, rec.target_snr);
  put_f64(out, rec.desired_noise_power);
  put_f64(out, rec.clean_power);
  put_f64(out, rec.realized_snr);
  for (int kind = 0; kind < 3; ++kind) {
    const ArtifactSpec* spec = nullptr;
    for (const auto& a : rec.artifacts)
      if (static_cast<int>(a.kind) == kind) spec = &a;
    put_u32(out, spec ? 1u : 0u);
    put_f64(out, spec ? spec->pseudo_weight : 0.0);
    put_f64(out, spec ? spec->actual_weight : 0.0);
    put_f64(out, spec ? spec->power : 0.0);
    put_u32(out, spec ? static_cast<std::uint32_t>(spec->echo_delay) : 0u);
    put_u32(out, spec ? static_cast<std::uint32_t>(spec->interference_id) : 0u);
    put_u32(out,
            spec ? static_cast<std::uint32_t>(spec->interference_shift) : 0u);
  }
  BRSR_REQUIRE(out.size() == kRecordBytes, ErrorKind::Io,
               "record serialization size mismatch");
}

CorruptionRecord deserialize_record(const char* p) {
  CorruptionRecord rec;
  for (auto* ch : {&rec.clean.i, &rec.clean.q, &rec.corrupted.i,
                   &rec.corrupted.q})
    for (std::size_t n = 0; n < kL; ++n) (*ch)[n] = get_f32(p);
  rec.clean.label = static_cast<int>(get_u32(p));
  rec.corrupted.label = rec.clean.label;
  rec.subset_mask = get_u32(p);
  rec.sample_seed = get_u64(p);
  rec.target_snr = get_f64(p);
  rec.desired_noise_power = get_f64(p);
  rec.clean_power = get_f64(p);
  rec.realized_snr = get_f64(p);
  for (int kind = 0; kind < 3; ++kind) {
    const bool present = get_u32(p) != 0;
    ArtifactSpec spec;
    spec.kind = static_cast<ArtifactKind>(kind);
    spec.pseudo_weight = get_f64(p);
    spec.actual_weight = get_f64(p);
    spec.power = get_f64(p);
    spec.echo_delay = static_cast<int>(get_u32(p));
    spec.interference_id = static_cast<int>(get_u32(p));
    spec.interference_shift = static_cast<int>(get_u32(p));
    if (present) rec.artifacts.push_back(spec);
  }
  return rec;
}

std::vector<double> baseline_levels(const DatasetConfig& cfg) {
  std::vector<double> levels;
  for (double snr = cfg.snr_min; snr <= cfg.snr_max + 1e-9; snr += 2.0)
    levels.push_back(snr);
  return levels;
}

}  // namespace

const char* dataset_mode_name(DatasetMode mode) {
  return mode == DatasetMode::Brsr ? "brsr" : "baseline";
}

const char* split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

std::size_t dataset_record_bytes() { return kRecordBytes; }

std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ULL; }

std::uint64_t fnv1a_update(std::uint64_t state, const void* data,
                           std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state ^= p[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string fnv1a_hex(std::uint64_t state) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(state));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  BRSR_REQUIRE(is.good(), ErrorKind::Io, "cannot open: " + path.string());
  std::uint64_t h = fnv1a_init();
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    h = fnv1a_update(h, buf, static_cast<std::size_t>(is.gcount()));
  }
  return fnv1a_hex(h);
}

std::pair<ComplexSignal, ComplexSignal> apply_awgn(const ComplexSignal& x,
                                                   double noise_power,
                                                   Rng& rng) {
  BRSR_REQUIRE(noise_power >= 0.0, ErrorKind::Config,
               "apply_awgn: noise power must be >= 0");
  ComplexSignal component;
  if (noise_power > 0.0) {
    const double sigma = std::sqrt(noise_power / 2.0);
    for (std::size_t n = 0; n < kL; ++n) {
      component.i[n] = rng.normal(0.0, sigma);
      component.q[n] = rng.normal(0.0, sigma);
    }
    // Exact rescale: measured power == requested power.
    const double measured = signal_power(component);
    const double s = std::sqrt(noise_power / measured);
    for (std::size_t n = 0; n < kL; ++n) {
      component.i[n] *= s;
      component.q[n] *= s;
    }
  }
  ComplexSignal corrupted = x;
  for (std::size_t n = 0; n < kL; ++n) {
    corrupted.i[n] += component.i[n];
    corrupted.q[n] += component.q[n];
  }
  return {corrupted, component};
}

ComplexSignal apply_echo(const ComplexSignal& x, int delay, int delay_min,
                         int delay_max) {
  BRSR_REQUIRE(delay >= delay_min && delay <= delay_max, ErrorKind::Config,
               "apply_echo: delay " + std::to_string(delay) +
                   " outside [" + std::to_string(delay_min) + ", " +
                   std::to_string(delay_max) + "]");
  BRSR_REQUIRE(delay < static_cast<int>(kL), ErrorKind::Config,
               "apply_echo: delay exceeds segment length");
  ComplexSignal component;
  for (std::size_t n = static_cast<std::size_t>(delay); n < kL; ++n) {
    component.i[n] = x.i[n - delay];
    component.q[n] = x.q[n - delay];
  }
  component.label = x.label;
  return component;
}

InterferencePool InterferencePool::build(std::uint64_t pool_seed, int size) {
  BRSR_REQUIRE(size >= 1, ErrorKind::Config, "pool size must be >= 1");
  InterferencePool pool;
  pool.signals_.reserve(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) {
    Rng rng(Rng::derive(pool_seed, static_cast<std::uint64_t>(k)));
    const int class_id = static_cast<int>(rng.uniform_int(0, 11));
    pool.signals_.push_back(synthesize(class_id, rng.next_u64()));
  }
  return pool;
}

const ComplexSignal& InterferencePool::at(int id) const {
  BRSR_REQUIRE(id >= 0 && id < size(), ErrorKind::Config,
               "interference id out of range");
  return signals_[static_cast<std::size_t>(id)];
}

std::uint64_t InterferencePool::content_hash() const {
  std::uint64_t h = fnv1a_init();
  for (const auto& s : signals_) {
    h = fnv1a_update(h, s.i.data(), s.i.size() * sizeof(double));
    h = fnv1a_update(h, s.q.data(), s.q.size() * sizeof(double));
  }
  return h;
}

CorruptionPlan draw_plan(const DatasetConfig& cfg, Rng& rng) {
  CorruptionPlan plan;
  plan.target_snr = rng.uniform(cfg.snr_min, cfg.snr_max);
  plan.subset_mask = static_cast<unsigned>(rng.uniform_int(1, 7));
  std::vector<int> selected;
  for (int kind = 0; kind < 3; ++kind)
    if (plan.subset_mask & (1u << kind)) selected.push_back(kind);
  const std::vector<double> w = rng.dirichlet_uniform(selected.size());
  for (std::size_t k = 0; k < selected.size(); ++k)
    plan.pseudo_weights[static_cast<std::size_t>(selected[k])] = w[k];
  if (plan.subset_mask & kEchoBit)
    plan.echo_delay =
        static_cast<int>(rng.uniform_int(cfg.echo_delay_min, cfg.echo_delay_max));
  if (plan.subset_mask & kInterferenceBit) {
    plan.interference_id = static_cast<int>(rng.uniform_int(0, cfg.pool_size - 1));
    plan.interference_shift =
        static_cast<int>(rng.uniform_int(0, static_cast<int>(kL) - 1));
  }
  plan.noise_seed = rng.next_u64();
  return plan;
}

CorruptionRecord corrupt_with(const ComplexSignal& x, const CorruptionPlan& plan,
                              const InterferencePool& pool) {
  BRSR_REQUIRE(plan.subset_mask >= 1 && plan.subset_mask <= 7, ErrorKind::Config,
               "corrupt: artifact subset must be nonempty");
  const double p_s = signal_power(x);
  BRSR_REQUIRE(p_s > 0.0, ErrorKind::Numeric, "corrupt: clean signal has zero power");

  double weight_sum = 0.0;
  for (int kind = 0; kind < 3; ++kind) {
    const bool present = plan.subset_mask & (1u << kind);
    const double w = plan.pseudo_weights[static_cast<std::size_t>(kind)];
    BRSR_REQUIRE(present || w == 0.0, ErrorKind::Config,
                 "corrupt: pseudo weight assigned to absent artifact");
    weight_sum += w;
  }
  BRSR_REQUIRE(std::abs(weight_sum - 1.0) <= 1e-9, ErrorKind::Config,
               "corrupt: pseudo weights must sum to 1");

  CorruptionRecord rec;
  rec.clean = x;
  rec.corrupted = x;
  rec.target_snr = plan.target_snr;
  rec.clean_power = p_s;
  rec.subset_mask = plan.subset_mask;
  rec.desired_noise_power = p_s / std::pow(10.0, plan.target_snr / 10.0);

  for (int kind = 0; kind < 3; ++kind) {
    if (!(plan.subset_mask & (1u << kind))) continue;
    ComplexSignal component;
    ArtifactSpec spec;
    spec.kind = static_cast<ArtifactKind>(kind);
    switch (spec.kind) {
      case ArtifactKind::Awgn: {
        Rng noise_rng(plan.noise_seed);
        component = apply_awgn(x, rec.desired_noise_power, noise_rng).second;
        break;
      }
      case ArtifactKind::Echo:
        spec.echo_delay = plan.echo_delay;
        component = apply_echo(x, plan.echo_delay, 1, static_cast<int>(kL) - 1);
        break;
      case ArtifactKind::Interference:
        spec.interference_id = plan.interference_id;
        spec.interference_shift = plan.interference_shift;
        component =
            circular_shift(pool.at(plan.interference_id), plan.interference_shift);
        break;
    }
    spec.pseudo_weight = plan.pseudo_weights[static_cast<std::size_t>(kind)];
    spec.power = signal_power(component);
    BRSR_REQUIRE(spec.power > 0.0, ErrorKind::Numeric,
                 "corrupt: artifact component has zero power");
    spec.actual_weight =
        spec.pseudo_weight * std::sqrt(rec.desired_noise_power / spec.power);
    for (std::size_t n = 0; n < kL; ++n) {
      rec.corrupted.i[n] += spec.actual_weight * component.i[n];
      rec.corrupted.q[n] += spec.actual_weight * component.q[n];
    }
    rec.artifacts.push_back(spec);
  }

  // Store at container precision so in-memory records match the bytes on disk.
  quantize_to_f32(rec.clean);
  quantize_to_f32(rec.corrupted);
  rec.realized_snr = measured_snr_db(rec.clean, rec.corrupted);
  return rec;
}

CorruptionRecord corrupt(const ComplexSignal& x, std::uint64_t seed,
                         const InterferencePool& pool, const DatasetConfig& cfg) {
  Rng rng(seed);
  CorruptionRecord rec = corrupt_with(x, draw_plan(cfg, rng), pool);
  rec.sample_seed = seed;
  return rec;
}

// ---------------------------------------------------------------------------
// Container I/O.
// ---------------------------------------------------------------------------

namespace {

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["mode"] = dataset_mode_name(m.mode);
  j["seed"] = m.seed;
  j["pool_seed"] = m.pool_seed;
  j["splits"] = {{"train", m.n_train}, {"val", m.n_val}, {"test", m.n_test}};
  j["record_bytes"] = kRecordBytes;
  j["data_hash"] = m.data_hash;
  j["config"] = {{"snr_min", m.config.snr_min},
                 {"snr_max", m.config.snr_max},
                 {"echo_delay_min", m.config.echo_delay_min},
                 {"echo_delay_max", m.config.echo_delay_max},
                 {"pool_size", m.config.pool_size}};
  j["offsets"] = m.offsets;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  BRSR_REQUIRE(m.format_version == 1, ErrorKind::Io,
               "unsupported dataset format version");
  const std::string mode = j.at("mode").get<std::string>();
  m.mode = mode == "brsr" ? DatasetMode::Brsr : DatasetMode::BaselineAwgn;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.pool_seed = j.at("pool_seed").get<std::uint64_t>();
  m.n_train = j.at("splits").at("train").get<std::size_t>();
  m.n_val = j.at("splits").at("val").get<std::size_t>();
  m.n_test = j.at("splits").at("test").get<std::size_t>();
  BRSR_REQUIRE(j.at("record_bytes").get<std::size_t>() == kRecordBytes,
               ErrorKind::Io, "dataset record size mismatch");
  m.data_hash = j.at("data_hash").get<std::string>();
  m.config.snr_min = j.at("config").at("snr_min").get<double>();
  m.config.snr_max = j.at("config").at("snr_max").get<double>();
  m.config.echo_delay_min = j.at("config").at("echo_delay_min").get<int>();
  m.config.echo_delay_max = j.at("config").at("echo_delay_max").get<int>();
  m.config.pool_size = j.at("config").at("pool_size").get<int>();
  m.config.mode = m.mode;
  m.config.seed = m.seed;
  m.config.n_train = m.n_train;
  m.config.n_val = m.n_val;
  m.config.n_test = m.n_test;
  m.offsets = j.at("offsets").get<std::vector<std::uint64_t>>();
  BRSR_REQUIRE(m.offsets.size() == m.total(), ErrorKind::Io,
               "manifest offsets do not cover every sample");
  for (std::size_t i = 1; i < m.offsets.size(); ++i)
    BRSR_REQUIRE(m.offsets[i] > m.offsets[i - 1], ErrorKind::Io,
                 "manifest offsets must be strictly increasing");
  return m;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::filesystem::path& dir, DatasetMode mode,
                             const DatasetConfig& cfg, std::uint64_t pool_seed) {
  dir_ = dir;
  std::filesystem::create_directories(dir);
  manifest_.mode = mode;
  manifest_.seed = cfg.seed;
  manifest_.pool_seed = pool_seed;
  manifest_.config = cfg;
  hash_state_ = fnv1a_init();
  std::FILE* f = std::fopen((dir / "samples.bin").string().c_str(), "wb");
  BRSR_REQUIRE(f != nullptr, ErrorKind::Io,
               "cannot create " + (dir / "samples.bin").string());
  file_ = f;
}

void DatasetWriter::append(const CorruptionRecord& record) {
  BRSR_REQUIRE(file_ != nullptr, ErrorKind::Io, "writer already finished");
  serialize_record(record, buffer_);
  manifest_.offsets.push_back(bytes_written_);
  const std::size_t n =
      std::fwrite(buffer_.data(), 1, buffer_.size(), static_cast<std::FILE*>(file_));
  BRSR_REQUIRE(n == buffer_.size(), ErrorKind::Io, "short write to samples.bin");
  hash_state_ = fnv1a_update(hash_state_, buffer_.data(), buffer_.size());
  bytes_written_ += buffer_.size();
}

DatasetManifest DatasetWriter::finish() {
  BRSR_REQUIRE(file_ != nullptr, ErrorKind::Io, "writer already finished");
  std::fclose(static_cast<std::FILE*>(file_));
  file_ = nullptr;
  manifest_.n_train = manifest_.config.n_train;
  manifest_.n_val = manifest_.config.n_val;
  manifest_.n_test = manifest_.config.n_test;
  BRSR_REQUIRE(manifest_.offsets.size() == manifest_.total(), ErrorKind::Io,
               "sample count does not match configured split sizes");
  manifest_.data_hash = fnv1a_hex(hash_state_);
  std::ofstream os(dir_ / "manifest.json", std::ios::trunc);
  BRSR_REQUIRE(os.good(), ErrorKind::Io,
               "cannot create " + (dir_ / "manifest.json").string());
  os << manifest_to_json(manifest_).dump(2) << "\n";
  os.flush();
  BRSR_REQUIRE(os.good(), ErrorKind::Io, "manifest write failed");
  return manifest_;
}

DatasetManifest generate_dataset(const DatasetConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  BRSR_REQUIRE(cfg.total() >= 1, ErrorKind::Config,
               "dataset must contain at least one sample");
  BRSR_REQUIRE(cfg.snr_max >= cfg.snr_min, ErrorKind::Config,
               "snr_max must be >= snr_min");
  std::vector<double> levels;
  if (cfg.mode == DatasetMode::BaselineAwgn) {
    levels = baseline_levels(cfg);
    for (std::size_t n : {cfg.n_train, cfg.n_val, cfg.n_test})
      BRSR_REQUIRE(n % levels.size() == 0, ErrorKind::Config,
                   "baseline mode: each split size must be a multiple of " +
                       std::to_string(levels.size()) + " (one per SNR level)");
  }

  const std::uint64_t pool_seed = Rng::derive(cfg.seed, kPoolStream);
  const InterferencePool pool = InterferencePool::build(pool_seed, cfg.pool_size);

  DatasetWriter writer(out_dir, cfg.mode, cfg, pool_seed);
  std::size_t global_index = 0;
  for (std::size_t split_size : {cfg.n_train, cfg.n_val, cfg.n_test}) {
    for (std::size_t j = 0; j < split_size; ++j, ++global_index) {
      const std::uint64_t sample_seed =
          Rng::derive(cfg.seed, kSampleStream + global_index);
      Rng rng(sample_seed);
      const int class_id = static_cast<int>(rng.uniform_int(0, 11));
      const std::uint64_t wave_seed = rng.next_u64();
      const ComplexSignal clean = synthesize(class_id, wave_seed);

      CorruptionPlan plan;
      if (cfg.mode == DatasetMode::Brsr) {
        plan = draw_plan(cfg, rng);
      } else {
        plan.target_snr = levels[j % levels.size()];
        plan.subset_mask = kAwgnBit;
        plan.pseudo_weights = {1.0, 0.0, 0.0};
        plan.noise_seed = rng.next_u64();
      }
      CorruptionRecord rec = corrupt_with(clean, plan, pool);
      rec.sample_seed = sample_seed;
      writer.append(rec);
    }
  }
  return writer.finish();
}

DatasetReader::DatasetReader(const std::filesystem::path& dir) : dir_(dir) {
  std::ifstream is(dir / "manifest.json");
  BRSR_REQUIRE(is.good(), ErrorKind::Io,
               "cannot open " + (dir / "manifest.json").string());
  json j;
  is >> j;
  manifest_ = manifest_from_json(j);
}

std::size_t DatasetReader::split_size(Split split) const {
  switch (split) {
    case Split::Train: return manifest_.n_train;
    case Split::Val: return manifest_.n_val;
    case Split::Test: return manifest_.n_test;
  }
  return 0;
}

std::size_t DatasetReader::global_index(Split split, std::size_t index) const {
  BRSR_REQUIRE(index < split_size(split), ErrorKind::Config,
               "sample index out of range for split");
  std::size_t base = 0;
  if (split == Split::Val) base = manifest_.n_train;
  if (split == Split::Test) base = manifest_.n_train + manifest_.n_val;
  read_counts_[static_cast<std::size_t>(split)] += 1;
  return base + index;
}

namespace {

std::vector<char> read_record_bytes(const std::filesystem::path& dir,
                                    std::uint64_t offset) {
  std::ifstream is(dir / "samples.bin", std::ios::binary);
  BRSR_REQUIRE(is.good(), ErrorKind::Io,
               "cannot open " + (dir / "samples.bin").string());
  is.seekg(static_cast<std::streamoff>(offset));
  std::vector<char> buf(kRecordBytes);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  BRSR_REQUIRE(is.gcount() == static_cast<std::streamsize>(buf.size()),
               ErrorKind::Io, "truncated dataset record");
  return buf;
}

}  // namespace

CorruptionRecord DatasetReader::read(Split split, std::size_t index) const {
  const std::size_t g = global_index(split, index);
  const auto buf = read_record_bytes(dir_, manifest_.offsets[g]);
  return deserialize_record(buf.data());
}

void DatasetReader::read_pair(Split split, std::size_t index,
                              std::span<float> clean,
                              std::span<float> corrupted) const {
  BRSR_REQUIRE(clean.size() == 2 * kL && corrupted.size() == 2 * kL,
               ErrorKind::Shape, "read_pair: spans must be 2*1024 long");
  const std::size_t g = global_index(split, index);
  const auto buf = read_record_bytes(dir_, manifest_.offsets[g]);
  std::memcpy(clean.data(), buf.data(), 2 * kChannelBytes);
  std::memcpy(corrupted.data(), buf.data() + 2 * kChannelBytes,
              2 * kChannelBytes);
}

double DatasetReader::read_realized_snr(Split split, std::size_t index) const {
  return read(split, index).realized_snr;
}

std::size_t DatasetReader::reads_of(Split split) const {
  return read_counts_[static_cast<std::size_t>(split)];
}

}  // namespace brsr
