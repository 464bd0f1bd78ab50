#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "brsr/dataset.hpp"
#include "brsr/loss.hpp"
#include "brsr/model.hpp"

namespace brsr {

struct TrainConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
  int max_epochs = 1000;
  int batch_size = 64;
  double lr_g = 5e-4;
  double lr_d = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights loss_weights;
  SpectrogramConfig spectrogram = SpectrogramConfig::hann();
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  std::uint64_t seed = 0;
  int val_every = 5;
  // Fixed data-parallel grain: the batch is always split into `chunks` pieces
  // whose gradients are reduced in index order, so results are byte-identical
  // for any worker thread count. threads == 0 picks min(chunks, hardware).
  int chunks = 8;
  int threads = 0;
  double grad_clip = 0.0;  // 0 disables clipping
};

struct EpochStats {
  int epoch = 0;
  double g_adv = 0.0;
  double g_time = 0.0;
  double g_freq = 0.0;
  double d_loss = 0.0;
  std::optional<double> val_snr;
};

struct TrainRunRecord {
  std::vector<EpochStats> epochs;
  double best_val_snr = 0.0;
  int best_epoch = -1;
  double wall_seconds = 0.0;  // not persisted; outputs stay byte-stable
};

// Checkpoint file names inside a run directory.
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path gen_best() const { return dir / "gen_best.ckpt"; }
  std::filesystem::path disc_best() const { return dir / "disc_best.ckpt"; }
  std::filesystem::path gen_last() const { return dir / "gen_last.ckpt"; }
  std::filesystem::path disc_last() const { return dir / "disc_last.ckpt"; }
  std::filesystem::path metrics_csv() const { return dir / "metrics.csv"; }
  std::filesystem::path config_snapshot() const { return dir / "config.ini"; }
  std::filesystem::path run_manifest() const { return dir / "run_manifest.json"; }
};

// Alternating adversarial optimization: per iteration the generator is
// updated on the dual-domain objective, the restored batch is recomputed with
// the updated weights, then the discriminator is updated on the least-squares
// loss. Validation SNR is measured every `val_every` epochs and the
// best-validation checkpoint is retained alongside the final one.
TrainRunRecord train(const TrainConfig& cfg);

// Model input normalization: each channel of the corrupted segment is scaled
// by its own maximum absolute value, and the paired clean target shares the
// same per-channel scale so that de-normalizing a restoration with these
// factors lands back on the stored signal scale. A silent channel keeps
// scale 1.
struct ChannelScales {
  float scale_i = 1.0f;
  float scale_q = 1.0f;
};
ChannelScales input_scales(std::span<const float> corrupted_iq);

// Applies the trained composite filter to raw corrupted segments. Handles
// input normalization and de-normalization; with a second-pass generator the
// first restoration is re-normalized and passed through again.
class Restorer {
 public:
  static Restorer load(const std::filesystem::path& checkpoint_or_run_dir,
                       const std::optional<std::filesystem::path>& second_pass =
                           std::nullopt);
  static Restorer identity();

  // in/out: `count` segments of 2048 floats (I then Q), raw signal scale.
  // Batch order is preserved.
  void restore(std::span<const float> in, std::span<float> out,
               std::size_t count);

  bool is_identity() const { return generators_.empty(); }
  Generator<float>& first_generator();

 private:
  Restorer() = default;
  std::vector<std::shared_ptr<Generator<float>>> generators_;
};

// Writes generator/discriminator checkpoints with Adam state and a JSON meta
// sidecar describing the architecture (checkpoints are self-describing).
void save_generator_checkpoint(const std::filesystem::path& path,
                               Generator<float>& gen);
void save_discriminator_checkpoint(const std::filesystem::path& path,
                                   Discriminator<float>& disc);
Generator<float> load_generator_checkpoint(const std::filesystem::path& path);

// Two-pass cascade: restores the first-pass training and validation splits,
// materializes them as a derived dataset under out_dir/second_pass_data
// (restorations become the corrupted signals, targets stay the originals),
// and trains a fresh model on it.
TrainRunRecord train_second_pass(const TrainConfig& cfg,
                                 const std::filesystem::path& first_run_dir);

}  // namespace brsr
