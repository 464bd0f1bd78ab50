#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "brsr/dataset.hpp"
#include "brsr/train.hpp"

namespace brsr {

// Sentinel for a numerically zero residual (e.g. the oracle restorer).
inline constexpr double kSnrCapDb = 150.0;

// Restoration quality metrics over paired segments of 2048 floats (I then Q).
// Channels are pooled jointly; `clean` must have nonzero energy.
double snr_db(std::span<const float> clean, std::span<const float> estimate);
double psnr_db(std::span<const float> clean, std::span<const float> estimate);
double mse(std::span<const float> clean, std::span<const float> estimate);

double snr_db(const ComplexSignal& clean, const ComplexSignal& estimate);
double psnr_db(const ComplexSignal& clean, const ComplexSignal& estimate);
double mse(const ComplexSignal& clean, const ComplexSignal& estimate);

struct SampleMetrics {
  std::size_t index = 0;
  double target_snr = 0.0;
  double corrupted_snr = 0.0;
  double restored_snr = 0.0;
  double psnr = 0.0;
  double mse_value = 0.0;
  unsigned subset_mask = 0;
};

struct GroupAggregate {
  std::string key;
  std::size_t count = 0;
  double mean_corrupted_snr = 0.0;
  double mean_restored_snr = 0.0;
  double mean_improvement = 0.0;
  double median_improvement = 0.0;
  double mean_psnr = 0.0;
  double mean_mse = 0.0;
  double fraction_improved = 0.0;
};

struct HistogramBin {
  double lo = 0.0;  // 1 dB bins over restored-minus-corrupted SNR
  double hi = 0.0;
  std::size_t count = 0;
};

struct MetricsReport {
  std::vector<SampleMetrics> rows;
  GroupAggregate overall;
  // Per-SNR-level groups in baseline mode; per-artifact-subset in BRSR mode.
  std::vector<GroupAggregate> groups;
  std::vector<HistogramBin> histogram;
};

// Restores every sample of the split and aggregates all three metrics.
// Improvement is restored SNR minus corrupted SNR per sample.
MetricsReport evaluate(Restorer& restorer, const DatasetReader& reader,
                       Split split, int batch_size = 64);

// Positive control: the restorer returns the stored clean signal.
MetricsReport evaluate_oracle(const DatasetReader& reader, Split split);

// Writes per_sample.csv, summary.csv and histogram.csv (schemas documented in
// the README) with stable formatting.
void write_metrics_csv(const MetricsReport& report,
                       const std::filesystem::path& out_dir);

struct TimingReport {
  double ms_per_signal = 0.0;
  int batch_size = 0;
  int batches = 0;
};

// Wall-clock eval-mode inference cost, averaged over `batches` after warmup.
TimingReport timing_report(Generator<float>& gen, int batch_size = 64,
                           int batches = 100, std::size_t length = 1024);

}  // namespace brsr
