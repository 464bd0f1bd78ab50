#include "brsr/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace brsr {

namespace {

struct Sums {
  double signal = 0.0;
  double residual = 0.0;
  double peak = 0.0;
  std::size_t n = 0;
};

Sums residual_sums(std::span<const float> clean, std::span<const float> est) {
  BRSR_REQUIRE(clean.size() == est.size() && !clean.empty(), ErrorKind::Shape,
               "metrics: shape mismatch");
  Sums s;
  s.n = clean.size();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double c = clean[i];
    const double d = c - static_cast<double>(est[i]);
    s.signal += c * c;
    s.residual += d * d;
    s.peak = std::max(s.peak, std::abs(c));
  }
  return s;
}

std::vector<float> to_f32(const ComplexSignal& s) {
  std::vector<float> v(2 * ComplexSignal::kLength);
  for (std::size_t n = 0; n < ComplexSignal::kLength; ++n) {
    v[n] = static_cast<float>(s.i[n]);
    v[ComplexSignal::kLength + n] = static_cast<float>(s.q[n]);
  }
  return v;
}

std::string subset_key(unsigned mask) {
  std::string key;
  if (mask & kAwgnBit) key += "awgn";
  if (mask & kEchoBit) key += key.empty() ? "echo" : "+echo";
  if (mask & kInterferenceBit)
    key += key.empty() ? "interference" : "+interference";
  return key.empty() ? "none" : key;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

GroupAggregate aggregate(const std::string& key,
                         const std::vector<const SampleMetrics*>& rows) {
  GroupAggregate g;
  g.key = key;
  g.count = rows.size();
  if (rows.empty()) return g;
  std::vector<double> improvements;
  improvements.reserve(rows.size());
  std::size_t improved = 0;
  for (const SampleMetrics* r : rows) {
    const double imp = r->restored_snr - r->corrupted_snr;
    g.mean_corrupted_snr += r->corrupted_snr;
    g.mean_restored_snr += r->restored_snr;
    g.mean_psnr += r->psnr;
    g.mean_mse += r->mse_value;
    improvements.push_back(imp);
    if (imp > 0.0) ++improved;
  }
  const double n = static_cast<double>(rows.size());
  g.mean_corrupted_snr /= n;
  g.mean_restored_snr /= n;
  g.mean_psnr /= n;
  g.mean_mse /= n;
  g.mean_improvement = g.mean_restored_snr - g.mean_corrupted_snr;
  g.fraction_improved = static_cast<double>(improved) / n;
  std::sort(improvements.begin(), improvements.end());
  const std::size_t m = improvements.size();
  g.median_improvement = m % 2 == 1
                             ? improvements[m / 2]
                             : 0.5 * (improvements[m / 2 - 1] + improvements[m / 2]);
  return g;
}

}  // namespace

double snr_db(std::span<const float> clean, std::span<const float> estimate) {
  const Sums s = residual_sums(clean, estimate);
  BRSR_REQUIRE(s.signal > 0.0, ErrorKind::Numeric,
               "snr: clean signal has zero energy");
  if (s.residual <= 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(s.signal / s.residual));
}

double psnr_db(std::span<const float> clean, std::span<const float> estimate) {
  const Sums s = residual_sums(clean, estimate);
  BRSR_REQUIRE(s.signal > 0.0, ErrorKind::Numeric,
               "psnr: clean signal has zero energy");
  if (s.residual <= 0.0) return kSnrCapDb;
  const double mean_sq = s.residual / static_cast<double>(s.n);
  return std::min(kSnrCapDb, 10.0 * std::log10(s.peak * s.peak / mean_sq));
}

double mse(std::span<const float> clean, std::span<const float> estimate) {
  const Sums s = residual_sums(clean, estimate);
  return s.residual / static_cast<double>(s.n);
}

double snr_db(const ComplexSignal& clean, const ComplexSignal& estimate) {
  const auto c = to_f32(clean), e = to_f32(estimate);
  return snr_db(std::span<const float>(c), std::span<const float>(e));
}
double psnr_db(const ComplexSignal& clean, const ComplexSignal& estimate) {
  const auto c = to_f32(clean), e = to_f32(estimate);
  return psnr_db(std::span<const float>(c), std::span<const float>(e));
}
double mse(const ComplexSignal& clean, const ComplexSignal& estimate) {
  const auto c = to_f32(clean), e = to_f32(estimate);
  return mse(std::span<const float>(c), std::span<const float>(e));
}

namespace {

MetricsReport evaluate_with(const DatasetReader& reader, Split split,
                            int batch_size, bool oracle, Restorer* restorer) {
  BRSR_REQUIRE(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
  const std::size_t total = reader.split_size(split);
  MetricsReport report;
  report.rows.reserve(total);
  const bool baseline = reader.manifest().mode == DatasetMode::BaselineAwgn;

  constexpr std::size_t kSeg = 2 * ComplexSignal::kLength;
  for (std::size_t start = 0; start < total;
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n =
        std::min<std::size_t>(batch_size, total - start);
    std::vector<float> clean(n * kSeg), corrupted(n * kSeg),
        restored(n * kSeg);
    std::vector<CorruptionRecord> records;
    records.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      records.push_back(reader.read(split, start + j));
      const auto c = to_f32(records.back().clean);
      const auto x = to_f32(records.back().corrupted);
      std::copy(c.begin(), c.end(), clean.begin() + j * kSeg);
      std::copy(x.begin(), x.end(), corrupted.begin() + j * kSeg);
    }
    if (oracle) {
      restored = clean;
    } else {
      restorer->restore(corrupted, restored, n);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::span<const float> c(clean.data() + j * kSeg, kSeg);
      const std::span<const float> x(corrupted.data() + j * kSeg, kSeg);
      const std::span<const float> r(restored.data() + j * kSeg, kSeg);
      SampleMetrics m;
      m.index = start + j;
      m.target_snr = records[j].target_snr;
      m.subset_mask = records[j].subset_mask;
      m.corrupted_snr = snr_db(c, x);
      m.restored_snr = snr_db(c, r);
      m.psnr = psnr_db(c, r);
      m.mse_value = mse(c, r);
      report.rows.push_back(m);
    }
  }

  std::vector<const SampleMetrics*> all;
  all.reserve(report.rows.size());
  std::map<std::string, std::vector<const SampleMetrics*>> grouped;
  for (const auto& row : report.rows) {
    all.push_back(&row);
    const std::string key =
        baseline ? "snr=" + format_double(row.target_snr)
                 : subset_key(row.subset_mask);
    grouped[key].push_back(&row);
  }
  report.overall = aggregate("all", all);
  for (const auto& [key, rows] : grouped)
    report.groups.push_back(aggregate(key, rows));

  if (!report.rows.empty()) {
    double lo_edge = std::floor(report.rows.front().restored_snr -
                                report.rows.front().corrupted_snr);
    double hi_edge = lo_edge + 1.0;
    for (const auto& row : report.rows) {
      const double imp = row.restored_snr - row.corrupted_snr;
      lo_edge = std::min(lo_edge, std::floor(imp));
      hi_edge = std::max(hi_edge, std::floor(imp) + 1.0);
    }
    const std::size_t bins = static_cast<std::size_t>(hi_edge - lo_edge);
    report.histogram.assign(bins, {});
    for (std::size_t b = 0; b < bins; ++b) {
      report.histogram[b].lo = lo_edge + static_cast<double>(b);
      report.histogram[b].hi = report.histogram[b].lo + 1.0;
    }
    for (const auto& row : report.rows) {
      const double imp = row.restored_snr - row.corrupted_snr;
      const std::size_t b = static_cast<std::size_t>(
          std::min<double>(std::floor(imp) - lo_edge,
                           static_cast<double>(bins - 1)));
      report.histogram[b].count += 1;
    }
  }
  return report;
}

}  // namespace

MetricsReport evaluate(Restorer& restorer, const DatasetReader& reader,
                       Split split, int batch_size) {
  return evaluate_with(reader, split, batch_size, /*oracle=*/false, &restorer);
}

MetricsReport evaluate_oracle(const DatasetReader& reader, Split split) {
  return evaluate_with(reader, split, 64, /*oracle=*/true, nullptr);
}

void write_metrics_csv(const MetricsReport& report,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "per_sample.csv", std::ios::trunc);
    BRSR_REQUIRE(os.good(), ErrorKind::Io, "cannot write per_sample.csv");
    os << "index,target_snr_db,corrupted_snr_db,restored_snr_db,psnr_db,mse,"
          "artifact_subset\n";
    for (const auto& r : report.rows) {
      os << r.index << ',' << format_double(r.target_snr) << ','
         << format_double(r.corrupted_snr) << ','
         << format_double(r.restored_snr) << ',' << format_double(r.psnr)
         << ',' << format_double(r.mse_value) << ',' << subset_key(r.subset_mask)
         << '\n';
    }
  }
  {
    std::ofstream os(out_dir / "summary.csv", std::ios::trunc);
    BRSR_REQUIRE(os.good(), ErrorKind::Io, "cannot write summary.csv");
    os << "scope,key,count,mean_corrupted_snr_db,mean_restored_snr_db,"
          "mean_improvement_db,median_improvement_db,mean_psnr_db,mean_mse,"
          "fraction_improved\n";
    auto line = [&os](const char* scope, const GroupAggregate& g) {
      os << scope << ',' << g.key << ',' << g.count << ','
         << format_double(g.mean_corrupted_snr) << ','
         << format_double(g.mean_restored_snr) << ','
         << format_double(g.mean_improvement) << ','
         << format_double(g.median_improvement) << ','
         << format_double(g.mean_psnr) << ',' << format_double(g.mean_mse)
         << ',' << format_double(g.fraction_improved) << '\n';
    };
    line("overall", report.overall);
    for (const auto& g : report.groups) line("group", g);
  }
  {
    std::ofstream os(out_dir / "histogram.csv", std::ios::trunc);
    BRSR_REQUIRE(os.good(), ErrorKind::Io, "cannot write histogram.csv");
    os << "bin_lo_db,bin_hi_db,count\n";
    for (const auto& b : report.histogram)
      os << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count
         << '\n';
  }
}

TimingReport timing_report(Generator<float>& gen, int batch_size, int batches,
                           std::size_t length) {
  BRSR_REQUIRE(batch_size >= 1 && batches >= 1, ErrorKind::Config,
               "timing_report: batch size and count must be >= 1");
  Rng rng(0xBE9C);
  const Shape shape{static_cast<std::size_t>(batch_size), 2, length};
  std::vector<float> data(shape.numel());
  for (auto& v : data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  Tensor<float> input = Tensor<float>::from_data(shape, std::move(data), false);

  for (int w = 0; w < 3; ++w)
    gen.forward(input, /*training=*/false, /*build_grad=*/false, nullptr);

  const auto start = std::chrono::steady_clock::now();
  for (int b = 0; b < batches; ++b)
    gen.forward(input, false, false, nullptr);
  const auto stop = std::chrono::steady_clock::now();
  const double total_ms =
      std::chrono::duration<double, std::milli>(stop - start).count();

  TimingReport report;
  report.batch_size = batch_size;
  report.batches = batches;
  report.ms_per_signal =
      total_ms / (static_cast<double>(batches) * batch_size);
  return report;
}

}  // namespace brsr
