#pragma once

#include <cstdint>
#include <vector>

#include "brsr/common.hpp"

namespace brsr {

// One complex baseband radar segment, I/Q stored as two real channels.
struct SignalMeta {
  double carrier = 0.0;    // fraction of the sampling rate
  double bandwidth = 0.0;  // fraction of the sampling rate
  int code_id = 0;         // family-specific (code length, M, segment count)
  std::uint64_t seed = 0;
};

struct ComplexSignal {
  static constexpr std::size_t kLength = 1024;

  std::vector<double> i;
  std::vector<double> q;
  int label = 0;  // modulation class, 0..11
  SignalMeta meta;

  ComplexSignal() : i(kLength, 0.0), q(kLength, 0.0) {}
};

// The twelve modulation families synthesized by this module. These stand in
// for an external source dataset; all are constant-modulus phase/frequency
// codes commonly used for low-probability-of-intercept radar.
enum class ModulationClass : int {
  Lfm = 0,
  Costas,
  BpskBarker13,
  Frank,
  P1,
  P2,
  P3,
  P4,
  T1,
  T2,
  T3,
  T4,
};
inline constexpr int kNumModulationClasses = 12;
const char* modulation_class_name(int class_id);

// Deterministic synthesis: a pure function of (class_id, seed). Parameters
// are drawn from the documented ranges (carrier in [0.1, 0.35] of the
// sampling rate, bandwidth in [0.05, 0.3] clamped to keep the sweep inside
// [0.05, 0.45]). The result is per-channel peak-normalized.
ComplexSignal synthesize(int class_id, std::uint64_t seed);

// Family builders with explicit parameters (used by synthesize and by tests
// that need degenerate settings, e.g. a zero-bandwidth chirp).
ComplexSignal make_lfm(double carrier, double bandwidth);
ComplexSignal make_costas(double carrier, double bandwidth, int prime);
ComplexSignal make_bpsk_barker13(double carrier);
ComplexSignal make_frank(double carrier, int m);
ComplexSignal make_p1(double carrier, int m);
ComplexSignal make_p2(double carrier, int m);  // m must be even
ComplexSignal make_p3(double carrier, int code_length);
ComplexSignal make_p4(double carrier, int code_length);
ComplexSignal make_t1(double carrier, int segments, int phase_states);
ComplexSignal make_t2(double carrier, int segments, int phase_states);
ComplexSignal make_t3(double carrier, double bandwidth, int phase_states);
ComplexSignal make_t4(double carrier, double bandwidth, int phase_states);

// Divides each channel by its own maximum absolute value; an identically zero
// channel passes through unchanged. Idempotent.
ComplexSignal normalize(const ComplexSignal& signal);

// Mean complex magnitude squared: mean over samples of (i^2 + q^2).
double signal_power(const ComplexSignal& signal);

}  // namespace brsr
