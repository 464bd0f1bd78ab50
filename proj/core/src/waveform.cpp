#include "brsr/waveform.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "brsr/rng.hpp"

namespace brsr {

namespace {

constexpr std::size_t kL = ComplexSignal::kLength;
constexpr double kTwoPi = 2.0 * M_PI;

// Fills the I/Q channels from an instantaneous phase track (radians).
ComplexSignal from_phase(const std::vector<double>& phase) {
  ComplexSignal s;
  for (std::size_t n = 0; n < kL; ++n) {
    s.i[n] = std::cos(phase[n]);
    s.q[n] = std::sin(phase[n]);
  }
  return s;
}

// Phase track of a carrier plus a per-sample extra phase term.
std::vector<double> carrier_phase(double carrier) {
  std::vector<double> phase(kL);
  for (std::size_t n = 0; n < kL; ++n)
    phase[n] = kTwoPi * carrier * static_cast<double>(n);
  return phase;
}

// Welch-constructed Costas permutations: powers of a primitive root mod p.
std::vector<int> costas_sequence(int prime) {
  int root = 0;
  switch (prime) {
    case 7: root = 3; break;
    case 11: root = 2; break;
    case 13: root = 2; break;
    default:
      fail(ErrorKind::Config, "costas: unsupported prime " + std::to_string(prime));
  }
  std::vector<int> seq;
  std::int64_t v = 1;
  for (int i = 1; i < prime; ++i) {
    v = (v * root) % prime;
    seq.push_back(static_cast<int>(v));
  }
  return seq;
}

constexpr std::array<int, 13> kBarker13 = {1, 1, 1, 1, 1, -1, -1, 1, 1,
                                           -1, 1, -1, 1};

// Chip index for sample n when kL samples carry `chips` equal-length chips.
std::size_t chip_of(std::size_t n, std::size_t chips) {
  return (n * chips) / kL;
}

ComplexSignal chip_phase_code(double carrier, const std::vector<double>& code) {
  std::vector<double> phase = carrier_phase(carrier);
  for (std::size_t n = 0; n < kL; ++n)
    phase[n] += code[chip_of(n, code.size())];
  return from_phase(phase);
}

}  // namespace

const char* modulation_class_name(int class_id) {
  static constexpr std::array<const char*, 12> names = {
      "LFM", "Costas", "BPSK-Barker13", "Frank", "P1", "P2",
      "P3",  "P4",     "T1",            "T2",    "T3", "T4"};
  BRSR_REQUIRE(class_id >= 0 && class_id < kNumModulationClasses,
               ErrorKind::Config, "unknown modulation class");
  return names[static_cast<std::size_t>(class_id)];
}

ComplexSignal make_lfm(double carrier, double bandwidth) {
  // Up-chirp sweeping carrier-bandwidth/2 .. carrier+bandwidth/2.
  const double f0 = carrier - bandwidth / 2.0;
  const double rate = bandwidth / static_cast<double>(kL);
  std::vector<double> phase(kL);
  for (std::size_t n = 0; n < kL; ++n) {
    const double t = static_cast<double>(n);
    phase[n] = kTwoPi * (f0 * t + 0.5 * rate * t * t);
  }
  ComplexSignal s = from_phase(phase);
  s.meta.carrier = carrier;
  s.meta.bandwidth = bandwidth;
  return s;
}

ComplexSignal make_costas(double carrier, double bandwidth, int prime) {
  const std::vector<int> seq = costas_sequence(prime);
  const std::size_t hops = seq.size();
  const double f_lo = carrier - bandwidth / 2.0;
  // Continuous-phase frequency hopping.
  std::vector<double> phase(kL);
  double acc = 0.0;
  for (std::size_t n = 0; n < kL; ++n) {
    phase[n] = acc;
    const std::size_t hop = chip_of(n, hops);
    const double f =
        f_lo + bandwidth * (seq[hop] - 1) / static_cast<double>(prime - 1);
    acc += kTwoPi * f;
  }
  ComplexSignal s = from_phase(phase);
  s.meta.carrier = carrier;
  s.meta.bandwidth = bandwidth;
  s.meta.code_id = prime;
  return s;
}

ComplexSignal make_bpsk_barker13(double carrier) {
  std::vector<double> code(kBarker13.size());
  for (std::size_t k = 0; k < code.size(); ++k)
    code[k] = kBarker13[k] > 0 ? 0.0 : M_PI;
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = static_cast<int>(code.size());
  return s;
}

ComplexSignal make_frank(double carrier, int m) {
  std::vector<double> code;
  code.reserve(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      code.push_back(kTwoPi / m * i * j);
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = m;
  return s;
}

ComplexSignal make_p1(double carrier, int m) {
  std::vector<double> code;
  code.reserve(static_cast<std::size_t>(m) * m);
  for (int j = 1; j <= m; ++j)
    for (int i = 1; i <= m; ++i)
      code.push_back(-M_PI / m * (m - (2.0 * j - 1)) * ((j - 1) * m + (i - 1)));
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = m;
  return s;
}

ComplexSignal make_p2(double carrier, int m) {
  BRSR_REQUIRE(m % 2 == 0, ErrorKind::Config, "P2 requires even M");
  std::vector<double> code;
  code.reserve(static_cast<std::size_t>(m) * m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j)
      code.push_back(-M_PI / (2.0 * m) * (2.0 * i - 1 - m) * (2.0 * j - 1 - m));
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = m;
  return s;
}

ComplexSignal make_p3(double carrier, int code_length) {
  std::vector<double> code(code_length);
  for (int i = 1; i <= code_length; ++i)
    code[i - 1] = M_PI * (i - 1.0) * (i - 1.0) / code_length;
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = code_length;
  return s;
}

ComplexSignal make_p4(double carrier, int code_length) {
  std::vector<double> code(code_length);
  for (int i = 1; i <= code_length; ++i)
    code[i - 1] =
        M_PI * (i - 1.0) * (i - 1.0) / code_length - M_PI * (i - 1.0);
  ComplexSignal s = chip_phase_code(carrier, code);
  s.meta.carrier = carrier;
  s.meta.code_id = code_length;
  return s;
}

namespace {

// Polytime phase tracks: quantized stepped/linear FM with `n` phase states.
enum class PolytimeKind { T1, T2, T3, T4 };

ComplexSignal make_polytime(double carrier, PolytimeKind kind, int segments,
                            int phase_states, double bandwidth) {
  const double n_states = phase_states;
  const double k_seg = segments;
  std::vector<double> phase = carrier_phase(carrier);
  // Bandwidth expressed as total swept cycles across the segment.
  const double swept_cycles = bandwidth * static_cast<double>(kL);
  for (std::size_t n = 0; n < kL; ++n) {
    const double u = static_cast<double>(n) / static_cast<double>(kL);
    double p = 0.0;
    switch (kind) {
      case PolytimeKind::T1: {
        const double j = std::floor(k_seg * u);
        p = kTwoPi / n_states *
            std::floor((k_seg * u - j) * j * n_states / k_seg);
        break;
      }
      case PolytimeKind::T2: {
        const double j = std::floor(k_seg * u);
        p = kTwoPi / n_states *
            std::floor((k_seg * u - j) * (2.0 * j - k_seg + 1.0) * n_states /
                       (2.0 * k_seg));
        break;
      }
      case PolytimeKind::T3:
        p = kTwoPi / n_states *
            std::floor(n_states * swept_cycles * u * u / 2.0);
        break;
      case PolytimeKind::T4:
        p = kTwoPi / n_states *
            std::floor(n_states * swept_cycles * u * u / 2.0 -
                       n_states * swept_cycles * u / 2.0);
        break;
    }
    phase[n] += std::fmod(p, kTwoPi);
  }
  ComplexSignal s = from_phase(phase);
  s.meta.carrier = carrier;
  s.meta.bandwidth = bandwidth;
  s.meta.code_id = kind == PolytimeKind::T3 || kind == PolytimeKind::T4
                       ? phase_states
                       : segments;
  return s;
}

}  // namespace

ComplexSignal make_t1(double carrier, int segments, int phase_states) {
  return make_polytime(carrier, PolytimeKind::T1, segments, phase_states, 0.0);
}
ComplexSignal make_t2(double carrier, int segments, int phase_states) {
  return make_polytime(carrier, PolytimeKind::T2, segments, phase_states, 0.0);
}
ComplexSignal make_t3(double carrier, double bandwidth, int phase_states) {
  return make_polytime(carrier, PolytimeKind::T3, 0, phase_states, bandwidth);
}
ComplexSignal make_t4(double carrier, double bandwidth, int phase_states) {
  return make_polytime(carrier, PolytimeKind::T4, 0, phase_states, bandwidth);
}

ComplexSignal synthesize(int class_id, std::uint64_t seed) {
  BRSR_REQUIRE(class_id >= 0 && class_id < kNumModulationClasses,
               ErrorKind::Config,
               "synthesize: unknown class id " + std::to_string(class_id));
  Rng rng(Rng::derive(seed, 0x5747u + static_cast<std::uint64_t>(class_id)));
  const double carrier = rng.uniform(0.10, 0.35);
  // Keep the occupied band inside [0.05, 0.45].
  const double max_bw =
      std::min({0.30, 2.0 * (0.45 - carrier), 2.0 * (carrier - 0.05)});
  const double bandwidth = rng.uniform(0.05, max_bw);

  ComplexSignal s;
  switch (static_cast<ModulationClass>(class_id)) {
    case ModulationClass::Lfm:
      s = make_lfm(carrier, bandwidth);
      break;
    case ModulationClass::Costas: {
      static constexpr std::array<int, 3> primes = {7, 11, 13};
      s = make_costas(carrier, bandwidth,
                      primes[static_cast<std::size_t>(rng.uniform_int(0, 2))]);
      break;
    }
    case ModulationClass::BpskBarker13:
      s = make_bpsk_barker13(carrier);
      break;
    case ModulationClass::Frank:
      s = make_frank(carrier, static_cast<int>(rng.uniform_int(4, 8)));
      break;
    case ModulationClass::P1:
      s = make_p1(carrier, static_cast<int>(rng.uniform_int(4, 8)));
      break;
    case ModulationClass::P2:
      s = make_p2(carrier, 2 * static_cast<int>(rng.uniform_int(2, 4)));
      break;
    case ModulationClass::P3:
      s = make_p3(carrier, static_cast<int>(rng.uniform_int(36, 64)));
      break;
    case ModulationClass::P4:
      s = make_p4(carrier, static_cast<int>(rng.uniform_int(36, 64)));
      break;
    case ModulationClass::T1:
      s = make_t1(carrier, static_cast<int>(rng.uniform_int(4, 6)), 2);
      break;
    case ModulationClass::T2:
      s = make_t2(carrier, static_cast<int>(rng.uniform_int(4, 6)), 2);
      break;
    case ModulationClass::T3:
      s = make_t3(carrier, bandwidth, 2);
      break;
    case ModulationClass::T4:
      s = make_t4(carrier, bandwidth, 2);
      break;
  }
  s.label = class_id;
  s.meta.seed = seed;
  ComplexSignal out = normalize(s);
  out.label = s.label;
  out.meta = s.meta;
  return out;
}

ComplexSignal normalize(const ComplexSignal& signal) {
  ComplexSignal out = signal;
  auto normalize_channel = [](std::vector<double>& ch) {
    double peak = 0.0;
    for (double v : ch) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return;
    for (double& v : ch) v /= peak;
  };
  normalize_channel(out.i);
  normalize_channel(out.q);
  return out;
}

double signal_power(const ComplexSignal& signal) {
  double acc = 0.0;
  for (std::size_t n = 0; n < kL; ++n)
    acc += signal.i[n] * signal.i[n] + signal.q[n] * signal.q[n];
  return acc / static_cast<double>(kL);
}

}  // namespace brsr
