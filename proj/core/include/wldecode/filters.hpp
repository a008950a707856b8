#pragma once

#include <complex>
#include <span>
#include <vector>

namespace wld {

// One normalized second-order section (a0 = 1).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct SosChain {
  std::vector<Biquad> sections;

  // H(e^{j 2 pi f / fs}) for a single forward pass.
  std::complex<double> response(double freq_hz, double sample_rate_hz) const;
  // 20 log10 |H|; pass squared=true for a forward-backward application.
  double gain_db(double freq_hz, double sample_rate_hz, bool zero_phase = false) const;
  // All poles strictly inside the unit circle.
  bool stable() const;
};

SosChain concat(const SosChain& first, const SosChain& second);

enum class FilterKind { butterworth_bandpass, iir_notch };

struct FilterSpec {
  FilterKind kind = FilterKind::butterworth_bandpass;
  // Design order of the analog Butterworth prototype.  A bandpass of order N
  // has 2N digital poles arranged in N second-order sections.
  int order = 4;
  double low_hz = 1.0;
  double high_hz = 50.0;
  double center_hz = 60.0;  // notch only
  double q = 30.0;          // notch only
  bool zero_phase = true;
};

// Throws ConfigError when the spec is infeasible at the given rate; the
// returned chain is always stable.
SosChain design_filter(const FilterSpec& spec, double sample_rate_hz);
SosChain design_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz);
SosChain design_notch(double center_hz, double q, double sample_rate_hz);

// Single forward pass, zero initial conditions.
void sosfilt(const SosChain& chain, std::span<double> x);

// Forward-backward filtering with odd reflective padding and steady-state
// initial conditions, so transients at both ends are suppressed and the net
// phase response is zero.  Throws ValidationError when the signal is shorter
// than the required pad length.
std::vector<double> apply_zero_phase(const SosChain& chain, std::span<const double> x);

// Pad length used by apply_zero_phase.
int zero_phase_pad(const SosChain& chain);

// Keeps the first sample of every complete block of `factor` samples;
// output length = floor(len / factor).
std::vector<double> decimate(std::span<const double> x, int factor = 10);

}  // namespace wld
