#pragma once

#include <span>
#include <vector>

namespace wld {

// One-sided power spectral density in (input units)^2 / Hz.
struct Psd {
  std::vector<double> freq_hz;
  std::vector<double> density;
};

// Welch estimate: `nperseg`-sample periodic Hann windows, 50% overlap, mean
// removed per segment, density scaling.  Only complete segments are used.
// Throws ValidationError when the input is shorter than one segment.
Psd welch_psd(std::span<const double> x, double sample_rate_hz, int nperseg = 50);

// Rectangular (Riemann) integral of the PSD over a half-open band
// [low_hz, high_hz): the sum of bin densities times bin width.  Half-open
// membership keeps adjacent bands from double-counting edge bins.
double integrate_band(const Psd& psd, double low_hz, double high_hz);

}  // namespace wld
