#include "wldecode/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wldecode/errors.hpp"

namespace wld {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::complex<double> SosChain::response(double freq_hz, double sample_rate_hz) const {
  const std::complex<double> z1 = std::exp(std::complex<double>(0.0, -2.0 * kPi * freq_hz / sample_rate_hz));
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

double SosChain::gain_db(double freq_hz, double sample_rate_hz, bool zero_phase) const {
  double mag = std::abs(response(freq_hz, sample_rate_hz));
  double db = 20.0 * std::log10(std::max(mag, 1e-300));
  return zero_phase ? 2.0 * db : db;
}

bool SosChain::stable() const {
  // Stability triangle for z^2 + a1 z + a2.
  for (const Biquad& s : sections) {
    if (std::abs(s.a2) >= 1.0) return false;
    if (std::abs(s.a1) >= 1.0 + s.a2) return false;
  }
  return true;
}

SosChain concat(const SosChain& first, const SosChain& second) {
  SosChain out = first;
  out.sections.insert(out.sections.end(), second.sections.begin(), second.sections.end());
  return out;
}

SosChain design_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (order < 2 || order % 2 != 0)
    throw ConfigError("bandpass order must be even and >= 2, got " + std::to_string(order));
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < nyquist))
    throw ConfigError("bandpass band (" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                      ") must satisfy 0 < low < high < " + std::to_string(nyquist));

  using cd = std::complex<double>;
  const int n = order;
  const double fs2 = 2.0 * sample_rate_hz;
  // Prewarp the band edges so the bilinear transform lands them exactly.
  const double w_lo = fs2 * std::tan(kPi * low_hz / sample_rate_hz);
  const double w_hi = fs2 * std::tan(kPi * high_hz / sample_rate_hz);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  // Analog Butterworth prototype poles on the left unit semicircle.
  std::vector<cd> proto(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double theta = kPi * (2.0 * k + n + 1.0) / (2.0 * n);
    proto[static_cast<std::size_t>(k)] = cd(std::cos(theta), std::sin(theta));
  }

  // Lowpass -> bandpass: each prototype pole splits into two.
  std::vector<cd> analog_poles;
  analog_poles.reserve(static_cast<std::size_t>(2 * n));
  for (const cd& p : proto) {
    cd half = 0.5 * bw * p;
    cd disc = std::sqrt(half * half - w0_sq);
    analog_poles.push_back(half + disc);
    analog_poles.push_back(half - disc);
  }

  // Bilinear transform.  Analog zeros are n at s=0 (-> z=+1) and the degree
  // difference adds n zeros at z=-1.
  std::vector<cd> digital_poles;
  digital_poles.reserve(analog_poles.size());
  cd denom_prod(1.0, 0.0);
  for (const cd& p : analog_poles) {
    digital_poles.push_back((fs2 + p) / (fs2 - p));
    denom_prod *= (fs2 - p);
  }
  // k_digital = bw^n * fs2^n / prod(fs2 - p); real for a conjugate pole set.
  double log_gain = n * std::log(bw) + n * std::log(fs2) - std::log(std::abs(denom_prod));
  double gain = std::exp(log_gain);

  // Group poles into conjugate pairs: sort by (|imag| desc, real) and walk.
  std::vector<cd> upper;
  for (const cd& p : digital_poles)
    if (p.imag() > 1e-12) upper.push_back(p);
  if (static_cast<int>(upper.size()) != n)
    throw ConfigError("bandpass design produced unpaired real poles; widen the band");
  std::sort(upper.begin(), upper.end(), [](const cd& a, const cd& b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a.real() < b.real();
  });

  SosChain chain;
  double section_gain = std::pow(gain, 1.0 / n);
  for (const cd& p : upper) {
    Biquad s;
    // Zeros (z-1)(z+1) = z^2 - 1 shared by every section.
    s.b0 = section_gain;
    s.b1 = 0.0;
    s.b2 = -section_gain;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    chain.sections.push_back(s);
  }
  if (!chain.stable()) throw ConfigError("bandpass design unstable; check band edges");
  return chain;
}

SosChain design_notch(double center_hz, double q, double sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(0.0 < center_hz && center_hz < nyquist))
    throw ConfigError("notch center " + std::to_string(center_hz) + " outside (0, " +
                      std::to_string(nyquist) + ")");
  if (q <= 0.0) throw ConfigError("notch Q must be positive");

  const double w0 = 2.0 * kPi * center_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  SosChain chain;
  chain.sections.push_back(s);
  if (!chain.stable()) throw ConfigError("notch design unstable");
  return chain;
}

SosChain design_filter(const FilterSpec& spec, double sample_rate_hz) {
  switch (spec.kind) {
    case FilterKind::butterworth_bandpass:
      return design_bandpass(spec.order, spec.low_hz, spec.high_hz, sample_rate_hz);
    case FilterKind::iir_notch:
      return design_notch(spec.center_hz, spec.q, sample_rate_hz);
  }
  throw ConfigError("unknown filter kind");
}

namespace {

// Direct form II transposed, one section, explicit state.
inline void biquad_run(const Biquad& s, double* x, std::size_t n, double z1, double z2) {
  for (std::size_t i = 0; i < n; ++i) {
    double in = x[i];
    double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    x[i] = out;
  }
}

// Steady-state DF2T state for a unit step input (the classic lfilter_zi),
// cumulatively scaled by the DC gain of the preceding sections.
std::vector<std::pair<double, double>> steady_state(const SosChain& chain) {
  std::vector<std::pair<double, double>> zi;
  zi.reserve(chain.sections.size());
  double scale = 1.0;
  for (const Biquad& s : chain.sections) {
    double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double z2 = s.b2 - s.a2 * dc;
    double z1 = s.b1 + s.b2 - (s.a1 + s.a2) * dc;
    zi.emplace_back(scale * z1, scale * z2);
    scale *= dc;
  }
  return zi;
}

void sosfilt_zi(const SosChain& chain, const std::vector<std::pair<double, double>>& zi,
                double x0, double* x, std::size_t n) {
  for (std::size_t k = 0; k < chain.sections.size(); ++k) {
    biquad_run(chain.sections[k], x, n, zi[k].first * x0, zi[k].second * x0);
  }
}

}  // namespace

void sosfilt(const SosChain& chain, std::span<double> x) {
  for (const Biquad& s : chain.sections) biquad_run(s, x.data(), x.size(), 0.0, 0.0);
}

int zero_phase_pad(const SosChain& chain) {
  return 3 * (2 * static_cast<int>(chain.sections.size()) + 1);
}

std::vector<double> apply_zero_phase(const SosChain& chain, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = static_cast<std::size_t>(zero_phase_pad(chain));
  if (n <= pad)
    throw ValidationError("signal of length " + std::to_string(n) +
                          " too short for zero-phase filtering (needs > " + std::to_string(pad) +
                          ")");

  // Odd reflection at both ends.
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const auto zi = steady_state(chain);
  sosfilt_zi(chain, zi, ext.front(), ext.data(), ext.size());
  std::reverse(ext.begin(), ext.end());
  sosfilt_zi(chain, zi, ext.front(), ext.data(), ext.size());
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> decimate(std::span<const double> x, int factor) {
  if (factor < 1) throw ConfigError("decimation factor must be >= 1");
  const std::size_t out_len = x.size() / static_cast<std::size_t>(factor);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = x[i * static_cast<std::size_t>(factor)];
  return out;
}

}  // namespace wld
