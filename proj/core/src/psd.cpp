#include "wldecode/psd.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

#include "wldecode/errors.hpp"

namespace wld {

namespace {

// Precomputed periodic Hann window and DFT basis for one segment length.
struct WelchPlan {
  std::vector<double> window;
  double window_ssq = 0.0;
  // cos/sin tables, laid out [bin][sample].
  std::vector<double> cos_tab;
  std::vector<double> sin_tab;
  int n = 0;
  int bins = 0;
};

const WelchPlan& plan_for(int nperseg) {
  static std::mutex mu;
  static std::unordered_map<int, WelchPlan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nperseg);
  if (it != cache.end()) return it->second;

  WelchPlan p;
  p.n = nperseg;
  p.bins = nperseg / 2 + 1;
  p.window.resize(static_cast<std::size_t>(nperseg));
  for (int i = 0; i < nperseg; ++i) {
    p.window[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / nperseg);
    p.window_ssq += p.window[static_cast<std::size_t>(i)] * p.window[static_cast<std::size_t>(i)];
  }
  p.cos_tab.resize(static_cast<std::size_t>(p.bins * nperseg));
  p.sin_tab.resize(static_cast<std::size_t>(p.bins * nperseg));
  for (int k = 0; k < p.bins; ++k) {
    for (int i = 0; i < nperseg; ++i) {
      double angle = 2.0 * std::numbers::pi * k * i / nperseg;
      p.cos_tab[static_cast<std::size_t>(k * nperseg + i)] = std::cos(angle);
      p.sin_tab[static_cast<std::size_t>(k * nperseg + i)] = std::sin(angle);
    }
  }
  return cache.emplace(nperseg, std::move(p)).first->second;
}

}  // namespace

Psd welch_psd(std::span<const double> x, double sample_rate_hz, int nperseg) {
  if (nperseg < 2) throw ConfigError("welch_psd: nperseg must be >= 2");
  if (sample_rate_hz <= 0.0) throw ConfigError("welch_psd: sample rate must be positive");
  if (x.size() < static_cast<std::size_t>(nperseg))
    throw ValidationError("welch_psd: input length " + std::to_string(x.size()) +
                          " shorter than one segment (" + std::to_string(nperseg) + ")");

  const WelchPlan& plan = plan_for(nperseg);
  const int step = nperseg / 2;
  const int n_segments = 1 + static_cast<int>((x.size() - static_cast<std::size_t>(nperseg)) /
                                              static_cast<std::size_t>(step));

  Psd out;
  out.freq_hz.resize(static_cast<std::size_t>(plan.bins));
  out.density.assign(static_cast<std::size_t>(plan.bins), 0.0);
  for (int k = 0; k < plan.bins; ++k)
    out.freq_hz[static_cast<std::size_t>(k)] = k * sample_rate_hz / nperseg;

  std::vector<double> seg(static_cast<std::size_t>(nperseg));
  for (int s = 0; s < n_segments; ++s) {
    const double* base = x.data() + static_cast<std::size_t>(s * step);
    double mean = 0.0;
    for (int i = 0; i < nperseg; ++i) mean += base[i];
    mean /= nperseg;
    for (int i = 0; i < nperseg; ++i)
      seg[static_cast<std::size_t>(i)] = (base[i] - mean) * plan.window[static_cast<std::size_t>(i)];

    for (int k = 0; k < plan.bins; ++k) {
      const double* ct = plan.cos_tab.data() + static_cast<std::size_t>(k * nperseg);
      const double* st = plan.sin_tab.data() + static_cast<std::size_t>(k * nperseg);
      double re = 0.0, im = 0.0;
      for (int i = 0; i < nperseg; ++i) {
        re += seg[static_cast<std::size_t>(i)] * ct[i];
        im -= seg[static_cast<std::size_t>(i)] * st[i];
      }
      double power = (re * re + im * im) / (sample_rate_hz * plan.window_ssq);
      bool interior = k != 0 && !(nperseg % 2 == 0 && k == plan.bins - 1);
      out.density[static_cast<std::size_t>(k)] += interior ? 2.0 * power : power;
    }
  }
  for (double& d : out.density) d /= n_segments;
  return out;
}

double integrate_band(const Psd& psd, double low_hz, double high_hz) {
  if (psd.freq_hz.size() < 2) return 0.0;
  const double df = psd.freq_hz[1] - psd.freq_hz[0];
  double acc = 0.0;
  for (std::size_t k = 0; k < psd.freq_hz.size(); ++k) {
    double f = psd.freq_hz[k];
    if (f >= low_hz && f < high_hz) acc += psd.density[k] * df;
  }
  return acc;
}

}  // namespace wld
