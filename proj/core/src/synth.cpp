#include "wldecode/synth.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/timeline.hpp"

namespace wld {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream tags for derive_seed paths.  Everything is keyed by participant
// index, never by cohort size, so participant k is identical no matter how
// many others are generated.
constexpr std::uint64_t kDomain = 0x53594e54;  // synthesis namespace
constexpr std::uint64_t kTagJitter = 1;
constexpr std::uint64_t kTagSharedBg = 2;
constexpr std::uint64_t kTagOwnBg = 3;
constexpr std::uint64_t kTagBgWeight = 4;
constexpr std::uint64_t kTagChanBandWeight = 5;
constexpr std::uint64_t kTagEventCarrier = 6;
constexpr std::uint64_t kTagEventTau = 7;
constexpr std::uint64_t kTagMainsPhase = 8;
constexpr std::uint64_t kTagMainsAmp = 9;
constexpr std::uint64_t kTagWhite = 10;
constexpr std::uint64_t kTagEogBg = 11;
constexpr std::uint64_t kTagBlink = 12;

constexpr std::array<double, kNumBands> kBandCenterHz{2.5, 6.0, 10.5, 20.0};

// Per-second amplitude draws: uniform in [kTauLo, kTauHi], midpoint 1.
constexpr double kTauLo = 0.6;
constexpr double kTauHi = 1.4;
constexpr std::int64_t kTauWindow = 1000;  // samples at 1 kHz
constexpr std::int64_t kTauCrossfade = 100;

constexpr double kBlinkBaseAmp = 150.0;  // microvolts at the vertical EOG
constexpr double kBlinkLowerEogScale = -0.65;
constexpr double kBlinkHorizEogScale = 0.08;

std::mutex g_fftw_mutex;

// Unit-variance, zero-mean noise with power density ~ 1/f^exponent, flattened
// below 0.5 Hz.  Spectrum is drawn directly in the frequency domain and
// transformed with a single c2r FFT of the next power of two.
Eigen::VectorXd shaped_noise(std::uint64_t seed, std::int64_t n, double fs, double exponent) {
  if (n <= 0) return Eigen::VectorXd();
  std::int64_t fft_n = 1024;
  while (fft_n < n) fft_n <<= 1;
  const std::int64_t half = fft_n / 2;

  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(half + 1));
  double* out = fftw_alloc_real(static_cast<std::size_t>(fft_n));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(fft_n), spec, out, FFTW_ESTIMATE);
  }

  Rng rng(seed);
  spec[0][0] = 0.0;
  spec[0][1] = 0.0;
  spec[half][0] = 0.0;
  spec[half][1] = 0.0;
  for (std::int64_t k = 1; k < half; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(fft_n);
    const double amp = std::pow(std::max(f, 0.5), -0.5 * exponent);
    spec[k][0] = rng.normal() * amp;
    spec[k][1] = rng.normal() * amp;
  }
  fftw_execute(plan);

  Eigen::VectorXd x(n);
  std::copy(out, out + n, x.data());
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(spec);
  fftw_free(out);

  x.array() -= x.mean();
  const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(n));
  if (sd > 0.0) x /= sd;
  return x;
}

Label event_label(const TimelineEvent& ev) {
  if (ev.phase == Phase::task) return ev.level == 1 ? Label::LW : Label::HW;
  return Label::NS;
}

// Stepwise per-second envelope with short raised-cosine crossfades at the
// interior window boundaries.
void build_envelope(const std::vector<double>& tau, std::int64_t dur, std::vector<double>& env) {
  env.resize(static_cast<std::size_t>(dur));
  const std::int64_t nw = static_cast<std::int64_t>(tau.size());
  for (std::int64_t w = 0; w < nw; ++w) {
    const std::int64_t lo = w * kTauWindow;
    const std::int64_t hi = std::min(dur, (w + 1) * kTauWindow);
    std::fill(env.begin() + lo, env.begin() + hi, tau[static_cast<std::size_t>(w)]);
  }
  for (std::int64_t w = 1; w < nw; ++w) {
    const std::int64_t b = w * kTauWindow;
    const double prev = tau[static_cast<std::size_t>(w - 1)];
    const double next = tau[static_cast<std::size_t>(w)];
    for (std::int64_t i = 0; i < kTauCrossfade; ++i) {
      const std::int64_t t = b - kTauCrossfade / 2 + i;
      if (t < 0 || t >= dur) continue;
      const double s = 0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) /
                                             static_cast<double>(kTauCrossfade)));
      env[static_cast<std::size_t>(t)] = (1.0 - s) * prev + s * next;
    }
  }
}

std::vector<double> draw_tau(std::uint64_t seed, std::int64_t n_windows) {
  Rng rng(seed);
  std::vector<double> tau(static_cast<std::size_t>(n_windows));
  for (auto& v : tau) v = rng.uniform(kTauLo, kTauHi);
  return tau;
}

void add_blink_everywhere(MatrixRM& eog, MatrixRM& eeg, const Montage& montage,
                          const std::vector<double>& tmpl, std::int64_t onset, double amplitude) {
  const std::int64_t len = static_cast<std::int64_t>(tmpl.size());
  for (std::int64_t i = 0; i < len; ++i) {
    const double v = amplitude * tmpl[static_cast<std::size_t>(i)];
    eog(0, onset + i) += v;
    eog(1, onset + i) += kBlinkLowerEogScale * v;
    eog(2, onset + i) += kBlinkHorizEogScale * v;
    eog(3, onset + i) -= kBlinkHorizEogScale * v;
  }
  for (int c = 0; c < static_cast<int>(montage.eeg_channels.size()); ++c) {
    const double leak = blink_leakage(montage.eeg_channels[static_cast<std::size_t>(c)]);
    if (leak <= 0.0) continue;
    for (std::int64_t i = 0; i < len; ++i)
      eeg(c, onset + i) += leak * amplitude * tmpl[static_cast<std::size_t>(i)];
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_participants < 1) throw ConfigError("synth config: n_participants must be >= 1");
  if (!(background_exponent >= 0.0 && background_exponent <= 4.0))
    throw ConfigError("synth config: background_exponent must be in [0, 4]");
  if (background_rms < 0.0) throw ConfigError("synth config: background_rms must be >= 0");
  if (!(background_shared_frac >= 0.0 && background_shared_frac <= 1.0))
    throw ConfigError("synth config: background_shared_frac must be in [0, 1]");
  for (int k = 0; k < kNumBands; ++k) {
    if (band_amplitudes[static_cast<std::size_t>(k)] < 0.0)
      throw ConfigError("synth config: amplitude for band " +
                        std::string(band_name(static_cast<Band>(k))) + " must be >= 0");
  }
  if (theta_frontal_gain.ns != 1.0)
    throw ConfigError("synth config: theta frontal NS gain must be 1.0");
  if (alpha_parietal_gain.ns != 1.0)
    throw ConfigError("synth config: alpha parietal NS gain must be 1.0");
  if (!(theta_frontal_gain.hw >= theta_frontal_gain.lw && theta_frontal_gain.lw >= 1.0))
    throw ConfigError(
        "synth config: theta frontal gains must satisfy hw >= lw >= 1.0 "
        "(theta power rises with workload)");
  if (!(alpha_parietal_gain.hw <= alpha_parietal_gain.lw && alpha_parietal_gain.lw <= 1.0))
    throw ConfigError(
        "synth config: alpha parietal gains must satisfy hw <= lw <= 1.0 "
        "(alpha power drops with workload)");
  if (alpha_parietal_gain.hw <= 0.0)
    throw ConfigError("synth config: alpha parietal gains must be positive");
  if (mains_amplitude < 0.0) throw ConfigError("synth config: mains_amplitude must be >= 0");
  if (blink_rate < 0.0) throw ConfigError("synth config: blink_rate must be >= 0");
  if (noise_floor < 0.0) throw ConfigError("synth config: noise_floor must be >= 0");
}

std::vector<double> blink_template(double sample_rate_hz) {
  if (sample_rate_hz <= 0.0) throw ConfigError("blink template: sample rate must be positive");
  const auto n = static_cast<std::int64_t>(std::llround(0.4 * sample_rate_hz));
  const auto n_up = static_cast<std::int64_t>(std::llround(0.24 * sample_rate_hz));
  std::vector<double> tmpl(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    if (i < n_up) {
      tmpl[static_cast<std::size_t>(i)] =
          std::sin(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n_up));
    } else {
      tmpl[static_cast<std::size_t>(i)] =
          -0.3 * std::sin(kPi * (static_cast<double>(i - n_up) + 0.5) /
                          static_cast<double>(n - n_up));
    }
  }
  return tmpl;
}

double blink_leakage(const std::string& channel_name) {
  if (channel_name == "Fp1" || channel_name == "Fp2") return 0.45;
  if (channel_name == "F7" || channel_name == "F8") return 0.20;
  if (channel_name == "F3" || channel_name == "F4") return 0.16;
  if (channel_name == "Fz") return 0.12;
  return 0.0;
}

std::pair<Eigen::VectorXd, MatrixRM> inject_blink(const Eigen::VectorXd& veog,
                                                  const MatrixRM& eeg, std::int64_t onset,
                                                  double amplitude, double sample_rate_hz,
                                                  const Montage& montage) {
  if (veog.size() != eeg.cols())
    throw ValidationError("inject_blink: EOG trace and EEG must cover the same samples");
  const auto tmpl = blink_template(sample_rate_hz);
  const auto len = static_cast<std::int64_t>(tmpl.size());
  if (onset < 0 || onset + len > veog.size())
    throw ValidationError("inject_blink: onset " + std::to_string(onset) +
                          " leaves no room for a " + std::to_string(len) +
                          "-sample blink in " + std::to_string(veog.size()) + " samples");

  Eigen::VectorXd out_eog = veog;
  MatrixRM out_eeg = eeg;
  for (std::int64_t i = 0; i < len; ++i)
    out_eog[onset + i] += amplitude * tmpl[static_cast<std::size_t>(i)];
  for (int c = 0; c < static_cast<int>(montage.eeg_channels.size()); ++c) {
    const double leak = blink_leakage(montage.eeg_channels[static_cast<std::size_t>(c)]);
    if (leak <= 0.0) continue;
    for (std::int64_t i = 0; i < len; ++i)
      out_eeg(c, onset + i) += leak * amplitude * tmpl[static_cast<std::size_t>(i)];
  }
  return {std::move(out_eog), std::move(out_eeg)};
}

RawSession generate_session(const SynthConfig& config, int participant_index) {
  return generate_session(config, participant_index, paradigm_timeline(1000));
}

RawSession generate_session(const SynthConfig& config, int participant_index,
                            const EventTimeline& timeline) {
  config.validate();
  if (participant_index < 0 || participant_index >= config.n_participants)
    throw ValidationError("generate_session: participant index " +
                          std::to_string(participant_index) + " outside cohort of " +
                          std::to_string(config.n_participants));
  check_timeline(timeline);

  const double fs = 1000.0;
  const std::int64_t total = timeline.total_samples();
  const Montage& montage = standard_montage();
  const int n_eeg = static_cast<int>(montage.eeg_channels.size());
  const int n_eog = static_cast<int>(montage.eog_channels.size());
  const auto p = static_cast<std::uint64_t>(participant_index);

  RawSession session;
  session.participant_id = "P" + std::to_string(participant_index + 1);
  session.sample_rate = fs;
  session.montage = montage;
  session.timeline = timeline;
  session.eeg = MatrixRM::Zero(n_eeg, total);
  session.eog = MatrixRM::Zero(n_eog, total);

  // Per-participant amplitude jitters, one fixed draw order.
  Rng jitter_rng(derive_seed(config.seed, {kDomain, p, kTagJitter}));
  const double j_bg = jitter_rng.uniform(0.85, 1.15);
  std::array<double, kNumBands> j_band;
  for (auto& j : j_band) j = jitter_rng.uniform(0.85, 1.15);
  const double j_mains = jitter_rng.uniform(0.85, 1.15);
  const double j_blink = jitter_rng.uniform(0.85, 1.15);
  const double j_noise = jitter_rng.uniform(0.85, 1.15);

  // Background: rank-1 shared component plus independent per-channel noise.
  if (config.background_rms > 0.0) {
    const double shared_scale = std::sqrt(config.background_shared_frac);
    const double own_scale = std::sqrt(1.0 - config.background_shared_frac);
    Eigen::VectorXd shared;
    if (config.background_shared_frac > 0.0)
      shared = shaped_noise(derive_seed(config.seed, {kDomain, p, kTagSharedBg}), total, fs,
                            config.background_exponent);
    for (int c = 0; c < n_eeg; ++c) {
      const auto cu = static_cast<std::uint64_t>(c);
      const double u =
          Rng(derive_seed(config.seed, {kDomain, p, kTagBgWeight, cu})).uniform(0.8, 1.2);
      Eigen::VectorXd own;
      if (config.background_shared_frac < 1.0)
        own = shaped_noise(derive_seed(config.seed, {kDomain, p, kTagOwnBg, cu}), total, fs,
                           config.background_exponent);
      auto row = session.eeg.row(c);
      const double scale = config.background_rms * j_bg;
      if (shared.size() > 0) row += (scale * shared_scale * u) * shared.transpose();
      if (own.size() > 0) row += (scale * own_scale) * own.transpose();
    }
    for (int c = 0; c < n_eog; ++c) {
      const auto cu = static_cast<std::uint64_t>(c);
      Eigen::VectorXd own = shaped_noise(derive_seed(config.seed, {kDomain, p, kTagEogBg, cu}),
                                         total, fs, config.background_exponent);
      session.eog.row(c) += (0.7 * config.background_rms * j_bg) * own.transpose();
    }
  }

  // Static per-channel oscillator weights.
  std::array<std::vector<double>, kNumBands> chan_weight;
  for (int k = 0; k < kNumBands; ++k) {
    chan_weight[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n_eeg));
    for (int c = 0; c < n_eeg; ++c)
      chan_weight[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] =
          Rng(derive_seed(config.seed, {kDomain, p, kTagChanBandWeight,
                                        static_cast<std::uint64_t>(c),
                                        static_cast<std::uint64_t>(k)}))
              .uniform(0.85, 1.15);
  }

  // Band oscillators, one shared waveform per (event, band) scaled into every
  // channel.  The per-second amplitude draws of theta and alpha are coupled
  // during task phases: identical under HW, mirrored (2 - tau) under LW,
  // independent otherwise.  Marginal amplitude statistics are identical in
  // all three cases; only the joint structure differs.
  std::vector<double> env;
  std::vector<double> waveform;
  for (std::size_t e = 0; e < timeline.events.size(); ++e) {
    const TimelineEvent& ev = timeline.events[e];
    const Label lab = event_label(ev);
    const std::int64_t dur = ev.duration;
    const std::int64_t nw = (dur + kTauWindow - 1) / kTauWindow;
    const auto eu = static_cast<std::uint64_t>(e);

    std::vector<double> tau_theta;
    for (int k = 0; k < kNumBands; ++k) {
      const double base_amp =
          config.band_amplitudes[static_cast<std::size_t>(k)] * j_band[static_cast<std::size_t>(k)];
      if (base_amp <= 0.0) continue;
      const auto ku = static_cast<std::uint64_t>(k);

      Rng carrier_rng(derive_seed(config.seed, {kDomain, p, kTagEventCarrier, eu, ku}));
      const double freq =
          kBandCenterHz[static_cast<std::size_t>(k)] * (1.0 + carrier_rng.uniform(-0.1, 0.1));
      const double phase0 = carrier_rng.uniform(0.0, 2.0 * kPi);

      std::vector<double> tau;
      const bool couple = static_cast<Band>(k) == Band::alpha && ev.phase == Phase::task &&
                          tau_theta.size() == static_cast<std::size_t>(nw);
      if (couple && lab == Label::HW) {
        tau = tau_theta;
      } else if (couple && lab == Label::LW) {
        tau = tau_theta;
        for (auto& v : tau) v = (kTauLo + kTauHi) - v;
      } else {
        tau = draw_tau(derive_seed(config.seed, {kDomain, p, kTagEventTau, eu, ku}), nw);
      }
      if (static_cast<Band>(k) == Band::theta) tau_theta = tau;

      build_envelope(tau, dur, env);
      waveform.resize(static_cast<std::size_t>(dur));
      const double dphi = 2.0 * kPi * freq / fs;
      const double cd = std::cos(dphi);
      const double sd = std::sin(dphi);
      double s = std::sin(phase0);
      double c = std::cos(phase0);
      for (std::int64_t t = 0; t < dur; ++t) {
        waveform[static_cast<std::size_t>(t)] = env[static_cast<std::size_t>(t)] * s;
        const double s2 = s * cd + c * sd;
        c = c * cd - s * sd;
        s = s2;
      }

      const Eigen::Map<const Eigen::VectorXd> wave_map(waveform.data(), dur);
      for (int ch = 0; ch < n_eeg; ++ch) {
        double gain = 1.0;
        const Region region = montage.regions[static_cast<std::size_t>(ch)];
        if (static_cast<Band>(k) == Band::theta && region == Region::frontal)
          gain = config.theta_frontal_gain.for_label(lab);
        if (static_cast<Band>(k) == Band::alpha &&
            (region == Region::parietal || region == Region::occipital))
          gain = config.alpha_parietal_gain.for_label(lab);
        const double coef =
            base_amp * gain * chan_weight[static_cast<std::size_t>(k)][static_cast<std::size_t>(ch)];
        session.eeg.row(ch).segment(ev.onset, dur) += coef * wave_map.transpose();
      }
    }
  }

  // Mains hum, common phase across the scalp.
  if (config.mains_amplitude > 0.0) {
    const double phase0 =
        Rng(derive_seed(config.seed, {kDomain, p, kTagMainsPhase})).uniform(0.0, 2.0 * kPi);
    const double dphi = 2.0 * kPi * 60.0 / fs;
    const double cd = std::cos(dphi);
    const double sd = std::sin(dphi);
    for (int c = 0; c < n_eeg; ++c) {
      const double amp =
          config.mains_amplitude * j_mains *
          Rng(derive_seed(config.seed, {kDomain, p, kTagMainsAmp, static_cast<std::uint64_t>(c)}))
              .uniform(0.8, 1.2);
      double si = std::sin(phase0);
      double co = std::cos(phase0);
      double* row = session.eeg.row(c).data();
      for (std::int64_t t = 0; t < total; ++t) {
        row[t] += amp * si;
        const double s2 = si * cd + co * sd;
        co = co * cd - si * sd;
        si = s2;
      }
    }
  }

  // White sensor noise on every channel.
  if (config.noise_floor > 0.0) {
    const double sigma = config.noise_floor * j_noise;
    for (int c = 0; c < n_eeg + n_eog; ++c) {
      Rng rng(derive_seed(config.seed, {kDomain, p, kTagWhite, static_cast<std::uint64_t>(c)}));
      double* row = c < n_eeg ? session.eeg.row(c).data()
                              : session.eog.row(c - n_eeg).data();
      for (std::int64_t t = 0; t < total; ++t) row[t] += sigma * rng.normal();
    }
  }

  // Blink train: exponential gaps, biphasic template on the EOG pair with
  // distance-decaying leakage into frontal EEG.
  if (config.blink_rate > 0.0) {
    const auto tmpl = blink_template(fs);
    const auto len = static_cast<std::int64_t>(tmpl.size());
    Rng rng(derive_seed(config.seed, {kDomain, p, kTagBlink}));
    const double rate_hz = config.blink_rate / 60.0;
    double t = 0.0;
    while (true) {
      t += -std::log(1.0 - rng.uniform()) / rate_hz;
      const auto onset = static_cast<std::int64_t>(t * fs);
      if (onset + len > total) break;
      const double amp = kBlinkBaseAmp * j_blink * rng.uniform(0.8, 1.2);
      add_blink_everywhere(session.eog, session.eeg, montage, tmpl, onset, amp);
    }
  }

  return session;
}

std::vector<RawSession> generate_cohort(const SynthConfig& config) {
  return generate_cohort(config, paradigm_timeline(1000));
}

std::vector<RawSession> generate_cohort(const SynthConfig& config, const EventTimeline& timeline) {
  config.validate();
  std::vector<RawSession> cohort;
  cohort.reserve(static_cast<std::size_t>(config.n_participants));
  for (int i = 0; i < config.n_participants; ++i)
    cohort.push_back(generate_session(config, i, timeline));
  return cohort;
}

}  // namespace wld
