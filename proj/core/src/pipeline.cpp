#include "wldecode/pipeline.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <utility>

#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/threading.hpp"

namespace wld {
namespace {

constexpr std::uint64_t kPipelineDomain = 0x50495045;
constexpr std::uint64_t kTagIca = 1;
constexpr std::uint64_t kTagBalance = 2;
constexpr std::int64_t kEpochLen = 100;

std::string join_violations(const std::vector<std::string>& violations) {
  std::string msg = "invalid session:";
  for (const auto& v : violations) msg += "\n  " + v;
  return msg;
}

}  // namespace

EventTimeline decimate_timeline(const EventTimeline& timeline, int factor) {
  if (factor < 1) throw ConfigError("decimate_timeline: factor must be >= 1");
  EventTimeline out;
  out.events.reserve(timeline.events.size());
  for (std::size_t i = 0; i < timeline.events.size(); ++i) {
    const TimelineEvent& e = timeline.events[i];
    if (e.onset % factor != 0 || e.duration % factor != 0)
      throw ValidationError("timeline event " + std::to_string(i) +
                            ": boundaries do not divide by decimation factor " +
                            std::to_string(factor));
    out.events.push_back({e.onset / factor, e.duration / factor, e.phase, e.level});
  }
  return out;
}

PreprocessResult preprocess_session(const RawSession& raw, const PreprocessOptions& options) {
  const ValidationReport report = validate_session(raw);
  if (!report.ok()) throw ValidationError(join_violations(report.violations));
  if (options.decimation < 1) throw ConfigError("preprocess: decimation must be >= 1");

  const SosChain notch = design_filter(options.notch, raw.sample_rate);
  const SosChain bandpass = design_filter(options.bandpass, raw.sample_rate);

  PreprocessResult result;
  result.session.participant_id = raw.participant_id;
  result.session.sample_rate = raw.sample_rate / options.decimation;
  result.session.montage = raw.montage;
  result.session.timeline = decimate_timeline(raw.timeline, options.decimation);

  const auto n_eeg = static_cast<int>(raw.eeg.rows());
  const auto n_eog = static_cast<int>(raw.eog.rows());
  const std::int64_t out_len = raw.eeg.cols() / options.decimation;
  result.session.eeg.resize(n_eeg, out_len);
  result.session.eog.resize(n_eog, out_len);

  parallel_for(n_eeg + n_eog, options.n_threads, [&](std::int64_t c) {
    const bool is_eeg = c < n_eeg;
    const auto row = is_eeg ? raw.eeg.row(c) : raw.eog.row(c - n_eeg);
    const std::span<const double> x(row.data(), static_cast<std::size_t>(row.cols()));
    std::vector<double> y = apply_zero_phase(notch, x);
    y = apply_zero_phase(bandpass, y);
    const std::vector<double> d = decimate(y, options.decimation);
    auto out = is_eeg ? result.session.eeg.row(c) : result.session.eog.row(c - n_eeg);
    for (std::int64_t i = 0; i < out_len; ++i) out[i] = d[static_cast<std::size_t>(i)];
  });

  Provenance prov;
  prov.bandpass_low_hz = options.bandpass.low_hz;
  prov.bandpass_high_hz = options.bandpass.high_hz;
  prov.bandpass_order = options.bandpass.order;
  prov.notch_hz = options.notch.center_hz;
  prov.notch_q = options.notch.q;
  prov.notch_applied = true;
  prov.decimation = options.decimation;
  prov.ica_applied = options.apply_ica;
  prov.eog_threshold = options.eog_threshold;

  if (options.apply_ica) {
    IcaOptions ica_opt = options.ica;
    ica_opt.seed = derive_seed(options.seed, {kPipelineDomain, kTagIca});
    IcaModel model = fit_ica(result.session.eeg, ica_opt);
    result.session.eeg =
        reject_eog_components(model, result.session.eeg, result.session.eog,
                              options.eog_threshold);
    result.log.ica_rejected = model.rejected_components;
    result.log.ica_convergence = model.convergence;
    prov.ica_rejected = static_cast<int>(model.rejected_components.size());
  }

  result.epochs = epoch_segment(result.session, &result.log.warnings);
  result.epochs.provenance = prov;

  if (options.balance) {
    const std::uint64_t balance_seed = derive_seed(options.seed, {kPipelineDomain, kTagBalance});
    result.epochs = balance_classes(result.epochs, balance_seed);
  }
  return result;
}

EpochSet epoch_segment(const RawSession& session, std::vector<std::string>* warnings) {
  if (session.sample_rate != 100.0)
    throw ValidationError("epoch_segment: expected a 100 Hz session, got " +
                          std::to_string(session.sample_rate) + " Hz");
  check_timeline(session.timeline);
  if (session.timeline.total_samples() > session.eeg.cols())
    throw ValidationError("epoch_segment: timeline extends past the signal");

  EpochSet set;
  int trial = -1;
  for (std::size_t i = 0; i < session.timeline.events.size(); ++i) {
    const TimelineEvent& ev = session.timeline.events[i];
    if (ev.phase == Phase::instruction) continue;
    if (ev.phase == Phase::task) ++trial;

    const std::int64_t n_whole = ev.duration / kEpochLen;
    const std::int64_t rem = ev.duration % kEpochLen;
    if (rem != 0 && warnings != nullptr)
      warnings->push_back("timeline event " + std::to_string(i) + " (" +
                          std::string(phase_name(ev.phase)) + ", level " +
                          std::to_string(ev.level) + "): dropped trailing " +
                          std::to_string(rem) + " samples shorter than one epoch");

    const Label label =
        ev.phase == Phase::task ? (ev.level == 1 ? Label::LW : Label::HW) : Label::NS;
    for (std::int64_t k = 0; k < n_whole; ++k) {
      Epoch ep;
      ep.data = session.eeg.middleCols(ev.onset + k * kEpochLen, kEpochLen);
      ep.label = label;
      ep.participant_id = session.participant_id;
      ep.source_trial = trial;
      set.epochs.push_back(std::move(ep));
    }
  }
  return set;
}

EpochSet balance_classes(const EpochSet& epochs, std::uint64_t seed) {
  const auto counts = epochs.label_counts();
  for (int l = 0; l < kNumClasses; ++l)
    if (counts[static_cast<std::size_t>(l)] == 0)
      throw BalanceError(std::string("balance_classes: no epochs labeled ") +
                         std::string(label_name(static_cast<Label>(l))));

  const std::int64_t target = counts[static_cast<std::size_t>(Label::NS)];
  std::vector<std::size_t> keep;
  for (Label label : {Label::LW, Label::HW}) {
    const std::int64_t have = counts[static_cast<std::size_t>(label)];
    if (have < target)
      throw BalanceError(std::string("balance_classes: label ") +
                         std::string(label_name(label)) + " has " + std::to_string(have) +
                         " epochs, fewer than the NS target of " + std::to_string(target));
    std::vector<std::size_t> label_idx;
    for (std::size_t i = 0; i < epochs.epochs.size(); ++i)
      if (epochs.epochs[i].label == label) label_idx.push_back(i);
    Rng rng(derive_seed(seed, {kPipelineDomain, kTagBalance,
                               static_cast<std::uint64_t>(label)}));
    for (std::int64_t pick : rng.sample_without_replacement(have, target))
      keep.push_back(label_idx[static_cast<std::size_t>(pick)]);
  }
  for (std::size_t i = 0; i < epochs.epochs.size(); ++i)
    if (epochs.epochs[i].label == Label::NS) keep.push_back(i);

  std::sort(keep.begin(), keep.end());
  EpochSet out;
  out.provenance = epochs.provenance;
  out.provenance.balanced = true;
  out.provenance.balance_seed = seed;
  out.epochs.reserve(keep.size());
  for (std::size_t i : keep) out.epochs.push_back(epochs.epochs[i]);
  return out;
}

}  // namespace wld
