#include "wldecode/session.hpp"

#include <cmath>
#include <set>
#include <string>

#include "wldecode/errors.hpp"

namespace wld {

namespace {

void check_finite(const MatrixRM& m, const char* what,
                  const std::vector<std::string>& names, ValidationReport& report) {
  for (Eigen::Index c = 0; c < m.rows(); ++c) {
    Eigen::Index first_bad = -1;
    long bad_count = 0;
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
      if (!std::isfinite(m(c, t))) {
        if (first_bad < 0) first_bad = t;
        ++bad_count;
      }
    }
    if (bad_count > 0) {
      std::string name = (c < static_cast<Eigen::Index>(names.size()))
                             ? names[static_cast<std::size_t>(c)]
                             : std::to_string(c);
      report.violations.push_back(std::string(what) + " channel " + name +
                                  ": non-finite sample at index " + std::to_string(first_bad) +
                                  " (" + std::to_string(bad_count) + " total)");
    }
  }
}

}  // namespace

ValidationReport validate_session(const RawSession& s) {
  ValidationReport report;
  auto add = [&](const std::string& v) { report.violations.push_back(v); };

  if (s.sample_rate <= 0.0) add("sample_rate must be positive");
  if (s.participant_id.empty()) add("participant_id is empty");

  const Montage& m = s.montage;
  if (m.eeg_channels.size() != 30)
    add("montage has " + std::to_string(m.eeg_channels.size()) + " EEG channels, expected 30");
  if (m.eog_channels.size() != 4)
    add("montage has " + std::to_string(m.eog_channels.size()) + " EOG channels, expected 4");
  if (m.positions.size() != m.eeg_channels.size())
    add("montage positions/channel count mismatch");
  if (m.regions.size() != m.eeg_channels.size()) add("montage regions/channel count mismatch");

  std::set<std::string> seen;
  for (const auto& name : m.eeg_channels) {
    if (!seen.insert(name).second) add("duplicate channel name " + name);
    if (name == "AFz" || name == "FCz") add(name + " is ground/reference, not a data channel");
  }
  for (const auto& name : m.eog_channels)
    if (!seen.insert(name).second) add("duplicate channel name " + name);
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    const ChannelPos& p = m.positions[i];
    if (p.x * p.x + p.y * p.y > 1.0)
      add("channel " + m.eeg_channels[i] + " position outside unit disk");
  }

  if (s.eeg.rows() != static_cast<Eigen::Index>(m.eeg_channels.size()) || s.eeg.rows() != 30)
    add("eeg matrix has " + std::to_string(s.eeg.rows()) + " rows, expected 30");
  if (s.eog.rows() != static_cast<Eigen::Index>(m.eog_channels.size()) || s.eog.rows() != 4)
    add("eog matrix has " + std::to_string(s.eog.rows()) + " rows, expected 4");
  if (s.eeg.cols() != s.eog.cols())
    add("eeg and eog lengths differ (" + std::to_string(s.eeg.cols()) + " vs " +
        std::to_string(s.eog.cols()) + ")");

  try {
    check_timeline(s.timeline);
    std::int64_t expected = s.timeline.total_samples();
    if (expected != s.eeg.cols())
      add("timeline covers " + std::to_string(expected) + " samples but eeg has " +
          std::to_string(s.eeg.cols()));
  } catch (const ValidationError& e) {
    add(e.what());
  }

  check_finite(s.eeg, "eeg", m.eeg_channels, report);
  check_finite(s.eog, "eog", m.eog_channels, report);
  return report;
}

}  // namespace wld
