#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "wldecode/bands.hpp"
#include "wldecode/epochs.hpp"

namespace wld {

constexpr double kSignificanceAlpha = 0.05;

// Per-channel summary of one spectral band under a two-label contrast.
struct TopographyRow {
  int channel = 0;
  std::string channel_name;
  Band band = Band::delta;
  // Mean band power density per label in units^2/Hz (band power divided by
  // the integrated bandwidth).  NaN for labels absent from the epoch set.
  std::array<double, kNumClasses> mean_power{};
  double t_stat = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p_value < kSignificanceAlpha
};

struct TopographyReport {
  Label label_a = Label::NS;
  Label label_b = Label::HW;
  std::vector<TopographyRow> rows;  // band-major, channels in montage order
};

// Two-sided Welch t-test per channel between the per-epoch band power
// densities of the two labels.  p-values are unadjusted.  Means are reported
// for every label present in the set, not just the contrast pair.  Throws
// ValidationError unless both contrast labels have at least 2 epochs.
std::vector<TopographyRow> topography_stats(const EpochSet& set, const BandDefinition& band,
                                            Label a, Label b);

// topography_stats over all four standard bands.
TopographyReport topography_report(const EpochSet& set, Label a = Label::NS,
                                   Label b = Label::HW);

// One CSV row per channel x band: index, name, band, contrast, per-label
// means, t statistic, p-value, significance flag (1/0).  Absent-label means
// are left empty.
void write_topography_csv(std::ostream& out, const TopographyReport& report);
std::string topography_csv(const TopographyReport& report);

// Scalp map for one band: a disk per label showing the channel means
// interpolated over the montage by inverse-distance weighting, with
// significant channels marked "*".  Requires a report over the full
// 30-channel montage.
std::string topography_svg(const TopographyReport& report, Band band);

}  // namespace wld
