#pragma once

#include <array>
#include <string_view>

#include "wldecode/psd.hpp"
#include "wldecode/session.hpp"

namespace wld {

enum class Band { delta = 0, theta = 1, alpha = 2, beta = 3 };

constexpr int kNumBands = 4;

struct BandDefinition {
  Band band;
  double low_hz;
  double high_hz;
};

std::string_view band_name(Band b);

// delta (1,4), theta (4,8), alpha (8,13), beta (13,30) Hz.
const std::array<BandDefinition, kNumBands>& standard_bands();

// Per-channel band power of one epoch: [channels x 4 bands], in units^2.
// The delta band effectively starts at the first 2 Hz bin given 50-sample
// Welch segments at 100 Hz (frequency resolution limit).
Eigen::MatrixXd band_power(const MatrixRM& epoch_data, double sample_rate_hz = 100.0);

// Row-major flattening of log(1 + band_power): channel-major, 4 bands per
// channel.  Length 120 for a 30-channel epoch.
Eigen::VectorXd band_power_features(const MatrixRM& epoch_data, double sample_rate_hz = 100.0);

}  // namespace wld
