#include "wldecode/bands.hpp"

#include <cmath>
#include <span>

namespace wld {

std::string_view band_name(Band b) {
  switch (b) {
    case Band::delta: return "delta";
    case Band::theta: return "theta";
    case Band::alpha: return "alpha";
    case Band::beta: return "beta";
  }
  return "?";
}

const std::array<BandDefinition, kNumBands>& standard_bands() {
  static const std::array<BandDefinition, kNumBands> bands = {{
      {Band::delta, 1.0, 4.0},
      {Band::theta, 4.0, 8.0},
      {Band::alpha, 8.0, 13.0},
      {Band::beta, 13.0, 30.0},
  }};
  return bands;
}

Eigen::MatrixXd band_power(const MatrixRM& epoch_data, double sample_rate_hz) {
  const auto& bands = standard_bands();
  Eigen::MatrixXd out(epoch_data.rows(), kNumBands);
  for (Eigen::Index c = 0; c < epoch_data.rows(); ++c) {
    std::span<const double> row(epoch_data.row(c).data(),
                                static_cast<std::size_t>(epoch_data.cols()));
    Psd psd = welch_psd(row, sample_rate_hz);
    for (int b = 0; b < kNumBands; ++b)
      out(c, b) = integrate_band(psd, bands[static_cast<std::size_t>(b)].low_hz,
                                 bands[static_cast<std::size_t>(b)].high_hz);
  }
  return out;
}

Eigen::VectorXd band_power_features(const MatrixRM& epoch_data, double sample_rate_hz) {
  Eigen::MatrixXd bp = band_power(epoch_data, sample_rate_hz);
  Eigen::VectorXd out(bp.rows() * bp.cols());
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < bp.rows(); ++c)
    for (Eigen::Index b = 0; b < bp.cols(); ++b) out(k++) = std::log1p(bp(c, b));
  return out;
}

}  // namespace wld
