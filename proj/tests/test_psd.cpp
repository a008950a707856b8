#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "wldecode/bands.hpp"
#include "wldecode/errors.hpp"
#include "wldecode/psd.hpp"
#include "wldecode/rng.hpp"

using namespace wld;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / fs + phase);
  return x;
}
}  // namespace

TEST_CASE("welch density of an on-bin sine matches the Hann closed form") {
  // A 10 Hz unit sine sampled at 100 Hz sits exactly on bin 5 of a 50-sample
  // segment.  The periodic Hann window spreads it over bins k0-1, k0, k0+1
  // with amplitude weights 1/4, 1/2, 1/4, i.e. power weights 1:4:1, and the
  // center density works out to N/(3 fs) for unit amplitude.
  auto x = sine(10.0, 100.0, 100);
  Psd psd = welch_psd(x, 100.0, 50);
  REQUIRE(psd.freq_hz.size() == 26);
  CHECK(psd.freq_hz[1] == doctest::Approx(2.0));

  const double center = 50.0 / (3.0 * 100.0);
  for (std::size_t k = 0; k < psd.freq_hz.size(); ++k) {
    double f = psd.freq_hz[k];
    double expected = (f == 10.0) ? center : (f == 8.0 || f == 12.0) ? center / 4.0 : 0.0;
    CHECK(psd.density[k] == doctest::Approx(expected).epsilon(1e-9));
  }

  // Parseval: the integral equals the sine's variance of 1/2 exactly here.
  double total = integrate_band(psd, 0.0, 51.0);
  CHECK(total == doctest::Approx(0.5).epsilon(1e-9));

  // All of that mass lies inside the alpha band [8, 13).
  CHECK(integrate_band(psd, 8.0, 13.0) / total >= 0.95);
}

TEST_CASE("welch of zero signal is zero") {
  std::vector<double> x(100, 0.0);
  Psd psd = welch_psd(x, 100.0, 50);
  for (double d : psd.density) CHECK(d == 0.0);
}

TEST_CASE("welch rejects too-short input") {
  std::vector<double> x(49, 1.0);
  CHECK_THROWS_AS(welch_psd(x, 100.0, 50), ValidationError);
}

TEST_CASE("averaged white-noise PSD is flat at 2 sigma^2 / fs") {
  Rng rng(31);
  const int epochs = 1000;
  std::vector<double> acc(26, 0.0);
  for (int e = 0; e < epochs; ++e) {
    std::vector<double> x(100);
    for (double& v : x) v = rng.normal();
    Psd psd = welch_psd(x, 100.0, 50);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += psd.density[k];
  }
  for (double& v : acc) v /= epochs;

  // Interior bins only: per-segment mean removal empties the DC bin and the
  // Nyquist bin carries a different one-sided scale.
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = 1; k < 25; ++k) {
    lo = std::min(lo, acc[k]);
    hi = std::max(hi, acc[k]);
    CHECK(acc[k] == doctest::Approx(0.02).epsilon(0.15));
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("parseval holds for a noise plus sine mixture") {
  Rng rng(77);
  std::vector<double> x = sine(7.3, 100.0, 1000, 2.0);
  for (double& v : x) v += 0.5 * rng.normal();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());

  Psd psd = welch_psd(x, 100.0, 50);
  double total = integrate_band(psd, 0.0, 51.0);
  CHECK(total == doctest::Approx(var).epsilon(0.10));
}

TEST_CASE("band power of 6 Hz sines lands in theta") {
  MatrixRM epoch(30, 100);
  for (int c = 0; c < 30; ++c) {
    auto x = sine(6.0, 100.0, 100, 1.0, 0.1 * c);
    for (int t = 0; t < 100; ++t) epoch(c, t) = x[static_cast<std::size_t>(t)];
  }
  Eigen::MatrixXd bp = band_power(epoch);
  REQUIRE(bp.rows() == 30);
  REQUIRE(bp.cols() == 4);
  for (int c = 0; c < 30; ++c) {
    double row_sum = bp.row(c).sum();
    // Hann leakage puts 1:4:1 power on bins 4/6/8; the 8 Hz bin belongs to
    // alpha, so theta holds exactly 5/6 of the total.
    CHECK(bp(c, static_cast<int>(Band::theta)) / row_sum == doctest::Approx(5.0 / 6.0).epsilon(1e-6));
    for (int b = 0; b < 4; ++b)
      if (b != static_cast<int>(Band::theta))
        CHECK(bp(c, static_cast<int>(Band::theta)) > bp(c, b));
  }
}

TEST_CASE("band power of zero epoch is zero; features have length 120") {
  MatrixRM epoch = MatrixRM::Zero(30, 100);
  Eigen::MatrixXd bp = band_power(epoch);
  CHECK(bp.cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd feat = band_power_features(epoch);
  CHECK(feat.size() == 120);
  CHECK(feat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("features are log1p of band power, channel-major") {
  Rng rng(5);
  MatrixRM epoch(30, 100);
  for (int c = 0; c < 30; ++c)
    for (int t = 0; t < 100; ++t) epoch(c, t) = rng.normal();
  Eigen::MatrixXd bp = band_power(epoch);
  Eigen::VectorXd feat = band_power_features(epoch);
  for (int c = 0; c < 30; ++c)
    for (int b = 0; b < 4; ++b)
      CHECK(feat(c * 4 + b) == doctest::Approx(std::log1p(bp(c, b))).epsilon(1e-12));
}

TEST_CASE("band power scales quadratically with amplitude") {
  Rng rng(6);
  MatrixRM epoch(4, 100);
  for (int c = 0; c < 4; ++c)
    for (int t = 0; t < 100; ++t) epoch(c, t) = rng.normal();
  Eigen::MatrixXd bp1 = band_power(epoch);
  Eigen::MatrixXd bp3 = band_power(MatrixRM(3.0 * epoch));
  for (int c = 0; c < 4; ++c)
    for (int b = 0; b < 4; ++b) CHECK(bp3(c, b) == doctest::Approx(9.0 * bp1(c, b)).epsilon(1e-9));
}

TEST_CASE("bands partition the 1-30 Hz range without double counting") {
  Rng rng(8);
  std::vector<double> x(100);
  for (double& v : x) v = rng.normal();
  Psd psd = welch_psd(x, 100.0, 50);

  const auto& bands = standard_bands();
  double band_sum = 0.0;
  for (const auto& b : bands) band_sum += integrate_band(psd, b.low_hz, b.high_hz);
  double total_1_30 = integrate_band(psd, 1.0, 30.0);
  CHECK(band_sum <= total_1_30 + 1e-12);
  CHECK(band_sum == doctest::Approx(total_1_30).epsilon(1e-9));

  // An 8 Hz sine sits on the alpha/theta boundary; half-open bands put the
  // 8 Hz bin in alpha.
  auto edge = sine(8.0, 100.0, 100);
  Psd psd8 = welch_psd(edge, 100.0, 50);
  CHECK(integrate_band(psd8, 8.0, 13.0) > integrate_band(psd8, 4.0, 8.0));
}

TEST_CASE("standard band table") {
  const auto& bands = standard_bands();
  CHECK(bands[0].low_hz == 1.0);
  CHECK(bands[0].high_hz == 4.0);
  CHECK(bands[1].low_hz == 4.0);
  CHECK(bands[1].high_hz == 8.0);
  CHECK(bands[2].low_hz == 8.0);
  CHECK(bands[2].high_hz == 13.0);
  CHECK(bands[3].low_hz == 13.0);
  CHECK(bands[3].high_hz == 30.0);
  CHECK(band_name(Band::delta) == "delta");
  CHECK(band_name(Band::beta) == "beta");
}
