#include <doctest.h>

#include <cmath>
#include <vector>

#include "wldecode/errors.hpp"
#include "wldecode/ica.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/synth.hpp"
#include "wldecode/timeline.hpp"

using namespace wld;

namespace {

// Unit-variance Laplace noise, a convenient super-Gaussian source.
double laplace(Rng& rng) {
  const double q = rng.uniform() - 0.5;
  const double b = 1.0 / std::sqrt(2.0);
  return -b * (q >= 0.0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(q));
}

Eigen::MatrixXd laplace_matrix(int rows, std::int64_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) m(r, c) = laplace(rng);
  return m;
}

double max_abs_corr(const Eigen::VectorXd& a, const Eigen::MatrixXd& rows) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  double best = 0.0;
  for (int r = 0; r < rows.rows(); ++r) {
    const Eigen::VectorXd bc = rows.row(r).transpose().array() - rows.row(r).mean();
    const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    if (denom <= 0.0) continue;
    best = std::max(best, std::abs(ac.dot(bc)) / denom);
  }
  return best;
}

EventTimeline ica_timeline() {
  EventTimeline t;
  std::int64_t cursor = 0;
  for (int level = 1; level <= 3; ++level) {
    t.events.push_back({cursor, 2000, Phase::instruction, level});
    cursor += 2000;
    t.events.push_back({cursor, 20000, Phase::task, level});
    cursor += 20000;
    t.events.push_back({cursor, 4000, Phase::rest, level});
    cursor += 4000;
  }
  return t;
}

}  // namespace

TEST_CASE("ica rejects short or degenerate input") {
  const MatrixRM tiny = MatrixRM::Random(30, 100);
  CHECK_THROWS_AS(fit_ica(tiny), ValidationError);

  MatrixRM dup = MatrixRM::Random(4, 2000);
  dup.row(3) = dup.row(0);
  try {
    fit_ica(dup);
    FAIL("expected rank-deficiency error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("rank") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("mixing and unmixing are an inverse pair") {
  const Eigen::MatrixXd s = laplace_matrix(6, 8000, 21);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6);
  const MatrixRM x = a * s;
  IcaOptions opt;
  opt.seed = 3;
  opt.max_passes = 60;
  const IcaModel model = fit_ica(x, opt);
  const double err = (model.mixing * model.unmixing -
                      Eigen::MatrixXd::Identity(6, 6))
                         .cwiseAbs()
                         .maxCoeff();
  CHECK(err < 1e-6);
}

TEST_CASE("known sources are recovered from a noisy 30-channel mixture") {
  const int n_ch = 30;
  const std::int64_t n = 20000;
  const Eigen::MatrixXd s = laplace_matrix(3, n, 77);
  Rng mix_rng(101);
  Eigen::MatrixXd a(n_ch, 3);
  for (int i = 0; i < n_ch; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = mix_rng.normal();
  Eigen::MatrixXd noise(n_ch, n);
  for (int i = 0; i < n_ch; ++i)
    for (std::int64_t t = 0; t < n; ++t) noise(i, t) = mix_rng.normal();
  const MatrixRM x = 3.0 * a * s + 0.1 * noise;

  IcaOptions opt;
  opt.seed = 5;
  const IcaModel model = fit_ica(x, opt);
  const Eigen::MatrixXd recovered = model.sources(x);
  for (int j = 0; j < 3; ++j) {
    const double c = max_abs_corr(s.row(j).transpose(), recovered);
    CHECK(c > 0.95);
  }
}

TEST_CASE("already-white independent input is a fixed point up to permutation") {
  const int n_ch = 8;
  const Eigen::MatrixXd s = laplace_matrix(n_ch, 20000, 9);
  IcaOptions opt;
  opt.seed = 2;
  const IcaModel model = fit_ica(s, opt);

  CHECK((model.whitener - Eigen::MatrixXd::Identity(n_ch, n_ch)).cwiseAbs().maxCoeff() < 0.05);

  // Each source should map to exactly one dominant component.
  const Eigen::MatrixXd total = model.unmixing * model.whitener;
  std::vector<bool> used(static_cast<std::size_t>(n_ch), false);
  for (int i = 0; i < n_ch; ++i) {
    int arg = 0;
    double best = 0.0;
    for (int j = 0; j < n_ch; ++j) {
      if (std::abs(total(i, j)) > best) {
        best = std::abs(total(i, j));
        arg = j;
      }
    }
    const double rest = total.row(i).cwiseAbs().sum() - best;
    CHECK(best > 3.0 * rest);
    CHECK_FALSE(used[static_cast<std::size_t>(arg)]);
    used[static_cast<std::size_t>(arg)] = true;
  }
}

TEST_CASE("fit is deterministic in the seed") {
  const Eigen::MatrixXd s = laplace_matrix(5, 6000, 33);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 5);
  const MatrixRM x = a * s;
  IcaOptions opt;
  opt.seed = 7;
  opt.max_passes = 40;
  const IcaModel m1 = fit_ica(x, opt);
  const IcaModel m2 = fit_ica(x, opt);
  CHECK(m1.unmixing == m2.unmixing);
  opt.seed = 8;
  const IcaModel m3 = fit_ica(x, opt);
  CHECK(m1.unmixing != m3.unmixing);
}

TEST_CASE("amari distance drops as passes accumulate") {
  const Eigen::MatrixXd s = laplace_matrix(5, 12000, 55);
  Eigen::MatrixXd a(5, 5);
  Rng rng(66);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = rng.normal();
  const MatrixRM x = a * s;

  auto fit_with = [&](int passes) {
    IcaOptions opt;
    opt.seed = 4;
    opt.max_passes = passes;
    const IcaModel m = fit_ica(x, opt);
    return amari_distance(m.unmixing * m.whitener * a);
  };
  const double d3 = fit_with(3);
  const double d30 = fit_with(30);
  const double d150 = fit_with(150);
  CHECK(d30 < d3);
  CHECK(d150 < 0.1);
}

TEST_CASE("blink components are identified and removed") {
  SynthConfig cfg;
  cfg.seed = 19;
  cfg.n_participants = 1;
  cfg.blink_rate = 20.0;
  const RawSession session = generate_session(cfg, 0, ica_timeline());

  IcaOptions opt;
  opt.seed = 6;
  opt.max_fit_samples = 20000;
  opt.max_passes = 200;
  IcaModel model = fit_ica(session.eeg, opt);
  const MatrixRM cleaned = reject_eog_components(model, session.eeg, session.eog);

  CHECK(model.rejected_components.size() >= 1);
  CHECK(model.rejected_components.size() < 10);

  const int fp1 = session.montage.eeg_index("Fp1");
  const Eigen::VectorXd veog = session.eog.row(0).transpose();
  Eigen::MatrixXd veog_row(1, session.eog.cols());
  veog_row.row(0) = session.eog.row(0);
  const double raw_corr = max_abs_corr(session.eeg.row(fp1).transpose(), veog_row);
  const double clean_corr = max_abs_corr(cleaned.row(fp1).transpose(), veog_row);
  CHECK(raw_corr > 0.3);
  CHECK(clean_corr < 0.2 * raw_corr);
}

TEST_CASE("without blinks nothing is rejected and reconstruction is lossless") {
  SynthConfig cfg;
  cfg.seed = 23;
  cfg.n_participants = 1;
  cfg.blink_rate = 0.0;
  const RawSession session = generate_session(cfg, 0, ica_timeline());

  IcaOptions opt;
  opt.seed = 6;
  opt.max_fit_samples = 15000;
  opt.max_passes = 120;
  IcaModel model = fit_ica(session.eeg, opt);
  const MatrixRM cleaned = reject_eog_components(model, session.eeg, session.eog);

  CHECK(model.rejected_components.empty());
  CHECK((cleaned - session.eeg).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rejecting every component reconstructs silence") {
  Eigen::MatrixXd s = laplace_matrix(5, 6000, 91);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 5);
  MatrixRM x = a * s;
  x = x.colwise() - x.rowwise().mean().eval();

  IcaOptions opt;
  opt.max_passes = 30;
  IcaModel model = fit_ica(x, opt);
  model.rejected_components = {0, 1, 2, 3, 4};
  const MatrixRM silent = model.reconstruct(x);
  CHECK(silent.cwiseAbs().maxCoeff() < 1e-9 * x.cwiseAbs().maxCoeff());
}
