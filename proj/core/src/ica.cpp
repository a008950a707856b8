#include "wldecode/ica.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"

namespace wld {
namespace {

constexpr std::uint64_t kIcaDomain = 0x494341;

// Deterministic even-stride subsample of column indices.
std::vector<std::int64_t> stride_indices(std::int64_t n, std::int64_t max_n) {
  std::vector<std::int64_t> idx;
  if (n <= max_n) {
    idx.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  } else {
    idx.resize(static_cast<std::size_t>(max_n));
    for (std::int64_t i = 0; i < max_n; ++i)
      idx[static_cast<std::size_t>(i)] = i * n / max_n;
  }
  return idx;
}

}  // namespace

Eigen::MatrixXd IcaModel::sources(const MatrixRM& eeg) const {
  return unmixing * (whitener * (eeg.colwise() - mean));
}

MatrixRM IcaModel::reconstruct(const MatrixRM& eeg) const {
  Eigen::MatrixXd s = sources(eeg);
  for (int c : rejected_components) s.row(c).setZero();
  MatrixRM out = dewhitener * (mixing * s);
  out.colwise() += mean;
  return out;
}

IcaModel fit_ica(const MatrixRM& eeg, const IcaOptions& options) {
  const auto n_ch = static_cast<int>(eeg.rows());
  const std::int64_t n = eeg.cols();
  if (n_ch < 2) throw ValidationError("ica: need at least 2 channels");
  if (n < static_cast<std::int64_t>(n_ch) * 50)
    throw ValidationError("ica: " + std::to_string(n) + " samples are too few for " +
                          std::to_string(n_ch) + " channels (need >= " +
                          std::to_string(n_ch * 50) + ")");
  if (!eeg.allFinite()) throw ValidationError("ica: input contains non-finite samples");
  if (options.block < 8) throw ConfigError("ica: block size must be >= 8");
  if (options.max_passes < 1) throw ConfigError("ica: max_passes must be >= 1");

  IcaModel model;
  model.mean = eeg.rowwise().mean();

  // Symmetric whitening from the eigendecomposition of the covariance.
  const Eigen::MatrixXd centered = eeg.colwise() - model.mean;
  const Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const double lambda_max = evals.maxCoeff();
  if (!(lambda_max > 0.0)) throw ValidationError("ica: input has zero variance");
  const double lambda_floor = lambda_max * 1e-10;
  int rank = 0;
  for (int i = 0; i < n_ch; ++i)
    if (evals[i] > lambda_floor) ++rank;
  if (rank < n_ch)
    throw ValidationError("ica: rank-deficient covariance (rank " + std::to_string(rank) +
                          " of " + std::to_string(n_ch) +
                          "); reduce dimensionality by retaining " + std::to_string(rank) +
                          " principal components");
  model.whitener = eig.eigenvectors() *
                   evals.cwiseSqrt().cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  model.dewhitener = eig.eigenvectors() * evals.cwiseSqrt().asDiagonal() *
                     eig.eigenvectors().transpose();

  const auto fit_idx = stride_indices(n, options.max_fit_samples);
  const auto n_fit = static_cast<std::int64_t>(fit_idx.size());
  Eigen::MatrixXd z(n_ch, n_fit);
  for (std::int64_t i = 0; i < n_fit; ++i)
    z.col(i) = model.whitener * centered.col(fit_idx[static_cast<std::size_t>(i)]);

  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n_ch, n_ch);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n_ch, n_ch);
  double lr = options.learning_rate;
  Eigen::MatrixXd prev_step;
  const std::int64_t probe_n = std::min<std::int64_t>(n_fit, 4096);
  int restarts = 0;

  Eigen::MatrixXd block_z(n_ch, options.block);
  std::vector<std::int64_t> order(static_cast<std::size_t>(n_fit));
  Eigen::VectorXd kurt_smooth = Eigen::VectorXd::Zero(n_ch);

  auto& conv = model.convergence;
  for (int pass = 0; pass < options.max_passes; ++pass) {
    Rng shuffle_rng(derive_seed(options.seed, {kIcaDomain, static_cast<std::uint64_t>(pass)}));
    for (std::int64_t i = 0; i < n_fit; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle_rng.shuffle(order);

    // Sub/super-Gaussian switching from the activation kurtosis on a probe
    // block, smoothed across passes to keep near-Gaussian components from
    // flickering.
    Eigen::MatrixXd u_probe(n_ch, probe_n);
    for (std::int64_t i = 0; i < probe_n; ++i)
      u_probe.col(i) = z.col(order[static_cast<std::size_t>(i)]);
    u_probe = w * u_probe;
    for (int c = 0; c < n_ch; ++c) {
      const auto row = u_probe.row(c).array();
      const double m2 = row.square().mean();
      const double m4 = row.square().square().mean();
      const double kurt = m4 - 3.0 * m2 * m2;
      kurt_smooth[c] = 0.5 * kurt_smooth[c] + 0.5 * kurt;
    }
    Eigen::VectorXd kappa(n_ch);
    for (int c = 0; c < n_ch; ++c) kappa[c] = kurt_smooth[c] >= 0.0 ? 1.0 : -1.0;

    const Eigen::MatrixXd w_before = w;
    bool blew_up = false;
    for (std::int64_t start = 0; start + options.block <= n_fit; start += options.block) {
      for (int i = 0; i < options.block; ++i)
        block_z.col(i) = z.col(order[static_cast<std::size_t>(start + i)]);
      const Eigen::MatrixXd u = w * block_z;
      const Eigen::MatrixXd y = u.array().tanh().matrix();
      const double inv_b = 1.0 / static_cast<double>(options.block);
      Eigen::MatrixXd grad = identity;
      grad.noalias() -= (kappa.asDiagonal() * y) * u.transpose() * inv_b;
      grad.noalias() -= u * u.transpose() * inv_b;
      w += lr * grad * w;
      if (!w.allFinite() || w.cwiseAbs().maxCoeff() > 1e8) {
        blew_up = true;
        break;
      }
    }

    if (blew_up) {
      if (++restarts > 8)
        throw TrainingFault("ica failed to stabilize after repeated restarts", pass);
      w = Eigen::MatrixXd::Identity(n_ch, n_ch);
      lr *= 0.25;
      prev_step.resize(0, 0);
      continue;
    }

    const Eigen::MatrixXd step = w - w_before;
    const double delta = step.cwiseAbs().maxCoeff();
    conv.delta_history.push_back(delta);
    conv.passes = pass + 1;
    conv.final_delta = delta;
    if (delta < options.tol) {
      conv.converged = true;
      break;
    }
    // Anneal when successive steps change direction by more than 60 degrees.
    if (prev_step.size() > 0) {
      const double denom = step.norm() * prev_step.norm();
      if (denom > 0.0 &&
          step.cwiseProduct(prev_step).sum() / denom < 0.5)
        lr = std::max(lr * 0.98, 1e-7);
    }
    prev_step = step;
  }

  model.unmixing = w;
  model.mixing = w.inverse();
  return model;
}

MatrixRM reject_eog_components(IcaModel& model, const MatrixRM& eeg, const MatrixRM& eog,
                               double threshold) {
  if (eog.cols() != eeg.cols())
    throw ValidationError("reject_eog_components: EEG and EOG must cover the same samples");
  const Eigen::MatrixXd s = model.sources(eeg);
  const auto n_comp = static_cast<int>(s.rows());
  const auto n = static_cast<double>(s.cols());

  Eigen::MatrixXd sc = s.colwise() - s.rowwise().mean();
  Eigen::MatrixXd ec = eog.colwise() - eog.rowwise().mean();
  const Eigen::VectorXd s_norm = sc.rowwise().norm();
  const Eigen::VectorXd e_norm = ec.rowwise().norm();

  model.rejected_components.clear();
  for (int c = 0; c < n_comp; ++c) {
    if (s_norm[c] <= 0.0) continue;
    for (int j = 0; j < eog.rows(); ++j) {
      if (e_norm[j] <= 0.0) continue;
      const double corr = sc.row(c).dot(ec.row(j)) / (s_norm[c] * e_norm[j]);
      if (std::abs(corr) > threshold) {
        model.rejected_components.push_back(c);
        break;
      }
    }
  }
  (void)n;
  return model.reconstruct(eeg);
}

double amari_distance(const Eigen::MatrixXd& p) {
  const auto n = static_cast<int>(p.rows());
  const Eigen::MatrixXd a = p.cwiseAbs();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
    acc += a.col(i).sum() / a.col(i).maxCoeff() - 1.0;
  }
  return acc / (2.0 * n * (n - 1));
}

}  // namespace wld
