#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "wldecode/session.hpp"

namespace wld {

struct IcaConvergence {
  int passes = 0;
  double final_delta = 0.0;
  bool converged = false;
  // max |delta W| after each pass, for convergence diagnostics
  std::vector<double> delta_history;
};

// Extended-infomax decomposition.  `unmixing` and `mixing` act in whitened
// space and are exact inverses; the symmetric (ZCA) whitener maps centered
// data to unit covariance, so on already-white input it is close to identity.
struct IcaModel {
  Eigen::MatrixXd unmixing;
  Eigen::MatrixXd mixing;
  Eigen::MatrixXd whitener;
  Eigen::MatrixXd dewhitener;
  Eigen::VectorXd mean;
  std::vector<int> rejected_components;
  IcaConvergence convergence;

  // Component activations, one row per component.
  Eigen::MatrixXd sources(const MatrixRM& eeg) const;

  // Inverse transform with rejected components zeroed.
  MatrixRM reconstruct(const MatrixRM& eeg) const;
};

struct IcaOptions {
  std::uint64_t seed = 0;
  int max_passes = 500;
  double tol = 1e-7;
  double learning_rate = 0.01;
  int block = 32;
  // Fitting subsamples long recordings with an even stride; the model still
  // applies to the full data.
  std::int64_t max_fit_samples = 50000;
};

// Identity-initialized extended infomax with seeded per-pass shuffling and
// block natural-gradient updates; learning rate anneals when a pass increases
// the weight delta.  Deterministic given the options.
// Throws ValidationError on short or rank-deficient input.
IcaModel fit_ica(const MatrixRM& eeg, const IcaOptions& options = {});

// Marks components whose activation correlates (|Pearson| > threshold) with
// any EOG channel as rejected, stores them in the model, and returns the
// reconstruction without them.
MatrixRM reject_eog_components(IcaModel& model, const MatrixRM& eeg, const MatrixRM& eog,
                               double threshold = 0.7);

// Amari index of P = estimated_total_unmixing * true_mixing; zero iff P is a
// scaled permutation.
double amari_distance(const Eigen::MatrixXd& p);

}  // namespace wld
