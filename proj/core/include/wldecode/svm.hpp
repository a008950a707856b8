#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wldecode/epochs.hpp"

namespace wld {

struct SvmHyper {
  int epochs = 40;
  double lambda = 1e-3;
};

// One-vs-rest linear soft-margin machine trained by the stochastic
// subgradient method with step size 1/(lambda*t). Features are standardized
// by the stored train-set column statistics; the last weight column
// multiplies an implicit constant-1 feature.
struct SvmModel {
  Eigen::MatrixXd w;                  // [n_classes, d+1]
  Eigen::VectorXd feat_mean;          // [d]
  Eigen::VectorXd feat_std;           // [d], zero-variance columns stored as 1
  std::vector<double> objective_log;  // per-epoch summed OvR objective
};

// Log-scaled band powers, one 120-dim row per epoch (30 channels x 4 bands).
Eigen::MatrixXd svm_features(const EpochSet& set);

SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                   const SvmHyper& hyper, std::uint64_t seed);

// Raw decision values, one row per sample, one column per class.
Eigen::MatrixXd svm_scores(const SvmModel& model, const Eigen::MatrixXd& x);

// Full objective (L2 + mean hinge) of one binary subproblem's weights.
double svm_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& xz,
                     const std::vector<double>& sign, double lambda);

}  // namespace wld
