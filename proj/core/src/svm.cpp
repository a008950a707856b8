#include "wldecode/svm.hpp"

#include <cmath>

#include "wldecode/bands.hpp"
#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"

namespace wld {

Eigen::MatrixXd svm_features(const EpochSet& set) {
  if (set.epochs.empty()) throw ValidationError("svm_features: epoch set is empty");
  const Eigen::VectorXd first = band_power_features(set.epochs[0].data);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(set.epochs.size()), first.size());
  x.row(0) = first.transpose();
  for (std::size_t i = 1; i < set.epochs.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = band_power_features(set.epochs[i].data).transpose();
  return x;
}

double svm_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& xz,
                     const std::vector<double>& sign, double lambda) {
  const Eigen::VectorXd margins = xz * w;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    hinge += std::max(0.0, 1.0 - sign[static_cast<std::size_t>(i)] * margins(i));
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(margins.size());
}

SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                   const SvmHyper& hyper, std::uint64_t seed) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n == 0) throw ValidationError("train_svm: no samples");
  if (static_cast<std::size_t>(n) != y.size())
    throw ValidationError("train_svm: " + std::to_string(n) + " samples vs " +
                          std::to_string(y.size()) + " labels");
  if (n_classes < 2) throw ConfigError("train_svm: need at least two classes");
  if (hyper.epochs <= 0 || hyper.lambda <= 0.0)
    throw ConfigError("train_svm: epochs and lambda must be positive");
  for (int lbl : y)
    if (lbl < 0 || lbl >= n_classes)
      throw ValidationError("train_svm: label " + std::to_string(lbl) + " outside [0, " +
                            std::to_string(n_classes) + ")");

  SvmModel model;
  model.feat_mean = x.colwise().mean();
  model.feat_std.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (x.col(j).array() - model.feat_mean(j)).square().sum() /
                       static_cast<double>(n);
    model.feat_std(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  // standardized rows with the constant-1 bias feature appended
  Eigen::MatrixXd xz(n, d + 1);
  xz.leftCols(d) =
      (x.rowwise() - model.feat_mean.transpose()).array().rowwise() /
      model.feat_std.transpose().array();
  xz.col(d).setOnes();

  model.w = Eigen::MatrixXd::Zero(n_classes, d + 1);
  model.objective_log.assign(static_cast<std::size_t>(hyper.epochs), 0.0);

  Rng rng(derive_seed(seed, {0x30}));
  for (int c = 0; c < n_classes; ++c) {
    std::vector<double> sign(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      sign[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    long t = 0;
    for (int e = 0; e < hyper.epochs; ++e) {
      std::vector<int> perm = rng.permutation(static_cast<int>(n));
      for (int i : perm) {
        ++t;
        const double eta = 1.0 / (hyper.lambda * static_cast<double>(t));
        const double margin = sign[static_cast<std::size_t>(i)] * xz.row(i).dot(w);
        w *= 1.0 - eta * hyper.lambda;
        if (margin < 1.0) w += eta * sign[static_cast<std::size_t>(i)] * xz.row(i).transpose();
      }
      model.objective_log[static_cast<std::size_t>(e)] +=
          svm_objective(w, xz, sign, hyper.lambda);
    }
    model.w.row(c) = w.transpose();
  }
  return model;
}

Eigen::MatrixXd svm_scores(const SvmModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.feat_mean.size())
    throw ValidationError("svm_scores: expected " + std::to_string(model.feat_mean.size()) +
                          " features, got " + std::to_string(x.cols()));
  Eigen::MatrixXd xz(x.rows(), x.cols() + 1);
  xz.leftCols(x.cols()) =
      (x.rowwise() - model.feat_mean.transpose()).array().rowwise() /
      model.feat_std.transpose().array();
  xz.col(x.cols()).setOnes();
  return xz * model.w.transpose();
}

}  // namespace wld
