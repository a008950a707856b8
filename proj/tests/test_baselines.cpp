#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "wldecode/baselines.hpp"
#include "wldecode/errors.hpp"
#include "wldecode/model.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/svm.hpp"

using namespace wld;

namespace {

EpochSet toy_epochs(int n, std::uint64_t seed) {
  Rng rng(seed);
  EpochSet set;
  for (int i = 0; i < n; ++i) {
    Epoch e;
    e.participant_id = "P1";
    e.source_trial = i;
    e.label = static_cast<Label>(i % 3);
    e.data = MatrixRM(30, 100);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 100; ++c) e.data(r, c) = rng.normal();
    const int group = (i % 3) * 10;
    for (int r = group; r < group + 10; ++r) e.data.row(r).array() *= 4.0;
    set.epochs.push_back(std::move(e));
  }
  return set;
}

// Distinct prefixes before the first '.' across all parameter names.
std::set<std::string> name_prefixes(Sequential& net) {
  std::set<std::string> out;
  for (Param* p : net.params()) out.insert(p->name.substr(0, p->name.find('.')));
  return out;
}

}  // namespace

TEST_CASE("deepconvnet has exactly four conv blocks") {
  auto net = build_deepconvnet(3);
  std::set<std::string> prefixes = name_prefixes(*net);
  int blocks = 0;
  for (const std::string& p : prefixes)
    if (p.rfind("db", 0) == 0) ++blocks;
  CHECK(blocks == 4);
  CHECK(prefixes.count("head") == 1);

  EpochSet set = toy_epochs(2, 5);
  Eigen::MatrixXd probs = forward_probs(*net, set, 2);
  CHECK(probs.rows() == 2);
  CHECK(probs.cols() == 3);
  CHECK(probs.row(0).sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("eegnet is structured around two blocks") {
  auto net = build_eegnet(7);
  std::set<std::string> prefixes = name_prefixes(*net);
  int blocks = 0;
  for (const std::string& p : prefixes)
    if (p.rfind("eb", 0) == 0) ++blocks;
  CHECK(blocks == 2);

  EpochSet set = toy_epochs(3, 9);
  Eigen::MatrixXd probs = forward_probs(*net, set, 3);
  CHECK(probs.rows() == 3);
  for (int r = 0; r < 3; ++r) CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("filter-bank model concatenates three temporal banks") {
  auto net = build_mfb_cnn(11);
  std::set<std::string> prefixes = name_prefixes(*net);
  CHECK(prefixes.count("mfb5") == 1);
  CHECK(prefixes.count("mfb10") == 1);
  CHECK(prefixes.count("mfb20") == 1);

  EpochSet set = toy_epochs(2, 13);
  Eigen::MatrixXd probs = forward_probs(*net, set, 2);
  CHECK(probs.rows() == 2);
  CHECK(probs.row(1).sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("each convolutional baseline survives a short training run") {
  EpochSet set = toy_epochs(24, 17);
  TrainHyper hyper;
  hyper.step1_epochs = 1;
  hyper.step1_lr = 1e-3;
  hyper.step2_epochs = 1;
  hyper.step2_lr = 1e-4;
  hyper.batch_size = 12;

  for (auto builder : {build_deepconvnet, build_eegnet, build_mfb_cnn}) {
    auto net = builder(19);
    TrainResult res = train_network(*net, set, hyper, 21);
    REQUIRE(res.log.size() == 2);
    CHECK(std::isfinite(res.log[0].loss));
    CHECK(std::isfinite(res.log[1].loss));
    CHECK(res.block5_probe.size() == 0);  // no probe capture outside the hybrid decoder
  }
}

TEST_CASE("band-power features feed the svm 120 dimensions") {
  EpochSet set = toy_epochs(4, 23);
  Eigen::MatrixXd x = svm_features(set);
  CHECK(x.rows() == 4);
  CHECK(x.cols() == 120);
  CHECK(x.allFinite());
  CHECK(x.minCoeff() >= 0.0);  // log1p of nonnegative powers
}

TEST_CASE("svm separates gaussian blobs") {
  Rng rng(29);
  const int per_class = 60, d = 10;
  Eigen::MatrixXd x(3 * per_class, d);
  std::vector<int> y(3 * per_class);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      y[static_cast<std::size_t>(r)] = c;
      for (int j = 0; j < d; ++j) x(r, j) = rng.normal() * 0.4 + (j == c ? 3.0 : 0.0);
    }

  SvmHyper hyper;
  SvmModel model = train_svm(x, y, 3, hyper, 31);
  Eigen::MatrixXd scores = svm_scores(model, x);
  int correct = 0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best;
    scores.row(r).maxCoeff(&best);
    if (static_cast<int>(best) == y[static_cast<std::size_t>(r)]) ++correct;
  }
  CHECK(correct >= 3 * per_class - 2);
}

TEST_CASE("svm objective decreases over averaged checkpoints") {
  Rng rng(37);
  const int n = 90, d = 8;
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(n);
  for (int r = 0; r < n; ++r) {
    y[static_cast<std::size_t>(r)] = r % 3;
    for (int j = 0; j < d; ++j) x(r, j) = rng.normal() + (j == r % 3 ? 2.0 : 0.0);
  }
  SvmHyper hyper;
  hyper.epochs = 40;
  SvmModel model = train_svm(x, y, 3, hyper, 39);
  REQUIRE(model.objective_log.size() == 40);

  // averaged over 5-epoch windows the objective must not climb
  std::vector<double> windows;
  for (std::size_t s = 0; s + 5 <= model.objective_log.size(); s += 5) {
    double acc = 0.0;
    for (std::size_t k = s; k < s + 5; ++k) acc += model.objective_log[k];
    windows.push_back(acc / 5.0);
  }
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1] * 1.02);
  CHECK(windows.back() < windows.front());
}

TEST_CASE("svm validates inputs") {
  Eigen::MatrixXd x(2, 3);
  x.setZero();
  std::vector<int> y = {0, 1};
  SvmHyper hyper;
  CHECK_THROWS_AS(train_svm(x, {0, 1, 2}, 3, hyper, 1), ValidationError);
  CHECK_THROWS_AS(train_svm(x, {0, 7}, 3, hyper, 1), ValidationError);
  SvmHyper bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train_svm(x, y, 3, bad, 1), ConfigError);

  SvmModel model = train_svm(x, y, 3, hyper, 1);
  Eigen::MatrixXd wrong(2, 4);
  wrong.setZero();
  CHECK_THROWS_AS(svm_scores(model, wrong), ValidationError);
}

TEST_CASE("classifier factory covers every model kind") {
  for (ModelKind k : {ModelKind::proposed, ModelKind::psd_svm, ModelKind::deepconvnet,
                      ModelKind::eegnet, ModelKind::mfb_cnn}) {
    auto clf = make_classifier(k);
    CHECK(clf->name() == to_string(k));
  }
}

TEST_CASE("svm classifier learns band-power signatures") {
  Rng rng(41);
  EpochSet set;
  // class-dependent oscillation amplitude gives separable band powers
  for (int i = 0; i < 90; ++i) {
    Epoch e;
    e.participant_id = "P1";
    e.source_trial = i;
    e.label = static_cast<Label>(i % 3);
    e.data = MatrixRM(30, 100);
    const double amp = 1.0 + 2.0 * static_cast<double>(i % 3);
    const double phase = rng.uniform(0.0, 6.28);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 100; ++c)
        e.data(r, c) = amp * std::sin(0.1 * 6.2831853 * c + phase) + 0.3 * rng.normal();
    set.epochs.push_back(std::move(e));
  }

  auto clf = make_classifier(ModelKind::psd_svm);
  CHECK_THROWS_AS(clf->predict(set), ValidationError);
  clf->fit(set, 43);
  std::vector<Label> pred = clf->predict(set);
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == set.epochs[i].label) ++correct;
  CHECK(correct >= 85);

  Eigen::MatrixXd probs = clf->predict_proba(set);
  CHECK(probs.rows() == 90);
  for (int r = 0; r < 90; ++r) CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-6));
}
