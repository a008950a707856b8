#include "wldecode/baselines.hpp"

#include "wldecode/errors.hpp"
#include "wldecode/model.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/svm.hpp"

namespace wld {

std::unique_ptr<Sequential> build_deepconvnet(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x11}));
  auto net = std::make_unique<Sequential>("deepconvnet");

  net->add(std::make_unique<Conv2d>("db1.temporal", 1, 25, 1, 10, Conv2d::Pad::same, rng));
  net->add(std::make_unique<Conv2d>("db1.spatial", 25, 25, 30, 1, Conv2d::Pad::valid, rng));
  net->add(std::make_unique<BatchNorm2d>("db1.bn", 25));
  net->add(std::make_unique<Elu>("db1.elu"));
  net->add(std::make_unique<MaxPool2d>("db1.pool", 1, 3));
  net->add(std::make_unique<Dropout>("db1.drop", 0.5, derive_seed(seed, {0x41})));

  int maps = 25;
  const int widths[3] = {50, 100, 200};
  for (int b = 0; b < 3; ++b) {
    const std::string tag = "db" + std::to_string(b + 2);
    net->add(std::make_unique<Conv2d>(tag + ".conv", maps, widths[b], 1, 10,
                                      Conv2d::Pad::same, rng));
    net->add(std::make_unique<BatchNorm2d>(tag + ".bn", widths[b]));
    net->add(std::make_unique<Elu>(tag + ".elu"));
    net->add(std::make_unique<MaxPool2d>(tag + ".pool", 1, 3));
    net->add(std::make_unique<Dropout>(tag + ".drop", 0.5,
                                       derive_seed(seed, {0x42, static_cast<std::uint64_t>(b)})));
    maps = widths[b];
  }

  net->add(std::make_unique<Flatten>("head.flatten"));
  net->add(std::make_unique<Dense>("head.fc", 200, 3, rng));
  return net;
}

std::unique_ptr<Sequential> build_eegnet(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x12}));
  auto net = std::make_unique<Sequential>("eegnet");

  net->add(std::make_unique<Conv2d>("eb1.temporal", 1, 8, 1, 50, Conv2d::Pad::same, rng));
  net->add(std::make_unique<BatchNorm2d>("eb1.bn1", 8));
  net->add(std::make_unique<Conv2d>("eb1.depthwise", 8, 16, 30, 1, Conv2d::Pad::valid, rng, 8));
  net->add(std::make_unique<BatchNorm2d>("eb1.bn2", 16));
  net->add(std::make_unique<Elu>("eb1.elu"));
  net->add(std::make_unique<AvgPool2d>("eb1.pool", 1, 4));
  net->add(std::make_unique<Dropout>("eb1.drop", 0.25, derive_seed(seed, {0x43})));

  net->add(std::make_unique<Conv2d>("eb2.depthwise", 16, 16, 1, 16, Conv2d::Pad::same, rng, 16));
  net->add(std::make_unique<Conv2d>("eb2.pointwise", 16, 16, 1, 1, Conv2d::Pad::valid, rng));
  net->add(std::make_unique<BatchNorm2d>("eb2.bn", 16));
  net->add(std::make_unique<Elu>("eb2.elu"));
  net->add(std::make_unique<AvgPool2d>("eb2.pool", 1, 8));
  net->add(std::make_unique<Dropout>("eb2.drop", 0.25, derive_seed(seed, {0x44})));

  net->add(std::make_unique<Flatten>("head.flatten"));
  net->add(std::make_unique<Dense>("head.fc", 16 * 3, 3, rng));
  return net;
}

std::unique_ptr<Sequential> build_mfb_cnn(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x13}));
  auto net = std::make_unique<Sequential>("mfb_cnn");

  auto banks = std::make_unique<ParallelConcat>("banks");
  const int kernels[3] = {5, 10, 20};
  for (int k : kernels) {
    const std::string tag = "mfb" + std::to_string(k);
    auto branch = std::make_unique<Sequential>(tag);
    branch->add(std::make_unique<Conv2d>(tag + ".temporal", 1, 16, 1, k,
                                         Conv2d::Pad::same, rng));
    branch->add(std::make_unique<BatchNorm2d>(tag + ".bn1", 16));
    branch->add(std::make_unique<Elu>(tag + ".elu1"));
    branch->add(std::make_unique<Conv2d>(tag + ".spatial", 16, 32, 30, 1,
                                         Conv2d::Pad::valid, rng));
    branch->add(std::make_unique<BatchNorm2d>(tag + ".bn2", 32));
    branch->add(std::make_unique<Elu>(tag + ".elu2"));
    branch->add(std::make_unique<AvgPool2d>(tag + ".pool", 1, 4));
    branch->add(std::make_unique<Flatten>(tag + ".flatten"));
    banks->add(std::move(branch));
  }
  net->add(std::move(banks));
  net->add(std::make_unique<Dropout>("head.drop", 0.5, derive_seed(seed, {0x45})));
  net->add(std::make_unique<Dense>("head.fc", 3 * 32 * 25, 3, rng));
  return net;
}

namespace {

class SvmClassifier final : public Classifier {
 public:
  explicit SvmClassifier(SvmHyper hyper) : hyper_(hyper) {}

  void fit(const EpochSet& train, std::uint64_t seed) override {
    const Eigen::MatrixXd x = svm_features(train);
    std::vector<int> y(train.epochs.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = static_cast<int>(train.epochs[i].label);
    model_ = train_svm(x, y, kNumClasses, hyper_, seed);
    fitted_ = true;
  }

  std::vector<Label> predict(const EpochSet& test) override {
    return argmax_labels(predict_proba(test));
  }

  Eigen::MatrixXd predict_proba(const EpochSet& test) override {
    if (!fitted_) throw ValidationError("psd_svm: predict before fit");
    // softmax over margins: a monotone surrogate, not a calibrated posterior
    return softmax_rows(svm_scores(model_, svm_features(test)));
  }

  std::string name() const override { return "psd_svm"; }

 private:
  SvmHyper hyper_;
  SvmModel model_;
  bool fitted_ = false;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(ModelKind kind, TrainHyper hyper) {
  switch (kind) {
    case ModelKind::proposed:
      return make_net_classifier("proposed", build_proposed, hyper);
    case ModelKind::psd_svm:
      return std::make_unique<SvmClassifier>(SvmHyper{});
    case ModelKind::deepconvnet:
      return make_net_classifier("deepconvnet", build_deepconvnet, hyper);
    case ModelKind::eegnet:
      return make_net_classifier("eegnet", build_eegnet, hyper);
    case ModelKind::mfb_cnn:
      return make_net_classifier("mfb_cnn", build_mfb_cnn, hyper);
  }
  throw ConfigError("unhandled model kind");
}

}  // namespace wld
