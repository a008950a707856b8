#include "wldecode/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"

namespace wld {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "proposed") return ModelKind::proposed;
  if (name == "psd_svm") return ModelKind::psd_svm;
  if (name == "deepconvnet") return ModelKind::deepconvnet;
  if (name == "eegnet") return ModelKind::eegnet;
  if (name == "mfb_cnn") return ModelKind::mfb_cnn;
  throw UsageError("unknown model '" + name +
                   "'; expected one of proposed, psd_svm, deepconvnet, eegnet, mfb_cnn");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::proposed: return "proposed";
    case ModelKind::psd_svm: return "psd_svm";
    case ModelKind::deepconvnet: return "deepconvnet";
    case ModelKind::eegnet: return "eegnet";
    case ModelKind::mfb_cnn: return "mfb_cnn";
  }
  throw ConfigError("unhandled model kind");
}

std::unique_ptr<Sequential> build_proposed(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x10}));
  auto net = std::make_unique<Sequential>("proposed");

  auto conv_bn_elu = [&](const std::string& tag, int in, int out, int kh, int kw) {
    net->add(std::make_unique<Conv2d>(tag + ".conv", in, out, kh, kw, Conv2d::Pad::same, rng));
    net->add(std::make_unique<BatchNorm2d>(tag + ".bn", out));
    net->add(std::make_unique<Elu>(tag + ".elu"));
  };

  // temporal blocks 1-3: two 1x5 convs each, then a 1x2 max-pool
  int maps = 1;
  const int block_maps[3] = {32, 64, 128};
  for (int b = 0; b < 3; ++b) {
    const std::string tag = "b" + std::to_string(b + 1);
    conv_bn_elu(tag + ".1", maps, block_maps[b], 1, 5);
    conv_bn_elu(tag + ".2", block_maps[b], block_maps[b], 1, 5);
    net->add(std::make_unique<MaxPool2d>(tag + ".pool", 1, 2));
    maps = block_maps[b];
  }

  // spatial block 4: three 5x1 convs, then a 2x1 average-pool
  conv_bn_elu("b4.1", 128, 128, 5, 1);
  conv_bn_elu("b4.2", 128, 128, 5, 1);
  conv_bn_elu("b4.3", 128, 128, 5, 1);
  net->add(std::make_unique<AvgPool2d>("b4.pool", 2, 1));

  // spatial block 5: three 3x1 convs ending in the probe activation
  conv_bn_elu("b5.1", 128, 256, 3, 1);
  conv_bn_elu("b5.2", 256, 256, 3, 1);
  conv_bn_elu("b5.3", 256, 256, 3, 1);
  net->capture_index = static_cast<int>(net->size()) - 1;

  // 256 maps x 15 channels x 12 time -> 12-step sequence of 3840-dim vectors
  net->add(std::make_unique<SeqFromMaps>("seq"));
  net->add(std::make_unique<Lstm>("lstm", 256 * 15, std::vector<int>{256, 128}, rng));

  net->add(std::make_unique<Dense>("fc1", 128, 128, rng));
  net->add(std::make_unique<Elu>("fc1.elu"));
  net->add(std::make_unique<Dense>("fc2", 128, 64, rng));
  net->add(std::make_unique<Elu>("fc2.elu"));
  net->add(std::make_unique<Dense>("fc3", 64, 3, rng));
  return net;
}

std::int64_t proposed_param_count() {
  auto conv = [](std::int64_t in, std::int64_t out, std::int64_t kh, std::int64_t kw) {
    return out * in * kh * kw;
  };
  auto lstm = [](std::int64_t in, std::int64_t hid) { return 4 * hid * (in + hid + 1); };
  auto dense = [](std::int64_t in, std::int64_t out) { return out * in + out; };

  std::int64_t convs = conv(1, 32, 1, 5) + conv(32, 32, 1, 5) + conv(32, 64, 1, 5) +
                       conv(64, 64, 1, 5) + conv(64, 128, 1, 5) + conv(128, 128, 1, 5) +
                       3 * conv(128, 128, 5, 1) + conv(128, 256, 3, 1) +
                       2 * conv(256, 256, 3, 1);
  std::int64_t bn = 2 * (32 + 32 + 64 + 64 + 128 + 128 + 3 * 128 + 3 * 256);
  return convs + bn + lstm(256 * 15, 256) + lstm(256, 128) + dense(128, 128) +
         dense(128, 64) + dense(64, 3);
}

Tensor epochs_to_tensor(const EpochSet& set, const std::vector<int>& indices) {
  if (indices.empty()) throw ValidationError("epochs_to_tensor: empty index list");
  const int n = static_cast<int>(set.epochs.size());
  for (int i : indices)
    if (i < 0 || i >= n)
      throw ValidationError("epochs_to_tensor: index " + std::to_string(i) +
                            " outside [0, " + std::to_string(n) + ")");
  const int rows = static_cast<int>(set.epochs[static_cast<std::size_t>(indices[0])].data.rows());
  const int cols = static_cast<int>(set.epochs[static_cast<std::size_t>(indices[0])].data.cols());
  Tensor x({static_cast<int>(indices.size()), 1, rows, cols});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const MatrixRM& d = set.epochs[static_cast<std::size_t>(indices[b])].data;
    if (d.rows() != rows || d.cols() != cols)
      throw ValidationError("epochs_to_tensor: epoch " + std::to_string(indices[b]) +
                            " is " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) +
                            ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    x.data.segment(static_cast<Eigen::Index>(b) * rows * cols, rows * cols) =
        Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(rows) * cols);
  }
  return x;
}

namespace {

// Adaptive-moment estimation; zero learning rate leaves parameters intact.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Eigen::VectorXd> m, v;
  long t = 0;

  void init(const std::vector<Param*>& ps) {
    m.clear();
    v.clear();
    for (const Param* p : ps) {
      m.push_back(Eigen::VectorXd::Zero(p->value.size()));
      v.push_back(Eigen::VectorXd::Zero(p->value.size()));
    }
  }

  void step(const std::vector<Param*>& ps, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Param& p = *ps[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * p.grad;
      v[i] = beta2 * v[i] + (1.0 - beta2) * p.grad.cwiseAbs2();
      p.value.array() -=
          lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + eps);
    }
  }
};

// Training order is derived from epoch content, not the caller's ordering.
std::vector<int> canonical_order(const EpochSet& set) {
  std::vector<int> order(set.epochs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Epoch& ea = set.epochs[static_cast<std::size_t>(a)];
    const Epoch& eb = set.epochs[static_cast<std::size_t>(b)];
    if (ea.participant_id != eb.participant_id) return ea.participant_id < eb.participant_id;
    if (ea.label != eb.label) return ea.label < eb.label;
    if (ea.source_trial != eb.source_trial) return ea.source_trial < eb.source_trial;
    return std::lexicographical_compare(ea.data.data(), ea.data.data() + ea.data.size(),
                                        eb.data.data(), eb.data.data() + eb.data.size());
  });
  return order;
}

}  // namespace

TrainResult train_network(Sequential& net, const EpochSet& data, const TrainHyper& hyper,
                          std::uint64_t seed) {
  if (data.epochs.empty()) throw ValidationError("train: epoch set is empty");
  if (hyper.batch_size <= 0) throw ConfigError("train: batch size must be positive");
  if (hyper.step1_epochs < 0 || hyper.step2_epochs < 0)
    throw ConfigError("train: epoch counts must be nonnegative");
  if (hyper.step1_lr < 0.0 || hyper.step2_lr < 0.0)
    throw ConfigError("train: learning rates must be nonnegative");

  const std::vector<int> order = canonical_order(data);
  std::vector<Param*> params = net.params();
  Adam opt;
  opt.init(params);
  Rng shuffle_rng(derive_seed(seed, {0x20}));

  TrainResult res;
  res.seed = seed;
  long global_step = 0;

  auto run_step = [&](int step_no, int n_epochs, double lr) {
    double last = std::numeric_limits<double>::quiet_NaN();
    for (int e = 0; e < n_epochs; ++e) {
      std::vector<int> perm = order;
      shuffle_rng.shuffle(perm);
      double loss_sum = 0.0;
      long correct = 0, seen = 0;
      int batches = 0;
      for (std::size_t start = 0; start < perm.size();
           start += static_cast<std::size_t>(hyper.batch_size)) {
        if (hyper.max_batches_per_epoch > 0 && batches >= hyper.max_batches_per_epoch) break;
        const std::size_t stop =
            std::min(perm.size(), start + static_cast<std::size_t>(hyper.batch_size));
        const std::vector<int> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                   perm.begin() + static_cast<std::ptrdiff_t>(stop));
        std::vector<int> labels(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
          labels[k] =
              static_cast<int>(data.epochs[static_cast<std::size_t>(idx[k])].label);

        Tensor logits = net.forward(epochs_to_tensor(data, idx), true);
        Eigen::MatrixXd lm(idx.size(), logits.dim(1));
        for (Eigen::Index r = 0; r < lm.rows(); ++r)
          lm.row(r) = logits.data.segment(r * lm.cols(), lm.cols()).transpose();
        const Eigen::MatrixXd probs = softmax_rows(lm);
        const double loss = cross_entropy(probs, labels);
        ++global_step;
        if (!std::isfinite(loss))
          throw TrainingFault("non-finite training loss", global_step);

        for (Param* p : params) p->grad.setZero();
        const Eigen::MatrixXd g = softmax_ce_grad(probs, labels);
        Tensor dy(logits.shape);
        for (Eigen::Index r = 0; r < g.rows(); ++r)
          dy.data.segment(r * g.cols(), g.cols()) = g.row(r).transpose();
        net.backward(dy);
        opt.step(params, lr);
        for (const Param* p : params)
          if (!p->value.allFinite())
            throw TrainingFault("non-finite parameter " + p->name + " after update",
                                global_step);

        loss_sum += loss * static_cast<double>(idx.size());
        seen += static_cast<long>(idx.size());
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          Eigen::Index best;
          probs.row(r).maxCoeff(&best);
          if (static_cast<int>(best) == labels[static_cast<std::size_t>(r)]) ++correct;
        }
        ++batches;
      }
      const double epoch_loss = loss_sum / static_cast<double>(seen);
      res.log.push_back(
          {step_no, e, epoch_loss, static_cast<double>(correct) / static_cast<double>(seen)});
      last = epoch_loss;
    }
    return last;
  };

  res.final_step1_loss = run_step(1, hyper.step1_epochs, hyper.step1_lr);
  if (net.capture_index >= 0) {
    const int pb = std::min(static_cast<int>(order.size()), hyper.batch_size);
    const std::vector<int> probe_idx(order.begin(), order.begin() + pb);
    net.forward(epochs_to_tensor(data, probe_idx), false);
    res.block5_probe = net.captured;
  }
  res.final_step2_loss = run_step(2, hyper.step2_epochs, hyper.step2_lr);
  return res;
}

Eigen::MatrixXd forward_probs(Sequential& net, const EpochSet& set, int batch_size) {
  if (set.epochs.empty()) throw ValidationError("predict: epoch set is empty");
  if (batch_size <= 0) throw ConfigError("predict: batch size must be positive");
  const int n = static_cast<int>(set.epochs.size());
  Eigen::MatrixXd probs(n, kNumClasses);
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Tensor logits = net.forward(epochs_to_tensor(set, idx), false);
    Eigen::MatrixXd lm(stop - start, logits.dim(1));
    for (Eigen::Index r = 0; r < lm.rows(); ++r)
      lm.row(r) = logits.data.segment(r * lm.cols(), lm.cols()).transpose();
    probs.middleRows(start, stop - start) = softmax_rows(lm);
  }
  return probs;
}

Eigen::VectorXd forward_probs_one(Sequential& net, const Epoch& epoch) {
  EpochSet one;
  one.epochs.push_back(epoch);
  return forward_probs(net, one, 1).row(0).transpose();
}

std::vector<Label> argmax_labels(const Eigen::MatrixXd& probs) {
  std::vector<Label> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    int best = 0;
    for (int j = 1; j < probs.cols(); ++j)
      if (probs(r, j) > probs(r, best)) best = j;
    out[static_cast<std::size_t>(r)] = static_cast<Label>(best);
  }
  return out;
}

namespace {

class NetClassifier final : public Classifier {
 public:
  NetClassifier(std::string name,
                std::function<std::unique_ptr<Sequential>(std::uint64_t)> builder,
                TrainHyper hyper)
      : name_(std::move(name)), builder_(std::move(builder)), hyper_(hyper) {}

  void fit(const EpochSet& train, std::uint64_t seed) override {
    net_ = builder_(derive_seed(seed, {0x01}));
    result_ = train_network(*net_, train, hyper_, derive_seed(seed, {0x02}));
  }

  std::vector<Label> predict(const EpochSet& test) override {
    return argmax_labels(predict_proba(test));
  }

  Eigen::MatrixXd predict_proba(const EpochSet& test) override {
    if (!net_) throw ValidationError(name_ + ": predict before fit");
    return forward_probs(*net_, test, hyper_.batch_size);
  }

  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::function<std::unique_ptr<Sequential>(std::uint64_t)> builder_;
  TrainHyper hyper_;
  std::unique_ptr<Sequential> net_;
  TrainResult result_;
};

}  // namespace

std::unique_ptr<Classifier> make_net_classifier(
    std::string name, std::function<std::unique_ptr<Sequential>(std::uint64_t)> builder,
    TrainHyper hyper) {
  return std::make_unique<NetClassifier>(std::move(name), std::move(builder), hyper);
}

}  // namespace wld
