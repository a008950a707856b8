#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wldecode/epochs.hpp"
#include "wldecode/layers.hpp"
#include "wldecode/tensor.hpp"

namespace wld {

enum class ModelKind { proposed, psd_svm, deepconvnet, eegnet, mfb_cnn };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::proposed, ModelKind::psd_svm,
                                               ModelKind::deepconvnet, ModelKind::eegnet,
                                               ModelKind::mfb_cnn};

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

// Hybrid decoder: five convolutional blocks, a two-layer LSTM, and a
// three-layer classifier head. Input is one [B, 1, 30, 100] epoch batch,
// output a [B, 3] logit matrix. capture_index is preset to the block-5
// activation so the trainer can store its feature maps for a probe batch.
std::unique_ptr<Sequential> build_proposed(std::uint64_t seed);

// Expected learnable-parameter total of build_proposed, from layer shapes.
std::int64_t proposed_param_count();

struct TrainHyper {
  int step1_epochs = 50;
  double step1_lr = 1e-3;
  int step2_epochs = 10;
  double step2_lr = 1e-4;
  int batch_size = 64;
  int max_batches_per_epoch = 0;  // 0 = use every minibatch
};

struct TrainLogEntry {
  int step;    // 1 or 2
  int epoch;   // index within the step
  double loss;
  double accuracy;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double final_step1_loss = 0.0;  // mean minibatch loss, last epoch of step 1
  double final_step2_loss = 0.0;
  Tensor block5_probe;            // captured feature maps (empty without capture)
  std::uint64_t seed = 0;
};

// Two-step minibatch training with adaptive-moment updates. Shuffling is
// owned by the trainer: the caller's epoch order never influences the
// result. A non-finite loss or parameter raises TrainingFault carrying the
// optimizer step index.
TrainResult train_network(Sequential& net, const EpochSet& data, const TrainHyper& hyper,
                          std::uint64_t seed);

// Batched inference-mode class probabilities, one row per epoch.
Eigen::MatrixXd forward_probs(Sequential& net, const EpochSet& set, int batch_size = 64);

// Probability vector for a single epoch.
Eigen::VectorXd forward_probs_one(Sequential& net, const Epoch& epoch);

// Row-wise argmax; exact ties resolve to the lower class index.
std::vector<Label> argmax_labels(const Eigen::MatrixXd& probs);

// [B, 1, rows, cols] batch assembled from the chosen epochs.
Tensor epochs_to_tensor(const EpochSet& set, const std::vector<int>& indices);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const EpochSet& train, std::uint64_t seed) = 0;
  virtual std::vector<Label> predict(const EpochSet& test) = 0;
  virtual Eigen::MatrixXd predict_proba(const EpochSet& test) = 0;
  virtual std::string name() const = 0;
};

// Wraps any network builder in the Classifier interface.
std::unique_ptr<Classifier> make_net_classifier(
    std::string name, std::function<std::unique_ptr<Sequential>(std::uint64_t)> builder,
    TrainHyper hyper);

// Factory over every supported model kind.
std::unique_ptr<Classifier> make_classifier(ModelKind kind, TrainHyper hyper = {});

}  // namespace wld
