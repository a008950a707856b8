#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wldecode/rng.hpp"
#include "wldecode/tensor.hpp"

namespace wld {

// Named learnable vector with its gradient accumulator.
struct Param {
  std::string name;
  Eigen::VectorXd value;
  Eigen::VectorXd grad;

  Param() = default;
  Param(std::string n, Eigen::Index size)
      : name(std::move(n)), value(Eigen::VectorXd::Zero(size)),
        grad(Eigen::VectorXd::Zero(size)) {}
};

// One differentiable kernel.  forward(train=true) caches what backward
// needs; backward accumulates parameter gradients and returns the input
// gradient.  Calling backward after an inference-mode (or no) forward is a
// mode-mismatch error.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Param*> params() { return {}; }
  // Non-learnable persistent state (batch-norm running statistics).
  virtual std::vector<Param*> state() { return {}; }
  const std::string& name() const { return name_; }

 protected:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  void mark_forward(bool train) { mode_ = train ? 1 : 0; }
  void require_train_forward() const;

  std::string name_;
  int mode_ = -1;  // -1 never run, 0 inference, 1 training
};

// 2-D convolution over [batch, maps, H, W], bias-free (batch-norm follows
// every convolution in the models here), stride 1.  `same` padding keeps
// H x W; `valid` shrinks by kernel-1.  Even kernels pad one more at the
// high edge.  groups > 1 gives depthwise-style grouped convolution.
class Conv2d : public Layer {
 public:
  enum class Pad { same, valid };

  Conv2d(std::string name, int in_maps, int out_maps, int kh, int kw, Pad pad, Rng& rng,
         int groups = 1);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weight_}; }

  std::vector<int> output_shape(const std::vector<int>& in) const;

 private:
  void im2col(const double* x, int b, MatRM& col, int group) const;

  int in_maps_, out_maps_, kh_, kw_, groups_;
  int pad_top_ = 0, pad_left_ = 0;
  Pad pad_;
  Param weight_;  // [out_maps x (in_maps/groups * kh * kw)], row-major
  Tensor input_;
  std::vector<int> in_shape_, out_shape_;
  MatRM col_;  // scratch
};

// Per-map batch normalization over (batch, H, W), eps 1e-5, running
// statistics with momentum 0.1 (training normalizes by batch statistics,
// inference by the running ones).
class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, int maps);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  std::vector<Param*> state() override { return {&running_mean_, &running_var_}; }

 private:
  int maps_;
  Param gamma_, beta_;
  Param running_mean_, running_var_;
  Tensor xhat_;
  Eigen::VectorXd inv_std_;
  std::vector<int> in_shape_;
};

// ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise.
class Elu : public Layer {
 public:
  explicit Elu(std::string name) : Layer(std::move(name)) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor out_;
};

// Non-overlapping max pooling with window (ph, pw); trailing remainders are
// dropped.
class MaxPool2d : public Layer {
 public:
  MaxPool2d(std::string name, int ph, int pw);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int ph_, pw_;
  std::vector<int> in_shape_, out_shape_;
  std::vector<std::int64_t> argmax_;
};

// Non-overlapping average pooling with window (ph, pw); trailing remainders
// are dropped (and receive zero gradient).
class AvgPool2d : public Layer {
 public:
  AvgPool2d(std::string name, int ph, int pw);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int ph_, pw_;
  std::vector<int> in_shape_, out_shape_;
};

// Fully connected layer with bias on [batch, features].
class Dense : public Layer {
 public:
  Dense(std::string name, int in_features, int out_features, Rng& rng);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

 private:
  int in_, out_;
  Param weight_;  // [out x in], row-major
  Param bias_;    // [out]
  Tensor input_;
};

// Inverted dropout: training scales kept units by 1/(1-p), inference is the
// identity.  Mask draws come from the layer's own seeded stream.
class Dropout : public Layer {
 public:
  Dropout(std::string name, double p, std::uint64_t seed);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  double p_;
  Rng rng_;
  Eigen::VectorXd mask_;
};

// [batch, C, H, W] -> [batch, C*H*W].
class Flatten : public Layer {
 public:
  explicit Flatten(std::string name) : Layer(std::move(name)) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
};

// Feature maps to a time sequence: [batch, C, H, W] -> [batch, T=W, D=C*H],
// so each time step carries all maps' spatial columns.
class SeqFromMaps : public Layer {
 public:
  explicit SeqFromMaps(std::string name) : Layer(std::move(name)) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
};

// Stacked LSTM over [batch, T, D]; returns the top layer's final hidden
// state [batch, H_last].  Gate order i, f, g, o; forget-gate bias starts at
// 1, other parameters uniform in +-1/sqrt(hidden).
class Lstm : public Layer {
 public:
  Lstm(std::string name, int input_size, std::vector<int> hidden_sizes, Rng& rng);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override;

 private:
  struct Cell {
    int in = 0, hidden = 0;
    Param w_x;  // [4H x in]
    Param w_h;  // [4H x H]
    Param b;    // [4H]
    // per-step caches, each [B x H] (inputs cached as the full sequence)
    std::vector<MatRM> i, f, g, o, c, tanh_c;
    std::vector<MatRM> h;  // h[0] is the zero initial state
    Tensor input;          // [B, T, in]
  };

  int input_size_;
  std::vector<Cell> cells_;
  int batch_ = 0, steps_ = 0;
};

// Chain of layers.  capture_index (if >= 0) keeps a copy of that layer's
// forward output for inspection (block-5 feature-map probes).
class Sequential : public Layer {
 public:
  explicit Sequential(std::string name) : Layer(std::move(name)) {}

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  std::size_t size() const { return layers_.size(); }

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override;
  std::vector<Param*> state() override;

  int capture_index = -1;
  Tensor captured;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Parallel branches applied to the same input, outputs flattened and
// concatenated along features: [batch, sum of branch features].
class ParallelConcat : public Layer {
 public:
  explicit ParallelConcat(std::string name) : Layer(std::move(name)) {}

  void add(std::unique_ptr<Layer> branch) { branches_.push_back(std::move(branch)); }

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override;
  std::vector<Param*> state() override;

 private:
  std::vector<std::unique_ptr<Layer>> branches_;
  std::vector<std::vector<int>> branch_shapes_;
  std::vector<int> in_shape_;
};

// Numerically stable softmax over rows of [batch, classes].
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean cross-entropy of softmax probabilities against integer labels, and
// its gradient with respect to the logits ((p - onehot) / batch).
double cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> labels);
Eigen::MatrixXd softmax_ce_grad(const Eigen::MatrixXd& probs, std::span<const int> labels);

// He-uniform fan-in initialization: uniform in +-sqrt(6 / fan_in).
void he_uniform(Eigen::VectorXd& v, int fan_in, Rng& rng);

}  // namespace wld
