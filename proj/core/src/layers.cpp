#include "wldecode/layers.hpp"

#include <algorithm>
#include <cmath>

#include "wldecode/errors.hpp"

namespace wld {

void Layer::require_train_forward() const {
  if (mode_ != 1)
    throw ValidationError(name_ + ": backward requires a preceding training-mode forward (" +
                          (mode_ < 0 ? "no forward has run" : "last forward was inference mode") +
                          ")");
}

void he_uniform(Eigen::VectorXd& v, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / fan_in);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_maps, int out_maps, int kh, int kw, Pad pad, Rng& rng,
               int groups)
    : Layer(std::move(name)), in_maps_(in_maps), out_maps_(out_maps), kh_(kh), kw_(kw),
      groups_(groups), pad_(pad) {
  if (in_maps <= 0 || out_maps <= 0 || kh <= 0 || kw <= 0 || groups <= 0)
    throw ConfigError(name_ + ": conv dimensions must be positive");
  if (in_maps % groups != 0 || out_maps % groups != 0)
    throw ConfigError(name_ + ": groups must divide both map counts; got " +
                      std::to_string(in_maps) + "/" + std::to_string(out_maps) + " maps, " +
                      std::to_string(groups) + " groups");
  if (pad_ == Pad::same) {
    pad_top_ = (kh_ - 1) / 2;
    pad_left_ = (kw_ - 1) / 2;
  }
  const int k = in_maps_ / groups_ * kh_ * kw_;
  weight_ = Param(name_ + ".weight", static_cast<Eigen::Index>(out_maps_) * k);
  he_uniform(weight_.value, k, rng);
}

std::vector<int> Conv2d::output_shape(const std::vector<int>& in) const {
  const int h_out = pad_ == Pad::same ? in[2] : in[2] - kh_ + 1;
  const int w_out = pad_ == Pad::same ? in[3] : in[3] - kw_ + 1;
  return {in[0], out_maps_, h_out, w_out};
}

void Conv2d::im2col(const double* x, int b, MatRM& col, int group) const {
  const int c_in_g = in_maps_ / groups_;
  const int h = in_shape_[2], w = in_shape_[3];
  const int h_out = out_shape_[2], w_out = out_shape_[3];
  const double* sample = x + static_cast<std::int64_t>(b) * in_maps_ * h * w;
  for (int ci = 0; ci < c_in_g; ++ci) {
    const double* plane = sample + static_cast<std::int64_t>(group * c_in_g + ci) * h * w;
    for (int dh = 0; dh < kh_; ++dh) {
      for (int dw = 0; dw < kw_; ++dw) {
        const int row = (ci * kh_ + dh) * kw_ + dw;
        double* dst = col.row(row).data();
        for (int oh = 0; oh < h_out; ++oh) {
          const int ih = oh - pad_top_ + dh;
          double* out_row = dst + static_cast<std::int64_t>(oh) * w_out;
          if (ih < 0 || ih >= h) {
            std::fill(out_row, out_row + w_out, 0.0);
            continue;
          }
          // valid ow range keeps iw = ow - pad_left + dw inside [0, w);
          // empty when the kernel tap never overlaps the input
          const int lo = std::clamp(pad_left_ - dw, 0, w_out);
          const int hi = std::clamp(w + pad_left_ - dw, lo, w_out);
          std::fill(out_row, out_row + lo, 0.0);
          const double* src = plane + static_cast<std::int64_t>(ih) * w + (lo - pad_left_ + dw);
          std::copy(src, src + (hi - lo), out_row + lo);
          std::fill(out_row + hi, out_row + w_out, 0.0);
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
  require_ndim(x, 4, name_);
  if (x.dim(1) != in_maps_)
    throw ValidationError(name_ + ": expected " + std::to_string(in_maps_) + " input maps, got " +
                          shape_str(x.shape));
  if (pad_ == Pad::valid && (x.dim(2) < kh_ || x.dim(3) < kw_))
    throw ValidationError(name_ + ": input " + shape_str(x.shape) + " smaller than " +
                          std::to_string(kh_) + "x" + std::to_string(kw_) + " kernel");
  mark_forward(train);
  in_shape_ = x.shape;
  out_shape_ = output_shape(x.shape);
  if (train) input_ = x;

  const int batch = out_shape_[0];
  const int c_out_g = out_maps_ / groups_;
  const int k = in_maps_ / groups_ * kh_ * kw_;
  const std::int64_t p = static_cast<std::int64_t>(out_shape_[2]) * out_shape_[3];
  Tensor y(out_shape_);
  col_.resize(k, p);
  CMapRM w_all(weight_.value.data(), out_maps_, k);
  for (int b = 0; b < batch; ++b) {
    for (int g = 0; g < groups_; ++g) {
      im2col(x.data.data(), b, col_, g);
      MapRM out(y.data.data() + (static_cast<std::int64_t>(b) * out_maps_ + g * c_out_g) * p,
                c_out_g, p);
      out.noalias() = w_all.middleRows(g * c_out_g, c_out_g) * col_;
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, out_shape_, name_);
  const int batch = out_shape_[0];
  const int c_out_g = out_maps_ / groups_;
  const int c_in_g = in_maps_ / groups_;
  const int k = c_in_g * kh_ * kw_;
  const int h = in_shape_[2], w = in_shape_[3];
  const int h_out = out_shape_[2], w_out = out_shape_[3];
  const std::int64_t p = static_cast<std::int64_t>(h_out) * w_out;

  Tensor dx(in_shape_);
  MapRM dw_all(weight_.grad.data(), out_maps_, k);
  MatRM dcol(k, p);
  for (int b = 0; b < batch; ++b) {
    for (int g = 0; g < groups_; ++g) {
      CMapRM dout(dy.data.data() + (static_cast<std::int64_t>(b) * out_maps_ + g * c_out_g) * p,
                  c_out_g, p);
      im2col(input_.data.data(), b, col_, g);
      dw_all.middleRows(g * c_out_g, c_out_g).noalias() += dout * col_.transpose();

      CMapRM w_g(weight_.value.data() + static_cast<std::int64_t>(g) * c_out_g * k, c_out_g, k);
      dcol.noalias() = w_g.transpose() * dout;
      // col2im scatter-add
      double* dsample = dx.data.data() + static_cast<std::int64_t>(b) * in_maps_ * h * w;
      for (int ci = 0; ci < c_in_g; ++ci) {
        double* plane = dsample + static_cast<std::int64_t>(g * c_in_g + ci) * h * w;
        for (int dh = 0; dh < kh_; ++dh) {
          for (int dw = 0; dw < kw_; ++dw) {
            const int row = (ci * kh_ + dh) * kw_ + dw;
            const double* src = dcol.row(row).data();
            for (int oh = 0; oh < h_out; ++oh) {
              const int ih = oh - pad_top_ + dh;
              if (ih < 0 || ih >= h) continue;
              const int lo = std::clamp(pad_left_ - dw, 0, w_out);
              const int hi = std::clamp(w + pad_left_ - dw, lo, w_out);
              double* drow = plane + static_cast<std::int64_t>(ih) * w + (lo - pad_left_ + dw);
              const double* srow = src + static_cast<std::int64_t>(oh) * w_out + lo;
              for (int i = 0; i < hi - lo; ++i) drow[i] += srow[i];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ------------------------------------------------------------ BatchNorm2d

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
}  // namespace

BatchNorm2d::BatchNorm2d(std::string name, int maps) : Layer(std::move(name)), maps_(maps) {
  gamma_ = Param(name_ + ".gamma", maps);
  beta_ = Param(name_ + ".beta", maps);
  running_mean_ = Param(name_ + ".running_mean", maps);
  running_var_ = Param(name_ + ".running_var", maps);
  gamma_.value.setOnes();
  running_var_.value.setOnes();
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  require_ndim(x, 4, name_);
  if (x.dim(1) != maps_)
    throw ValidationError(name_ + ": expected " + std::to_string(maps_) + " maps, got " +
                          shape_str(x.shape));
  mark_forward(train);
  in_shape_ = x.shape;
  const int batch = x.dim(0);
  const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
  const std::int64_t n = static_cast<std::int64_t>(batch) * plane;

  Tensor y(x.shape);
  if (train) {
    xhat_ = Tensor(x.shape);
    inv_std_.resize(maps_);
    for (int c = 0; c < maps_; ++c) {
      double sum = 0.0, sq = 0.0;
      for (int b = 0; b < batch; ++b) {
        const double* src = x.data.data() + (static_cast<std::int64_t>(b) * maps_ + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          sum += src[i];
          sq += src[i] * src[i];
        }
      }
      const double mean = sum / static_cast<double>(n);
      const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
      const double inv = 1.0 / std::sqrt(var + kBnEps);
      inv_std_(c) = inv;
      const double g = gamma_.value(c), bt = beta_.value(c);
      for (int b = 0; b < batch; ++b) {
        const std::int64_t off = (static_cast<std::int64_t>(b) * maps_ + c) * plane;
        const double* src = x.data.data() + off;
        double* xh = xhat_.data.data() + off;
        double* dst = y.data.data() + off;
        for (std::int64_t i = 0; i < plane; ++i) {
          xh[i] = (src[i] - mean) * inv;
          dst[i] = g * xh[i] + bt;
        }
      }
      running_mean_.value(c) = (1.0 - kBnMomentum) * running_mean_.value(c) + kBnMomentum * mean;
      const double unbiased = n > 1 ? var * static_cast<double>(n) / static_cast<double>(n - 1)
                                    : var;
      running_var_.value(c) = (1.0 - kBnMomentum) * running_var_.value(c) + kBnMomentum * unbiased;
    }
  } else {
    for (int c = 0; c < maps_; ++c) {
      const double inv = 1.0 / std::sqrt(running_var_.value(c) + kBnEps);
      const double mean = running_mean_.value(c);
      const double g = gamma_.value(c), bt = beta_.value(c);
      for (int b = 0; b < batch; ++b) {
        const std::int64_t off = (static_cast<std::int64_t>(b) * maps_ + c) * plane;
        const double* src = x.data.data() + off;
        double* dst = y.data.data() + off;
        for (std::int64_t i = 0; i < plane; ++i) dst[i] = g * (src[i] - mean) * inv + bt;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, in_shape_, name_);
  const int batch = in_shape_[0];
  const std::int64_t plane = static_cast<std::int64_t>(in_shape_[2]) * in_shape_[3];
  const std::int64_t n = static_cast<std::int64_t>(batch) * plane;

  Tensor dx(in_shape_);
  for (int c = 0; c < maps_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < batch; ++b) {
      const std::int64_t off = (static_cast<std::int64_t>(b) * maps_ + c) * plane;
      const double* d = dy.data.data() + off;
      const double* xh = xhat_.data.data() + off;
      for (std::int64_t i = 0; i < plane; ++i) {
        sum_dy += d[i];
        sum_dy_xhat += d[i] * xh[i];
      }
    }
    beta_.grad(c) += sum_dy;
    gamma_.grad(c) += sum_dy_xhat;
    const double g_inv_n = gamma_.value(c) * inv_std_(c) / static_cast<double>(n);
    for (int b = 0; b < batch; ++b) {
      const std::int64_t off = (static_cast<std::int64_t>(b) * maps_ + c) * plane;
      const double* d = dy.data.data() + off;
      const double* xh = xhat_.data.data() + off;
      double* out = dx.data.data() + off;
      for (std::int64_t i = 0; i < plane; ++i)
        out[i] = g_inv_n * (static_cast<double>(n) * d[i] - sum_dy - xh[i] * sum_dy_xhat);
    }
  }
  return dx;
}

// ------------------------------------------------------------------- Elu

Tensor Elu::forward(const Tensor& x, bool train) {
  mark_forward(train);
  Tensor y(x.shape);
  y.data = (x.data.array() > 0.0).select(x.data.array(), x.data.array().exp() - 1.0);
  if (train) out_ = y;
  return y;
}

Tensor Elu::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, out_.shape, name_);
  Tensor dx(out_.shape);
  dx.data = dy.data.array() * (out_.data.array() > 0.0).select(
                                  Eigen::ArrayXd::Ones(out_.data.size()),
                                  out_.data.array() + 1.0);
  return dx;
}

// --------------------------------------------------------------- pooling

MaxPool2d::MaxPool2d(std::string name, int ph, int pw)
    : Layer(std::move(name)), ph_(ph), pw_(pw) {
  if (ph <= 0 || pw <= 0) throw ConfigError(name_ + ": pool window must be positive");
}

Tensor MaxPool2d::forward(const Tensor& x, bool train) {
  require_ndim(x, 4, name_);
  mark_forward(train);
  in_shape_ = x.shape;
  const int batch = x.dim(0), maps = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int h_out = h / ph_, w_out = w / pw_;
  if (h_out == 0 || w_out == 0)
    throw ValidationError(name_ + ": input " + shape_str(x.shape) + " smaller than " +
                          std::to_string(ph_) + "x" + std::to_string(pw_) + " window");
  out_shape_ = {batch, maps, h_out, w_out};
  Tensor y(out_shape_);
  argmax_.assign(static_cast<std::size_t>(y.size()), 0);
  std::int64_t oi = 0;
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < maps; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(b) * maps + c) * h * w;
      for (int oh = 0; oh < h_out; ++oh) {
        for (int ow = 0; ow < w_out; ++ow, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          std::int64_t best_i = 0;
          for (int dh = 0; dh < ph_; ++dh) {
            const std::int64_t row = base + static_cast<std::int64_t>(oh * ph_ + dh) * w;
            for (int dw = 0; dw < pw_; ++dw) {
              const std::int64_t idx = row + ow * pw_ + dw;
              if (x.data(idx) > best) {
                best = x.data(idx);
                best_i = idx;
              }
            }
          }
          y.data(oi) = best;
          argmax_[static_cast<std::size_t>(oi)] = best_i;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, out_shape_, name_);
  Tensor dx(in_shape_);
  for (std::int64_t i = 0; i < dy.size(); ++i)
    dx.data(argmax_[static_cast<std::size_t>(i)]) += dy.data(i);
  return dx;
}

AvgPool2d::AvgPool2d(std::string name, int ph, int pw)
    : Layer(std::move(name)), ph_(ph), pw_(pw) {
  if (ph <= 0 || pw <= 0) throw ConfigError(name_ + ": pool window must be positive");
}

Tensor AvgPool2d::forward(const Tensor& x, bool train) {
  require_ndim(x, 4, name_);
  mark_forward(train);
  in_shape_ = x.shape;
  const int batch = x.dim(0), maps = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int h_out = h / ph_, w_out = w / pw_;
  if (h_out == 0 || w_out == 0)
    throw ValidationError(name_ + ": input " + shape_str(x.shape) + " smaller than " +
                          std::to_string(ph_) + "x" + std::to_string(pw_) + " window");
  out_shape_ = {batch, maps, h_out, w_out};
  Tensor y(out_shape_);
  const double scale = 1.0 / (ph_ * pw_);
  std::int64_t oi = 0;
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < maps; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(b) * maps + c) * h * w;
      for (int oh = 0; oh < h_out; ++oh) {
        for (int ow = 0; ow < w_out; ++ow, ++oi) {
          double sum = 0.0;
          for (int dh = 0; dh < ph_; ++dh) {
            const std::int64_t row = base + static_cast<std::int64_t>(oh * ph_ + dh) * w;
            for (int dw = 0; dw < pw_; ++dw) sum += x.data(row + ow * pw_ + dw);
          }
          y.data(oi) = sum * scale;
        }
      }
    }
  }
  return y;
}

Tensor AvgPool2d::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, out_shape_, name_);
  Tensor dx(in_shape_);
  const int maps = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const int h_out = out_shape_[2], w_out = out_shape_[3];
  const double scale = 1.0 / (ph_ * pw_);
  std::int64_t oi = 0;
  for (int b = 0; b < in_shape_[0]; ++b) {
    for (int c = 0; c < maps; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(b) * maps + c) * h * w;
      for (int oh = 0; oh < h_out; ++oh) {
        for (int ow = 0; ow < w_out; ++ow, ++oi) {
          const double d = dy.data(oi) * scale;
          for (int dh = 0; dh < ph_; ++dh) {
            const std::int64_t row = base + static_cast<std::int64_t>(oh * ph_ + dh) * w;
            for (int dw = 0; dw < pw_; ++dw) dx.data(row + ow * pw_ + dw) += d;
          }
        }
      }
    }
  }
  return dx;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::string name, int in_features, int out_features, Rng& rng)
    : Layer(std::move(name)), in_(in_features), out_(out_features) {
  if (in_features <= 0 || out_features <= 0)
    throw ConfigError(name_ + ": feature counts must be positive");
  weight_ = Param(name_ + ".weight", static_cast<Eigen::Index>(out_) * in_);
  bias_ = Param(name_ + ".bias", out_);
  he_uniform(weight_.value, in_, rng);
}

Tensor Dense::forward(const Tensor& x, bool train) {
  require_ndim(x, 2, name_);
  if (x.dim(1) != in_)
    throw ValidationError(name_ + ": expected " + std::to_string(in_) + " features, got " +
                          shape_str(x.shape));
  mark_forward(train);
  if (train) input_ = x;
  const int batch = x.dim(0);
  Tensor y({batch, out_});
  CMapRM w(weight_.value.data(), out_, in_);
  y.mat(batch, out_).noalias() = x.mat(batch, in_) * w.transpose();
  y.mat(batch, out_).rowwise() += bias_.value.transpose();
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  require_train_forward();
  const int batch = input_.dim(0);
  require_shape(dy, {batch, out_}, name_);
  CMapRM d = dy.mat(batch, out_);
  MapRM dw(weight_.grad.data(), out_, in_);
  dw.noalias() += d.transpose() * input_.mat(batch, in_);
  bias_.grad += d.colwise().sum().transpose();
  Tensor dx({batch, in_});
  CMapRM w(weight_.value.data(), out_, in_);
  dx.mat(batch, in_).noalias() = d * w;
  return dx;
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(std::string name, double p, std::uint64_t seed)
    : Layer(std::move(name)), p_(p), rng_(seed) {
  if (p < 0.0 || p >= 1.0)
    throw ConfigError(name_ + ": dropout probability must be in [0, 1); got " +
                      std::to_string(p));
}

Tensor Dropout::forward(const Tensor& x, bool train) {
  mark_forward(train);
  if (!train || p_ == 0.0) {
    mask_.resize(0);
    return x;
  }
  const double keep = 1.0 - p_;
  mask_.resize(x.size());
  for (Eigen::Index i = 0; i < mask_.size(); ++i)
    mask_(i) = rng_.uniform() < p_ ? 0.0 : 1.0 / keep;
  Tensor y(x.shape);
  y.data = x.data.cwiseProduct(mask_);
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  require_train_forward();
  Tensor dx(dy.shape);
  if (mask_.size() == 0) {
    dx.data = dy.data;
  } else {
    if (dy.size() != mask_.size())
      throw ValidationError(name_ + ": gradient size " + std::to_string(dy.size()) +
                            " does not match mask size " + std::to_string(mask_.size()));
    dx.data = dy.data.cwiseProduct(mask_);
  }
  return dx;
}

// --------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x, bool train) {
  mark_forward(train);
  in_shape_ = x.shape;
  Tensor y({x.dim(0), static_cast<int>(x.size() / x.dim(0))});
  y.data = x.data;
  return y;
}

Tensor Flatten::backward(const Tensor& dy) {
  require_train_forward();
  if (dy.size() != shape_size(in_shape_))
    throw ValidationError(name_ + ": gradient size mismatch");
  Tensor dx(in_shape_);
  dx.data = dy.data;
  return dx;
}

// ----------------------------------------------------------- SeqFromMaps

Tensor SeqFromMaps::forward(const Tensor& x, bool train) {
  require_ndim(x, 4, name_);
  mark_forward(train);
  in_shape_ = x.shape;
  const int batch = x.dim(0), maps = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({batch, w, maps * h});
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < maps; ++c)
      for (int ih = 0; ih < h; ++ih) {
        const double* src =
            x.data.data() + ((static_cast<std::int64_t>(b) * maps + c) * h + ih) * w;
        const int d = c * h + ih;
        for (int t = 0; t < w; ++t)
          y.data((static_cast<std::int64_t>(b) * w + t) * (maps * h) + d) = src[t];
      }
  return y;
}

Tensor SeqFromMaps::backward(const Tensor& dy) {
  require_train_forward();
  const int batch = in_shape_[0], maps = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  require_shape(dy, {batch, w, maps * h}, name_);
  Tensor dx(in_shape_);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < maps; ++c)
      for (int ih = 0; ih < h; ++ih) {
        double* dst = dx.data.data() + ((static_cast<std::int64_t>(b) * maps + c) * h + ih) * w;
        const int d = c * h + ih;
        for (int t = 0; t < w; ++t)
          dst[t] = dy.data((static_cast<std::int64_t>(b) * w + t) * (maps * h) + d);
      }
  return dx;
}

// ------------------------------------------------------------------ Lstm

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Copy step t of a [B, T, D] sequence into a [B, D] matrix.
void step_slice(const Tensor& seq, int t, MatRM& out) {
  const int batch = seq.dim(0), steps = seq.dim(1), d = seq.dim(2);
  out.resize(batch, d);
  for (int b = 0; b < batch; ++b)
    out.row(b) =
        seq.data.segment((static_cast<std::int64_t>(b) * steps + t) * d, d).transpose();
}

}  // namespace

Lstm::Lstm(std::string name, int input_size, std::vector<int> hidden_sizes, Rng& rng)
    : Layer(std::move(name)), input_size_(input_size) {
  if (hidden_sizes.empty()) throw ConfigError(name_ + ": at least one LSTM layer required");
  int in = input_size;
  for (std::size_t l = 0; l < hidden_sizes.size(); ++l) {
    const int hid = hidden_sizes[l];
    if (hid <= 0) throw ConfigError(name_ + ": hidden sizes must be positive");
    Cell cell;
    cell.in = in;
    cell.hidden = hid;
    const std::string prefix = name_ + ".l" + std::to_string(l);
    cell.w_x = Param(prefix + ".w_x", static_cast<Eigen::Index>(4) * hid * in);
    cell.w_h = Param(prefix + ".w_h", static_cast<Eigen::Index>(4) * hid * hid);
    cell.b = Param(prefix + ".bias", static_cast<Eigen::Index>(4) * hid);
    const double limit = 1.0 / std::sqrt(static_cast<double>(hid));
    for (Eigen::Index i = 0; i < cell.w_x.value.size(); ++i)
      cell.w_x.value(i) = rng.uniform(-limit, limit);
    for (Eigen::Index i = 0; i < cell.w_h.value.size(); ++i)
      cell.w_h.value(i) = rng.uniform(-limit, limit);
    cell.b.value.segment(hid, hid).setOnes();  // forget gate
    cells_.push_back(std::move(cell));
    in = hid;
  }
}

std::vector<Param*> Lstm::params() {
  std::vector<Param*> out;
  for (Cell& c : cells_) {
    out.push_back(&c.w_x);
    out.push_back(&c.w_h);
    out.push_back(&c.b);
  }
  return out;
}

Tensor Lstm::forward(const Tensor& x, bool train) {
  require_ndim(x, 3, name_);
  if (x.dim(2) != input_size_)
    throw ValidationError(name_ + ": expected input size " + std::to_string(input_size_) +
                          ", got " + shape_str(x.shape));
  mark_forward(train);
  batch_ = x.dim(0);
  steps_ = x.dim(1);

  Tensor seq = x;
  for (Cell& cell : cells_) {
    cell.input = seq;
    const int hid = cell.hidden;
    cell.i.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.f.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.g.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.o.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.c.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.tanh_c.assign(static_cast<std::size_t>(steps_), MatRM());
    cell.h.assign(static_cast<std::size_t>(steps_) + 1, MatRM());
    cell.h[0] = MatRM::Zero(batch_, hid);
    MatRM c_prev = MatRM::Zero(batch_, hid);

    CMapRM w_x(cell.w_x.value.data(), 4 * hid, cell.in);
    CMapRM w_h(cell.w_h.value.data(), 4 * hid, hid);
    Tensor out({batch_, steps_, hid});
    MatRM x_t;
    for (int t = 0; t < steps_; ++t) {
      step_slice(seq, t, x_t);
      MatRM a = x_t * w_x.transpose() + cell.h[static_cast<std::size_t>(t)] * w_h.transpose();
      a.rowwise() += cell.b.value.transpose();
      auto seg = [&](int k) { return a.middleCols(k * hid, hid); };
      MatRM i_t = seg(0).unaryExpr([](double v) { return sigmoid(v); });
      MatRM f_t = seg(1).unaryExpr([](double v) { return sigmoid(v); });
      MatRM g_t = seg(2).array().tanh().matrix();
      MatRM o_t = seg(3).unaryExpr([](double v) { return sigmoid(v); });
      MatRM c_t = f_t.cwiseProduct(c_prev) + i_t.cwiseProduct(g_t);
      MatRM tc = c_t.array().tanh().matrix();
      MatRM h_t = o_t.cwiseProduct(tc);
      for (int b = 0; b < batch_; ++b)
        out.data.segment((static_cast<std::int64_t>(b) * steps_ + t) * hid, hid) =
            h_t.row(b).transpose();
      const auto ti = static_cast<std::size_t>(t);
      cell.i[ti] = std::move(i_t);
      cell.f[ti] = std::move(f_t);
      cell.g[ti] = std::move(g_t);
      cell.o[ti] = std::move(o_t);
      cell.c[ti] = c_t;
      cell.tanh_c[ti] = std::move(tc);
      cell.h[ti + 1] = std::move(h_t);
      c_prev = std::move(c_t);
    }
    seq = std::move(out);
  }

  // final hidden state of the top layer
  const int hid = cells_.back().hidden;
  Tensor y({batch_, hid});
  y.mat(batch_, hid) = cells_.back().h[static_cast<std::size_t>(steps_)];
  return y;
}

Tensor Lstm::backward(const Tensor& dy) {
  require_train_forward();
  require_shape(dy, {batch_, cells_.back().hidden}, name_);

  // gradient w.r.t. each cell's full output sequence; starts as zeros with
  // only the final step set for the top layer
  Tensor dseq({batch_, steps_, cells_.back().hidden});
  for (int b = 0; b < batch_; ++b)
    dseq.data.segment(
        (static_cast<std::int64_t>(b) * steps_ + (steps_ - 1)) * cells_.back().hidden,
        cells_.back().hidden) = dy.data.segment(static_cast<std::int64_t>(b) *
                                                    cells_.back().hidden,
                                                cells_.back().hidden);

  for (std::size_t li = cells_.size(); li-- > 0;) {
    Cell& cell = cells_[li];
    const int hid = cell.hidden;
    CMapRM w_x(cell.w_x.value.data(), 4 * hid, cell.in);
    CMapRM w_h(cell.w_h.value.data(), 4 * hid, hid);
    MapRM dw_x(cell.w_x.grad.data(), 4 * hid, cell.in);
    MapRM dw_h(cell.w_h.grad.data(), 4 * hid, hid);

    Tensor dx({batch_, steps_, cell.in});
    MatRM dh_next = MatRM::Zero(batch_, hid);
    MatRM dc_next = MatRM::Zero(batch_, hid);
    MatRM x_t, dh(batch_, hid);
    for (int t = steps_ - 1; t >= 0; --t) {
      const auto ti = static_cast<std::size_t>(t);
      for (int b = 0; b < batch_; ++b)
        dh.row(b) = dseq.data.segment((static_cast<std::int64_t>(b) * steps_ + t) * hid, hid)
                        .transpose();
      dh += dh_next;

      const MatRM& i_t = cell.i[ti];
      const MatRM& f_t = cell.f[ti];
      const MatRM& g_t = cell.g[ti];
      const MatRM& o_t = cell.o[ti];
      const MatRM& tc = cell.tanh_c[ti];
      const MatRM c_prev = t > 0 ? cell.c[ti - 1] : MatRM::Zero(batch_, hid);

      MatRM dc = dc_next +
                 dh.cwiseProduct(o_t).cwiseProduct((1.0 - tc.array().square()).matrix());
      MatRM da(batch_, 4 * hid);
      // i, f, g, o pre-activation gradients
      da.middleCols(0, hid) =
          dc.cwiseProduct(g_t).cwiseProduct(i_t.cwiseProduct((1.0 - i_t.array()).matrix()));
      da.middleCols(hid, hid) =
          dc.cwiseProduct(c_prev).cwiseProduct(f_t.cwiseProduct((1.0 - f_t.array()).matrix()));
      da.middleCols(2 * hid, hid) =
          dc.cwiseProduct(i_t).cwiseProduct((1.0 - g_t.array().square()).matrix());
      da.middleCols(3 * hid, hid) =
          dh.cwiseProduct(tc).cwiseProduct(o_t.cwiseProduct((1.0 - o_t.array()).matrix()));

      step_slice(cell.input, t, x_t);
      dw_x.noalias() += da.transpose() * x_t;
      dw_h.noalias() += da.transpose() * cell.h[ti];
      cell.b.grad += da.colwise().sum().transpose();

      MatRM dx_t = da * w_x;
      for (int b = 0; b < batch_; ++b)
        dx.data.segment((static_cast<std::int64_t>(b) * steps_ + t) * cell.in, cell.in) =
            dx_t.row(b).transpose();
      dh_next.noalias() = da * w_h;
      dc_next = dc.cwiseProduct(f_t);
    }
    dseq = std::move(dx);
  }
  return dseq;
}

// ------------------------------------------------------------ Sequential

Tensor Sequential::forward(const Tensor& x, bool train) {
  mark_forward(train);
  Tensor cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    cur = layers_[i]->forward(cur, train);
    if (static_cast<int>(i) == capture_index) captured = cur;
  }
  return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
  require_train_forward();
  Tensor cur = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) cur = layers_[i]->backward(cur);
  return cur;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Param*> Sequential::state() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->state()) out.push_back(p);
  return out;
}

// -------------------------------------------------------- ParallelConcat

Tensor ParallelConcat::forward(const Tensor& x, bool train) {
  if (branches_.empty()) throw ConfigError(name_ + ": no branches");
  mark_forward(train);
  in_shape_ = x.shape;
  const int batch = x.dim(0);
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  branch_shapes_.clear();
  int total = 0;
  for (auto& br : branches_) {
    Tensor y = br->forward(x, train);
    require_ndim(y, 2, name_);
    total += y.dim(1);
    branch_shapes_.push_back(y.shape);
    outs.push_back(std::move(y));
  }
  Tensor y({batch, total});
  int off = 0;
  for (const Tensor& o : outs) {
    const int f = o.dim(1);
    for (int b = 0; b < batch; ++b)
      y.data.segment(static_cast<std::int64_t>(b) * total + off, f) =
          o.data.segment(static_cast<std::int64_t>(b) * f, f);
    off += f;
  }
  return y;
}

Tensor ParallelConcat::backward(const Tensor& dy) {
  require_train_forward();
  const int batch = in_shape_[0];
  int total = 0;
  for (const auto& s : branch_shapes_) total += s[1];
  require_shape(dy, {batch, total}, name_);
  Tensor dx(in_shape_);
  int off = 0;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const int f = branch_shapes_[k][1];
    Tensor slice({batch, f});
    for (int b = 0; b < batch; ++b)
      slice.data.segment(static_cast<std::int64_t>(b) * f, f) =
          dy.data.segment(static_cast<std::int64_t>(b) * total + off, f);
    Tensor dxk = branches_[k]->backward(slice);
    dx.data += dxk.data;
    off += f;
  }
  return dx;
}

std::vector<Param*> ParallelConcat::params() {
  std::vector<Param*> out;
  for (auto& b : branches_)
    for (Param* p : b->params()) out.push_back(p);
  return out;
}

std::vector<Param*> ParallelConcat::state() {
  std::vector<Param*> out;
  for (auto& b : branches_)
    for (Param* p : b->state()) out.push_back(p);
  return out;
}

// ------------------------------------------------------------ softmax/CE

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
    p.row(r) = p.row(r).array().exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size())
    throw ValidationError("cross_entropy: " + std::to_string(probs.rows()) + " rows vs " +
                          std::to_string(labels.size()) + " labels");
  double loss = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= probs.cols())
      throw ValidationError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(probs.cols()) + ")");
    loss -= std::log(std::max(probs(r, y), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

Eigen::MatrixXd softmax_ce_grad(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  Eigen::MatrixXd g = probs;
  for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  return g / static_cast<double>(g.rows());
}

}  // namespace wld
