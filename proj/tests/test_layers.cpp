#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "wldecode/errors.hpp"
#include "wldecode/layers.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/tensor.hpp"

using namespace wld;

namespace {

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-6);
}

Tensor random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data(i) = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of every input element and every parameter
// element against the analytic backward pass. Loss is a fixed random
// projection of the layer output so all output elements contribute.
double fd_worst(Layer& layer, Tensor x, std::uint64_t seed) {
  Rng rng(seed);
  Tensor y0 = layer.forward(x, true);
  Eigen::VectorXd proj(y0.data.size());
  for (Eigen::Index i = 0; i < proj.size(); ++i) proj(i) = rng.uniform(-1.0, 1.0);

  for (Param* p : layer.params()) p->grad.setZero();
  Tensor dy(y0.shape);
  dy.data = proj;
  Tensor dx = layer.backward(dy);
  std::vector<Eigen::VectorXd> param_grads;
  for (Param* p : layer.params()) param_grads.push_back(p->grad);

  auto loss = [&]() {
    Tensor y = layer.forward(x, true);
    return y.data.dot(proj);
  };

  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.data.size(); ++i) {
    const double v = x.data(i);
    x.data(i) = v + kH;
    const double lp = loss();
    x.data(i) = v - kH;
    const double lm = loss();
    x.data(i) = v;
    worst = std::max(worst, rel_err(dx.data(i), (lp - lm) / (2.0 * kH)));
  }
  std::size_t pi = 0;
  for (Param* p : layer.params()) {
    const Eigen::VectorXd& g = param_grads[pi++];
    for (Eigen::Index j = 0; j < p->value.size(); ++j) {
      const double v = p->value(j);
      p->value(j) = v + kH;
      const double lp = loss();
      p->value(j) = v - kH;
      const double lm = loss();
      p->value(j) = v;
      worst = std::max(worst, rel_err(g(j), (lp - lm) / (2.0 * kH)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("conv gradients, same padding") {
  Rng rng(11);
  Conv2d conv("c", 3, 4, 3, 3, Conv2d::Pad::same, rng);
  CHECK(fd_worst(conv, random_tensor({2, 3, 5, 6}, rng), 12) < kTol);
}

TEST_CASE("conv gradients, even kernel pads asymmetrically") {
  Rng rng(21);
  Conv2d conv("c", 2, 3, 1, 4, Conv2d::Pad::same, rng);
  Tensor x = random_tensor({2, 2, 4, 5}, rng);
  Tensor y = conv.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 3, 4, 5});
  CHECK(fd_worst(conv, x, 22) < kTol);
}

TEST_CASE("conv gradients, valid padding") {
  Rng rng(31);
  Conv2d conv("c", 3, 4, 3, 2, Conv2d::Pad::valid, rng);
  Tensor x = random_tensor({2, 3, 6, 5}, rng);
  Tensor y = conv.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 4, 4, 4});
  CHECK(fd_worst(conv, x, 32) < kTol);
}

TEST_CASE("conv gradients, same-padded kernel wider than the input") {
  Rng rng(46);
  Conv2d conv("c", 2, 3, 1, 7, Conv2d::Pad::same, rng);
  Tensor x = random_tensor({2, 2, 2, 3}, rng);
  Tensor y = conv.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 3, 2, 3});
  CHECK(fd_worst(conv, x, 47) < kTol);
}

TEST_CASE("conv gradients, grouped") {
  Rng rng(41);
  Conv2d conv("c", 4, 8, 2, 3, Conv2d::Pad::same, rng, 4);
  CHECK(fd_worst(conv, random_tensor({2, 4, 5, 4}, rng), 42) < kTol);
}

TEST_CASE("conv gradients, full-height spatial kernel") {
  Rng rng(51);
  Conv2d conv("c", 2, 3, 5, 1, Conv2d::Pad::valid, rng);
  Tensor x = random_tensor({2, 2, 5, 4}, rng);
  Tensor y = conv.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 3, 1, 4});
  CHECK(fd_worst(conv, x, 52) < kTol);
}

TEST_CASE("conv rejects bad group counts and undersized input") {
  Rng rng(61);
  CHECK_THROWS_AS(Conv2d("c", 3, 4, 2, 2, Conv2d::Pad::same, rng, 2), ConfigError);
  Conv2d conv("c", 1, 2, 4, 4, Conv2d::Pad::valid, rng);
  Tensor small({1, 1, 3, 3});
  CHECK_THROWS_AS(conv.forward(small, false), ValidationError);
  Tensor wrong_maps({1, 2, 8, 8});
  CHECK_THROWS_AS(conv.forward(wrong_maps, false), ValidationError);
}

TEST_CASE("batch-norm gradients") {
  Rng rng(71);
  BatchNorm2d bn("bn", 3);
  // non-unit gamma/beta so their gradients are exercised off the init point
  for (Param* p : bn.params())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) += rng.uniform(-0.3, 0.3);
  CHECK(fd_worst(bn, random_tensor({4, 3, 2, 3}, rng), 72) < kTol);
}

TEST_CASE("batch-norm train-mode output is standardized") {
  Rng rng(81);
  BatchNorm2d bn("bn", 2);
  Tensor x = random_tensor({4, 2, 3, 3}, rng, -2.0, 5.0);
  Tensor y = bn.forward(x, true);
  const int plane = 9, batch = 4;
  for (int c = 0; c < 2; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < plane; ++i) {
        const double v = y.data((b * 2 + c) * plane + i);
        sum += v;
        sq += v * v;
      }
    const double n = batch * plane;
    CHECK(std::abs(sum / n) < 1e-10);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batch-norm inference uses running statistics") {
  Rng rng(91);
  BatchNorm2d bn("bn", 1);
  Tensor x({2, 1, 1, 2});
  x.data << 1.0, 3.0, 5.0, 7.0;  // mean 4, biased var 5
  bn.forward(x, true);
  std::vector<Param*> st = bn.state();
  REQUIRE(st.size() == 2);
  CHECK(st[0]->value(0) == doctest::Approx(0.4));          // 0.9*0 + 0.1*4
  CHECK(st[1]->value(0) == doctest::Approx(0.9 + 0.1 * 5.0 * 4.0 / 3.0));
  Tensor probe({1, 1, 1, 1});
  probe.data << 2.0;
  Tensor y = bn.forward(probe, false);
  const double expect = (2.0 - st[0]->value(0)) / std::sqrt(st[1]->value(0) + 1e-5);
  CHECK(y.data(0) == doctest::Approx(expect));
}

TEST_CASE("elu gradients and fixed points") {
  Rng rng(101);
  Elu elu("e");
  CHECK(fd_worst(elu, random_tensor({2, 3, 4}, rng), 102) < kTol);

  Tensor x({3});
  x.data << 0.0, 1.0, -30.0;
  Tensor y = elu.forward(x, false);
  CHECK(y.data(0) == 0.0);
  CHECK(y.data(1) == 1.0);
  CHECK(y.data(2) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("max-pool gradients route to the argmax") {
  Rng rng(111);
  MaxPool2d pool("p", 2, 2);
  CHECK(fd_worst(pool, random_tensor({2, 3, 4, 6}, rng), 112) < kTol);

  Tensor x({1, 1, 2, 2});
  x.data << 1.0, 4.0, 2.0, 3.0;
  Tensor y = pool.forward(x, true);
  CHECK(y.data(0) == 4.0);
  Tensor dy({1, 1, 1, 1});
  dy.data << 2.5;
  Tensor dx = pool.backward(dy);
  CHECK(dx.data(0) == 0.0);
  CHECK(dx.data(1) == 2.5);
  CHECK(dx.data(2) == 0.0);
  CHECK(dx.data(3) == 0.0);
}

TEST_CASE("pooling drops the remainder columns") {
  Rng rng(121);
  MaxPool2d pool("p", 1, 3);
  Tensor x = random_tensor({1, 2, 2, 7}, rng);
  Tensor y = pool.forward(x, true);
  CHECK(y.shape == std::vector<int>{1, 2, 2, 2});
  CHECK(fd_worst(pool, x, 122) < kTol);

  AvgPool2d apool("a", 3, 3);
  Tensor tiny({1, 1, 2, 2});
  CHECK_THROWS_AS(apool.forward(tiny, false), ValidationError);
}

TEST_CASE("avg-pool gradients") {
  Rng rng(131);
  AvgPool2d pool("p", 2, 2);
  CHECK(fd_worst(pool, random_tensor({2, 2, 4, 4}, rng), 132) < kTol);

  Tensor x({1, 1, 2, 2});
  x.data << 1.0, 2.0, 3.0, 6.0;
  Tensor y = pool.forward(x, false);
  CHECK(y.data(0) == doctest::Approx(3.0));
}

TEST_CASE("dense gradients") {
  Rng rng(141);
  Dense fc("fc", 5, 4, rng);
  CHECK(fd_worst(fc, random_tensor({3, 5}, rng), 142) < kTol);

  Tensor bad({3, 6});
  CHECK_THROWS_WITH_AS(fc.forward(bad, false),
                       doctest::Contains("expected 5 features"), ValidationError);
}

TEST_CASE("lstm gradients, single layer") {
  Rng rng(151);
  Lstm lstm("l", 3, {5}, rng);
  CHECK(fd_worst(lstm, random_tensor({2, 4, 3}, rng), 152) < kTol);
}

TEST_CASE("lstm gradients, stacked") {
  Rng rng(161);
  Lstm lstm("l", 2, {3, 4}, rng);
  Tensor x = random_tensor({2, 3, 2}, rng);
  Tensor y = lstm.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 4});
  CHECK(fd_worst(lstm, x, 162) < kTol);
}

TEST_CASE("lstm parameter count and forget-gate bias") {
  Rng rng(171);
  Lstm lstm("l", 7, {5, 3}, rng);
  std::vector<Param*> ps = lstm.params();
  REQUIRE(ps.size() == 6);
  Eigen::Index total = 0;
  for (Param* p : ps) total += p->value.size();
  CHECK(total == 4 * 5 * (7 + 5 + 1) + 4 * 3 * (5 + 3 + 1));
  // bias layout i,f,g,o: forget block starts at ones
  const Eigen::VectorXd& b0 = ps[2]->value;
  CHECK(b0.segment(0, 5).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b0.segment(5, 5).minCoeff() == 1.0);
  CHECK(b0.segment(5, 5).maxCoeff() == 1.0);
}

TEST_CASE("sequence adapter gradients and layout") {
  Rng rng(181);
  SeqFromMaps seq("s");
  Tensor x = random_tensor({2, 3, 2, 4}, rng);
  Tensor y = seq.forward(x, true);
  CHECK(y.shape == std::vector<int>{2, 4, 6});
  // y[b, t, c*H + h] == x[b, c, h, t]
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < 2; ++h)
        for (int t = 0; t < 4; ++t)
          CHECK(y.data((b * 4 + t) * 6 + c * 2 + h) ==
                x.data(((b * 3 + c) * 2 + h) * 4 + t));
  CHECK(fd_worst(seq, x, 182) < kTol);
}

TEST_CASE("flatten round trip") {
  Rng rng(191);
  Flatten fl("f");
  Tensor x = random_tensor({2, 3, 2, 2}, rng);
  Tensor y = fl.forward(x, true);
  CHECK(y.shape == std::vector<int>{2, 12});
  Tensor dx = fl.backward(y);
  CHECK(dx.shape == x.shape);
  CHECK((dx.data - x.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sequential composite gradients") {
  Rng rng(201);
  Sequential net("net");
  net.add(std::make_unique<Conv2d>("c1", 1, 3, 3, 3, Conv2d::Pad::same, rng));
  net.add(std::make_unique<BatchNorm2d>("b1", 3));
  net.add(std::make_unique<Elu>("e1"));
  net.add(std::make_unique<MaxPool2d>("p1", 2, 2));
  net.add(std::make_unique<Flatten>("f1"));
  net.add(std::make_unique<Dense>("fc", 3 * 2 * 3, 4, rng));
  CHECK(fd_worst(net, random_tensor({3, 1, 4, 6}, rng), 202) < kTol);
}

TEST_CASE("sequential captures an intermediate output") {
  Rng rng(211);
  Sequential net("net");
  net.add(std::make_unique<Elu>("e1"));
  net.add(std::make_unique<Flatten>("f1"));
  net.capture_index = 0;
  Tensor x = random_tensor({2, 1, 2, 2}, rng);
  Tensor y = net.forward(x, false);
  CHECK(net.captured.shape == std::vector<int>{2, 1, 2, 2});
  CHECK((net.captured.data - y.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parallel branch concat gradients") {
  Rng rng(221);
  ParallelConcat par("par");
  auto a = std::make_unique<Sequential>("a");
  a->add(std::make_unique<Conv2d>("ac", 2, 2, 1, 1, Conv2d::Pad::valid, rng));
  a->add(std::make_unique<Flatten>("af"));
  auto b = std::make_unique<Sequential>("b");
  b->add(std::make_unique<Flatten>("bf"));
  b->add(std::make_unique<Dense>("bd", 2 * 3 * 2, 5, rng));
  par.add(std::move(a));
  par.add(std::move(b));
  Tensor x = random_tensor({2, 2, 3, 2}, rng);
  Tensor y = par.forward(x, false);
  CHECK(y.shape == std::vector<int>{2, 2 * 3 * 2 + 5});
  CHECK(fd_worst(par, x, 222) < kTol);
}

TEST_CASE("softmax cross-entropy gradients") {
  Rng rng(231);
  Eigen::MatrixXd logits(4, 3);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = rng.uniform(-2.0, 2.0);
  std::vector<int> labels = {0, 2, 1, 2};

  Eigen::MatrixXd g = softmax_ce_grad(softmax_rows(logits), labels);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double v = logits(i);
    logits(i) = v + kH;
    const double lp = cross_entropy(softmax_rows(logits), labels);
    logits(i) = v - kH;
    const double lm = cross_entropy(softmax_rows(logits), labels);
    logits(i) = v;
    worst = std::max(worst, rel_err(g(i), (lp - lm) / (2.0 * kH)));
  }
  CHECK(worst < kTol);
}

TEST_CASE("softmax of uniform logits is uniform") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
  Eigen::MatrixXd p = softmax_rows(z);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(1.0 / 3.0));
  Eigen::MatrixXd big(1, 3);
  big << 1000.0, 998.0, 990.0;
  Eigen::MatrixXd q = softmax_rows(big);
  CHECK(q.row(0).sum() == doctest::Approx(1.0));
  CHECK(std::isfinite(q.maxCoeff()));
}

TEST_CASE("cross-entropy validates labels") {
  Eigen::MatrixXd p = softmax_rows(Eigen::MatrixXd::Zero(2, 3));
  std::vector<int> bad_count = {0};
  CHECK_THROWS_AS(cross_entropy(p, bad_count), ValidationError);
  std::vector<int> bad_label = {0, 3};
  CHECK_THROWS_AS(cross_entropy(p, bad_label), ValidationError);
}

TEST_CASE("backward without a training forward is rejected") {
  Rng rng(241);
  BatchNorm2d bn("bn", 2);
  Tensor dy({1, 2, 1, 1});
  CHECK_THROWS_WITH_AS(bn.backward(dy), doctest::Contains("no forward"), ValidationError);
  Tensor x = random_tensor({2, 2, 2, 2}, rng);
  bn.forward(x, false);
  CHECK_THROWS_WITH_AS(bn.backward(dy), doctest::Contains("inference"), ValidationError);
  bn.forward(x, true);
  Tensor ok({2, 2, 2, 2});
  CHECK_NOTHROW(bn.backward(ok));
}

TEST_CASE("dropout masks in training and passes through at inference") {
  Rng rng(251);
  Dropout drop("d", 0.5, 99);
  Tensor x({1, 2000});
  x.data.setOnes();
  Tensor y = drop.forward(x, true);
  int zeros = 0;
  for (Eigen::Index i = 0; i < y.data.size(); ++i) {
    if (y.data(i) == 0.0)
      ++zeros;
    else
      CHECK(y.data(i) == doctest::Approx(2.0));
  }
  CHECK(zeros > 800);
  CHECK(zeros < 1200);

  Tensor dy({1, 2000});
  dy.data.setOnes();
  Tensor dx = drop.backward(dy);
  CHECK((dx.data - y.data).cwiseAbs().maxCoeff() == 0.0);  // same mask, same scale

  Tensor yi = drop.forward(x, false);
  CHECK((yi.data - x.data).cwiseAbs().maxCoeff() == 0.0);

  Dropout twin("d2", 0.5, 99);
  Tensor y2 = twin.forward(x, true);
  Dropout other("d3", 0.5, 100);
  Tensor y3 = other.forward(x, true);
  CHECK((y2.data - y.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((y3.data - y.data).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(Dropout("bad", 1.0, 1), ConfigError);
  CHECK_THROWS_AS(Dropout("bad", -0.1, 1), ConfigError);
}

TEST_CASE("he initialization stays inside its bound") {
  Rng rng(261);
  Eigen::VectorXd v(4000);
  he_uniform(v, 50, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  CHECK(v.maxCoeff() <= limit);
  CHECK(v.minCoeff() >= -limit);
  CHECK(v.maxCoeff() > 0.8 * limit);
  CHECK(v.minCoeff() < -0.8 * limit);
  CHECK(std::abs(v.mean()) < 0.02);
}
