#pragma once

// Trainable layers on top of the autodiff tape. A layer owns its parameter
// matrices; each forward pass registers them as graph leaves, and the Adam
// optimizer reads the accumulated gradients back off those leaves.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "reintel/nn/autograd.hpp"

namespace reintel::nn {

struct Param {
  std::string name;
  Mat value;
  Mat adam_m, adam_v;
  NodeRef node;  // leaf registered by the most recent forward pass
  std::uint64_t tape_id = 0;

  void init_moments() {
    adam_m = Mat::Zero(value.rows(), value.cols());
    adam_v = Mat::Zero(value.rows(), value.cols());
  }

  // One leaf per tape: a layer applied several times inside one graph (e.g.
  // per post in a batch) must funnel every gradient contribution into the
  // same node, or the optimizer would see only the last application.
  NodeRef leaf_in(Tape& t) {
    if (!node || tape_id != t.id()) {
      node = t.leaf(value, true);
      tape_id = t.id();
    }
    return node;
  }
};

// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline Mat uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                        std::mt19937_64& eng) {
  double limit = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  std::uniform_real_distribution<double> u(-limit, limit);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(eng);
  return m;
}

class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, Eigen::Index in, Eigen::Index out,
        std::mt19937_64& eng) {
    w.name = name + ".w";
    w.value = uniform_init(in, out, in, eng);
    w.init_moments();
    b.name = name + ".b";
    b.value = Mat::Zero(1, out);
    b.init_moments();
  }

  NodeRef apply(Tape& t, NodeRef x) {
    return add_row_broadcast(t, matmul(t, x, w.leaf_in(t)), b.leaf_in(t));
  }

  Eigen::Index in_dim() const { return w.value.rows(); }
  Eigen::Index out_dim() const { return w.value.cols(); }
  std::vector<Param*> params() { return {&w, &b}; }

  Param w, b;
};

class Conv1dSame {
 public:
  Conv1dSame() = default;
  Conv1dSame(const std::string& name, int kernel, Eigen::Index cin, Eigen::Index cout,
             std::mt19937_64& eng)
      : kernel_(kernel) {
    w.name = name + ".w";
    w.value = uniform_init(kernel * cin, cout, kernel * cin, eng);
    w.init_moments();
    b.name = name + ".b";
    b.value = Mat::Zero(1, cout);
    b.init_moments();
  }

  NodeRef apply(Tape& t, NodeRef x) {
    return conv1d_same(t, x, w.leaf_in(t), b.leaf_in(t), kernel_);
  }

  int kernel() const { return kernel_; }
  Eigen::Index out_channels() const { return w.value.cols(); }
  std::vector<Param*> params() { return {&w, &b}; }

  Param w, b;

 private:
  int kernel_ = 1;
};

// Batch normalization over rows. Training mode normalizes with the batch
// statistics (population variance) and updates the running estimates;
// inference uses the stored running statistics, so the output of one row is
// independent of the rest of the batch.
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  explicit BatchNorm1d(const std::string& name, Eigen::Index channels,
                       double momentum = 0.1, double eps = 1e-5)
      : momentum_(momentum), eps_(eps) {
    gamma.name = name + ".gamma";
    gamma.value = Mat::Ones(1, channels);
    gamma.init_moments();
    beta.name = name + ".beta";
    beta.value = Mat::Zero(1, channels);
    beta.init_moments();
    running_mean = Mat::Zero(1, channels);
    running_var = Mat::Ones(1, channels);
  }

  NodeRef apply(Tape& t, NodeRef x, bool training) {
    gamma.leaf_in(t);
    beta.leaf_in(t);
    const Eigen::Index B = x->value.rows(), C = x->value.cols();
    if (C != gamma.value.cols()) throw Error("batchnorm: channel mismatch");

    Eigen::RowVectorXd mean(C), var(C);
    if (training) {
      mean = x->value.colwise().mean();
      Mat centered = x->value.rowwise() - mean;
      var = centered.cwiseProduct(centered).colwise().mean();
      running_mean = momentum_ * mean + (1.0 - momentum_) * running_mean;
      running_var = momentum_ * var + (1.0 - momentum_) * running_var;
    } else {
      mean = running_mean.row(0);
      var = running_var.row(0);
    }
    Eigen::RowVectorXd inv_std = (var.array() + eps_).rsqrt().matrix();
    Mat centered = x->value.rowwise() - mean;
    auto xhat = std::make_shared<Mat>(
        (centered.array().rowwise() * inv_std.array()).matrix());
    Mat y = (xhat->array().rowwise() * gamma.value.row(0).array()).matrix();
    y.rowwise() += beta.value.row(0);

    auto inv = std::make_shared<Eigen::RowVectorXd>(inv_std);
    return t.make(std::move(y), {x, gamma.node, beta.node},
                  [xhat, inv, training, B](Node& n) {
      Node& x = *n.inputs[0];
      Node& g = *n.inputs[1];
      Node& be = *n.inputs[2];
      if (be.requires_grad) be.accumulate(n.grad.colwise().sum());
      if (g.requires_grad)
        g.accumulate(n.grad.cwiseProduct(*xhat).colwise().sum());
      if (!x.requires_grad) return;
      Mat dxhat = (n.grad.array().rowwise() * g.value.row(0).array()).matrix();
      if (!training) {
        x.accumulate((dxhat.array().rowwise() * inv->array()).matrix());
        return;
      }
      Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
      Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(*xhat).colwise().sum();
      Mat dx = static_cast<double>(B) * dxhat;
      dx.rowwise() -= sum_d;
      dx -= (xhat->array().rowwise() * sum_dx.array()).matrix();
      dx = ((dx.array().rowwise() * inv->array()) / static_cast<double>(B)).matrix();
      x.accumulate(dx);
    });
  }

  std::vector<Param*> params() { return {&gamma, &beta}; }

  Param gamma, beta;
  Mat running_mean, running_var;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (Param* p : params) {
      if (!p->node || p->node->grad.size() == 0) continue;
      const Mat& g = p->node->grad;
      p->adam_m = beta1_ * p->adam_m + (1.0 - beta1_) * g;
      p->adam_v = beta2_ * p->adam_v + (1.0 - beta2_) * g.cwiseProduct(g);
      Mat mhat = p->adam_m / bc1;
      Mat vhat = p->adam_v / bc2;
      p->value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace reintel::nn
