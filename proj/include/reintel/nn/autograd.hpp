#pragma once

// Small reverse-mode autodiff over Eigen matrices. A Tape owns the nodes of
// one forward graph in creation order; backward() walks them in reverse.
// Only the ops the fusion models need are provided.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "reintel/common.hpp"

namespace reintel::nn {

using Mat = Eigen::MatrixXd;

struct Node {
  Mat value;
  Mat grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
  std::function<void(Node&)> backward_fn;  // pulls grad into inputs
  std::vector<std::shared_ptr<Node>> inputs;

  void accumulate(const Mat& g) {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    grad += g;
  }
};

using NodeRef = std::shared_ptr<Node>;

class Tape {
 public:
  Tape() {
    static std::atomic<std::uint64_t> next_id{1};
    id_ = next_id++;
  }

  // Unique across all tapes ever constructed; parameters use it to register
  // exactly one leaf per graph.
  std::uint64_t id() const { return id_; }

  NodeRef leaf(Mat value, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    nodes_.push_back(n);
    return n;
  }

  NodeRef make(Mat value, std::vector<NodeRef> inputs,
               std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs)
      if (in->requires_grad) { n->requires_grad = true; break; }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    nodes_.push_back(n);
    return n;
  }

  // root must be scalar (1x1)
  void backward(const NodeRef& root) {
    if (root->value.size() != 1) throw Error("backward: root must be scalar");
    root->accumulate(Mat::Ones(1, 1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node& n = **it;
      if (n.grad.size() == 0 || !n.backward_fn) continue;
      n.backward_fn(n);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<NodeRef> nodes_;
  std::uint64_t id_ = 0;
};

// ---- elementwise / structural ops ----

inline NodeRef add(Tape& t, NodeRef a, NodeRef b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw Error("add: shape mismatch");
  return t.make(a->value + b->value, {a, b}, [](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(n.grad);
    if (n.inputs[1]->requires_grad) n.inputs[1]->accumulate(n.grad);
  });
}

inline NodeRef scale(Tape& t, NodeRef a, double s) {
  return t.make(a->value * s, {a}, [s](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(n.grad * s);
  });
}

inline NodeRef matmul(Tape& t, NodeRef a, NodeRef b) {
  if (a->value.cols() != b->value.rows()) throw Error("matmul: shape mismatch");
  return t.make(a->value * b->value, {a, b}, [](Node& n) {
    Node& a = *n.inputs[0];
    Node& b = *n.inputs[1];
    if (a.requires_grad) a.accumulate(n.grad * b.value.transpose());
    if (b.requires_grad) b.accumulate(a.value.transpose() * n.grad);
  });
}

// x: (m x n), bias: (1 x n) broadcast over rows
inline NodeRef add_row_broadcast(Tape& t, NodeRef x, NodeRef bias) {
  if (bias->value.rows() != 1 || bias->value.cols() != x->value.cols())
    throw Error("add_row_broadcast: bias must be 1 x cols(x)");
  Mat v = x->value;
  v.rowwise() += bias->value.row(0);
  return t.make(std::move(v), {x, bias}, [](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(n.grad);
    if (n.inputs[1]->requires_grad)
      n.inputs[1]->accumulate(n.grad.colwise().sum());
  });
}

inline NodeRef relu(Tape& t, NodeRef x) {
  return t.make(x->value.cwiseMax(0.0), {x}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Mat g = n.grad;
    const Mat& v = n.inputs[0]->value;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (v.data()[i] <= 0.0) g.data()[i] = 0.0;
    n.inputs[0]->accumulate(g);
  });
}

inline NodeRef sigmoid(Tape& t, NodeRef x) {
  Mat y = x->value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return t.make(y, {x}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Mat g = n.grad.cwiseProduct(
        n.value.cwiseProduct(Mat::Ones(n.value.rows(), n.value.cols()) - n.value));
    n.inputs[0]->accumulate(g);
  });
}

// Stack 1-row nodes into a (B x C) batch.
inline NodeRef vstack(Tape& t, const std::vector<NodeRef>& rows) {
  if (rows.empty()) throw Error("vstack: empty input");
  const Eigen::Index cols = rows[0]->value.cols();
  Mat v(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->value.rows() != 1 || rows[i]->value.cols() != cols)
      throw Error("vstack: rows must be 1 x C with equal C");
    v.row(static_cast<Eigen::Index>(i)) = rows[i]->value.row(0);
  }
  return t.make(std::move(v), rows, [](Node& n) {
    for (std::size_t i = 0; i < n.inputs.size(); ++i)
      if (n.inputs[i]->requires_grad)
        n.inputs[i]->accumulate(n.grad.row(static_cast<Eigen::Index>(i)));
  });
}

// Concatenate equal-height nodes along columns.
inline NodeRef concat_cols(Tape& t, const std::vector<NodeRef>& parts) {
  if (parts.empty()) throw Error("concat_cols: empty input");
  const Eigen::Index rows = parts[0]->value.rows();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw Error("concat_cols: row count mismatch");
    total += p->value.cols();
  }
  Mat v(rows, total);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.block(0, off, rows, p->value.cols()) = p->value;
    off += p->value.cols();
  }
  return t.make(std::move(v), parts, [rows](Node& n) {
    Eigen::Index off = 0;
    for (auto& in : n.inputs) {
      if (in->requires_grad)
        in->accumulate(n.grad.block(0, off, rows, in->value.cols()));
      off += in->value.cols();
    }
  });
}

// (L x C) -> (1 x L*C), position-major.
inline NodeRef flatten_to_row(Tape& t, NodeRef x) {
  const Eigen::Index L = x->value.rows(), C = x->value.cols();
  Mat v(1, L * C);
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index c = 0; c < C; ++c) v(0, l * C + c) = x->value(l, c);
  return t.make(std::move(v), {x}, [L, C](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Mat g(L, C);
    for (Eigen::Index l = 0; l < L; ++l)
      for (Eigen::Index c = 0; c < C; ++c) g(l, c) = n.grad(0, l * C + c);
    n.inputs[0]->accumulate(g);
  });
}

// ---- sequence ops ----

// 1-D convolution along the row (token) axis with same padding.
// x: (L x Cin), w: (K*Cin x Cout), bias: (1 x Cout). Output (L x Cout).
// Implemented as an im2row patch matrix multiply; the patch matrix is kept
// for the backward pass.
inline NodeRef conv1d_same(Tape& t, NodeRef x, NodeRef w, NodeRef bias, int kernel) {
  const Eigen::Index L = x->value.rows(), cin = x->value.cols();
  if (w->value.rows() != kernel * cin)
    throw Error("conv1d_same: weight rows must be kernel*cin");
  const Eigen::Index cout = w->value.cols();
  if (bias->value.rows() != 1 || bias->value.cols() != cout)
    throw Error("conv1d_same: bias must be 1 x cout");
  const int left = (kernel - 1) / 2;

  auto patches = std::make_shared<Mat>(Mat::Zero(L, kernel * cin));
  for (Eigen::Index l = 0; l < L; ++l)
    for (int k = 0; k < kernel; ++k) {
      Eigen::Index src = l - left + k;
      if (src < 0 || src >= L) continue;
      patches->block(l, static_cast<Eigen::Index>(k) * cin, 1, cin) =
          x->value.row(src);
    }
  Mat v = (*patches) * w->value;
  v.rowwise() += bias->value.row(0);

  return t.make(std::move(v), {x, w, bias},
                [patches, kernel, left, cin, L](Node& n) {
    Node& x = *n.inputs[0];
    Node& w = *n.inputs[1];
    Node& b = *n.inputs[2];
    if (b.requires_grad) b.accumulate(n.grad.colwise().sum());
    if (w.requires_grad) w.accumulate(patches->transpose() * n.grad);
    if (x.requires_grad) {
      Mat dpatch = n.grad * w.value.transpose();  // (L x K*Cin)
      Mat dx = Mat::Zero(L, cin);
      for (Eigen::Index l = 0; l < L; ++l)
        for (int k = 0; k < kernel; ++k) {
          Eigen::Index src = l - left + k;
          if (src < 0 || src >= L) continue;
          dx.row(src) += dpatch.block(l, static_cast<Eigen::Index>(k) * cin, 1, cin);
        }
      x.accumulate(dx);
    }
  });
}

// Max pooling over rows with window == stride; ties resolve to the first
// maximum so the gradient is deterministic.
inline NodeRef maxpool_rows(Tape& t, NodeRef x, int window) {
  const Eigen::Index L = x->value.rows(), C = x->value.cols();
  if (window < 1) throw Error("maxpool_rows: window must be >= 1");
  if (L < window)
    throw Error("maxpool_rows: sequence length " + std::to_string(L) +
                " is shorter than pooling window " + std::to_string(window) +
                "; increase l_max");
  const Eigen::Index P = L / window;
  Mat v(P, C);
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(
      static_cast<std::size_t>(P * C));
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index c = 0; c < C; ++c) {
      Eigen::Index best = p * window;
      for (Eigen::Index l = p * window + 1; l < (p + 1) * window; ++l)
        if (x->value(l, c) > x->value(best, c)) best = l;
      v(p, c) = x->value(best, c);
      (*argmax)[static_cast<std::size_t>(p * C + c)] = best;
    }
  return t.make(std::move(v), {x}, [argmax, C](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Mat dx = Mat::Zero(n.inputs[0]->value.rows(), C);
    for (Eigen::Index p = 0; p < n.grad.rows(); ++p)
      for (Eigen::Index c = 0; c < C; ++c)
        dx((*argmax)[static_cast<std::size_t>(p * C + c)], c) += n.grad(p, c);
    n.inputs[0]->accumulate(dx);
  });
}

// Row-wise softmax (any number of rows).
inline NodeRef softmax_rows(Tape& t, NodeRef x) {
  Mat y = x->value;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    double mx = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  return t.make(std::move(y), {x}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Mat dx(n.value.rows(), n.value.cols());
    for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
      double dot = n.grad.row(r).dot(n.value.row(r));
      dx.row(r) = n.value.row(r).cwiseProduct(
          n.grad.row(r) - Eigen::RowVectorXd::Constant(n.value.cols(), dot));
    }
    n.inputs[0]->accumulate(dx);
  });
}

// Inverted dropout; the mask is sampled at node creation.
inline NodeRef dropout(Tape& t, NodeRef x, double p, std::mt19937_64& eng,
                       bool training) {
  if (p < 0.0 || p >= 1.0) throw Error("dropout: p must be in [0,1)");
  if (!training || p == 0.0) return x;
  auto mask = std::make_shared<Mat>(x->value.rows(), x->value.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - p;
  for (Eigen::Index i = 0; i < mask->size(); ++i)
    mask->data()[i] = u(eng) < keep ? 1.0 / keep : 0.0;
  return t.make(x->value.cwiseProduct(*mask), {x}, [mask](Node& n) {
    if (n.inputs[0]->requires_grad)
      n.inputs[0]->accumulate(n.grad.cwiseProduct(*mask));
  });
}

// Mean binary cross-entropy on logits; numerically stable, and the combined
// backward is just (sigmoid(z) - y) / B.
inline NodeRef bce_with_logits(Tape& t, NodeRef logits, const Mat& targets) {
  if (logits->value.cols() != 1 || targets.cols() != 1 ||
      targets.rows() != logits->value.rows())
    throw Error("bce_with_logits: logits and targets must be B x 1");
  const Eigen::Index B = logits->value.rows();
  double loss = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    double z = logits->value(i, 0), y = targets(i, 0);
    loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
  }
  Mat v(1, 1);
  v(0, 0) = loss / static_cast<double>(B);
  auto y = std::make_shared<Mat>(targets);
  return t.make(std::move(v), {logits}, [y, B](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    const Mat& z = n.inputs[0]->value;
    Mat dz(B, 1);
    for (Eigen::Index i = 0; i < B; ++i)
      dz(i, 0) = (1.0 / (1.0 + std::exp(-z(i, 0))) - (*y)(i, 0)) /
                 static_cast<double>(B);
    n.inputs[0]->accumulate(dz * n.grad(0, 0));
  });
}

}  // namespace reintel::nn
