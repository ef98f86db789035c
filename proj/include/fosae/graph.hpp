#pragma once

#include "fosae/common.hpp"

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fosae {

// A trainable weight block. Gradients accumulate into g across a backward
// pass; the optimizer owns zeroing them between steps.
struct Param {
  Param() = default;
  Param(std::string name, Mat w) : name(std::move(name)), w(std::move(w)) {
    g = Mat::Zero(this->w.rows(), this->w.cols());
  }

  std::string name;
  Mat w;
  Mat g;

  void zero_grad() { g.setZero(); }
  Eigen::Index size() const { return w.size(); }
};

namespace detail {

struct Node {
  Mat owned_val;
  const Mat* val = nullptr;  // &owned_val, or an external parameter matrix
  Mat owned_grad;
  Mat* grad = nullptr;  // &owned_grad, or the parameter's accumulator
  bool needs_grad = false;
  std::function<void()> back;
};

}  // namespace detail

// Handle to a value in a Graph. Valid as long as the Graph lives.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(detail::Node* n) : n_(n) {}

  const Mat& value() const { return *n_->val; }
  const Mat& grad() const { return *n_->grad; }
  bool needs_grad() const { return n_->needs_grad; }
  detail::Node* node() const { return n_; }

 private:
  detail::Node* n_ = nullptr;
};

// Dynamic reverse-mode tape over row-major matrices. A fresh Graph is built
// per forward pass; backward() replays the ops in reverse. Single-threaded
// per instance.
class Graph {
 public:
  Tensor input(Mat m) {
    detail::Node* n = make();
    n->owned_val = std::move(m);
    n->val = &n->owned_val;
    return Tensor(n);
  }

  Tensor param(Param& p) {
    detail::Node* n = make();
    n->val = &p.w;
    n->grad = &p.g;
    n->needs_grad = true;
    return Tensor(n);
  }

  // y = x*W + b with b broadcast over rows.
  Tensor linear(Tensor x, Tensor W, Tensor b) {
    const Mat& X = x.value();
    const Mat& Wm = W.value();
    const Mat& B = b.value();
    if (X.cols() != Wm.rows())
      throw dimension_error("linear: input " + shape_str(X) +
                            " does not match weights " + shape_str(Wm));
    if (B.rows() != 1 || B.cols() != Wm.cols())
      throw dimension_error("linear: bias " + shape_str(B) +
                            " does not match weights " + shape_str(Wm));
    detail::Node* n = alloc_op({x, W, b}, X.rows(), Wm.cols());
    n->owned_val.noalias() = X * Wm;
    n->owned_val.rowwise() += B.row(0);
    if (n->needs_grad) {
      auto *xn = x.node(), *wn = W.node(), *bn = b.node();
      n->back = [n, xn, wn, bn] {
        const Mat& dY = *n->grad;
        if (xn->needs_grad) xn->grad->noalias() += dY * wn->val->transpose();
        if (wn->needs_grad) wn->grad->noalias() += xn->val->transpose() * dY;
        if (bn->needs_grad) bn->grad->row(0) += dY.colwise().sum();
      };
    }
    return Tensor(n);
  }

  Tensor relu(Tensor x) {
    const Mat& X = x.value();
    detail::Node* n = alloc_op({x}, X.rows(), X.cols());
    n->owned_val = X.cwiseMax(real(0));
    if (n->needs_grad) {
      auto* xn = x.node();
      n->back = [n, xn] {
        if (!xn->needs_grad) return;
        xn->grad->array() +=
            (xn->val->array() > real(0)).cast<real>() * n->grad->array();
      };
    }
    return Tensor(n);
  }

  Tensor sigmoid(Tensor x) {
    const Mat& X = x.value();
    detail::Node* n = alloc_op({x}, X.rows(), X.cols());
    n->owned_val = X.unaryExpr([](real v) {
      return v >= 0 ? real(1) / (real(1) + std::exp(-v))
                    : std::exp(v) / (real(1) + std::exp(v));
    });
    if (n->needs_grad) {
      auto* xn = x.node();
      n->back = [n, xn] {
        if (!xn->needs_grad) return;
        const Mat& Y = n->owned_val;
        xn->grad->array() +=
            n->grad->array() * Y.array() * (real(1) - Y.array());
      };
    }
    return Tensor(n);
  }

  // Row-wise softmax with max-subtraction.
  Tensor softmax(Tensor x) {
    const Mat& X = x.value();
    if (!X.allFinite())
      throw numeric_error("softmax: non-finite input");
    detail::Node* n = alloc_op({x}, X.rows(), X.cols());
    softmax_rows(X, n->owned_val);
    if (n->needs_grad) {
      auto* xn = x.node();
      n->back = [n, xn] {
        if (!xn->needs_grad) return;
        softmax_backward_rows(n->owned_val, *n->grad, *xn->grad, real(1));
      };
    }
    return Tensor(n);
  }

  // softmax((log_probs + noise)/tau); the continuous relaxation of drawing a
  // categorical sample via argmax(noise + log_probs).
  Tensor gumbel_softmax(Tensor log_probs, const Mat& noise, real tau) {
    if (tau <= real(0))
      throw std::domain_error("gumbel_softmax: tau must be > 0, got " +
                              std::to_string(tau));
    const Mat& X = log_probs.value();
    if (noise.rows() != X.rows() || noise.cols() != X.cols())
      throw dimension_error("gumbel_softmax: noise " + shape_str(noise) +
                            " does not match log_probs " + shape_str(X));
    if (!X.allFinite())
      throw numeric_error("gumbel_softmax: non-finite input");
    detail::Node* n = alloc_op({log_probs}, X.rows(), X.cols());
    Mat scaled = (X + noise) / tau;
    softmax_rows(scaled, n->owned_val);
    if (n->needs_grad) {
      auto* xn = log_probs.node();
      n->back = [n, xn, tau] {
        if (!xn->needs_grad) return;
        softmax_backward_rows(n->owned_val, *n->grad, *xn->grad,
                              real(1) / tau);
      };
    }
    return Tensor(n);
  }

  // Mean over all elements of (pred - target)^2; returns a 1x1 tensor.
  Tensor mse(Tensor pred, const Mat& target) {
    const Mat& P = pred.value();
    if (P.rows() != target.rows() || P.cols() != target.cols())
      throw dimension_error("mse: prediction " + shape_str(P) +
                            " does not match target " + shape_str(target));
    detail::Node* n = alloc_op({pred}, 1, 1);
    const real numel = static_cast<real>(P.size());
    n->owned_val(0, 0) = (P - target).squaredNorm() / numel;
    if (n->needs_grad) {
      auto* pn = pred.node();
      Mat diff = P - target;
      n->back = [n, pn, diff = std::move(diff), numel] {
        if (!pn->needs_grad) return;
        pn->grad->noalias() += (real(2) / numel) * (*n->grad)(0, 0) * diff;
      };
    }
    return Tensor(n);
  }

  // Horizontal concatenation.
  Tensor concat_cols(const std::vector<Tensor>& parts) {
    Eigen::Index rows = parts.front().value().rows(), cols = 0;
    for (const auto& t : parts) {
      if (t.value().rows() != rows)
        throw dimension_error("concat_cols: row mismatch");
      cols += t.value().cols();
    }
    detail::Node* n = alloc_op(parts, rows, cols);
    Eigen::Index off = 0;
    for (const auto& t : parts) {
      n->owned_val.middleCols(off, t.value().cols()) = t.value();
      off += t.value().cols();
    }
    if (n->needs_grad) {
      std::vector<detail::Node*> src;
      for (const auto& t : parts) src.push_back(t.node());
      n->back = [n, src] {
        Eigen::Index off = 0;
        for (auto* s : src) {
          if (s->needs_grad)
            *s->grad += n->grad->middleCols(off, s->val->cols());
          off += s->val->cols();
        }
      };
    }
    return Tensor(n);
  }

  // Vertical concatenation.
  Tensor stack_rows(const std::vector<Tensor>& parts) {
    Eigen::Index cols = parts.front().value().cols(), rows = 0;
    for (const auto& t : parts) {
      if (t.value().cols() != cols)
        throw dimension_error("stack_rows: column mismatch");
      rows += t.value().rows();
    }
    detail::Node* n = alloc_op(parts, rows, cols);
    Eigen::Index off = 0;
    for (const auto& t : parts) {
      n->owned_val.middleRows(off, t.value().rows()) = t.value();
      off += t.value().rows();
    }
    if (n->needs_grad) {
      std::vector<detail::Node*> src;
      for (const auto& t : parts) src.push_back(t.node());
      n->back = [n, src] {
        Eigen::Index off = 0;
        for (auto* s : src) {
          if (s->needs_grad)
            *s->grad += n->grad->middleRows(off, s->val->rows());
          off += s->val->rows();
        }
      };
    }
    return Tensor(n);
  }

  // Per-sample convex mix of object rows: out[b,:] = att[b,:] * X_b where
  // X_b is row b of `objects` viewed as an N x F matrix. `objects` is a
  // constant (the observation batch), so only att receives gradient.
  Tensor mix_objects(Tensor att, const Mat& objects, int num_objects,
                     int num_features) {
    const Mat& A = att.value();
    const Eigen::Index B = A.rows();
    if (objects.rows() != B ||
        objects.cols() != Eigen::Index(num_objects) * num_features)
      throw dimension_error("mix_objects: objects " + shape_str(objects) +
                            " does not match batch/att " + shape_str(A));
    if (A.cols() != num_objects)
      throw dimension_error("mix_objects: att " + shape_str(A) +
                            " must have one column per object");
    detail::Node* n = alloc_op({att}, B, num_features);
    for (Eigen::Index b = 0; b < B; ++b) {
      Eigen::Map<const Mat> xb(objects.row(b).data(), num_objects,
                               num_features);
      n->owned_val.row(b).noalias() = A.row(b) * xb;
    }
    if (n->needs_grad) {
      auto* an = att.node();
      const Mat* obj = &objects;  // outlives the graph by contract
      n->back = [n, an, obj, num_objects, num_features] {
        if (!an->needs_grad) return;
        for (Eigen::Index b = 0; b < n->grad->rows(); ++b) {
          Eigen::Map<const Mat> xb(obj->row(b).data(), num_objects,
                                   num_features);
          an->grad->row(b).noalias() += n->grad->row(b) * xb.transpose();
        }
      };
    }
    return Tensor(n);
  }

  // Assemble the bottleneck from per-predicate truth pairs. Input p holds
  // the two-category outputs for predicate p over all units, rows ordered
  // unit-major (row u*B + b). Output z[b, u*P + p] = parts[p](u*B + b, 0).
  Tensor collect_truth(const std::vector<Tensor>& parts, int batch,
                       int units) {
    const int P = static_cast<int>(parts.size());
    for (const auto& t : parts)
      if (t.value().rows() != Eigen::Index(units) * batch ||
          t.value().cols() != 2)
        throw dimension_error("collect_truth: expected [U*B, 2] parts");
    detail::Node* n = alloc_op(parts, batch, Eigen::Index(units) * P);
    for (int u = 0; u < units; ++u)
      for (int p = 0; p < P; ++p)
        for (int b = 0; b < batch; ++b)
          n->owned_val(b, u * P + p) = parts[p].value()(u * batch + b, 0);
    if (n->needs_grad) {
      std::vector<detail::Node*> src;
      for (const auto& t : parts) src.push_back(t.node());
      n->back = [n, src, batch, units, P] {
        for (int p = 0; p < P; ++p) {
          if (!src[p]->needs_grad) continue;
          for (int u = 0; u < units; ++u)
            for (int b = 0; b < batch; ++b)
              (*src[p]->grad)(u * batch + b, 0) +=
                  (*n->grad)(b, u * P + p);
        }
      };
    }
    return Tensor(n);
  }

  void backward(Tensor loss) {
    if (loss.value().size() != 1)
      throw dimension_error("backward: loss must be scalar, got " +
                            shape_str(loss.value()));
    if (!loss.node()->needs_grad) return;
    (*loss.node()->grad)(0, 0) = real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->back) it->back();
  }

  // Shared forward kernels, also used by the noise-free inference path.
  static void softmax_rows(const Mat& in, Mat& out) {
    out.resize(in.rows(), in.cols());
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      real mx = in.row(r).maxCoeff();
      out.row(r) = (in.row(r).array() - mx).exp();
      out.row(r) /= out.row(r).sum();
    }
  }

 private:
  static void softmax_backward_rows(const Mat& y, const Mat& dy, Mat& dx,
                                    real scale) {
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      real dot = dy.row(r).dot(y.row(r));
      dx.row(r).array() +=
          scale * y.row(r).array() * (dy.row(r).array() - dot);
    }
  }

  detail::Node* make() {
    nodes_.emplace_back();
    return &nodes_.back();
  }

  detail::Node* alloc_op(const std::vector<Tensor>& inputs, Eigen::Index rows,
                         Eigen::Index cols) {
    detail::Node* n = make();
    n->owned_val.resize(rows, cols);
    n->val = &n->owned_val;
    for (const auto& t : inputs) n->needs_grad |= t.node()->needs_grad;
    if (n->needs_grad) {
      n->owned_grad = Mat::Zero(rows, cols);
      n->grad = &n->owned_grad;
    }
    return n;
  }

  std::deque<detail::Node> nodes_;
};

// Convenience free functions mirroring the graph ops on plain matrices.
inline Mat softmax(const Mat& logits) {
  if (!logits.allFinite()) throw numeric_error("softmax: non-finite input");
  Mat out;
  Graph::softmax_rows(logits, out);
  return out;
}

inline Mat gumbel_softmax(const Mat& log_probs, const Mat& noise, real tau) {
  if (tau <= real(0))
    throw std::domain_error("gumbel_softmax: tau must be > 0");
  if (noise.rows() != log_probs.rows() || noise.cols() != log_probs.cols())
    throw dimension_error("gumbel_softmax: noise shape mismatch");
  return softmax((log_probs + noise) / tau);
}

inline Mat relu(const Mat& x) { return x.cwiseMax(real(0)); }

inline Mat sigmoid(const Mat& x) {
  return x.unaryExpr([](real v) {
    return v >= 0 ? real(1) / (real(1) + std::exp(-v))
                  : std::exp(v) / (real(1) + std::exp(v));
  });
}

inline real mse_loss(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw dimension_error("mse_loss: prediction " + shape_str(pred) +
                          " does not match target " + shape_str(target));
  return (pred - target).squaredNorm() / static_cast<real>(pred.size());
}

// Gumbel(0,1) noise matrix.
inline Mat gumbel_noise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat g(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      g(r, c) = static_cast<real>(rng.gumbel());
  return g;
}

}  // namespace fosae
