// Copyright 2026 The LatentWire Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Reverse-mode differentiation over dense tensors.
//
// Every operation goes through a Tape. A recording tape stores each result
// together with a backward rule; backward() walks the nodes once in reverse
// recording order, accumulating into inputs with +=. A non-recording tape
// (Tape(false)) only evaluates, which is what inference uses.

#include <Eigen/Core>
#include <algorithm>
#include <deque>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "latentwire/tensor.hpp"

namespace latentwire::ad {

template <typename Scalar>
class Tape;

// Handle to a value recorded on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Scalar>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape; }
  Index size() const { return value().size(); }
};

template <typename Scalar>
class Tape {
 public:
  using Array = typename Tensor<Scalar>::Array;
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> constant(Tensor<Scalar> value) { return push(std::move(value), false, nullptr); }

  // Leaf bound to a parameter: backward adds this node's gradient into p.grad.
  Var<Scalar> param(Parameter<Scalar>& p) {
    Var<Scalar> v = push(p.value, recording_ && p.trainable, nullptr);
    nodes_[v.id].param = &p;
    return v;
  }

  // Records a result. `rule` is dropped unless the tape records and at
  // least one input requires a gradient.
  Var<Scalar> push(Tensor<Scalar> value, bool requires_grad, Backward rule) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = recording_ && requires_grad;
    if (n.requires_grad) n.backward = std::move(rule);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor<Scalar>& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var<Scalar>& v) const { return nodes_[v.id].requires_grad; }

  // Gradient buffer of a node, zero-initialised on first access.
  Array& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Array::Zero(n.value.size());
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() == nodes_[id].value.size(); }

  void backward(const Var<Scalar>& loss) {
    if (loss.tape != this) throw TapeError("backward: loss belongs to a different tape");
    if (!recording_) throw TapeError("backward: tape is not recording");
    if (consumed_) throw TapeError("backward: tape already consumed by an earlier backward()");
    if (loss.size() != 1) {
      throw TapeError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
    }
    consumed_ = true;
    grad(loss.id)[0] = Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !has_grad(i)) continue;
      if (n.backward) n.backward(*this, i);
      if (n.param != nullptr) {
        if (n.param->grad.size() != n.value.size()) n.param->zero_grad();
        n.param->grad += n.grad;
      }
    }
  }

 private:
  struct Node {
    Tensor<Scalar> value;
    Array grad;
    Backward backward;
    Parameter<Scalar>* param = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // stable references across push()
  bool recording_;
  bool consumed_ = false;
};

namespace detail {

template <typename Scalar>
using ColMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
Tape<Scalar>& same_tape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (a.tape != b.tape) throw TapeError(std::string(op) + ": operands live on different tapes");
  return *a.tape;
}

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Scalar>
void require_rank(const Var<Scalar>& a, std::size_t rank, const char* op, const char* what) {
  if (a.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got shape " + shape_string(a.shape()));
  }
}

// Unary elementwise op with derivative expressed from (input, output).
template <typename Scalar, typename F, typename DF>
Var<Scalar> unary(const Var<Scalar>& a, F f, DF df) {
  Tape<Scalar>& tape = *a.tape;
  const auto& x = a.value();
  Tensor<Scalar> out(x.shape, x.values.unaryExpr(f));
  const std::size_t ia = a.id;
  return tape.push(std::move(out), tape.requires_grad(a), [ia, df](Tape<Scalar>& t, std::size_t self) {
    const auto& xv = t.value(ia).values;
    const auto& yv = t.value(self).values;
    auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (Index i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xv[i], yv[i]);
  });
}

// Convolution geometry shared by conv2d (image -> grid) and its transpose.
struct ConvGeometry {
  Index channels, height, width;  // image
  Index kh, kw, stride, pad;
  Index grid_h, grid_w;           // output grid of the forward convolution

  Index patch() const { return channels * kh * kw; }
  Index positions() const { return grid_h * grid_w; }
};

// cols is column-major (positions x patch): cols[k * P + p].
template <typename Scalar>
void im2col(const Scalar* img, const ConvGeometry& g, Scalar* cols) {
  const Index P = g.positions();
  for (Index c = 0; c < g.channels; ++c)
    for (Index ky = 0; ky < g.kh; ++ky)
      for (Index kx = 0; kx < g.kw; ++kx) {
        Scalar* col = cols + ((c * g.kh + ky) * g.kw + kx) * P;
        for (Index oy = 0; oy < g.grid_h; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          Scalar* dst = col + oy * g.grid_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.grid_w, Scalar(0));
            continue;
          }
          const Scalar* row = img + (c * g.height + iy) * g.width;
          for (Index ox = 0; ox < g.grid_w; ++ox) {
            const Index ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? row[ix] : Scalar(0);
          }
        }
      }
}

// Adjoint of im2col: scatter-add columns back into the image.
template <typename Scalar>
void col2im(const Scalar* cols, const ConvGeometry& g, Scalar* img) {
  const Index P = g.positions();
  for (Index c = 0; c < g.channels; ++c)
    for (Index ky = 0; ky < g.kh; ++ky)
      for (Index kx = 0; kx < g.kw; ++kx) {
        const Scalar* col = cols + ((c * g.kh + ky) * g.kw + kx) * P;
        for (Index oy = 0; oy < g.grid_h; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          Scalar* row = img + (c * g.height + iy) * g.width;
          const Scalar* src = col + oy * g.grid_w;
          for (Index ox = 0; ox < g.grid_w; ++ox) {
            const Index ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.width) row[ix] += src[ox];
          }
        }
      }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic (operands must have identical shapes).

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b, "add");
  detail::require_same_shape(a, b, "add");
  Tensor<Scalar> out(a.shape(), a.value().values + b.value().values);
  const std::size_t ia = a.id, ib = b.id;
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(std::move(out), rg, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
    if (t.requires_grad(ib)) t.grad(ib) += t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b, "sub");
  detail::require_same_shape(a, b, "sub");
  Tensor<Scalar> out(a.shape(), a.value().values - b.value().values);
  const std::size_t ia = a.id, ib = b.id;
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(std::move(out), rg, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
    if (t.requires_grad(ib)) t.grad(ib) -= t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b, "mul");
  detail::require_same_shape(a, b, "mul");
  Tensor<Scalar> out(a.shape(), a.value().values * b.value().values);
  const std::size_t ia = a.id, ib = b.id;
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(std::move(out), rg, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g * t.value(ib).values;
    if (t.requires_grad(ib)) t.grad(ib) += g * t.value(ia).values;
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  Tensor<Scalar> out(a.shape(), a.value().values * s);
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), a.tape->requires_grad(a), [ia, s](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self) * s;
  });
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& a, Scalar s) {
  Tensor<Scalar> out(a.shape(), a.value().values + s);
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), a.tape->requires_grad(a), [ia](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) { return mul(a, b); }
template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& a) { return scale(a, s); }

// ---------------------------------------------------------------------------
// Elementwise nonlinearities.

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return x > Scalar(0) ? x : Scalar(0); },
      [](Scalar x, Scalar) { return x > Scalar(0) ? Scalar(1) : Scalar(0); });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  return detail::unary(
      a,
      [](Scalar x) {
        // Branches keep exp() from overflowing for large |x|.
        if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
        const Scalar e = std::exp(x);
        return e / (Scalar(1) + e);
      },
      [](Scalar, Scalar y) { return y * (Scalar(1) - y); });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& a) {
  return detail::unary(a, [](Scalar x) { return std::exp(x); }, [](Scalar, Scalar y) { return y; });
}

// Natural log; inputs must be positive.
template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& a) {
  return detail::unary(a, [](Scalar x) { return std::log(x); }, [](Scalar x, Scalar) { return Scalar(1) / x; });
}

// Gradient passes only where lo < x < hi.
template <typename Scalar>
Var<Scalar> clamp(const Var<Scalar>& a, Scalar lo, Scalar hi) {
  return detail::unary(
      a, [lo, hi](Scalar x) { return std::clamp(x, lo, hi); },
      [lo, hi](Scalar x, Scalar) { return (x > lo && x < hi) ? Scalar(1) : Scalar(0); });
}

// ---------------------------------------------------------------------------
// Reductions and shape.

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Tensor<Scalar> out = Tensor<Scalar>::scalar(a.value().values.sum());
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), a.tape->requires_grad(a), [ia](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self)[0];
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  const Scalar n = static_cast<Scalar>(a.size());
  Tensor<Scalar> out = Tensor<Scalar>::scalar(a.value().values.sum() / n);
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), a.tape->requires_grad(a), [ia, n](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self)[0] / n;
  });
}

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  Tensor<Scalar> out(std::move(shape), a.value().values);
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), a.tape->requires_grad(a), [ia](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self);
  });
}

// ---------------------------------------------------------------------------
// Linear algebra.

// [m, k] x [k, n] -> [m, n]
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  using RM = detail::RowMat<Scalar>;
  auto& tape = detail::same_tape(a, b, "matmul");
  detail::require_rank(a, 2, "matmul", "lhs");
  detail::require_rank(b, 2, "matmul", "rhs");
  const Index m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor<Scalar> out({m, n});
  Eigen::Map<RM>(out.data(), m, n).noalias() =
      Eigen::Map<const RM>(a.value().data(), m, k) * Eigen::Map<const RM>(b.value().data(), k, n);
  const std::size_t ia = a.id, ib = b.id;
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(std::move(out), rg, [ia, ib, m, k, n](Tape<Scalar>& t, std::size_t self) {
    Eigen::Map<const RM> g(t.grad(self).data(), m, n);
    if (t.requires_grad(ia)) {
      Eigen::Map<RM>(t.grad(ia).data(), m, k).noalias() +=
          g * Eigen::Map<const RM>(t.value(ib).data(), k, n).transpose();
    }
    if (t.requires_grad(ib)) {
      Eigen::Map<RM>(t.grad(ib).data(), k, n).noalias() +=
          Eigen::Map<const RM>(t.value(ia).data(), m, k).transpose() * g;
    }
  });
}

// x [N, in], weight [out, in], bias [out] -> x weight^T + bias
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  using RM = detail::RowMat<Scalar>;
  auto& tape = detail::same_tape(x, weight, "linear");
  detail::same_tape(x, bias, "linear");
  detail::require_rank(x, 2, "linear", "input");
  detail::require_rank(weight, 2, "linear", "weight");
  const Index batch = x.shape()[0], in = x.shape()[1], outf = weight.shape()[0];
  if (weight.shape()[1] != in || bias.shape() != Shape{outf}) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(weight.shape()) + " and bias " + shape_string(bias.shape()));
  }
  Tensor<Scalar> out({batch, outf});
  Eigen::Map<RM> y(out.data(), batch, outf);
  y.noalias() = Eigen::Map<const RM>(x.value().data(), batch, in) *
                Eigen::Map<const RM>(weight.value().data(), outf, in).transpose();
  y.rowwise() += Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(bias.value().data(), outf);
  const std::size_t ix = x.id, iw = weight.id, ib = bias.id;
  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(std::move(out), rg, [ix, iw, ib, batch, in, outf](Tape<Scalar>& t, std::size_t self) {
    Eigen::Map<const RM> g(t.grad(self).data(), batch, outf);
    if (t.requires_grad(ix)) {
      Eigen::Map<RM>(t.grad(ix).data(), batch, in).noalias() +=
          g * Eigen::Map<const RM>(t.value(iw).data(), outf, in);
    }
    if (t.requires_grad(iw)) {
      Eigen::Map<RM>(t.grad(iw).data(), outf, in).noalias() +=
          g.transpose() * Eigen::Map<const RM>(t.value(ix).data(), batch, in);
    }
    if (t.requires_grad(ib)) {
      Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(t.grad(ib).data(), outf) += g.colwise().sum();
    }
  });
}

// ---------------------------------------------------------------------------
// Convolutions. Images are NCHW.

inline Index conv_output_size(Index in, Index kernel, Index stride, Index pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

inline Index conv_transpose_output_size(Index in, Index kernel, Index stride, Index pad) {
  return (in - 1) * stride - 2 * pad + kernel;
}

// x [N, C, H, W], weight [OC, C, KH, KW], bias [OC] -> [N, OC, OH, OW]
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias, Index stride,
                   Index pad) {
  using CM = detail::ColMat<Scalar>;
  auto& tape = detail::same_tape(x, weight, "conv2d");
  detail::same_tape(x, bias, "conv2d");
  detail::require_rank(x, 4, "conv2d", "input");
  detail::require_rank(weight, 4, "conv2d", "weight");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != xs[1] || bias.shape() != Shape{ws[0]} || stride < 1 || pad < 0) {
    throw ShapeError("conv2d: input " + shape_string(xs) + " incompatible with weight " + shape_string(ws) +
                     " and bias " + shape_string(bias.shape()));
  }
  const detail::ConvGeometry geo{xs[1], xs[2], xs[3], ws[2], ws[3], stride, pad,
                                 conv_output_size(xs[2], ws[2], stride, pad),
                                 conv_output_size(xs[3], ws[3], stride, pad)};
  if (geo.grid_h < 1 || geo.grid_w < 1) {
    throw ShapeError("conv2d: kernel " + shape_string(ws) + " larger than padded input " + shape_string(xs));
  }
  const Index batch = xs[0], oc = ws[0], K = geo.patch(), P = geo.positions();
  const Index in_plane = xs[1] * xs[2] * xs[3];

  Tensor<Scalar> out({batch, oc, geo.grid_h, geo.grid_w});
  CM cols(P, K);
  Eigen::Map<const CM> wmat(weight.value().data(), K, oc);
  const auto b = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(bias.value().data(), oc);
  for (Index n = 0; n < batch; ++n) {
    detail::im2col(x.value().data() + n * in_plane, geo, cols.data());
    Eigen::Map<CM> y(out.data() + n * P * oc, P, oc);
    y.noalias() = cols * wmat;
    y.rowwise() += b;
  }

  const std::size_t ix = x.id, iw = weight.id, ib = bias.id;
  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(std::move(out), rg, [ix, iw, ib, geo, batch, oc, K, P, in_plane](Tape<Scalar>& t, std::size_t self) {
    const bool gx = t.requires_grad(ix), gw = t.requires_grad(iw), gb = t.requires_grad(ib);
    Eigen::Map<const CM> wmat(t.value(iw).data(), K, oc);
    const Scalar* g = t.grad(self).data();
    CM cols(P, K);
    for (Index n = 0; n < batch; ++n) {
      Eigen::Map<const CM> gy(g + n * P * oc, P, oc);
      if (gw) {
        detail::im2col(t.value(ix).data() + n * in_plane, geo, cols.data());
        Eigen::Map<CM>(t.grad(iw).data(), K, oc).noalias() += cols.transpose() * gy;
      }
      if (gb) {
        Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(t.grad(ib).data(), oc) += gy.colwise().sum();
      }
      if (gx) {
        cols.noalias() = gy * wmat.transpose();
        detail::col2im(cols.data(), geo, t.grad(ix).data() + n * in_plane);
      }
    }
  });
}

// x [N, IC, H, W], weight [IC, OC, KH, KW], bias [OC] -> [N, OC, OH, OW]
// with OH = (H - 1) * stride - 2 * pad + KH. Adjoint of conv2d in x.
template <typename Scalar>
Var<Scalar> conv2d_transpose(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                             Index stride, Index pad) {
  using CM = detail::ColMat<Scalar>;
  auto& tape = detail::same_tape(x, weight, "conv2d_transpose");
  detail::same_tape(x, bias, "conv2d_transpose");
  detail::require_rank(x, 4, "conv2d_transpose", "input");
  detail::require_rank(weight, 4, "conv2d_transpose", "weight");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[0] != xs[1] || bias.shape() != Shape{ws[1]} || stride < 1 || pad < 0) {
    throw ShapeError("conv2d_transpose: input " + shape_string(xs) + " incompatible with weight " +
                     shape_string(ws) + " and bias " + shape_string(bias.shape()));
  }
  const Index oh = conv_transpose_output_size(xs[2], ws[2], stride, pad);
  const Index ow = conv_transpose_output_size(xs[3], ws[3], stride, pad);
  if (oh < 1 || ow < 1) throw ShapeError("conv2d_transpose: empty output for input " + shape_string(xs));
  const detail::ConvGeometry geo{ws[1], oh, ow, ws[2], ws[3], stride, pad, xs[2], xs[3]};
  const Index batch = xs[0], ic = xs[1], oc = ws[1], K = geo.patch(), P = geo.positions();
  const Index out_plane = oc * oh * ow;

  Tensor<Scalar> out({batch, oc, oh, ow});
  Eigen::Map<const CM> wmat(weight.value().data(), K, ic);
  CM cols(P, K);
  for (Index n = 0; n < batch; ++n) {
    Eigen::Map<const CM> xin(x.value().data() + n * P * ic, P, ic);
    cols.noalias() = xin * wmat.transpose();
    Scalar* y = out.data() + n * out_plane;
    detail::col2im(cols.data(), geo, y);
    for (Index c = 0; c < oc; ++c) {
      Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(y + c * oh * ow, oh * ow) += bias.value().values[c];
    }
  }

  const std::size_t ix = x.id, iw = weight.id, ib = bias.id;
  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(std::move(out), rg, [ix, iw, ib, geo, batch, ic, oc, K, P, out_plane](Tape<Scalar>& t, std::size_t self) {
    const bool gx = t.requires_grad(ix), gw = t.requires_grad(iw), gb = t.requires_grad(ib);
    Eigen::Map<const CM> wmat(t.value(iw).data(), K, ic);
    const Scalar* g = t.grad(self).data();
    const Index plane = geo.height * geo.width;
    CM cols(P, K);
    for (Index n = 0; n < batch; ++n) {
      const Scalar* gy = g + n * out_plane;
      if (gb) {
        for (Index c = 0; c < oc; ++c) {
          t.grad(ib)[c] += Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(gy + c * plane, plane).sum();
        }
      }
      if (!gx && !gw) continue;
      detail::im2col(gy, geo, cols.data());
      if (gx) Eigen::Map<CM>(t.grad(ix).data() + n * P * ic, P, ic).noalias() += cols * wmat;
      if (gw) {
        Eigen::Map<const CM> xin(t.value(ix).data() + n * P * ic, P, ic);
        Eigen::Map<CM>(t.grad(iw).data(), K, ic).noalias() += cols.transpose() * xin;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Batch normalisation over every axis except 1 (channels). Accepts [N, C] or
// [N, C, H, W]. Training mode normalises with batch statistics (biased
// variance) and updates the running statistics with the given momentum
// (unbiased variance); inference mode is the affine map defined by the
// running statistics.

template <typename Scalar>
struct BatchNormOptions {
  bool training = true;
  Scalar momentum = Scalar(0.1);
  Scalar eps = Scalar(1e-5);
};

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Tensor<Scalar>& running_mean, Tensor<Scalar>& running_var,
                       const BatchNormOptions<Scalar>& opt) {
  using Array = typename Tensor<Scalar>::Array;
  auto& tape = detail::same_tape(x, gamma, "batch_norm");
  detail::same_tape(x, beta, "batch_norm");
  const Shape& xs = x.shape();
  if ((xs.size() != 2 && xs.size() != 4)) {
    throw ShapeError("batch_norm: input must be [N, C] or [N, C, H, W], got " + shape_string(xs));
  }
  const Index batch = xs[0], ch = xs[1], inner = xs.size() == 4 ? xs[2] * xs[3] : 1;
  const Shape cshape{ch};
  if (gamma.shape() != cshape || beta.shape() != cshape || running_mean.shape != cshape ||
      running_var.shape != cshape) {
    throw ShapeError("batch_norm: per-channel tensors must have shape " + shape_string(cshape));
  }
  const Index count = batch * inner;
  if (opt.training && count < 2) {
    throw ShapeError("batch_norm: training mode needs more than one value per channel, got input " +
                     shape_string(xs));
  }

  const auto& xv = x.value().values;
  Array mu(ch), inv_std(ch);
  if (opt.training) {
    for (Index c = 0; c < ch; ++c) {
      Scalar s = 0;
      for (Index n = 0; n < batch; ++n) s += xv.segment((n * ch + c) * inner, inner).sum();
      mu[c] = s / count;
      Scalar ss = 0;
      for (Index n = 0; n < batch; ++n) ss += (xv.segment((n * ch + c) * inner, inner) - mu[c]).square().sum();
      const Scalar var = ss / count;
      inv_std[c] = Scalar(1) / std::sqrt(var + opt.eps);
      running_mean.values[c] = (Scalar(1) - opt.momentum) * running_mean.values[c] + opt.momentum * mu[c];
      running_var.values[c] = (Scalar(1) - opt.momentum) * running_var.values[c] +
                              opt.momentum * ss / static_cast<Scalar>(count - 1);
    }
  } else {
    mu = running_mean.values;
    inv_std = (running_var.values + opt.eps).rsqrt();
  }

  Tensor<Scalar> out(xs);
  Array xhat(xv.size());
  const auto& gv = gamma.value().values;
  const auto& bv = beta.value().values;
  for (Index n = 0; n < batch; ++n)
    for (Index c = 0; c < ch; ++c) {
      const Index off = (n * ch + c) * inner;
      xhat.segment(off, inner) = (xv.segment(off, inner) - mu[c]) * inv_std[c];
      out.values.segment(off, inner) = xhat.segment(off, inner) * gv[c] + bv[c];
    }

  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  const bool training = opt.training;
  const bool rg = tape.requires_grad(x) || tape.requires_grad(gamma) || tape.requires_grad(beta);
  return tape.push(std::move(out), rg,
                   [ix, ig, ib, batch, ch, inner, count, training, inv_std, xhat = std::move(xhat)](
                       Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& gv = t.value(ig).values;
    for (Index c = 0; c < ch; ++c) {
      Scalar sum_g = 0, sum_gx = 0;
      for (Index n = 0; n < batch; ++n) {
        const Index off = (n * ch + c) * inner;
        sum_g += g.segment(off, inner).sum();
        sum_gx += (g.segment(off, inner) * xhat.segment(off, inner)).sum();
      }
      if (t.requires_grad(ig)) t.grad(ig)[c] += sum_gx;
      if (t.requires_grad(ib)) t.grad(ib)[c] += sum_g;
      if (!t.requires_grad(ix)) continue;
      auto& gx = t.grad(ix);
      const Scalar k = gv[c] * inv_std[c];
      for (Index n = 0; n < batch; ++n) {
        const Index off = (n * ch + c) * inner;
        if (training) {
          gx.segment(off, inner) +=
              k * (g.segment(off, inner) - sum_g / count - xhat.segment(off, inner) * (sum_gx / count));
        } else {
          gx.segment(off, inner) += k * g.segment(off, inner);
        }
      }
    }
  });
}

}  // namespace latentwire::ad
