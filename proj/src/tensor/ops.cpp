// Copyright 2026 The pdan Authors
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

#include "tensor/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pdan::tensor {
namespace {

template <class Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MapM = Eigen::Map<RowMat<Real>>;
template <class Real>
using MapCM = Eigen::Map<const RowMat<Real>>;

void dim_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::kDimension,
       std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    fail(ErrorKind::kDimension, std::string(op) + ": expected rank " + std::to_string(rank) +
                                    " tensor, got " + shape_str(s));
  }
}

std::uint64_t hash_mask(const std::vector<bool>& mask) {
  std::uint64_t h = 0x51ed27d1ULL ^ mask.size();
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    word = (word << 1) | (mask[i] ? 1u : 0u);
    if ((i & 63) == 63) {
      h = mix64(h ^ word);
      word = 0;
    }
  }
  return mix64(h ^ word);
}

std::uint64_t hash_indices(std::span<const std::size_t> idx) {
  std::uint64_t h = 0x2545f491ULL ^ idx.size();
  for (std::size_t v : idx) h = mix64(h ^ v);
  return h;
}

}  // namespace

namespace kernels {

template <class Real>
void gemm(const Real* a, const Real* b, Real* out, std::size_t m, std::size_t k, std::size_t n,
          bool add) {
  MapCM<Real> A(a, m, k);
  MapCM<Real> B(b, k, n);
  MapM<Real> C(out, m, n);
  if (add) {
    C.noalias() += A * B;
  } else {
    C.noalias() = A * B;
  }
}

}  // namespace kernels

template <class Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require_rank("linear", xs, 2);
  require_rank("linear", ws, 2);
  if (xs[1] != ws[0]) dim_error("linear", xs, ws);
  if (bias.numel() != ws[1]) dim_error("linear(bias)", ws, bias.shape());
  const std::size_t n = xs[0], cin = ws[0], cout = ws[1];

  Tensor<Real> out({n, cout});
  MapM<Real> O(out.data().data(), n, cout);
  O.noalias() = MapCM<Real>(x.value().data().data(), n, cin) *
                MapCM<Real>(weight.value().data().data(), cin, cout);
  const Real* b = bias.value().data().data();
  for (std::size_t t = 0; t < n; ++t) {
    Real* row = out.data().data() + t * cout;
    for (std::size_t j = 0; j < cout; ++j) row[j] += b[j];
  }

  return x.tape().record(std::move(out), {x, weight, bias},
                         [x, weight, bias, n, cin, cout](Tape<Real>& tape, std::span<const Real> g, const Tensor<Real>&) {
    const Real* gp = g.data();
    if (tape.needs_grad(bias)) {
      auto gb = tape.grad_of(bias);
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < cout; ++j) gb[j] += gp[t * cout + j];
    }
    const bool need_x = tape.needs_grad(x);
    const bool need_w = tape.needs_grad(weight);
    if (!need_x && !need_w) return;

    std::size_t nnz = 0;
    for (std::size_t i = 0; i < n * cout; ++i) nnz += gp[i] != Real(0);

    const Real* xv = tape.value(x).data().data();
    const Real* wv = tape.value(weight).data().data();
    if (nnz * 16 < n * cout) {
      // Max-pooled upstream gradients are very sparse; skip the dense GEMMs.
      Real* gx = need_x ? tape.grad_of(x).data() : nullptr;
      Real* gw = need_w ? tape.grad_of(weight).data() : nullptr;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < cout; ++j) {
          const Real gv = gp[t * cout + j];
          if (gv == Real(0)) continue;
          if (gx) {
            Real* row = gx + t * cin;
            for (std::size_t i = 0; i < cin; ++i) row[i] += gv * wv[i * cout + j];
          }
          if (gw) {
            const Real* xr = xv + t * cin;
            for (std::size_t i = 0; i < cin; ++i) gw[i * cout + j] += gv * xr[i];
          }
        }
      }
      return;
    }
    MapCM<Real> G(gp, n, cout);
    if (need_x) {
      MapM<Real>(tape.grad_of(x).data(), n, cin).noalias() +=
          G * MapCM<Real>(wv, cin, cout).transpose();
    }
    if (need_w) {
      MapM<Real>(tape.grad_of(weight).data(), cin, cout).noalias() +=
          MapCM<Real>(xv, n, cin).transpose() * G;
    }
  });
}

template <class Real>
Var<Real> linear_relu_max(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                          std::size_t groups) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require_rank("linear_relu_max", xs, 2);
  require_rank("linear_relu_max", ws, 2);
  if (xs[1] != ws[0]) dim_error("linear_relu_max", xs, ws);
  if (bias.numel() != ws[1]) dim_error("linear_relu_max(bias)", ws, bias.shape());
  require(groups > 0 && xs[0] % groups == 0 && xs[0] > 0, ErrorKind::kDimension,
          "linear_relu_max: " + std::to_string(xs[0]) + " rows do not split into " + std::to_string(groups) +
              " groups");
  const std::size_t rows = xs[0] / groups, cin = ws[0], cout = ws[1];

  Tensor<Real> out({groups, cout});
  std::vector<std::uint32_t> arg(groups * cout, 0);
  RowMat<Real> block(rows, cout);
  MapCM<Real> W(weight.value().data().data(), cin, cout);
  const Real* b = bias.value().data().data();
  for (std::size_t gi = 0; gi < groups; ++gi) {
    block.noalias() = MapCM<Real>(x.value().data().data() + gi * rows * cin, rows, cin) * W;
    Real* o = out.data().data() + gi * cout;
    std::uint32_t* a = arg.data() + gi * cout;
    for (std::size_t j = 0; j < cout; ++j) o[j] = block(0, j);
    for (std::size_t t = 1; t < rows; ++t) {
      const Real* r = block.data() + t * cout;
      for (std::size_t j = 0; j < cout; ++j) {
        if (r[j] > o[j]) {
          o[j] = r[j];
          a[j] = static_cast<std::uint32_t>(t);
        }
      }
    }
    for (std::size_t j = 0; j < cout; ++j) o[j] = std::max(o[j] + b[j], Real(0));
  }
  Tape<Real>& tape = x.tape();
  if (tape.tracks_branches()) {
    std::vector<std::size_t> sig(arg.begin(), arg.end());
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = 2 * sig[i] + (out.data()[i] > Real(0) ? 1 : 0);
    tape.note_branch(hash_indices(sig));
  }

  return tape.record(std::move(out), {x, weight, bias},
                     [x, weight, bias, arg = std::move(arg), groups, rows, cin, cout](
                         Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>& y) {
    const bool need_x = tp.needs_grad(x);
    const bool need_w = tp.needs_grad(weight);
    const bool need_b = tp.needs_grad(bias);
    Real* gx = need_x ? tp.grad_of(x).data() : nullptr;
    Real* gw = need_w ? tp.grad_of(weight).data() : nullptr;
    Real* gb = need_b ? tp.grad_of(bias).data() : nullptr;
    const Real* xv = tp.value(x).data().data();
    const Real* wv = tp.value(weight).data().data();
    for (std::size_t gi = 0; gi < groups; ++gi) {
      for (std::size_t j = 0; j < cout; ++j) {
        const std::size_t o = gi * cout + j;
        const Real gv = g[o];
        if (gv == Real(0) || !(y.data()[o] > Real(0))) continue;
        const std::size_t t = gi * rows + arg[o];
        if (gb) gb[j] += gv;
        if (gx) {
          Real* row = gx + t * cin;
          for (std::size_t i = 0; i < cin; ++i) row[i] += gv * wv[i * cout + j];
        }
        if (gw) {
          const Real* xr = xv + t * cin;
          for (std::size_t i = 0; i < cin; ++i) gw[i * cout + j] += gv * xr[i];
        }
      }
    }
  });
}

template <class Real>
Var<Real> activation(const Var<Real>& x, Activation kind) {
  const auto& xv = x.value();
  Tensor<Real> out(xv.shape());
  auto o = out.data();
  auto in = xv.data();
  Tape<Real>& tape = x.tape();
  if (kind == Activation::kRelu) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > Real(0) ? in[i] : Real(0);
    if (tape.tracks_branches()) {
      std::vector<bool> mask(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) mask[i] = in[i] > Real(0);
      tape.note_branch(hash_mask(mask));
    }
    return tape.record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
      auto gx = tp.grad_of(x);
      auto xin = tp.value(x).data();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xin[i] > Real(0)) gx[i] += g[i];
    });
  }
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = Real(1) / (Real(1) + std::exp(-in[i]));
  return tape.record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>& y) {
    auto gx = tp.grad_of(x);
    auto yv = y.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (Real(1) - yv[i]);
  });
}

template <class Real>
Var<Real> reduce(const Var<Real>& x, std::size_t axis, ReduceKind kind, std::vector<std::size_t>* argmax) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    fail(ErrorKind::kDimension, "reduce: axis " + std::to_string(axis) + " invalid for shape " + shape_str(s));
  }
  const std::size_t len = s[axis];
  require(len > 0, ErrorKind::kDimension, "reduce: empty axis in shape " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape os;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) os.push_back(s[i]);

  Tensor<Real> out(os);
  auto in = x.value().data();
  auto o = out.data();
  Tape<Real>& tape = x.tape();

  if (kind == ReduceKind::kMax) {
    std::vector<std::size_t> arg(outer * inner, 0);
    for (std::size_t a = 0; a < outer; ++a) {
      for (std::size_t c = 0; c < inner; ++c) {
        const Real* base = in.data() + a * len * inner + c;
        Real best = base[0];
        std::size_t bi = 0;
        for (std::size_t l = 1; l < len; ++l) {
          if (base[l * inner] > best) {
            best = base[l * inner];
            bi = l;
          }
        }
        o[a * inner + c] = best;
        arg[a * inner + c] = bi;
      }
    }
    if (tape.tracks_branches()) tape.note_branch(hash_indices(arg));
    if (argmax) *argmax = arg;
    return tape.record(std::move(out), {x},
                       [x, arg = std::move(arg), len, inner](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
      auto gx = tp.grad_of(x);
      for (std::size_t r = 0; r < g.size(); ++r) {
        const std::size_t a = r / inner, c = r % inner;
        gx[a * len * inner + arg[r] * inner + c] += g[r];
      }
    });
  }

  for (std::size_t a = 0; a < outer; ++a) {
    for (std::size_t c = 0; c < inner; ++c) {
      const Real* base = in.data() + a * len * inner + c;
      Real acc = 0;
      for (std::size_t l = 0; l < len; ++l) acc += base[l * inner];
      o[a * inner + c] = kind == ReduceKind::kMean ? acc / static_cast<Real>(len) : acc;
    }
  }
  const Real factor = kind == ReduceKind::kMean ? Real(1) / static_cast<Real>(len) : Real(1);
  return tape.record(std::move(out), {x}, [x, len, inner, factor](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (std::size_t r = 0; r < g.size(); ++r) {
      const std::size_t a = r / inner, c = r % inner;
      const Real v = g[r] * factor;
      for (std::size_t l = 0; l < len; ++l) gx[a * len * inner + l * inner + c] += v;
    }
  });
}

template <class Real>
Var<Real> sum_all(const Var<Real>& x) {
  Real acc = 0;
  for (Real v : x.value().data()) acc += v;
  return x.tape().record(Tensor<Real>::scalar(acc), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (auto& v : gx) v += g[0];
  });
}

template <class Real>
Var<Real> mean_all(const Var<Real>& x) {
  const auto n = static_cast<double>(x.numel());
  require(n > 0, ErrorKind::kDimension, "mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / n);
}

template <class Real>
Var<Real> softmax(const Var<Real>& x) {
  const Shape& s = x.shape();
  require(!s.empty() && s.back() >= 1, ErrorKind::kDimension, "softmax: need K >= 1, got " + shape_str(s));
  const std::size_t k = s.back();
  const std::size_t rows = x.numel() / k;
  Tensor<Real> out(s);
  auto in = x.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xi = in.data() + r * k;
    Real* oi = o.data() + r * k;
    Real mx = xi[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, xi[j]);
    Real z = 0;
    for (std::size_t j = 0; j < k; ++j) {
      oi[j] = std::exp(xi[j] - mx);
      z += oi[j];
    }
    for (std::size_t j = 0; j < k; ++j) oi[j] /= z;
  }
  Tape<Real>& tape = x.tape();
  return tape.record(std::move(out), {x}, [x, rows, k](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>& y) {
    auto gx = tp.grad_of(x);
    auto p = y.data();
    for (std::size_t r = 0; r < rows; ++r) {
      Real dot = 0;
      for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * p[r * k + j];
      for (std::size_t j = 0; j < k; ++j) gx[r * k + j] += p[r * k + j] * (g[r * k + j] - dot);
    }
  });
}

template <class Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) dim_error("add", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  auto av = a.value().data(), bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    if (tp.needs_grad(a)) {
      auto ga = tp.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

template <class Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) dim_error("sub", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  auto av = a.value().data(), bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] - bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    if (tp.needs_grad(a)) {
      auto ga = tp.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <class Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) dim_error("mul", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  auto av = a.value().data(), bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    if (tp.needs_grad(a)) {
      auto ga = tp.grad_of(a);
      auto bv2 = tp.value(b).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad_of(b);
      auto av2 = tp.value(a).data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
    }
  });
}

template <class Real>
Var<Real> scale(const Var<Real>& x, double factor) {
  const Real f = static_cast<Real>(factor);
  Tensor<Real> out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * f;
  return x.tape().record(std::move(out), {x}, [x, f](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * f;
  });
}

template <class Real>
Var<Real> add_scalar(const Var<Real>& x, double c) {
  const Real cv = static_cast<Real>(c);
  Tensor<Real> out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] + cv;
  return x.tape().record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <class Real>
Var<Real> exp(const Var<Real>& x) {
  Tensor<Real> out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::exp(xv[i]);
  Tape<Real>& tape = x.tape();
  return tape.record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>& y) {
    auto gx = tp.grad_of(x);
    auto yv = y.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i];
  });
}

template <class Real>
Var<Real> abs(const Var<Real>& x) {
  Tensor<Real> out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::abs(xv[i]);
  Tape<Real>& tape = x.tape();
  if (tape.tracks_branches()) {
    std::vector<bool> mask(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) mask[i] = xv[i] > Real(0);
    tape.note_branch(hash_mask(mask));
  }
  return tape.record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    auto xin = tp.value(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xin[i] > Real(0)) gx[i] += g[i];
      else if (xin[i] < Real(0)) gx[i] -= g[i];
    }
  });
}

template <class Real>
Var<Real> log_clamped(const Var<Real>& x, double floor) {
  const Real fl = static_cast<Real>(floor);
  Tensor<Real> out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::log(std::max(xv[i], fl));
  Tape<Real>& tape = x.tape();
  if (tape.tracks_branches()) {
    std::vector<bool> mask(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) mask[i] = xv[i] > fl;
    tape.note_branch(hash_mask(mask));
  }
  return tape.record(std::move(out), {x}, [x, fl](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    auto xin = tp.value(x).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xin[i] > fl) gx[i] += g[i] / xin[i];
  });
}

template <class Real>
Var<Real> mul_rows(const Var<Real>& x, const Var<Real>& s) {
  const Shape& xs = x.shape();
  require_rank("mul_rows", xs, 2);
  if (s.numel() != xs[0]) dim_error("mul_rows", xs, s.shape());
  const std::size_t n = xs[0], c = xs[1];
  Tensor<Real> out(xs);
  auto xv = x.value().data(), sv = s.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) o[i * c + j] = xv[i * c + j] * sv[i];
  return x.tape().record(std::move(out), {x, s}, [x, s, n, c](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    if (tp.needs_grad(x)) {
      auto gx = tp.grad_of(x);
      auto sv2 = tp.value(s).data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * sv2[i];
    }
    if (tp.needs_grad(s)) {
      auto gs = tp.grad_of(s);
      auto xv2 = tp.value(x).data();
      for (std::size_t i = 0; i < n; ++i) {
        Real acc = 0;
        for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j] * xv2[i * c + j];
        gs[i] += acc;
      }
    }
  });
}

template <class Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  Tensor<Real> out(x.value());
  out.reshape(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <class Real>
Var<Real> concat_cols(const Var<Real>& a, const Var<Real>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require_rank("concat_cols", as, 2);
  require_rank("concat_cols", bs, 2);
  if (as[0] != bs[0]) dim_error("concat_cols", as, bs);
  const std::size_t n = as[0], ca = as[1], cb = bs[1];
  Tensor<Real> out({n, ca + cb});
  auto av = a.value().data(), bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data() + i * ca, ca, o.data() + i * (ca + cb));
    std::copy_n(bv.data() + i * cb, cb, o.data() + i * (ca + cb) + ca);
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, n, ca, cb](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    const std::size_t w = ca + cb;
    if (tp.needs_grad(a)) {
      auto ga = tp.grad_of(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * w + j];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad_of(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * w + ca + j];
    }
  });
}

template <class Real>
Var<Real> concat_rows(std::span<const Var<Real>> parts) {
  require(!parts.empty(), ErrorKind::kDimension, "concat_rows: no inputs");
  const Shape& first = parts[0].shape();
  require_rank("concat_rows", first, 2);
  const std::size_t c = first[1];
  std::size_t total = 0;
  std::vector<std::size_t> starts;
  for (const auto& p : parts) {
    require_rank("concat_rows", p.shape(), 2);
    if (p.shape()[1] != c) dim_error("concat_rows", first, p.shape());
    starts.push_back(total);
    total += p.shape()[0];
  }
  Tensor<Real> out({total, c});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].value().data();
    std::copy(pv.begin(), pv.end(), out.data().begin() + static_cast<std::ptrdiff_t>(starts[k] * c));
  }
  std::vector<Var<Real>> ins(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), std::span<const Var<Real>>(ins),
                                [ins, starts, c](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    for (std::size_t k = 0; k < ins.size(); ++k) {
      if (!tp.needs_grad(ins[k])) continue;
      auto gk = tp.grad_of(ins[k]);
      const Real* src = g.data() + starts[k] * c;
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += src[i];
    }
  });
}

template <class Real>
Var<Real> gather_rows(const Var<Real>& x, std::span<const std::uint32_t> index) {
  const Shape& xs = x.shape();
  require_rank("gather_rows", xs, 2);
  const std::size_t n = xs[0], c = xs[1], m = index.size();
  Tensor<Real> out({m, c});
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    if (index[r] >= n) {
      fail(ErrorKind::kDimension, "gather_rows: index " + std::to_string(index[r]) +
                                      " out of range for shape " + shape_str(xs));
    }
    std::copy_n(xv.data() + index[r] * c, c, o.data() + r * c);
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return x.tape().record(std::move(out), {x}, [x, idx = std::move(idx), c](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    auto gx = tp.grad_of(x);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      Real* dst = gx.data() + idx[r] * c;
      const Real* src = g.data() + r * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

template <class Real>
Var<Real> pairwise_sqdist(const Var<Real>& a, const Var<Real>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require_rank("pairwise_sqdist", as, 2);
  require_rank("pairwise_sqdist", bs, 2);
  if (as[1] != bs[1]) dim_error("pairwise_sqdist", as, bs);
  const std::size_t n = as[0], m = bs[0], c = as[1];
  const Real* av = a.value().data().data();
  const Real* bv = b.value().data().data();
  MapCM<Real> A(av, n, c);
  MapCM<Real> B(bv, m, c);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> an = A.rowwise().squaredNorm();
  Eigen::Matrix<Real, Eigen::Dynamic, 1> bn = B.rowwise().squaredNorm();
  Tensor<Real> out({n, m});
  MapM<Real> D(out.data().data(), n, m);
  D.noalias() = Real(-2) * A * B.transpose();
  D.colwise() += an;
  D.rowwise() += bn.transpose();

  return a.tape().record(std::move(out), {a, b}, [a, b, n, m, c](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    MapCM<Real> G(g.data(), n, m);
    MapCM<Real> A2(tp.value(a).data().data(), n, c);
    MapCM<Real> B2(tp.value(b).data().data(), m, c);
    // d/da_i = 2 * (a_i * sum_j g_ij - sum_j g_ij b_j), symmetric for b.
    if (tp.needs_grad(a)) {
      MapM<Real> GA(tp.grad_of(a).data(), n, c);
      Eigen::Matrix<Real, Eigen::Dynamic, 1> rs = G.rowwise().sum();
      GA.noalias() += Real(2) * (rs.asDiagonal() * A2);
      GA.noalias() -= Real(2) * (G * B2);
    }
    if (tp.needs_grad(b)) {
      MapM<Real> GB(tp.grad_of(b).data(), m, c);
      Eigen::Matrix<Real, Eigen::Dynamic, 1> cs = G.colwise().sum().transpose();
      GB.noalias() += Real(2) * (cs.asDiagonal() * B2);
      GB.noalias() -= Real(2) * (G.transpose() * A2);
    }
  });
}

template <class Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require_rank("matmul", as, 2);
  require_rank("matmul", bs, 2);
  if (as[1] != bs[0]) dim_error("matmul", as, bs);
  const std::size_t m = as[0], k = as[1], n = bs[1];
  Tensor<Real> out({m, n});
  kernels::gemm(a.value().data().data(), b.value().data().data(), out.data().data(), m, k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>&) {
    MapCM<Real> G(g.data(), m, n);
    if (tp.needs_grad(a)) {
      MapM<Real>(tp.grad_of(a).data(), m, k).noalias() +=
          G * MapCM<Real>(tp.value(b).data().data(), k, n).transpose();
    }
    if (tp.needs_grad(b)) {
      MapM<Real>(tp.grad_of(b).data(), k, n).noalias() +=
          MapCM<Real>(tp.value(a).data().data(), m, k).transpose() * G;
    }
  });
}

#define PDAN_INSTANTIATE_OPS(R)                                                              \
  template Var<R> linear(const Var<R>&, const Var<R>&, const Var<R>&);                      \
  template Var<R> linear_relu_max(const Var<R>&, const Var<R>&, const Var<R>&, std::size_t);  \
  template Var<R> activation(const Var<R>&, Activation);                                    \
  template Var<R> reduce(const Var<R>&, std::size_t, ReduceKind, std::vector<std::size_t>*); \
  template Var<R> sum_all(const Var<R>&);                                                   \
  template Var<R> mean_all(const Var<R>&);                                                  \
  template Var<R> softmax(const Var<R>&);                                                   \
  template Var<R> add(const Var<R>&, const Var<R>&);                                        \
  template Var<R> sub(const Var<R>&, const Var<R>&);                                        \
  template Var<R> mul(const Var<R>&, const Var<R>&);                                        \
  template Var<R> scale(const Var<R>&, double);                                             \
  template Var<R> add_scalar(const Var<R>&, double);                                        \
  template Var<R> exp(const Var<R>&);                                                       \
  template Var<R> abs(const Var<R>&);                                                       \
  template Var<R> log_clamped(const Var<R>&, double);                                       \
  template Var<R> mul_rows(const Var<R>&, const Var<R>&);                                   \
  template Var<R> reshape(const Var<R>&, Shape);                                            \
  template Var<R> concat_cols(const Var<R>&, const Var<R>&);                                \
  template Var<R> concat_rows(std::span<const Var<R>>);                                     \
  template Var<R> gather_rows(const Var<R>&, std::span<const std::uint32_t>);               \
  template Var<R> pairwise_sqdist(const Var<R>&, const Var<R>&);                            \
  template Var<R> matmul(const Var<R>&, const Var<R>&);                                     \
  template void kernels::gemm(const R*, const R*, R*, std::size_t, std::size_t, std::size_t, bool);

PDAN_INSTANTIATE_OPS(float)
PDAN_INSTANTIATE_OPS(double)

}  // namespace pdan::tensor
