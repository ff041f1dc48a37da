#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "saaformer/tensor.hpp"

namespace saaformer {

template <typename Real>
struct LinearParams {
  Tensor<Real> weight;  // out x in
  Tensor<Real> bias;    // out

  static LinearParams make(std::size_t in, std::size_t out, RngStream& rng) {
    LinearParams p;
    p.weight = Tensor<Real>(Shape{out, in});
    p.bias = Tensor<Real>(Shape{out});
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < p.weight.size(); ++i)
      p.weight[i] = static_cast<Real>(rng.next_uniform(-a, a));
    return p;
  }

  std::size_t in() const { return weight.extent(1); }
  std::size_t out() const { return weight.extent(0); }
};

// Shared affine-normalization parameters. Layer norm uses scale/shift only;
// batch norm additionally tracks running statistics.
template <typename Real>
struct NormParams {
  Tensor<Real> scale;  // C
  Tensor<Real> shift;  // C
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  Real momentum = Real(0.1);

  static NormParams layer_norm(std::size_t c) {
    NormParams p;
    p.scale = Tensor<Real>(Shape{c}, Real(1));
    p.shift = Tensor<Real>(Shape{c}, Real(0));
    return p;
  }

  static NormParams batch_norm(std::size_t c) {
    NormParams p = layer_norm(c);
    p.running_mean = Tensor<Real>(Shape{c}, Real(0));
    p.running_var = Tensor<Real>(Shape{c}, Real(1));
    return p;
  }

  bool is_batch_norm() const { return running_mean.defined(); }
};

constexpr double kLayerNormEps = 1e-5;
constexpr double kBatchNormEps = 1e-5;

template <typename Real>
Tensor<Real> xavier_matrix(std::size_t out, std::size_t in, RngStream& rng) {
  Tensor<Real> w(Shape{out, in});
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<Real>(rng.next_uniform(-a, a));
  return w;
}

// y = x W^T applied along the last axis (bias-free projection).
template <typename Real>
Tensor<Real> project(Tape<Real>& tape, Tensor<Real> x, Tensor<Real> w) {
  if (w.rank() != 2 || x.shape().back() != w.extent(1))
    throw ShapeError("project: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(w.shape()));
  const std::size_t in = w.extent(1), out_c = w.extent(0);
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_c;
  Tensor<Real> y(out_shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_c; ++o) {
      Real s = 0;
      const Real* px = x.data().data() + r * in;
      const Real* pw = w.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) s += px[i] * pw[i];
      y[r * out_c + o] = s;
    }
  if (detail::track(tape, {&x, &w})) {
    y.set_requires_grad(true);
    tape.record(y, [x, w, y, rows, in, out_c]() mutable {
      const auto& g = y.grad();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out_c; ++o) {
            const Real go = g[r * out_c + o];
            for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += go * w[o * in + i];
          }
      }
      if (w.requires_grad()) {
        auto& gw = w.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out_c; ++o) {
            const Real go = g[r * out_c + o];
            for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += go * x[r * in + i];
          }
      }
    });
  }
  return y;
}

// y = x W^T + b applied along the last axis.
template <typename Real>
Tensor<Real> linear(Tape<Real>& tape, Tensor<Real> x, const LinearParams<Real>& p) {
  const std::size_t in = p.in(), out_c = p.out();
  if (x.shape().back() != in)
    throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(p.weight.shape()));
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_c;
  Tensor<Real> y(out_shape);
  Tensor<Real> w = p.weight;
  Tensor<Real> b = p.bias;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_c; ++o) {
      Real s = b[o];
      const Real* px = x.data().data() + r * in;
      const Real* pw = w.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) s += px[i] * pw[i];
      y[r * out_c + o] = s;
    }
  if (detail::track(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    tape.record(y, [x, w, b, y, rows, in, out_c]() mutable {
      const auto& g = y.grad();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out_c; ++o) {
            const Real go = g[r * out_c + o];
            for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += go * w[o * in + i];
          }
      }
      if (w.requires_grad()) {
        auto& gw = w.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out_c; ++o) {
            const Real go = g[r * out_c + o];
            for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += go * x[r * in + i];
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out_c; ++o) gb[o] += g[r * out_c + o];
      }
    });
  }
  return y;
}

// Per-position normalization over the channel (last) axis, then scale/shift.
template <typename Real>
Tensor<Real> layer_norm(Tape<Real>& tape, Tensor<Real> x, const NormParams<Real>& p) {
  const std::size_t c = x.shape().back();
  if (p.scale.size() != c)
    throw ShapeError("layer_norm: input " + shape_str(x.shape()) + " vs scale " +
                     shape_str(p.scale.shape()));
  const std::size_t rows = x.size() / c;
  const Real eps = static_cast<Real>(kLayerNormEps);
  Tensor<Real> y(x.shape());
  Tensor<Real> xhat(x.shape());
  std::vector<Real> inv_std(rows);
  Tensor<Real> scale = p.scale;
  Tensor<Real> shift = p.shift;
  for (std::size_t r = 0; r < rows; ++r) {
    Real mean = 0;
    for (std::size_t i = 0; i < c; ++i) mean += x[r * c + i];
    mean /= static_cast<Real>(c);
    Real var = 0;
    for (std::size_t i = 0; i < c; ++i) {
      const Real d = x[r * c + i] - mean;
      var += d * d;
    }
    var /= static_cast<Real>(c);
    const Real is = Real(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t i = 0; i < c; ++i) {
      const Real xh = (x[r * c + i] - mean) * is;
      xhat[r * c + i] = xh;
      y[r * c + i] = scale[i] * xh + shift[i];
    }
  }
  if (detail::track(tape, {&x, &scale, &shift})) {
    y.set_requires_grad(true);
    tape.record(y, [x, scale, shift, y, xhat, inv_std = std::move(inv_std), rows, c]() mutable {
      const auto& g = y.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        Real sum_dyh = 0, sum_dyh_xh = 0;
        for (std::size_t i = 0; i < c; ++i) {
          const Real dyh = g[r * c + i] * scale[i];
          sum_dyh += dyh;
          sum_dyh_xh += dyh * xhat[r * c + i];
        }
        if (x.requires_grad()) {
          auto& gx = x.grad();
          for (std::size_t i = 0; i < c; ++i) {
            const Real dyh = g[r * c + i] * scale[i];
            gx[r * c + i] += inv_std[r] * (dyh - (sum_dyh + xhat[r * c + i] * sum_dyh_xh) /
                                                     static_cast<Real>(c));
          }
        }
      }
      if (scale.requires_grad()) {
        auto& gs = scale.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < c; ++i) gs[i] += g[r * c + i] * xhat[r * c + i];
      }
      if (shift.requires_grad()) {
        auto& gb = shift.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < c; ++i) gb[i] += g[r * c + i];
      }
    });
  }
  return y;
}

// Channel-wise batch normalization over all leading axes. Training mode uses
// biased batch moments and folds them into the running statistics with the
// configured momentum; eval mode normalizes with the running statistics.
template <typename Real>
Tensor<Real> batch_norm(Tape<Real>& tape, Tensor<Real> x, NormParams<Real>& p,
                        bool training) {
  const std::size_t c = x.shape().back();
  if (p.scale.size() != c || !p.is_batch_norm())
    throw ShapeError("batch_norm: input " + shape_str(x.shape()) + " vs scale " +
                     shape_str(p.scale.shape()));
  const std::size_t n = x.size() / c;
  const Real eps = static_cast<Real>(kBatchNormEps);
  Tensor<Real> scale = p.scale;
  Tensor<Real> shift = p.shift;
  Tensor<Real> y(x.shape());

  if (!training) {
    std::vector<Real> is(c);
    for (std::size_t i = 0; i < c; ++i) is[i] = Real(1) / std::sqrt(p.running_var[i] + eps);
    Tensor<Real> xhat(x.shape());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < c; ++i) {
        const Real xh = (x[r * c + i] - p.running_mean[i]) * is[i];
        xhat[r * c + i] = xh;
        y[r * c + i] = scale[i] * xh + shift[i];
      }
    if (detail::track(tape, {&x, &scale, &shift})) {
      y.set_requires_grad(true);
      tape.record(y, [x, scale, shift, y, xhat, is = std::move(is), n, c]() mutable {
        const auto& g = y.grad();
        if (x.requires_grad()) {
          auto& gx = x.grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t i = 0; i < c; ++i) gx[r * c + i] += g[r * c + i] * scale[i] * is[i];
        }
        if (scale.requires_grad()) {
          auto& gs = scale.grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t i = 0; i < c; ++i) gs[i] += g[r * c + i] * xhat[r * c + i];
        }
        if (shift.requires_grad()) {
          auto& gb = shift.grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t i = 0; i < c; ++i) gb[i] += g[r * c + i];
        }
      });
    }
    return y;
  }

  if (n <= 1)
    throw ValueError("batch_norm: training mode needs more than one position per channel");

  std::vector<Real> mean(c, Real(0)), var(c, Real(0)), inv_std(c);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < c; ++i) mean[i] += x[r * c + i];
  for (std::size_t i = 0; i < c; ++i) mean[i] /= static_cast<Real>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < c; ++i) {
      const Real d = x[r * c + i] - mean[i];
      var[i] += d * d;
    }
  for (std::size_t i = 0; i < c; ++i) {
    var[i] /= static_cast<Real>(n);
    inv_std[i] = Real(1) / std::sqrt(var[i] + eps);
  }
  for (std::size_t i = 0; i < c; ++i) {
    p.running_mean[i] = (Real(1) - p.momentum) * p.running_mean[i] + p.momentum * mean[i];
    p.running_var[i] = (Real(1) - p.momentum) * p.running_var[i] + p.momentum * var[i];
  }
  Tensor<Real> xhat(x.shape());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < c; ++i) {
      const Real xh = (x[r * c + i] - mean[i]) * inv_std[i];
      xhat[r * c + i] = xh;
      y[r * c + i] = scale[i] * xh + shift[i];
    }
  if (detail::track(tape, {&x, &scale, &shift})) {
    y.set_requires_grad(true);
    tape.record(y, [x, scale, shift, y, xhat, inv_std = std::move(inv_std), n, c]() mutable {
      const auto& g = y.grad();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (std::size_t i = 0; i < c; ++i) {
          Real sum_dyh = 0, sum_dyh_xh = 0;
          for (std::size_t r = 0; r < n; ++r) {
            const Real dyh = g[r * c + i] * scale[i];
            sum_dyh += dyh;
            sum_dyh_xh += dyh * xhat[r * c + i];
          }
          for (std::size_t r = 0; r < n; ++r) {
            const Real dyh = g[r * c + i] * scale[i];
            gx[r * c + i] += inv_std[i] * (dyh - (sum_dyh + xhat[r * c + i] * sum_dyh_xh) /
                                                     static_cast<Real>(n));
          }
        }
      }
      if (scale.requires_grad()) {
        auto& gs = scale.grad();
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t i = 0; i < c; ++i) gs[i] += g[r * c + i] * xhat[r * c + i];
      }
      if (shift.requires_grad()) {
        auto& gb = shift.grad();
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t i = 0; i < c; ++i) gb[i] += g[r * c + i];
      }
    });
  }
  return y;
}

// 3x3 cross-correlation with zero padding 1 and stride 1, so spatial extents
// are preserved. x: h x w x Cin, kernel: 3 x 3 x Cin x Cout, bias: Cout.
template <typename Real>
Tensor<Real> conv3x3(Tape<Real>& tape, Tensor<Real> x, Tensor<Real> kernel,
                     Tensor<Real> bias) {
  if (x.rank() != 3)
    throw ShapeError("conv3x3: expected h x w x C input, got " + shape_str(x.shape()));
  if (kernel.rank() != 4 || kernel.extent(0) != 3 || kernel.extent(1) != 3 ||
      kernel.extent(2) != x.extent(2))
    throw ShapeError("conv3x3: kernel " + shape_str(kernel.shape()) + " vs input " +
                     shape_str(x.shape()));
  const std::size_t h = x.extent(0), w = x.extent(1), ci = x.extent(2), co = kernel.extent(3);
  if (h < 1 || w < 1) throw ShapeError("conv3x3: degenerate spatial extents " + shape_str(x.shape()));
  if (bias.size() != co)
    throw ShapeError("conv3x3: bias " + shape_str(bias.shape()) + " vs kernel " +
                     shape_str(kernel.shape()));
  Tensor<Real> y(Shape{h, w, co});
  auto kidx = [ci, co](std::size_t u, std::size_t v, std::size_t i, std::size_t o) {
    return ((u * 3 + v) * ci + i) * co + o;
  };
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t s = 0; s < w; ++s)
      for (std::size_t o = 0; o < co; ++o) {
        Real acc = bias[o];
        for (std::size_t u = 0; u < 3; ++u) {
          const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + u) - 1;
          if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t v = 0; v < 3; ++v) {
            const std::ptrdiff_t ss = static_cast<std::ptrdiff_t>(s + v) - 1;
            if (ss < 0 || ss >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t base = (static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(ss)) * ci;
            for (std::size_t i = 0; i < ci; ++i) acc += x[base + i] * kernel[kidx(u, v, i, o)];
          }
        }
        y[(r * w + s) * co + o] = acc;
      }
  if (detail::track(tape, {&x, &kernel, &bias})) {
    y.set_requires_grad(true);
    tape.record(y, [x, kernel, bias, y, h, w, ci, co, kidx]() mutable {
      const auto& g = y.grad();
      const bool need_x = x.requires_grad();
      const bool need_k = kernel.requires_grad();
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t s = 0; s < w; ++s)
          for (std::size_t o = 0; o < co; ++o) {
            const Real go = g[(r * w + s) * co + o];
            if (go == Real(0)) continue;
            for (std::size_t u = 0; u < 3; ++u) {
              const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + u) - 1;
              if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t v = 0; v < 3; ++v) {
                const std::ptrdiff_t ss = static_cast<std::ptrdiff_t>(s + v) - 1;
                if (ss < 0 || ss >= static_cast<std::ptrdiff_t>(w)) continue;
                const std::size_t base =
                    (static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(ss)) * ci;
                for (std::size_t i = 0; i < ci; ++i) {
                  if (need_x) x.grad()[base + i] += go * kernel[kidx(u, v, i, o)];
                  if (need_k) kernel.grad()[kidx(u, v, i, o)] += go * x[base + i];
                }
              }
            }
          }
      if (bias.requires_grad()) {
        auto& gb = bias.grad();
        for (std::size_t rs = 0; rs < h * w; ++rs)
          for (std::size_t o = 0; o < co; ++o) gb[o] += g[rs * co + o];
      }
    });
  }
  return y;
}

// Tanh-approximation GELU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))),
// sqrt(2/pi) = 0.7978845608028654.
template <typename Real>
Tensor<Real> gelu(Tape<Real>& tape, Tensor<Real> x) {
  constexpr Real kC = Real(0.7978845608028654);
  constexpr Real kA = Real(0.044715);
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real v = x[i];
    y[i] = Real(0.5) * v * (Real(1) + std::tanh(kC * (v + kA * v * v * v)));
  }
  if (detail::track(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record(y, [x, y]() mutable {
      const auto& g = y.grad();
      auto& gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real v = x[i];
        const Real t = std::tanh(kC * (v + kA * v * v * v));
        const Real du = kC * (Real(1) + Real(3) * kA * v * v);
        gx[i] += g[i] * (Real(0.5) * (Real(1) + t) + Real(0.5) * v * (Real(1) - t * t) * du);
      }
    });
  }
  return y;
}

// Inverted dropout: kept values are scaled by 1/(1-rate) so the expected
// value is preserved; eval mode is the identity and consumes no randomness.
template <typename Real>
Tensor<Real> dropout(Tape<Real>& tape, Tensor<Real> x, Real rate, bool training,
                     RngStream& rng) {
  if (!(rate >= Real(0) && rate < Real(1)))
    throw ValueError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
  if (!training || rate == Real(0)) return x;
  const Real keep_scale = Real(1) / (Real(1) - rate);
  std::vector<Real> mask(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = (static_cast<Real>(rng.next_double()) >= rate) ? keep_scale : Real(0);
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
  if (detail::track(tape, {&x})) {
    y.set_requires_grad(true);
    tape.record(y, [x, y, mask = std::move(mask)]() mutable {
      const auto& g = y.grad();
      auto& gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return y;
}

// Mean softmax cross-entropy over a batch of logits (N x K) with 0-based
// integer labels.
template <typename Real>
Tensor<Real> cross_entropy(Tape<Real>& tape, Tensor<Real> logits,
                           const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw ShapeError("cross_entropy: expected N x K logits, got " + shape_str(logits.shape()));
  const std::size_t n = logits.extent(0), k = logits.extent(1);
  if (labels.size() != n)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  for (int lb : labels)
    if (lb < 0 || static_cast<std::size_t>(lb) >= k)
      throw ValueError("cross_entropy: label " + std::to_string(lb) + " outside [0," +
                       std::to_string(k) + ")");
  Tensor<Real> probs(logits.shape());
  Real loss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    Real mx = logits[r * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits[r * k + j]);
    Real sum = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const Real e = std::exp(logits[r * k + j] - mx);
      probs[r * k + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] /= sum;
    // log-prob assembled from shifted logits; log(probs) would hit -inf for
    // strongly negative logits even though the loss itself is finite
    loss -= logits[r * k + static_cast<std::size_t>(labels[r])] - mx - std::log(sum);
  }
  Tensor<Real> out = Tensor<Real>::scalar(loss / static_cast<Real>(n));
  if (detail::track(tape, {&logits})) {
    out.set_requires_grad(true);
    tape.record(out, [logits, probs, out, labels, n, k]() mutable {
      const Real g = out.grad()[0] / static_cast<Real>(n);
      auto& gl = logits.grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < k; ++j) {
          const Real onehot = (static_cast<std::size_t>(labels[r]) == j) ? Real(1) : Real(0);
          gl[r * k + j] += g * (probs[r * k + j] - onehot);
        }
    });
  }
  return out;
}

// ---- Adam -------------------------------------------------------------------

template <typename Real>
struct AdamState {
  Real lr = Real(5e-4);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
  std::int64_t t = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;

  void init(const std::vector<Tensor<Real>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.size(), Real(0));
      v.emplace_back(p.size(), Real(0));
    }
    t = 0;
  }
};

// One bias-corrected Adam update; reads each parameter's accumulated grad.
template <typename Real>
void adam_step(std::vector<Tensor<Real>>& params, AdamState<Real>& st) {
  if (st.m.size() != params.size()) throw ValueError("adam_step: state not initialized");
  st.t += 1;
  const Real bc1 = Real(1) - std::pow(st.beta1, static_cast<Real>(st.t));
  const Real bc2 = Real(1) - std::pow(st.beta2, static_cast<Real>(st.t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    auto& g = p.grad();
    auto& m = st.m[pi];
    auto& v = st.v[pi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = st.beta1 * m[i] + (Real(1) - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (Real(1) - st.beta2) * g[i] * g[i];
      const Real mhat = m[i] / bc1;
      const Real vhat = v[i] / bc2;
      p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace saaformer
