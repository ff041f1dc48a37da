#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "saaformer/common.hpp"
#include "saaformer/rng.hpp"

namespace saaformer {

template <typename Real>
class Tape;

// Dense row-major tensor with an optional gradient slot. Copies are shallow
// (shared storage), so the tensor a tape recorded is the tensor whose
// gradient fills in on backward; clone() detaches.
template <typename Real>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, Real fill = Real(0)) {
    rec_ = std::make_shared<Rec>();
    rec_->shape = std::move(shape);
    rec_->data.assign(numel(rec_->shape), fill);
  }

  Tensor(Shape shape, std::vector<Real> values) {
    if (numel(shape) != values.size())
      throw ShapeError("tensor init: " + shape_str(shape) + " does not hold " +
                       std::to_string(values.size()) + " values");
    rec_ = std::make_shared<Rec>();
    rec_->shape = std::move(shape);
    rec_->data = std::move(values);
  }

  static Tensor scalar(Real v) { return Tensor(Shape{1}, std::vector<Real>{v}); }

  bool defined() const { return rec_ != nullptr; }
  const Shape& shape() const { return rec_->shape; }
  std::size_t rank() const { return rec_->shape.size(); }
  std::size_t extent(std::size_t axis) const { return rec_->shape[axis]; }
  std::size_t size() const { return rec_->data.size(); }

  std::vector<Real>& data() { return rec_->data; }
  const std::vector<Real>& data() const { return rec_->data; }
  Real& operator[](std::size_t i) { return rec_->data[i]; }
  Real operator[](std::size_t i) const { return rec_->data[i]; }

  Real at(std::initializer_list<std::size_t> idx) const {
    return rec_->data[flat_index(idx)];
  }
  Real& at(std::initializer_list<std::size_t> idx) {
    return rec_->data[flat_index(idx)];
  }

  bool requires_grad() const { return rec_ && rec_->requires_grad; }
  void set_requires_grad(bool b) { rec_->requires_grad = b; }

  bool has_grad() const { return rec_ && !rec_->grad.empty(); }
  std::vector<Real>& grad() {
    if (rec_->grad.empty()) rec_->grad.assign(rec_->data.size(), Real(0));
    return rec_->grad;
  }
  void zero_grad() {
    if (!rec_->grad.empty()) std::fill(rec_->grad.begin(), rec_->grad.end(), Real(0));
  }

  Tensor clone() const {
    Tensor t(rec_->shape);
    t.rec_->data = rec_->data;
    return t;
  }

  const void* id() const { return rec_.get(); }

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> idx) const {
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) flat = flat * rec_->shape[axis++] + i;
    return flat;
  }

  struct Rec {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;  // empty until first use; same length as data once allocated
    bool requires_grad = false;
  };
  std::shared_ptr<Rec> rec_;
};

// Reverse-mode tape over whole-tensor operations. Each op that touches a
// requires-grad tensor registers its output and one backward closure;
// backward() zeroes the recorded intermediates, seeds the loss and replays
// the closures in reverse, accumulating additively into leaf gradients.
// Running backward twice without resetting leaf grads therefore doubles
// them. Recording can be switched off for pure evaluation.
template <typename Real>
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool b) { recording_ = b; }

  void record(Tensor<Real> output, std::function<void()> backward) {
    ops_.push_back(Node{std::move(output), std::move(backward)});
  }
  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

  void backward(Tensor<Real>& loss) {
    if (loss.size() != 1)
      throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    for (auto& node : ops_) node.output.zero_grad();
    loss.grad()[0] += Real(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
  }

 private:
  struct Node {
    Tensor<Real> output;
    std::function<void()> backward;
  };
  std::vector<Node> ops_;
  bool recording_ = true;
};

namespace detail {

template <typename Real>
bool track(const Tape<Real>& tape, std::initializer_list<const Tensor<Real>*> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor<Real>* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Decompose a shape around `axis` into (outer, n, inner) so that flat index
// (o * n + i) * inner + j walks slices along the axis.
inline void axis_split(const Shape& s, std::size_t axis, std::size_t& outer, std::size_t& n,
                       std::size_t& inner) {
  if (axis >= s.size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  n = s[axis];
  inner = 1;
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace detail

// ---- elementwise and linear-algebra primitives -----------------------------

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, Tensor<Real> a, Tensor<Real> b) {
  require_shape(a.shape() == b.shape(), "add", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  if (detail::track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record(out, [a, b, out]() mutable {
      const auto& g = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> scale(Tape<Real>& tape, Tensor<Real> a, Real c) {
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  if (detail::track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record(out, [a, out, c]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> matmul(Tape<Real>& tape, Tensor<Real> a, Tensor<Real> b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor<Real> out(Shape{m, n});
  const Real* pa = a.data().data();
  const Real* pb = b.data().data();
  Real* pc = out.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = pa[i * k + p];
      if (aip == Real(0)) continue;
      const Real* brow = pb + p * n;
      Real* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  if (detail::track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record(out, [a, b, out, m, k, n]() mutable {
      const auto& g = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();  // dA = dC * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            Real s = 0;
            for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * b[p * n + j];
            ga[i * k + p] += s;
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();  // dB = A^T * dC
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t i = 0; i < m; ++i) {
            const Real aip = a[i * k + p];
            if (aip == Real(0)) continue;
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> transpose(Tape<Real>& tape, Tensor<Real> a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected matrix, got " + shape_str(a.shape()));
  const std::size_t m = a.extent(0), n = a.extent(1);
  Tensor<Real> out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  if (detail::track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record(out, [a, out, m, n]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, Tensor<Real> a, Shape new_shape) {
  if (numel(new_shape) != a.size())
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(new_shape));
  Tensor<Real> out(std::move(new_shape));
  out.data() = a.data();
  if (detail::track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record(out, [a, out]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

// ---- axis reductions and softmax --------------------------------------------

// Numerically stable softmax along one axis: per-slice max is subtracted
// before exponentiation. Every slice sums to 1.
template <typename Real>
Tensor<Real> softmax_axis(Tape<Real>& tape, Tensor<Real> x, std::size_t axis) {
  std::size_t outer, n, inner;
  detail::axis_split(x.shape(), axis, outer, n, inner);
  Tensor<Real> out(x.shape());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < inner; ++j) {
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[(o * n + i) * inner + j]);
      Real sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const Real e = std::exp(x[(o * n + i) * inner + j] - mx);
        out[(o * n + i) * inner + j] = e;
        sum += e;
      }
      for (std::size_t i = 0; i < n; ++i) out[(o * n + i) * inner + j] /= sum;
    }
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out, outer, n, inner]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j) {
          Real dot = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t f = (o * n + i) * inner + j;
            dot += g[f] * out[f];
          }
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t f = (o * n + i) * inner + j;
            gx[f] += (g[f] - dot) * out[f];
          }
        }
    });
  }
  return out;
}

// Max along one axis, keeping the axis with extent 1. Backward routes the
// gradient to the argmax element only; ties go to the lowest flat index.
template <typename Real>
Tensor<Real> reduce_max_axis(Tape<Real>& tape, Tensor<Real> x, std::size_t axis) {
  std::size_t outer, n, inner;
  detail::axis_split(x.shape(), axis, outer, n, inner);
  Shape out_shape = x.shape();
  out_shape[axis] = 1;
  Tensor<Real> out(out_shape);
  std::vector<std::size_t> argmax(outer * inner, 0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < inner; ++j) {
      Real best = x[(o * n + 0) * inner + j];
      std::size_t bi = 0;
      for (std::size_t i = 1; i < n; ++i) {
        const Real v = x[(o * n + i) * inner + j];
        if (v > best) {
          best = v;
          bi = i;
        }
      }
      out[o * inner + j] = best;
      argmax[o * inner + j] = bi;
    }
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out, argmax = std::move(argmax), outer, n, inner]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j)
          gx[(o * n + argmax[o * inner + j]) * inner + j] += g[o * inner + j];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reduce_mean_axis(Tape<Real>& tape, Tensor<Real> x, std::size_t axis) {
  std::size_t outer, n, inner;
  detail::axis_split(x.shape(), axis, outer, n, inner);
  Shape out_shape = x.shape();
  out_shape[axis] = 1;
  Tensor<Real> out(out_shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < inner; ++j) {
      Real s = 0;
      for (std::size_t i = 0; i < n; ++i) s += x[(o * n + i) * inner + j];
      out[o * inner + j] = s / static_cast<Real>(n);
    }
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out, outer, n, inner]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j) {
          const Real gi = g[o * inner + j] / static_cast<Real>(n);
          for (std::size_t i = 0; i < n; ++i) gx[(o * n + i) * inner + j] += gi;
        }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reduce_sum(Tape<Real>& tape, Tensor<Real> x) {
  Tensor<Real> out(Shape{1});
  Real s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  out[0] = s;
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out]() mutable {
      const Real g = out.grad()[0];
      auto& gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

// ---- slicing along the last (channel) axis ----------------------------------

template <typename Real>
Tensor<Real> slice_last(Tape<Real>& tape, Tensor<Real> x, std::size_t start,
                        std::size_t len) {
  const std::size_t c = x.shape().back();
  if (start + len > c)
    throw ShapeError("slice_last: [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of " + shape_str(x.shape()));
  Shape out_shape = x.shape();
  out_shape.back() = len;
  const std::size_t rows = x.size() / c;
  Tensor<Real> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < len; ++j) out[r * len + j] = x[r * c + start + j];
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out, rows, c, start, len]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < len; ++j) gx[r * c + start + j] += g[r * len + j];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> concat_last(Tape<Real>& tape, std::vector<Tensor<Real>> parts) {
  if (parts.empty()) throw ValueError("concat_last: empty part list");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape pl = p.shape();
    const std::size_t pc = pl.back();
    pl.pop_back();
    require_shape(pl == lead, "concat_last leading extents", p.shape(), parts[0].shape());
    total += pc;
  }
  Shape out_shape = parts[0].shape();
  out_shape.back() = total;
  Tensor<Real> out(out_shape);
  const std::size_t rows = out.size() / total;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.shape().back();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < pc; ++j) out[r * total + off + j] = p[r * pc + j];
    off += pc;
  }
  bool any = false;
  for (const auto& p : parts)
    if (tape.recording() && p.requires_grad()) any = true;
  if (any) {
    out.set_requires_grad(true);
    tape.record(out, [parts, out, rows, total]() mutable {
      const auto& g = out.grad();
      std::size_t off = 0;
      for (auto& p : parts) {
        const std::size_t pc = p.shape().back();
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < pc; ++j) gp[r * pc + j] += g[r * total + off + j];
        }
        off += pc;
      }
    });
  }
  return out;
}

// Row slice of a matrix: rows [start, start+len).
template <typename Real>
Tensor<Real> slice_rows(Tape<Real>& tape, Tensor<Real> m, std::size_t start, std::size_t len) {
  if (m.rank() != 2 || start + len > m.extent(0))
    throw ShapeError("slice_rows: [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of " + shape_str(m.shape()));
  const std::size_t c = m.extent(1);
  Tensor<Real> out(Shape{len, c});
  for (std::size_t r = 0; r < len; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = m[(start + r) * c + j];
  if (detail::track(tape, {&m})) {
    out.set_requires_grad(true);
    tape.record(out, [m, out, start, len, c]() mutable {
      const auto& g = out.grad();
      auto& gm = m.grad();
      for (std::size_t r = 0; r < len; ++r)
        for (std::size_t j = 0; j < c; ++j) gm[(start + r) * c + j] += g[r * c + j];
    });
  }
  return out;
}

// Cyclic rotation along the last axis: out[..., k] = x[..., (k + offset) mod C].
template <typename Real>
Tensor<Real> roll_last(Tape<Real>& tape, Tensor<Real> x, std::size_t offset) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.size() / c;
  const std::size_t s = offset % c;
  Tensor<Real> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < c; ++k) out[r * c + k] = x[r * c + (k + s) % c];
  if (detail::track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record(out, [x, out, rows, c, s]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < c; ++k) gx[r * c + (k + s) % c] += g[r * c + k];
    });
  }
  return out;
}

// Outer addition of two channel-vector sequences: row (h x d) and col (w x d)
// combine into y[i,j,:] = row[i,:] + col[j,:].
template <typename Real>
Tensor<Real> outer_add(Tape<Real>& tape, Tensor<Real> row, Tensor<Real> col) {
  if (row.rank() != 2 || col.rank() != 2 || row.extent(1) != col.extent(1))
    throw ShapeError("outer_add: " + shape_str(row.shape()) + " + " + shape_str(col.shape()));
  const std::size_t h = row.extent(0), w = col.extent(0), d = row.extent(1);
  Tensor<Real> out(Shape{h, w, d});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < d; ++k)
        out[(i * w + j) * d + k] = row[i * d + k] + col[j * d + k];
  if (detail::track(tape, {&row, &col})) {
    out.set_requires_grad(true);
    tape.record(out, [row, col, out, h, w, d]() mutable {
      const auto& g = out.grad();
      if (row.requires_grad()) {
        auto& gr = row.grad();
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            for (std::size_t k = 0; k < d; ++k) gr[i * d + k] += g[(i * w + j) * d + k];
      }
      if (col.requires_grad()) {
        auto& gc = col.grad();
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            for (std::size_t k = 0; k < d; ++k) gc[j * d + k] += g[(i * w + j) * d + k];
      }
    });
  }
  return out;
}

// ---- gradient checking -------------------------------------------------------

template <typename Real>
struct GradCheckReport {
  Real max_rel_error = 0;
  std::size_t worst_tensor = 0;  // index into the checked tensor list
  std::size_t worst_coord = 0;   // flat coordinate within that tensor
  Real analytic = 0;
  Real numeric = 0;
};

// Central-difference check of reverse-mode gradients. `f` evaluates the
// scalar loss on a given tape; it must be a deterministic function of the
// checked tensors (re-seed any dropout stream inside f). Relative error uses
// denominator max(|analytic|, |numeric|, 1e-8). Meaningful at 64-bit only.
template <typename Real, typename F>
GradCheckReport<Real> grad_check(F&& f, std::vector<Tensor<Real>> tensors, Real step) {
  if (step <= Real(0)) throw ValueError("grad_check: step must be positive");
  for (auto& t : tensors) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape<Real> tape;
  Tensor<Real> loss = f(tape);
  tape.backward(loss);

  std::vector<std::vector<Real>> analytic;
  analytic.reserve(tensors.size());
  for (auto& t : tensors) analytic.push_back(t.grad());

  GradCheckReport<Real> rep;
  Tape<Real> eval_tape(false);
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    auto& t = tensors[ti];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Real saved = t[i];
      t[i] = saved + step;
      const Real up = f(eval_tape)[0];
      t[i] = saved - step;
      const Real dn = f(eval_tape)[0];
      t[i] = saved;
      const Real num = (up - dn) / (Real(2) * step);
      const Real ana = analytic[ti][i];
      const Real denom = std::max({std::abs(ana), std::abs(num), Real(1e-8)});
      const Real rel = std::abs(ana - num) / denom;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_tensor = ti;
        rep.worst_coord = i;
        rep.analytic = ana;
        rep.numeric = num;
      }
    }
  }
  return rep;
}

template <typename Real, typename F>
GradCheckReport<Real> grad_check(F&& f, Tensor<Real> x, Real step) {
  return grad_check(std::forward<F>(f), std::vector<Tensor<Real>>{std::move(x)}, step);
}

}  // namespace saaformer
