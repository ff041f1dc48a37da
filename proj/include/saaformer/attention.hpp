#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "saaformer/layers.hpp"
#include "saaformer/tensor.hpp"

namespace saaformer {

// Parameters of one axial aggregation attention block over a c-channel
// feature map: bias-free q/k/v projection matrices to cqkv channels,
// per-position row/column bias tables (capacity h_max/w_max positions), an
// output projection back to c channels, and the auxiliary 3x3 conv +
// batch-norm spatial path. The q/k/v projections carry no bias (a uniform
// key shift cancels inside the softmax), and the aux conv carries none
// either (the batch norm's shift follows immediately).
template <typename Real>
struct AxialAttentionParams {
  Tensor<Real> wq, wk, wv;      // cqkv x c
  LinearParams<Real> out_proj;  // cqkv -> c
  std::size_t heads = 1;
  Tensor<Real> rq_row, rk_row, rv_row;  // h_max x cqkv
  Tensor<Real> rq_col, rk_col, rv_col;  // w_max x cqkv
  Tensor<Real> aux_kernel;  // 3 x 3 x c x c
  NormParams<Real> aux_bn;

  static AxialAttentionParams make(std::size_t c, std::size_t cqkv, std::size_t heads,
                                   std::size_t h_max, std::size_t w_max, RngStream& rng) {
    if (cqkv % heads != 0)
      throw ValueError("attention: heads " + std::to_string(heads) + " must divide qkv width " +
                       std::to_string(cqkv));
    AxialAttentionParams p;
    p.wq = xavier_matrix<Real>(cqkv, c, rng);
    p.wk = xavier_matrix<Real>(cqkv, c, rng);
    p.wv = xavier_matrix<Real>(cqkv, c, rng);
    p.out_proj = LinearParams<Real>::make(cqkv, c, rng);
    p.heads = heads;
    p.rq_row = Tensor<Real>(Shape{h_max, cqkv});
    p.rk_row = Tensor<Real>(Shape{h_max, cqkv});
    p.rv_row = Tensor<Real>(Shape{h_max, cqkv});
    p.rq_col = Tensor<Real>(Shape{w_max, cqkv});
    p.rk_col = Tensor<Real>(Shape{w_max, cqkv});
    p.rv_col = Tensor<Real>(Shape{w_max, cqkv});
    const double a = std::sqrt(6.0 / static_cast<double>(9 * c + 9 * c));
    p.aux_kernel = Tensor<Real>(Shape{3, 3, c, c});
    for (std::size_t i = 0; i < p.aux_kernel.size(); ++i)
      p.aux_kernel[i] = static_cast<Real>(rng.next_uniform(-a, a));
    p.aux_bn = NormParams<Real>::batch_norm(c);
    return p;
  }

  std::size_t qkv_width() const { return wq.extent(0); }
};

// Max-squeeze of a feature map onto its two spatial axes:
// row[i,:] = max over j of t[i,j,:], col[j,:] = max over i of t[i,j,:].
template <typename Real>
std::pair<Tensor<Real>, Tensor<Real>> axial_squeeze(Tape<Real>& tape, Tensor<Real> t) {
  if (t.rank() != 3) throw ShapeError("axial_squeeze: expected h x w x C, got " + shape_str(t.shape()));
  const std::size_t h = t.extent(0), w = t.extent(1), c = t.extent(2);
  Tensor<Real> row = reshape(tape, reduce_max_axis(tape, t, 1), Shape{h, c});
  Tensor<Real> col = reshape(tape, reduce_max_axis(tape, t, 0), Shape{w, c});
  return {row, col};
}

// Axial aggregation attention. Queries, keys and values are projected,
// max-squeezed to row and column sequences, combined with per-position
// biases, and attended along each axis; the position (i,j) output is the sum
// of row term i and column term j, with logits scaled by 1/sqrt(head dim).
template <typename Real>
Tensor<Real> axial_aggregation_attention(Tape<Real>& tape, Tensor<Real> x,
                                         const AxialAttentionParams<Real>& p) {
  if (x.rank() != 3)
    throw ShapeError("axial attention: expected h x w x c, got " + shape_str(x.shape()));
  const std::size_t h = x.extent(0), w = x.extent(1), c = x.extent(2);
  const std::size_t cqkv = p.qkv_width();
  if (h > p.rq_row.extent(0) || w > p.rq_col.extent(0))
    throw ShapeError("axial attention: sample " + shape_str(x.shape()) +
                     " exceeds positional bias capacity " + shape_str(p.rq_row.shape()) + "/" +
                     shape_str(p.rq_col.shape()));
  const std::size_t d = cqkv / p.heads;
  const Real inv_sqrt_d = Real(1) / std::sqrt(static_cast<Real>(d));

  Tensor<Real> x2 = reshape(tape, x, Shape{h * w, c});
  Tensor<Real> q = reshape(tape, project(tape, x2, p.wq), Shape{h, w, cqkv});
  Tensor<Real> k = reshape(tape, project(tape, x2, p.wk), Shape{h, w, cqkv});
  Tensor<Real> v = reshape(tape, project(tape, x2, p.wv), Shape{h, w, cqkv});

  auto [q_row, q_col] = axial_squeeze(tape, q);
  auto [k_row, k_col] = axial_squeeze(tape, k);
  auto [v_row, v_col] = axial_squeeze(tape, v);

  Tensor<Real> rq_row = slice_rows(tape, p.rq_row, 0, h);
  Tensor<Real> rk_row = slice_rows(tape, p.rk_row, 0, h);
  Tensor<Real> rv_row = slice_rows(tape, p.rv_row, 0, h);
  Tensor<Real> rq_col = slice_rows(tape, p.rq_col, 0, w);
  Tensor<Real> rk_col = slice_rows(tape, p.rk_col, 0, w);
  Tensor<Real> rv_col = slice_rows(tape, p.rv_col, 0, w);

  std::vector<Tensor<Real>> head_outs;
  head_outs.reserve(p.heads);
  for (std::size_t hd = 0; hd < p.heads; ++hd) {
    const std::size_t off = hd * d;
    auto part = [&](Tensor<Real> t) { return slice_last(tape, t, off, d); };

    Tensor<Real> qr = add(tape, part(q_row), part(rq_row));
    Tensor<Real> kr = add(tape, part(k_row), part(rk_row));
    Tensor<Real> vr = add(tape, part(v_row), part(rv_row));
    Tensor<Real> attn_row =
        softmax_axis(tape, scale(tape, matmul(tape, qr, transpose(tape, kr)), inv_sqrt_d), 1);
    Tensor<Real> out_row = matmul(tape, attn_row, vr);  // h x d

    Tensor<Real> qc = add(tape, part(q_col), part(rq_col));
    Tensor<Real> kc = add(tape, part(k_col), part(rk_col));
    Tensor<Real> vc = add(tape, part(v_col), part(rv_col));
    Tensor<Real> attn_col =
        softmax_axis(tape, scale(tape, matmul(tape, qc, transpose(tape, kc)), inv_sqrt_d), 1);
    Tensor<Real> out_col = matmul(tape, attn_col, vc);  // w x d

    head_outs.push_back(outer_add(tape, out_row, out_col));  // h x w x d
  }
  Tensor<Real> cat = concat_last(tape, head_outs);  // h x w x cqkv
  Tensor<Real> y = linear(tape, reshape(tape, cat, Shape{h * w, cqkv}), p.out_proj);
  return reshape(tape, y, Shape{h, w, c});
}

// Auxiliary spatial path: 3x3 conv followed by batch norm, same shape.
template <typename Real>
Tensor<Real> aux_spatial_path(Tape<Real>& tape, Tensor<Real> x, AxialAttentionParams<Real>& p,
                              bool training) {
  Tensor<Real> zero_bias(Shape{x.shape().back()});
  Tensor<Real> y = conv3x3(tape, x, p.aux_kernel, zero_bias);
  return batch_norm(tape, y, p.aux_bn, training);
}

// Fusion of the attention feature with the auxiliary spatial feature.
template <typename Real>
Tensor<Real> fuse(Tape<Real>& tape, Tensor<Real> attn, Tensor<Real> aux) {
  return add(tape, attn, aux);
}

// Full attention stage of an encoder block: axial aggregation attention plus
// the auxiliary conv/BN path, fused by elementwise sum.
template <typename Real>
Tensor<Real> attention_block(Tape<Real>& tape, Tensor<Real> x, AxialAttentionParams<Real>& p,
                             bool training) {
  Tensor<Real> a = axial_aggregation_attention(tape, x, p);
  Tensor<Real> b = aux_spatial_path(tape, x, p, training);
  return fuse(tape, a, b);
}

}  // namespace saaformer
