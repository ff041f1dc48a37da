#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "saaformer/attention.hpp"
#include "saaformer/layers.hpp"
#include "saaformer/tensor.hpp"

namespace saaformer {

// Channel partitioning scheme over the embedded spectrum: one partition
// length per level, each dividing the embed width. Lengths must be even so
// the shifted pass can rotate by half a partition. In the shifted pass the
// last partition wraps around the spectrum ends and is handled as two
// independent halves.
struct PartitionPlan {
  std::size_t embed_channels = 0;
  std::vector<std::size_t> level_lengths;

  void validate() const {
    if (level_lengths.empty()) throw ValueError("partition plan: no levels");
    for (std::size_t c : level_lengths) {
      if (c == 0 || embed_channels % c != 0)
        throw ValueError("partition plan: length " + std::to_string(c) + " does not divide " +
                         std::to_string(embed_channels) + " channels");
      if (c % 2 != 0)
        throw ValueError("partition plan: length " + std::to_string(c) + " must be even");
    }
  }

  std::size_t levels() const { return level_lengths.size(); }
  std::size_t partitions(std::size_t level) const {
    return embed_channels / level_lengths[level];
  }
  std::size_t wrapped_index(std::size_t level) const { return partitions(level) - 1; }
  bool is_wrapped(std::size_t level, std::size_t index) const {
    return index == wrapped_index(level);
  }

  // Channel ranges of the two independent halves of the wrapped partition,
  // expressed within the shifted tensor: [start, start + c/2) each.
  std::pair<std::size_t, std::size_t> wrap_half_starts(std::size_t level, std::size_t index) const {
    if (!is_wrapped(level, index))
      throw ValueError("wrap mask: partition " + std::to_string(index) + " of level " +
                       std::to_string(level) + " is not the wrapped one");
    const std::size_t c = level_lengths[level];
    const std::size_t base = index * c;
    return {base, base + c / 2};
  }
};

// Cyclic rotation of the channel axis by c/2: channel j moves to
// (j - c/2) mod C. After the shift, each new partition of length c joins the
// trailing half of one original partition with the leading half of the next.
template <typename Real>
Tensor<Real> shift_channels(Tape<Real>& tape, Tensor<Real> x, std::size_t c) {
  if (c % 2 != 0) throw ValueError("shift_channels: partition length must be even");
  return roll_last(tape, x, c / 2);
}

template <typename Real>
Tensor<Real> unshift_channels(Tape<Real>& tape, Tensor<Real> x, std::size_t c) {
  if (c % 2 != 0) throw ValueError("unshift_channels: partition length must be even");
  const std::size_t total = x.shape().back();
  return roll_last(tape, x, total - (c / 2) % total);
}

// Non-overlapping channel slices of length c; concatenating them in order
// reconstructs the input exactly.
template <typename Real>
std::vector<Tensor<Real>> partition_channels(Tape<Real>& tape, Tensor<Real> x, std::size_t c) {
  const std::size_t total = x.shape().back();
  if (c == 0 || total % c != 0)
    throw ValueError("partition_channels: length " + std::to_string(c) + " does not divide " +
                     std::to_string(total) + " channels");
  std::vector<Tensor<Real>> parts;
  parts.reserve(total / c);
  for (std::size_t start = 0; start < total; start += c)
    parts.push_back(slice_last(tape, x, start, c));
  return parts;
}

// Shared forward-pass context: training flag plus the dropout stream.
template <typename Real>
struct ForwardCtx {
  bool training = false;
  Real dropout_rate = Real(0);
  RngStream* dropout = nullptr;
};

template <typename Real>
Tensor<Real> apply_dropout(Tape<Real>& tape, Tensor<Real> x, const ForwardCtx<Real>& ctx) {
  if (!ctx.training || ctx.dropout_rate == Real(0)) return x;
  return dropout(tape, x, ctx.dropout_rate, true, *ctx.dropout);
}

// One transformer unit over a partition: pre-norm attention with residual,
// then pre-norm FFN (hidden width 2c, GELU, dropout) with residual.
template <typename Real>
struct PartitionBlockParams {
  NormParams<Real> ln_attn;
  NormParams<Real> ln_ffn;
  AxialAttentionParams<Real> attn;
  LinearParams<Real> ffn1;  // c -> 2c
  LinearParams<Real> ffn2;  // 2c -> c

  static PartitionBlockParams make(std::size_t c, std::size_t heads, std::size_t patch,
                                   RngStream& rng) {
    PartitionBlockParams p;
    p.ln_attn = NormParams<Real>::layer_norm(c);
    p.ln_ffn = NormParams<Real>::layer_norm(c);
    p.attn = AxialAttentionParams<Real>::make(c, c, heads, patch, patch, rng);
    p.ffn1 = LinearParams<Real>::make(c, 2 * c, rng);
    p.ffn2 = LinearParams<Real>::make(2 * c, c, rng);
    return p;
  }
};

template <typename Real>
Tensor<Real> partition_block_forward(Tape<Real>& tape, Tensor<Real> x,
                                     PartitionBlockParams<Real>& p, const ForwardCtx<Real>& ctx) {
  const std::size_t h = x.extent(0), w = x.extent(1), c = x.extent(2);
  Tensor<Real> attn_in = layer_norm(tape, x, p.ln_attn);
  Tensor<Real> f_hat = add(tape, x, attention_block(tape, attn_in, p.attn, ctx.training));

  Tensor<Real> u = reshape(tape, layer_norm(tape, f_hat, p.ln_ffn), Shape{h * w, c});
  Tensor<Real> z = apply_dropout(tape, gelu(tape, linear(tape, u, p.ffn1)), ctx);
  z = apply_dropout(tape, linear(tape, z, p.ffn2), ctx);
  return add(tape, f_hat, reshape(tape, z, Shape{h, w, c}));
}

// Parameters of one encoder block pair for one level: the regular pass has a
// block per partition; the shifted pass has full blocks for the non-wrapped
// partitions and two half-width blocks for the wrapped one, so the two
// spectrum ends never share a projection, an attention slice or an FFN.
template <typename Real>
struct EncoderBlockPairParams {
  std::size_t c = 0;
  std::vector<PartitionBlockParams<Real>> regular;
  std::vector<PartitionBlockParams<Real>> shifted;  // partitions 0 .. n_p-2
  PartitionBlockParams<Real> wrap_lo;               // first half of the wrapped partition
  PartitionBlockParams<Real> wrap_hi;               // second half

  static EncoderBlockPairParams make(std::size_t embed, std::size_t c, std::size_t heads,
                                     std::size_t patch, RngStream& rng) {
    EncoderBlockPairParams p;
    p.c = c;
    const std::size_t n = embed / c;
    for (std::size_t i = 0; i < n; ++i)
      p.regular.push_back(PartitionBlockParams<Real>::make(c, heads, patch, rng));
    for (std::size_t i = 0; i + 1 < n; ++i)
      p.shifted.push_back(PartitionBlockParams<Real>::make(c, heads, patch, rng));
    p.wrap_lo = PartitionBlockParams<Real>::make(c / 2, heads, patch, rng);
    p.wrap_hi = PartitionBlockParams<Real>::make(c / 2, heads, patch, rng);
    return p;
  }
};

template <typename Real>
Tensor<Real> regular_stage(Tape<Real>& tape, Tensor<Real> f, EncoderBlockPairParams<Real>& p,
                           const ForwardCtx<Real>& ctx) {
  std::vector<Tensor<Real>> parts = partition_channels(tape, f, p.c);
  std::vector<Tensor<Real>> outs;
  outs.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i)
    outs.push_back(partition_block_forward(tape, parts[i], p.regular[i], ctx));
  return concat_last(tape, outs);
}

// Shifted pass of the block pair: rotate channels by c/2, run per-partition
// blocks with the wrapped partition split into its two independent halves,
// then rotate back so channel identity is restored.
template <typename Real>
Tensor<Real> shifted_stage(Tape<Real>& tape, Tensor<Real> f, EncoderBlockPairParams<Real>& p,
                           const ForwardCtx<Real>& ctx) {
  Tensor<Real> fs = shift_channels(tape, f, p.c);
  std::vector<Tensor<Real>> parts = partition_channels(tape, fs, p.c);
  const std::size_t wrapped = parts.size() - 1;
  std::vector<Tensor<Real>> outs;
  outs.reserve(parts.size());
  for (std::size_t i = 0; i < wrapped; ++i)
    outs.push_back(partition_block_forward(tape, parts[i], p.shifted[i], ctx));
  const std::size_t half = p.c / 2;
  Tensor<Real> lo = slice_last(tape, parts[wrapped], 0, half);
  Tensor<Real> hi = slice_last(tape, parts[wrapped], half, half);
  Tensor<Real> lo_out = partition_block_forward(tape, lo, p.wrap_lo, ctx);
  Tensor<Real> hi_out = partition_block_forward(tape, hi, p.wrap_hi, ctx);
  outs.push_back(concat_last(tape, std::vector<Tensor<Real>>{lo_out, hi_out}));
  return unshift_channels(tape, concat_last(tape, outs), p.c);
}

// The four-line encoder recurrence: regular partitioning pass (attention +
// FFN with residuals) followed by the shifted, wrap-masked pass.
template <typename Real>
Tensor<Real> encoder_block_pair(Tape<Real>& tape, Tensor<Real> f, EncoderBlockPairParams<Real>& p,
                                const ForwardCtx<Real>& ctx) {
  return shifted_stage(tape, regular_stage(tape, f, p, ctx), p, ctx);
}

// Multi-level extraction: each level runs its own block pair on the same
// input; level outputs are averaged elementwise and layer-normalized.
template <typename Real>
Tensor<Real> multi_level_forward(Tape<Real>& tape, Tensor<Real> x,
                                 std::vector<EncoderBlockPairParams<Real>>& levels,
                                 NormParams<Real>& fusion_ln, const ForwardCtx<Real>& ctx) {
  if (levels.empty()) throw ValueError("multi_level_forward: no levels");
  Tensor<Real> acc = encoder_block_pair(tape, x, levels[0], ctx);
  for (std::size_t l = 1; l < levels.size(); ++l)
    acc = add(tape, acc, encoder_block_pair(tape, x, levels[l], ctx));
  Tensor<Real> mean = scale(tape, acc, Real(1) / static_cast<Real>(levels.size()));
  return layer_norm(tape, mean, fusion_ln);
}

}  // namespace saaformer
