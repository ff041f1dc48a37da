#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "saaformer/dataflow.hpp"
#include "saaformer/spectral.hpp"

namespace saaformer {

struct SaaFormerConfig {
  std::size_t in_bands = 0;
  std::size_t embed_dim = 128;
  std::size_t heads = 4;
  std::size_t depth = 2;  // encoder block pairs
  std::vector<std::size_t> level_lengths = {128, 64, 32};
  std::size_t patch = 5;
  double dropout_rate = 0.1;
  std::size_t classes = 0;

  PartitionPlan plan() const { return PartitionPlan{embed_dim, level_lengths}; }

  void validate() const {
    if (in_bands == 0) throw ValueError("config: input band count must be positive");
    if (classes < 2) throw ValueError("config: need at least 2 classes");
    if (patch == 0 || patch % 2 == 0) throw ValueError("config: patch size must be odd");
    if (depth == 0) throw ValueError("config: depth must be positive");
    if (heads == 0 || embed_dim % heads != 0)
      throw ValueError("config: heads must divide the embed width");
    plan().validate();
    for (std::size_t c : level_lengths) {
      // qkv width equals the partition width, and the wrapped partition is
      // handled as two half-width blocks, so heads must divide both.
      if (c % heads != 0 || (c / 2) % heads != 0)
        throw ValueError("config: heads " + std::to_string(heads) +
                         " must divide level length " + std::to_string(c) + " and its half");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ValueError("config: dropout rate must lie in [0,1)");
  }
};

template <typename Real>
struct SaaFormerParams {
  SaaFormerConfig config;
  LinearParams<Real> embedding;  // in_bands -> embed_dim
  std::vector<std::vector<EncoderBlockPairParams<Real>>> blocks;  // [depth][level]
  std::vector<NormParams<Real>> fusion_ln;                        // per depth
  NormParams<Real> head_ln;
  LinearParams<Real> head;  // embed_dim -> classes

  static SaaFormerParams init(const SaaFormerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    RngStream rng(RngStream::derive(seed, streams::kInit));
    SaaFormerParams p;
    p.config = cfg;
    p.embedding = LinearParams<Real>::make(cfg.in_bands, cfg.embed_dim, rng);
    p.blocks.resize(cfg.depth);
    for (std::size_t d = 0; d < cfg.depth; ++d) {
      for (std::size_t c : cfg.level_lengths)
        p.blocks[d].push_back(
            EncoderBlockPairParams<Real>::make(cfg.embed_dim, c, cfg.heads, cfg.patch, rng));
      p.fusion_ln.push_back(NormParams<Real>::layer_norm(cfg.embed_dim));
    }
    p.head_ln = NormParams<Real>::layer_norm(cfg.embed_dim);
    p.head = LinearParams<Real>::make(cfg.embed_dim, cfg.classes, rng);
    return p;
  }
};

namespace detail {

template <typename Real, typename Fn>
void visit_norm(NormParams<Real>& n, bool include_stats, Fn&& fn) {
  fn(n.scale);
  fn(n.shift);
  if (include_stats && n.is_batch_norm()) {
    fn(n.running_mean);
    fn(n.running_var);
  }
}

template <typename Real, typename Fn>
void visit_linear(LinearParams<Real>& l, Fn&& fn) {
  fn(l.weight);
  fn(l.bias);
}

template <typename Real, typename Fn>
void visit_attention(AxialAttentionParams<Real>& a, bool include_stats, Fn&& fn) {
  fn(a.wq);
  fn(a.wk);
  fn(a.wv);
  visit_linear(a.out_proj, fn);
  fn(a.rq_row);
  fn(a.rk_row);
  fn(a.rv_row);
  fn(a.rq_col);
  fn(a.rk_col);
  fn(a.rv_col);
  fn(a.aux_kernel);
  visit_norm(a.aux_bn, include_stats, fn);
}

template <typename Real, typename Fn>
void visit_partition_block(PartitionBlockParams<Real>& b, bool include_stats, Fn&& fn) {
  visit_norm(b.ln_attn, include_stats, fn);
  visit_norm(b.ln_ffn, include_stats, fn);
  visit_attention(b.attn, include_stats, fn);
  visit_linear(b.ffn1, fn);
  visit_linear(b.ffn2, fn);
}

// Single traversal defining the declaration order of every tensor in the
// model; the checkpoint format serializes exactly this order with
// include_stats = true.
template <typename Real, typename Fn>
void visit_model(SaaFormerParams<Real>& p, bool include_stats, Fn&& fn) {
  visit_linear(p.embedding, fn);
  for (auto& depth : p.blocks)
    for (auto& pair : depth) {
      for (auto& b : pair.regular) visit_partition_block(b, include_stats, fn);
      for (auto& b : pair.shifted) visit_partition_block(b, include_stats, fn);
      visit_partition_block(pair.wrap_lo, include_stats, fn);
      visit_partition_block(pair.wrap_hi, include_stats, fn);
    }
  for (auto& ln : p.fusion_ln) visit_norm(ln, include_stats, fn);
  visit_norm(p.head_ln, include_stats, fn);
  visit_linear(p.head, fn);
}

}  // namespace detail

template <typename Real>
std::vector<Tensor<Real>> trainable_parameters(SaaFormerParams<Real>& p) {
  std::vector<Tensor<Real>> out;
  detail::visit_model(p, false, [&](Tensor<Real>& t) { out.push_back(t); });
  return out;
}

// Trainable tensors plus batch-norm running statistics; what a checkpoint stores.
template <typename Real>
std::vector<Tensor<Real>> state_tensors(SaaFormerParams<Real>& p) {
  std::vector<Tensor<Real>> out;
  detail::visit_model(p, true, [&](Tensor<Real>& t) { out.push_back(t); });
  return out;
}

template <typename Real>
std::size_t parameter_count(SaaFormerParams<Real>& p) {
  std::size_t n = 0;
  detail::visit_model(p, false, [&](Tensor<Real>& t) { n += t.size(); });
  return n;
}

// ---- forward ------------------------------------------------------------------

// Per-pixel linear embedding, dropout, the cascaded multi-level encoder
// depths, then final layer norm, spatial mean pooling and the linear head.
template <typename Real>
Tensor<Real> forward(Tape<Real>& tape, Tensor<Real> sample, SaaFormerParams<Real>& params,
                     const ForwardCtx<Real>& ctx) {
  const SaaFormerConfig& cfg = params.config;
  if (sample.rank() != 3 || sample.extent(0) != cfg.patch || sample.extent(1) != cfg.patch ||
      sample.extent(2) != cfg.in_bands)
    throw ShapeError("forward: sample " + shape_str(sample.shape()) + " vs config patch " +
                     std::to_string(cfg.patch) + ", bands " + std::to_string(cfg.in_bands));
  const std::size_t hw = cfg.patch * cfg.patch;
  Tensor<Real> x2 = reshape(tape, sample, Shape{hw, cfg.in_bands});
  Tensor<Real> e = apply_dropout(tape, linear(tape, x2, params.embedding), ctx);
  Tensor<Real> x = reshape(tape, e, Shape{cfg.patch, cfg.patch, cfg.embed_dim});
  for (std::size_t d = 0; d < cfg.depth; ++d)
    x = multi_level_forward(tape, x, params.blocks[d], params.fusion_ln[d], ctx);
  Tensor<Real> normed = layer_norm(tape, x, params.head_ln);
  Tensor<Real> pooled =
      reduce_mean_axis(tape, reshape(tape, normed, Shape{hw, cfg.embed_dim}), 0);
  Tensor<Real> logits = linear(tape, pooled, params.head);
  return reshape(tape, logits, Shape{cfg.classes});
}

// Patch extraction with symmetric mirror padding at scene borders, so every
// labeled pixel is classifiable.
template <typename Real>
Tensor<Real> extract_patch(const HsiCube& cube, std::size_t row, std::size_t col,
                           std::size_t patch) {
  const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>(patch / 2);
  auto mirror = [](std::ptrdiff_t v, std::ptrdiff_t n) {
    while (v < 0 || v >= n) {
      if (v < 0) v = -v - 1;
      if (v >= n) v = 2 * n - v - 1;
    }
    return static_cast<std::size_t>(v);
  };
  Tensor<Real> out(Shape{patch, patch, cube.bands});
  std::size_t idx = 0;
  for (std::ptrdiff_t dr = -pr; dr <= pr; ++dr) {
    const std::size_t r = mirror(static_cast<std::ptrdiff_t>(row) + dr,
                                 static_cast<std::ptrdiff_t>(cube.height));
    for (std::ptrdiff_t dc = -pr; dc <= pr; ++dc) {
      const std::size_t c = mirror(static_cast<std::ptrdiff_t>(col) + dc,
                                   static_cast<std::ptrdiff_t>(cube.width));
      for (std::size_t b = 0; b < cube.bands; ++b)
        out[idx++] = static_cast<Real>(cube.at(r, c, b));
    }
  }
  return out;
}

// ---- training -------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 5e-4;
  double decay = 0.9;  // applied after each ceil(epochs/10) epochs
  std::uint64_t seed = 0;
};

// Learning rate for a 1-based epoch index under the staircase decay.
inline double lr_for_epoch(const TrainConfig& cfg, std::size_t epoch) {
  const std::size_t period = (cfg.epochs + 9) / 10;
  const std::size_t k = (epoch - 1) / period;
  return cfg.lr * std::pow(cfg.decay, static_cast<double>(k));
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
};

// Shuffled minibatch Adam over the split's train centers. Deterministic in
// the seed: init, shuffle order and dropout masks each draw from their own
// derived stream. Gradients accumulate per sample scaled by 1/batch, which
// matches a batch-mean loss.
template <typename Real>
std::pair<SaaFormerParams<Real>, std::vector<EpochStats>> train(const HsiCube& cube,
                                                                const LabelMap& labels,
                                                                const SplitSpec& split,
                                                                const SaaFormerConfig& model_cfg,
                                                                const TrainConfig& train_cfg) {
  if (split.train.empty()) throw ConstraintError("train: empty training split");
  if (train_cfg.batch == 0) throw ValueError("train: batch size must be positive");
  if (train_cfg.lr < 0) throw ValueError("train: learning rate must be non-negative");
  std::vector<char> seen(model_cfg.classes, 0);
  for (const auto& [r, c] : split.train) {
    const std::uint16_t id = labels.at(r, c);
    if (id == 0 || id > model_cfg.classes)
      throw ConstraintError("train: center (" + std::to_string(r) + "," + std::to_string(c) +
                            ") has label " + std::to_string(id) + " outside 1.." +
                            std::to_string(model_cfg.classes));
    seen[id - 1] = 1;
  }
  for (std::size_t k = 0; k < model_cfg.classes; ++k)
    if (!seen[k])
      throw ConstraintError("train: class " + std::to_string(k + 1) +
                            " absent from training split");

  SaaFormerParams<Real> params = SaaFormerParams<Real>::init(model_cfg, train_cfg.seed);
  std::vector<Tensor<Real>> trainable = trainable_parameters(params);
  for (auto& t : trainable) t.set_requires_grad(true);
  AdamState<Real> adam;
  adam.init(trainable);
  RngStream shuffle_rng(RngStream::derive(train_cfg.seed, streams::kShuffle));
  RngStream dropout_rng(RngStream::derive(train_cfg.seed, streams::kDropout));
  ForwardCtx<Real> ctx{true, static_cast<Real>(model_cfg.dropout_rate), &dropout_rng};

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochStats> trace;
  trace.reserve(train_cfg.epochs);
  for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    adam.lr = static_cast<Real>(lr_for_epoch(train_cfg, epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += train_cfg.batch) {
      const std::size_t end = std::min(order.size(), begin + train_cfg.batch);
      const Real inv_batch = Real(1) / static_cast<Real>(end - begin);
      for (auto& t : trainable) t.zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& [r, c] = split.train[order[i]];
        Tape<Real> tape;
        Tensor<Real> x = extract_patch<Real>(cube, r, c, model_cfg.patch);
        Tensor<Real> logits =
            reshape(tape, forward(tape, x, params, ctx), Shape{1, model_cfg.classes});
        const std::vector<int> label{static_cast<int>(labels.at(r, c)) - 1};
        Tensor<Real> sample_loss = cross_entropy(tape, logits, label);
        epoch_loss += static_cast<double>(sample_loss[0]);
        Tensor<Real> weighted = scale(tape, sample_loss, inv_batch);
        tape.backward(weighted);
      }
      adam_step(trainable, adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw ValueError("train: non-finite loss at epoch " + std::to_string(epoch));
    trace.push_back({epoch, epoch_loss});
  }
  return {std::move(params), std::move(trace)};
}

// ---- evaluation ------------------------------------------------------------------

// Eval-mode class prediction (1-based) for one scene position.
template <typename Real>
int predict_one(const HsiCube& cube, std::size_t row, std::size_t col,
                SaaFormerParams<Real>& params) {
  Tape<Real> tape(false);
  ForwardCtx<Real> ctx;  // eval mode
  Tensor<Real> x = extract_patch<Real>(cube, row, col, params.config.patch);
  Tensor<Real> logits = forward(tape, x, params, ctx);
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[best]) best = k;
  return static_cast<int>(best) + 1;
}

// Per-pixel argmax class map over every labeled pixel; unlabeled pixels stay 0.
template <typename Real>
LabelMap predict_map(const HsiCube& cube, const LabelMap& labels, SaaFormerParams<Real>& params) {
  LabelMap out{cube.height, cube.width,
               std::vector<std::uint16_t>(cube.height * cube.width, 0)};
  for (std::size_t r = 0; r < cube.height; ++r)
    for (std::size_t c = 0; c < cube.width; ++c)
      if (labels.at(r, c) != 0)
        out.at(r, c) = static_cast<std::uint16_t>(predict_one(cube, r, c, params));
  return out;
}

// ---- checkpoint format -------------------------------------------------------------

// Checkpoint file: magic "SAAF", u32 version=1, config block (u32 in_bands,
// embed, heads, depth, patch, classes, level count, then the level lengths,
// then f32 dropout rate), u64 scalar count, and every state tensor in
// declaration order as float32 little-endian.
template <typename Real>
void save_checkpoint(const std::string& path, SaaFormerParams<Real>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os.write("SAAF", 4);
  detail::put_u32_le(os, 1);
  const SaaFormerConfig& c = params.config;
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.in_bands));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.embed_dim));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.heads));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.depth));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.patch));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.classes));
  detail::put_u32_le(os, static_cast<std::uint32_t>(c.level_lengths.size()));
  for (std::size_t l : c.level_lengths) detail::put_u32_le(os, static_cast<std::uint32_t>(l));
  detail::put_f32_le(os, static_cast<float>(c.dropout_rate));
  auto tensors = state_tensors(params);
  std::uint64_t total = 0;
  for (auto& t : tensors) total += t.size();
  detail::put_u32_le(os, static_cast<std::uint32_t>(total & 0xFFFFFFFFull));
  detail::put_u32_le(os, static_cast<std::uint32_t>(total >> 32));
  for (auto& t : tensors)
    for (std::size_t i = 0; i < t.size(); ++i)
      detail::put_f32_le(os, static_cast<float>(t[i]));
  if (!os) throw FormatError("write failed: " + path);
}

template <typename Real>
SaaFormerParams<Real> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("truncated file: reading magic in " + path);
  if (std::memcmp(magic, "SAAF", 4) != 0) throw FormatError("bad magic in " + path);
  const std::uint32_t version = detail::get_u32_le(is, "version");
  if (version != 1) throw FormatError("unsupported version " + std::to_string(version));
  SaaFormerConfig c;
  c.in_bands = detail::get_u32_le(is, "in_bands");
  c.embed_dim = detail::get_u32_le(is, "embed_dim");
  c.heads = detail::get_u32_le(is, "heads");
  c.depth = detail::get_u32_le(is, "depth");
  c.patch = detail::get_u32_le(is, "patch");
  c.classes = detail::get_u32_le(is, "classes");
  const std::uint32_t n_levels = detail::get_u32_le(is, "level count");
  if (n_levels == 0 || n_levels > 64) throw FormatError("extent overflow: level count in " + path);
  c.level_lengths.clear();
  for (std::uint32_t i = 0; i < n_levels; ++i)
    c.level_lengths.push_back(detail::get_u32_le(is, "level lengths"));
  c.dropout_rate = static_cast<double>(detail::get_f32_le(is, "dropout"));
  try {
    c.validate();
  } catch (const Error& e) {
    throw FormatError("bad checkpoint config in " + path + ": " + e.what());
  }
  const std::uint64_t lo = detail::get_u32_le(is, "scalar count");
  const std::uint64_t hi = detail::get_u32_le(is, "scalar count");
  const std::uint64_t total = lo | (hi << 32);
  SaaFormerParams<Real> params = SaaFormerParams<Real>::init(c, 0);
  auto tensors = state_tensors(params);
  std::uint64_t expect = 0;
  for (auto& t : tensors) expect += t.size();
  if (expect != total)
    throw FormatError("bad checkpoint in " + path + ": holds " + std::to_string(total) +
                      " scalars, config needs " + std::to_string(expect));
  for (auto& t : tensors)
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = static_cast<Real>(detail::get_f32_le(is, "parameters"));
  return params;
}

}  // namespace saaformer
