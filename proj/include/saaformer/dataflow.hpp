#pragma once

#include <algorithm>
#include <bit>
#include <json.hpp>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "saaformer/common.hpp"
#include "saaformer/rng.hpp"

namespace saaformer {

// Hyperspectral scene: H x W pixels, C bands, band-interleaved-by-pixel.
struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<float> values;  // index (r * width + c) * bands + b

  float at(std::size_t r, std::size_t c, std::size_t b) const {
    return values[(r * width + c) * bands + b];
  }
};

// Per-pixel class ids; 0 means unlabeled.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> ids;

  std::uint16_t at(std::size_t r, std::size_t c) const { return ids[r * width + c]; }
  std::uint16_t& at(std::size_t r, std::size_t c) { return ids[r * width + c]; }

  std::size_t class_count() const {
    std::uint16_t k = 0;
    for (std::uint16_t v : ids) k = std::max(k, v);
    return k;
  }
};

using Center = std::pair<std::uint32_t, std::uint32_t>;  // (row, col)

// Train/test sample centers plus the sampling provenance they were drawn
// with. Block mode guarantees that no test patch window intersects any train
// patch window.
struct SplitSpec {
  std::string mode;  // "random" | "block"
  std::size_t patch = 5;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;  // random mode
  std::size_t block = 0;        // block mode
  std::size_t gap = 0;          // block mode
  std::size_t stride = 4;       // block mode: every stride-th tile trains
  std::vector<Center> train;
  std::vector<Center> test;
};

// ---- synthetic scenes --------------------------------------------------------

// Tiled synthetic scene: tile x tile regions each carry one class; the class
// signature is a sum of three seeded Gaussian bumps normalized to [0,1], and
// pixels add white noise of the given sigma. Signatures are redrawn until
// every class pair is at least 10 * sigma * sqrt(C) apart in L2, so classes
// stay separable at the requested noise level. Deterministic in the seed.
inline std::pair<HsiCube, LabelMap> generate_synthetic(std::size_t h, std::size_t w,
                                                       std::size_t bands, std::size_t classes,
                                                       std::size_t tile, double sigma,
                                                       std::uint64_t seed) {
  if (tile == 0 || h % tile != 0 || w % tile != 0)
    throw ValueError("generate_synthetic: tile " + std::to_string(tile) +
                     " must divide scene extents");
  if (classes < 2) throw ValueError("generate_synthetic: need at least 2 classes");
  if (sigma < 0) throw ValueError("generate_synthetic: negative noise sigma");
  const std::size_t tiles_r = h / tile, tiles_c = w / tile;
  const std::size_t n_tiles = tiles_r * tiles_c;
  if (classes > n_tiles)
    throw ValueError("generate_synthetic: " + std::to_string(classes) + " classes exceed " +
                     std::to_string(n_tiles) + " tiles");

  RngStream rng(RngStream::derive(seed, streams::kData));

  // Class signatures.
  const double min_sep = 10.0 * sigma * std::sqrt(static_cast<double>(bands));
  std::vector<std::vector<double>> sig;
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= kMaxAttempts)
      throw ValueError("generate_synthetic: could not reach signature separation " +
                       std::to_string(min_sep));
    sig.assign(classes, std::vector<double>(bands, 0.0));
    for (std::size_t k = 0; k < classes; ++k) {
      for (int g = 0; g < 3; ++g) {
        const double center = rng.next_uniform(0.0, static_cast<double>(bands));
        const double width =
            std::max(0.75, rng.next_uniform(static_cast<double>(bands) / 24.0,
                                            static_cast<double>(bands) / 10.0));
        const double amp = rng.next_uniform(0.5, 1.5);
        for (std::size_t b = 0; b < bands; ++b) {
          const double d = (static_cast<double>(b) - center) / width;
          sig[k][b] += amp * std::exp(-0.5 * d * d);
        }
      }
      double lo = sig[k][0], hi = sig[k][0];
      for (double v : sig[k]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double range = (hi > lo) ? (hi - lo) : 1.0;
      for (double& v : sig[k]) v = (v - lo) / range;
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < classes; ++a)
      for (std::size_t b = a + 1; b < classes; ++b) {
        double d2 = 0;
        for (std::size_t i = 0; i < bands; ++i) {
          const double d = sig[a][i] - sig[b][i];
          d2 += d * d;
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    if (min_dist > min_sep) break;
  }

  // Tile classes: a shuffled prefix forces every class to appear.
  std::vector<std::uint16_t> tile_class(n_tiles, 0);
  std::vector<std::size_t> order(n_tiles);
  for (std::size_t i = 0; i < n_tiles; ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t k = 0; k < classes; ++k)
    tile_class[order[k]] = static_cast<std::uint16_t>(k + 1);
  for (std::size_t i = classes; i < n_tiles; ++i)
    tile_class[order[i]] = static_cast<std::uint16_t>(rng.uniform_below(classes) + 1);

  HsiCube cube{h, w, bands, std::vector<float>(h * w * bands)};
  LabelMap labels{h, w, std::vector<std::uint16_t>(h * w)};
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::uint16_t k = tile_class[(r / tile) * tiles_c + (c / tile)];
      labels.at(r, c) = k;
      for (std::size_t b = 0; b < bands; ++b) {
        const double noise = (sigma > 0) ? sigma * rng.next_normal() : 0.0;
        cube.values[(r * w + c) * bands + b] = static_cast<float>(sig[k - 1][b] + noise);
      }
    }
  return {std::move(cube), std::move(labels)};
}

// ---- splitting protocols -----------------------------------------------------

namespace detail {

inline std::vector<std::vector<Center>> labeled_by_class(const LabelMap& labels) {
  const std::size_t k = labels.class_count();
  std::vector<std::vector<Center>> coords(k);
  for (std::size_t r = 0; r < labels.height; ++r)
    for (std::size_t c = 0; c < labels.width; ++c) {
      const std::uint16_t id = labels.at(r, c);
      if (id > 0)
        coords[id - 1].push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
    }
  return coords;
}

}  // namespace detail

// Pixel-wise random sampling: per class, ceil(fraction * count) labeled
// pixels (at least 1) go to train, the rest to test.
inline SplitSpec random_split(const LabelMap& labels, double fraction, std::size_t patch,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValueError("random_split: fraction must lie in (0,1], got " + std::to_string(fraction));
  if (patch % 2 == 0) throw ValueError("random_split: patch size must be odd");
  if (labels.height < patch || labels.width < patch)
    throw ConstraintError("random_split: scene " + std::to_string(labels.height) + "x" +
                          std::to_string(labels.width) + " smaller than patch " +
                          std::to_string(patch));
  if (labels.class_count() == 0) throw ConstraintError("random_split: no labeled pixels");
  SplitSpec spec;
  spec.mode = "random";
  spec.patch = patch;
  spec.seed = seed;
  spec.train_fraction = fraction;
  RngStream rng(RngStream::derive(seed, streams::kData));
  auto by_class = detail::labeled_by_class(labels);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& coords = by_class[k];
    if (coords.size() < 2)
      throw ConstraintError("random_split: class " + std::to_string(k + 1) +
                            " has fewer than 2 labeled pixels");
    const std::size_t n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(coords.size()))));
    if (n_train >= coords.size())
      throw ConstraintError("random_split: class " + std::to_string(k + 1) +
                            " would have an empty test set");
    rng.shuffle(coords);
    spec.train.insert(spec.train.end(), coords.begin(), coords.begin() + n_train);
    spec.test.insert(spec.test.end(), coords.begin() + n_train, coords.end());
  }
  return spec;
}

namespace detail {

struct BlockGeometry {
  std::size_t h, w, block, gap, patch;
  std::size_t tiles_r, tiles_c;
  std::vector<char> tile_is_train;

  std::size_t tile_of(std::size_t r, std::size_t c) const {
    return (r / block) * tiles_c + (c / block);
  }
  bool in_train(std::size_t r, std::size_t c) const { return tile_is_train[tile_of(r, c)]; }

  // A pixel is stripped out when an opposite-territory pixel lies within
  // Chebyshev distance <= gap of it.
  bool excluded(std::size_t r, std::size_t c) const {
    const bool side = in_train(r, c);
    const std::size_t r0 = (r >= gap) ? r - gap : 0;
    const std::size_t c0 = (c >= gap) ? c - gap : 0;
    const std::size_t r1 = std::min(h - 1, r + gap);
    const std::size_t c1 = std::min(w - 1, c + gap);
    for (std::size_t rr = r0; rr <= r1; ++rr)
      for (std::size_t cc = c0; cc <= c1; ++cc)
        if (in_train(rr, cc) != side) return true;
    return false;
  }

  // Usable centers: labeled, not stripped, full patch window in-bounds and
  // entirely inside the pixel's own territory.
  bool usable_center(const LabelMap& labels, std::size_t r, std::size_t c) const {
    if (labels.at(r, c) == 0 || excluded(r, c)) return false;
    const std::size_t pr = patch / 2;
    if (r < pr || c < pr || r + pr >= h || c + pr >= w) return false;
    const bool side = in_train(r, c);
    for (std::size_t rr = r - pr; rr <= r + pr; ++rr)
      for (std::size_t cc = c - pr; cc <= c + pr; ++cc)
        if (in_train(rr, cc) != side) return false;
    return true;
  }
};

inline void collect_block_centers(const BlockGeometry& geo, const LabelMap& labels,
                                  std::vector<Center>& train, std::vector<Center>& test) {
  train.clear();
  test.clear();
  for (std::size_t r = 0; r < geo.h; ++r)
    for (std::size_t c = 0; c < geo.w; ++c) {
      if (!geo.usable_center(labels, r, c)) continue;
      auto& dst = geo.in_train(r, c) ? train : test;
      dst.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
    }
}

}  // namespace detail

// Block-wise sampling: the scene is tiled into block x block regions, every
// stride-th tile (phase rotated by the seed) becomes train territory, and
// gap-wide strips on both sides of every train/test boundary are excluded so
// no test window can intersect a train window. Tiles are greedily reassigned
// until every class appears in both sets, or the split is rejected.
inline SplitSpec block_split(const LabelMap& labels, std::size_t block, std::size_t gap,
                             std::size_t patch, std::size_t stride, std::uint64_t seed) {
  if (patch % 2 == 0 || patch == 0) throw ValueError("block_split: patch size must be odd");
  if (block < patch)
    throw ConstraintError("block_split: block " + std::to_string(block) + " smaller than patch " +
                          std::to_string(patch));
  if (gap + 1 < patch)
    throw ConstraintError("block_split: gap " + std::to_string(gap) +
                          " below leakage-free minimum " + std::to_string(patch - 1));
  if (stride == 0) throw ValueError("block_split: stride must be positive");
  if (labels.height < patch || labels.width < patch)
    throw ConstraintError("block_split: scene " + std::to_string(labels.height) + "x" +
                          std::to_string(labels.width) + " smaller than patch " +
                          std::to_string(patch));
  if (labels.class_count() == 0) throw ConstraintError("block_split: no labeled pixels");

  detail::BlockGeometry geo;
  geo.h = labels.height;
  geo.w = labels.width;
  geo.block = block;
  geo.gap = gap;
  geo.patch = patch;
  geo.tiles_r = (geo.h + block - 1) / block;
  geo.tiles_c = (geo.w + block - 1) / block;
  const std::size_t n_tiles = geo.tiles_r * geo.tiles_c;
  geo.tile_is_train.assign(n_tiles, 0);
  for (std::size_t t = 0; t < n_tiles; ++t)
    geo.tile_is_train[t] = (t % stride) == (seed % stride) ? 1 : 0;

  const std::size_t k = labels.class_count();
  std::vector<std::size_t> tile_labeled(n_tiles, 0);
  std::vector<std::vector<std::size_t>> tile_class_count(n_tiles, std::vector<std::size_t>(k, 0));
  for (std::size_t r = 0; r < geo.h; ++r)
    for (std::size_t c = 0; c < geo.w; ++c) {
      const std::uint16_t id = labels.at(r, c);
      if (id == 0) continue;
      const std::size_t t = geo.tile_of(r, c);
      tile_labeled[t]++;
      tile_class_count[t][id - 1]++;
    }

  std::vector<Center> train, test;
  auto class_presence = [&](const std::vector<Center>& centers) {
    std::vector<char> present(k, 0);
    for (const auto& [r, c] : centers) present[labels.at(r, c) - 1] = 1;
    return present;
  };

  const std::size_t max_iters = 2 * n_tiles + 8;
  for (std::size_t iter = 0;; ++iter) {
    detail::collect_block_centers(geo, labels, train, test);
    const auto in_train = class_presence(train);
    const auto in_test = class_presence(test);
    std::size_t missing_class = 0;
    bool missing_on_train = false;
    for (std::size_t i = 0; i < k; ++i)
      if (!in_train[i]) {
        missing_class = i + 1;
        missing_on_train = true;
        break;
      }
    if (missing_class == 0)
      for (std::size_t i = 0; i < k; ++i)
        if (!in_test[i]) {
          missing_class = i + 1;
          break;
        }
    if (missing_class == 0) break;
    if (iter >= max_iters)
      throw ConstraintError("block_split: cannot place class " + std::to_string(missing_class) +
                            " in both train and test sets");

    // Candidate tiles on the opposite side holding the class, smallest first.
    std::vector<std::size_t> candidates;
    for (std::size_t t = 0; t < n_tiles; ++t)
      if (static_cast<bool>(geo.tile_is_train[t]) != missing_on_train &&
          tile_class_count[t][missing_class - 1] > 0)
        candidates.push_back(t);
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      if (tile_labeled[a] != tile_labeled[b]) return tile_labeled[a] < tile_labeled[b];
      return a < b;
    });
    bool flipped = false;
    for (std::size_t t : candidates) {
      geo.tile_is_train[t] = missing_on_train ? 1 : 0;
      std::vector<Center> trial_train, trial_test;
      detail::collect_block_centers(geo, labels, trial_train, trial_test);
      const auto& side = missing_on_train ? trial_train : trial_test;
      bool found = false;
      for (const auto& [r, c] : side)
        if (labels.at(r, c) == missing_class) {
          found = true;
          break;
        }
      if (found) {
        flipped = true;
        break;
      }
      geo.tile_is_train[t] = missing_on_train ? 0 : 1;
    }
    if (!flipped)
      throw ConstraintError("block_split: cannot place class " + std::to_string(missing_class) +
                            " in both train and test sets");
  }

  SplitSpec spec;
  spec.mode = "block";
  spec.patch = patch;
  spec.seed = seed;
  spec.block = block;
  spec.gap = gap;
  spec.stride = stride;
  spec.train = std::move(train);
  spec.test = std::move(test);
  return spec;
}

// ---- overlap auditing ----------------------------------------------------------

// Fraction of a test sample's patch window covered by the union of all train
// windows, by exact integer rasterization.
inline double overlap_rate(Center test_center, const std::vector<Center>& train_centers,
                           std::size_t patch) {
  if (patch % 2 == 0 || patch == 0) throw ValueError("overlap_rate: patch size must be odd");
  const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>(patch / 2);
  const std::ptrdiff_t tr = static_cast<std::ptrdiff_t>(test_center.first);
  const std::ptrdiff_t tc = static_cast<std::ptrdiff_t>(test_center.second);
  std::size_t covered = 0;
  for (std::ptrdiff_t r = tr - pr; r <= tr + pr; ++r)
    for (std::ptrdiff_t c = tc - pr; c <= tc + pr; ++c) {
      for (const auto& [ar, ac] : train_centers) {
        if (std::abs(r - static_cast<std::ptrdiff_t>(ar)) <= pr &&
            std::abs(c - static_cast<std::ptrdiff_t>(ac)) <= pr) {
          ++covered;
          break;
        }
      }
    }
  return static_cast<double>(covered) / static_cast<double>(patch * patch);
}

// Same rasterization against a pre-built hash of train centers; used when
// auditing many test samples.
class OverlapAuditor {
 public:
  OverlapAuditor(const std::vector<Center>& train_centers, std::size_t patch) : patch_(patch) {
    if (patch % 2 == 0 || patch == 0) throw ValueError("overlap audit: patch size must be odd");
    for (const auto& [r, c] : train_centers)
      train_.insert((static_cast<std::uint64_t>(r) << 32) | c);
  }

  double rate(Center test_center) const {
    const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>(patch_ / 2);
    const std::ptrdiff_t tr = static_cast<std::ptrdiff_t>(test_center.first);
    const std::ptrdiff_t tc = static_cast<std::ptrdiff_t>(test_center.second);
    std::size_t covered = 0;
    for (std::ptrdiff_t r = tr - pr; r <= tr + pr; ++r)
      for (std::ptrdiff_t c = tc - pr; c <= tc + pr; ++c)
        if (cell_covered(r, c, pr)) ++covered;
    return static_cast<double>(covered) / static_cast<double>(patch_ * patch_);
  }

 private:
  bool cell_covered(std::ptrdiff_t r, std::ptrdiff_t c, std::ptrdiff_t pr) const {
    for (std::ptrdiff_t ar = r - pr; ar <= r + pr; ++ar) {
      if (ar < 0) continue;
      for (std::ptrdiff_t ac = c - pr; ac <= c + pr; ++ac) {
        if (ac < 0) continue;
        if (train_.count((static_cast<std::uint64_t>(ar) << 32) | static_cast<std::uint32_t>(ac)))
          return true;
      }
    }
    return false;
  }

  std::size_t patch_;
  std::unordered_set<std::uint64_t> train_;
};

// Overlap-rate buckets: exactly zero, (0, 0.5], and above 0.5. A rate of
// exactly 0.5 lands in the middle bucket.
struct OverlapBuckets {
  std::size_t zero = 0;
  std::size_t mid = 0;
  std::size_t high = 0;

  std::size_t total() const { return zero + mid + high; }
};

inline OverlapBuckets bucket_overlap(const std::vector<double>& rates) {
  OverlapBuckets b;
  for (double r : rates) {
    if (r < 0.0 || r > 1.0) throw ValueError("bucket_overlap: rate outside [0,1]");
    if (r == 0.0)
      b.zero++;
    else if (r <= 0.5)
      b.mid++;
    else
      b.high++;
  }
  return b;
}

inline int overlap_bucket_index(double r) {
  if (r == 0.0) return 0;
  return (r <= 0.5) ? 1 : 2;
}

// ---- binary cube format --------------------------------------------------------

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u16_le(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_f32_le(std::ostream& os, float v) {
  put_u32_le(os, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32_le(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("truncated file: reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t get_u16_le(std::istream& is, const char* what) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2))
    throw FormatError(std::string("truncated file: reading ") + what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline float get_f32_le(std::istream& is, const char* what) {
  return std::bit_cast<float>(get_u32_le(is, what));
}

}  // namespace detail

// .hsic scene file: magic "HSIC", u32 version=1, u32 H, u32 W, u32 C (all
// little-endian), H*W*C float32 values row-major band-interleaved-by-pixel,
// u8 label flag, and when flagged, H*W u16 labels row-major.
inline void write_cube(const std::string& path, const HsiCube& cube, const LabelMap* labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os.write("HSIC", 4);
  detail::put_u32_le(os, 1);
  detail::put_u32_le(os, static_cast<std::uint32_t>(cube.height));
  detail::put_u32_le(os, static_cast<std::uint32_t>(cube.width));
  detail::put_u32_le(os, static_cast<std::uint32_t>(cube.bands));
  for (float v : cube.values) detail::put_f32_le(os, v);
  const unsigned char flag = labels ? 1 : 0;
  os.write(reinterpret_cast<const char*>(&flag), 1);
  if (labels) {
    if (labels->height != cube.height || labels->width != cube.width)
      throw ShapeError("write_cube: label map " + std::to_string(labels->height) + "x" +
                       std::to_string(labels->width) + " does not match cube");
    for (std::uint16_t v : labels->ids) detail::put_u16_le(os, v);
  }
  if (!os) throw FormatError("write failed: " + path);
}

// Split files are JSON: mode, patch, seed, mode parameters, and the train
// and test center lists as [row, col] pairs.
void write_split(const std::string& path, const SplitSpec& spec);
SplitSpec read_split(const std::string& path);

inline std::pair<HsiCube, std::optional<LabelMap>> read_cube(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("truncated file: reading magic in " + path);
  if (std::memcmp(magic, "HSIC", 4) != 0) throw FormatError("bad magic in " + path);
  const std::uint32_t version = detail::get_u32_le(is, "version");
  if (version != 1) throw FormatError("unsupported version " + std::to_string(version));
  const std::uint32_t h = detail::get_u32_le(is, "height");
  const std::uint32_t w = detail::get_u32_le(is, "width");
  const std::uint32_t c = detail::get_u32_le(is, "bands");
  if (h == 0 || w == 0 || c == 0) throw FormatError("extent overflow: zero extent in " + path);
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
  if (count > (1ull << 31))
    throw FormatError("extent overflow: " + std::to_string(count) + " values in " + path);
  HsiCube cube{h, w, c, std::vector<float>(count)};
  for (std::uint64_t i = 0; i < count; ++i) cube.values[i] = detail::get_f32_le(is, "values");
  unsigned char flag = 0;
  if (!is.read(reinterpret_cast<char*>(&flag), 1))
    throw FormatError("truncated file: reading label flag in " + path);
  std::optional<LabelMap> labels;
  if (flag == 1) {
    LabelMap lm{h, w, std::vector<std::uint16_t>(static_cast<std::size_t>(h) * w)};
    for (auto& v : lm.ids) v = detail::get_u16_le(is, "labels");
    labels = std::move(lm);
  } else if (flag != 0) {
    throw FormatError("bad label flag " + std::to_string(flag) + " in " + path);
  }
  return {std::move(cube), std::move(labels)};
}

inline void write_split(const std::string& path, const SplitSpec& spec) {
  nlohmann::json j;
  j["mode"] = spec.mode;
  j["patch"] = spec.patch;
  j["seed"] = spec.seed;
  nlohmann::json params;
  if (spec.mode == "random") {
    params["train_fraction"] = spec.train_fraction;
  } else if (spec.mode == "block") {
    params["block"] = spec.block;
    params["gap"] = spec.gap;
    params["stride"] = spec.stride;
  } else {
    throw ValueError("write_split: unknown mode '" + spec.mode + "'");
  }
  j["parameters"] = params;
  auto centers = [](const std::vector<Center>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [r, c] : v) out.push_back({r, c});
    return out;
  };
  j["train"] = centers(spec.train);
  j["test"] = centers(spec.test);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("write failed: " + path);
}

inline SplitSpec read_split(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad split file " + path + ": " + e.what());
  }
  SplitSpec spec;
  try {
    spec.mode = j.at("mode").get<std::string>();
    spec.patch = j.at("patch").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    const auto& params = j.at("parameters");
    if (spec.mode == "random") {
      spec.train_fraction = params.at("train_fraction").get<double>();
    } else if (spec.mode == "block") {
      spec.block = params.at("block").get<std::size_t>();
      spec.gap = params.at("gap").get<std::size_t>();
      spec.stride = params.at("stride").get<std::size_t>();
    } else {
      throw FormatError("bad split file " + path + ": unknown mode '" + spec.mode + "'");
    }
    auto centers = [&](const char* key) {
      std::vector<Center> out;
      for (const auto& e : j.at(key)) out.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()});
      return out;
    };
    spec.train = centers("train");
    spec.test = centers("test");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad split file " + path + ": " + e.what());
  }
  return spec;
}

}  // namespace saaformer
