#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "saaformer/common.hpp"
#include "saaformer/dataflow.hpp"

namespace saaformer {

// K x K count table; rows are ground truth, columns are predictions, both
// 1-based outside the class. Matrices merge by entrywise sum, which equals
// scoring the concatenated sample streams.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes)
      : k_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw ValueError("confusion matrix: need at least one class");
  }

  std::size_t classes() const { return k_; }
  std::int64_t at(std::size_t truth, std::size_t pred) const {
    return counts_[(truth - 1) * k_ + (pred - 1)];
  }

  void accumulate(int truth, int pred) {
    if (truth < 1 || static_cast<std::size_t>(truth) > k_ || pred < 1 ||
        static_cast<std::size_t>(pred) > k_)
      throw ValueError("confusion matrix: class pair (" + std::to_string(truth) + "," +
                       std::to_string(pred) + ") outside 1.." + std::to_string(k_));
    counts_[(truth - 1) * k_ + (pred - 1)] += 1;
  }

  std::int64_t total() const {
    std::int64_t n = 0;
    for (std::int64_t v : counts_) n += v;
    return n;
  }

  std::int64_t row_sum(std::size_t truth) const {
    std::int64_t n = 0;
    for (std::size_t j = 1; j <= k_; ++j) n += at(truth, j);
    return n;
  }

  std::int64_t col_sum(std::size_t pred) const {
    std::int64_t n = 0;
    for (std::size_t i = 1; i <= k_; ++i) n += at(i, pred);
    return n;
  }

  void merge(const ConfusionMatrix& other) {
    if (other.k_ != k_)
      throw ShapeError("confusion matrix merge: " + std::to_string(k_) + " vs " +
                       std::to_string(other.k_) + " classes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

 private:
  std::size_t k_;
  std::vector<std::int64_t> counts_;
};

// Overall accuracy: sum of diagonal counts over the total sample count.
inline double oa(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) throw ValueError("oa: empty confusion matrix");
  std::int64_t diag = 0;
  for (std::size_t i = 1; i <= cm.classes(); ++i) diag += cm.at(i, i);
  return static_cast<double>(diag) / static_cast<double>(n);
}

inline std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> out;
  out.reserve(cm.classes());
  for (std::size_t i = 1; i <= cm.classes(); ++i) {
    const std::int64_t row = cm.row_sum(i);
    if (row == 0)
      throw ValueError("aa: class " + std::to_string(i) + " has no ground-truth samples");
    out.push_back(static_cast<double>(cm.at(i, i)) / static_cast<double>(row));
  }
  return out;
}

// Average accuracy: mean of per-class recalls over the K classes.
inline double aa(const ConfusionMatrix& cm) {
  const auto recalls = per_class_recall(cm);
  double s = 0;
  for (double r : recalls) s += r;
  return s / static_cast<double>(recalls.size());
}

// Cohen's kappa: (N * sum_i x_ii - sum_i x_i+ * x_+i) / (N^2 - sum_i x_i+ * x_+i).
inline double kappa(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) throw ValueError("kappa: empty confusion matrix");
  std::int64_t diag = 0;
  std::int64_t marginal = 0;
  for (std::size_t i = 1; i <= cm.classes(); ++i) {
    diag += cm.at(i, i);
    marginal += cm.row_sum(i) * cm.col_sum(i);
  }
  const double denom = static_cast<double>(n) * static_cast<double>(n) -
                       static_cast<double>(marginal);
  if (denom == 0.0) throw ValueError("kappa: degenerate denominator (N^2 equals marginal sum)");
  return (static_cast<double>(n) * static_cast<double>(diag) - static_cast<double>(marginal)) /
         denom;
}

// ---- per-overlap-bucket accuracy -------------------------------------------------

struct ScoredSample {
  int truth = 0;  // 1-based
  int pred = 0;   // 1-based
  double overlap = 0.0;
};

struct BucketAccuracy {
  std::size_t count = 0;
  std::size_t correct = 0;

  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(count); }
};

// Overall accuracy computed independently inside each overlap bucket
// (zero / up to a half / above a half). Empty buckets stay count 0 and are
// omitted from reports rather than scored as 0.
inline std::array<BucketAccuracy, 3> bucketed_accuracy(const std::vector<ScoredSample>& samples) {
  std::array<BucketAccuracy, 3> out{};
  for (const auto& s : samples) {
    if (s.overlap < 0.0 || s.overlap > 1.0)
      throw ValueError("bucketed_accuracy: overlap outside [0,1]");
    auto& b = out[static_cast<std::size_t>(overlap_bucket_index(s.overlap))];
    b.count += 1;
    if (s.truth == s.pred) b.correct += 1;
  }
  return out;
}

// ---- report serialization --------------------------------------------------------

inline const char* overlap_bucket_name(std::size_t index) {
  static const char* names[3] = {"no_overlap", "overlap_0_to_50", "overlap_above_50"};
  return names[index];
}

inline nlohmann::json metrics_report_json(const ConfusionMatrix& cm,
                                          const std::array<BucketAccuracy, 3>* buckets) {
  nlohmann::json j;
  j["oa"] = oa(cm);
  j["aa"] = aa(cm);
  j["kappa"] = kappa(cm);
  j["per_class_recall"] = per_class_recall(cm);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 1; i <= cm.classes(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 1; k <= cm.classes(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  if (buckets) {
    nlohmann::json b;
    for (std::size_t i = 0; i < 3; ++i) {
      if ((*buckets)[i].count == 0) continue;  // absent, not zero
      b[overlap_bucket_name(i)] = {{"count", (*buckets)[i].count},
                                   {"oa", (*buckets)[i].accuracy()}};
    }
    j["overlap_buckets"] = b;
  }
  return j;
}

}  // namespace saaformer
