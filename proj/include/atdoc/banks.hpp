#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "atdoc/ndmath.hpp"
#include "atdoc/net.hpp"

namespace atdoc {

/// EMA class-centroid table. Centroids of classes seen in a batch move as
/// c <- gamma * batch_mean + (1 - gamma) * c; a class that has never received
/// a batch adopts its first batch mean directly.
class CentroidBank {
 public:
  CentroidBank(int class_count, int feature_dim, double gamma);

  /// Blend the per-class means of a batch into the stored centroids. Classes
  /// absent from the batch are untouched. Labels must lie in [0, K).
  void centroid_update(const Eigen::Ref<const Matrix>& batch_features,
                       const std::vector<int>& batch_pseudo);

  /// Replace a centroid wholesale (used by bank_init).
  void set_centroid(int cls, const Eigen::Ref<const RowVector>& value, bool initialized);

  const Matrix& centroids() const { return centroids_; }
  double gamma() const { return gamma_; }
  int class_count() const { return static_cast<int>(centroids_.rows()); }
  int feature_dim() const { return static_cast<int>(centroids_.cols()); }
  bool is_initialized(int cls) const { return initialized_.at(static_cast<std::size_t>(cls)); }

  /// Debug snapshot (row-major centroid array); not a stable format.
  std::string snapshot_json() const;

 private:
  Matrix centroids_;  // K x b
  double gamma_;
  std::vector<bool> initialized_;
};

/// Per-sample feature/prediction table. Stores raw sharpened predictions
/// p^(1/T); class balancing happens lazily at read time so per-batch
/// overwrites stay exact. No moving averages.
class InstanceBank {
 public:
  /// `ids[i]` is the dataset id stored at row i; ids must be unique.
  InstanceBank(std::vector<int> ids, int feature_dim, int class_count, double temperature);

  /// Overwrite rows in place: features[id] <- f, raw_sharp[id] <- probs^(1/T).
  /// Throws on unknown ids or shape mismatches.
  void write(const std::vector<int>& sample_ids, const Eigen::Ref<const Matrix>& features,
             const Eigen::Ref<const Matrix>& probs);

  /// Class-balanced view: out(i,k) = raw_sharp(i,k) / sum_i raw_sharp(i,k).
  /// Every column of the result sums to 1. Throws when a class column has
  /// zero total mass.
  Matrix balanced_read() const;

  /// Row index for a dataset id, or -1 when the id is not in the bank.
  Index row_of(int sample_id) const;

  const Matrix& features() const { return features_; }
  const Matrix& raw_sharp() const { return raw_sharp_; }
  const std::vector<int>& ids() const { return ids_; }
  double temperature() const { return temperature_; }
  Index size() const { return features_.rows(); }

  /// Debug snapshot (row-major arrays plus the id map); not a stable format.
  std::string snapshot_json() const;

 private:
  Matrix features_;   // N x b
  Matrix raw_sharp_;  // N x K, entries >= 0
  double temperature_;
  std::vector<int> ids_;
  std::unordered_map<int, Index> row_of_id_;
};

struct BankInit {
  CentroidBank centroids;
  InstanceBank instances;
};

/// One evaluation-mode forward pass over the bank population fills both banks:
/// the instance bank holds features and sharpened predictions, the centroid
/// bank holds per-argmax-class feature means. Classes with no samples start at
/// the global feature mean and stay flagged uninitialized.
BankInit bank_init(const NetParams& params, const Eigen::Ref<const Matrix>& bank_inputs,
                   std::vector<int> ids, double temperature, double gamma);

}  // namespace atdoc
