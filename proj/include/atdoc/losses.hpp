#pragma once

#include <vector>

#include "atdoc/labelers.hpp"
#include "atdoc/ndmath.hpp"

namespace atdoc {

/// Scalar objective value (mean over the batch, before any lambda scaling)
/// plus its exact gradient w.r.t. the logits. Pseudo-labels and confidence
/// weights are treated as constants throughout.
struct LossOutput {
  double value = 0.0;
  Matrix dlogits;
};

/// Cross-entropy against label-smoothed targets t = (1-eps)*onehot + eps/K.
LossOutput lsr_loss(const Eigen::Ref<const Matrix>& logits, const std::vector<int>& labels,
                    double epsilon);

/// Hard self-labeling: -log p at the argmax of each row.
LossOutput pl_loss_lee(const Eigen::Ref<const Matrix>& probs);

/// Confidence-weighted self-labeling: -p_max * log p_max per row, with the
/// weight detached from the gradient.
LossOutput pl_loss_weighted(const Eigen::Ref<const Matrix>& probs);

/// Mean Shannon entropy of the rows, with the exact gradient through softmax.
LossOutput minent_loss(const Eigen::Ref<const Matrix>& probs);

/// Cross-entropy at nearest-centroid pseudo-labels (unweighted).
LossOutput nc_loss(const Eigen::Ref<const Matrix>& probs,
                   const std::vector<PseudoLabel>& pseudo);

/// Confidence-weighted cross-entropy at neighborhood-aggregation labels:
/// mean of -confidence_i * log p(i, label_i).
LossOutput na_loss(const Eigen::Ref<const Matrix>& probs,
                   const std::vector<PseudoLabel>& pseudo);

}  // namespace atdoc
