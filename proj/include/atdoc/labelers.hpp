#pragma once

#include <vector>

#include "atdoc/banks.hpp"
#include "atdoc/ndmath.hpp"

namespace atdoc {

/// A provisional label for one target sample. `soft` is filled by the
/// aggregation paths (argmax and NA); it stays empty for nearest-centroid.
struct PseudoLabel {
  int label = 0;
  double confidence = 1.0;
  RowVector soft;
};

/// Hard label from one probability row: argmax (lowest index on ties),
/// confidence = max probability, soft = the row itself.
PseudoLabel argmax_label(const Eigen::Ref<const RowVector>& probs_row);

/// Nearest-centroid label under cosine distance. Confidence is fixed to 1;
/// the NC training loss is unweighted. Ties resolve to the lowest class.
PseudoLabel nc_label(const Eigen::Ref<const RowVector>& feature, const CentroidBank& bank);

/// Neighborhood aggregation: average the class-balanced predictions of the m
/// most cosine-similar bank rows (the query's own row, when present, is
/// excluded), then row-normalize. Label = argmax, confidence = max of the
/// normalized row; `raw_confidence` switches to the unnormalized maximum.
PseudoLabel na_aggregate(const Eigen::Ref<const RowVector>& query_feature, int query_id,
                         const InstanceBank& bank, int m, bool raw_confidence = false);

/// Same as na_aggregate but against a precomputed balanced_read() matrix, so
/// a whole batch shares one balancing pass. Results are identical.
PseudoLabel na_aggregate_balanced(const Eigen::Ref<const RowVector>& query_feature,
                                  int query_id, const InstanceBank& bank,
                                  const Eigen::Ref<const Matrix>& balanced, int m,
                                  bool raw_confidence = false);

/// The m bank rows NA aggregates for a query, most similar first.
std::vector<Index> na_neighbors(const Eigen::Ref<const RowVector>& query_feature,
                                int query_id, const InstanceBank& bank, int m);

}  // namespace atdoc
