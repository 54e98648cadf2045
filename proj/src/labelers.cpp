#include "atdoc/labelers.hpp"

#include <stdexcept>

namespace atdoc {

PseudoLabel argmax_label(const Eigen::Ref<const RowVector>& probs_row) {
  PseudoLabel out;
  out.label = static_cast<int>(argmax_row(probs_row));  // throws on non-finite input
  out.confidence = probs_row[out.label];
  out.soft = probs_row;
  return out;
}

PseudoLabel nc_label(const Eigen::Ref<const RowVector>& feature, const CentroidBank& bank) {
  Matrix query(1, feature.size());
  query.row(0) = feature;
  const Matrix sims = cosine_sim(query, bank.centroids());  // throws on zero rows
  // argmin of (1 - cos) is argmax of cos; lowest class index wins ties.
  PseudoLabel out;
  out.label = static_cast<int>(argmax_row(sims.row(0)));
  out.confidence = 1.0;
  return out;
}

PseudoLabel na_aggregate(const Eigen::Ref<const RowVector>& query_feature, int query_id,
                         const InstanceBank& bank, int m, bool raw_confidence) {
  const Matrix balanced = bank.balanced_read();
  return na_aggregate_balanced(query_feature, query_id, bank, balanced, m, raw_confidence);
}

std::vector<Index> na_neighbors(const Eigen::Ref<const RowVector>& query_feature,
                                int query_id, const InstanceBank& bank, int m) {
  Matrix query(1, query_feature.size());
  query.row(0) = query_feature;
  const Matrix sims = cosine_sim(query, bank.features());
  const Index self_row = bank.row_of(query_id);
  std::optional<Index> exclude;
  if (self_row >= 0) exclude = self_row;
  return topk_indices(sims.row(0).transpose(), m, exclude);
}

PseudoLabel na_aggregate_balanced(const Eigen::Ref<const RowVector>& query_feature,
                                  int query_id, const InstanceBank& bank,
                                  const Eigen::Ref<const Matrix>& balanced, int m,
                                  bool raw_confidence) {
  const auto neighbors = na_neighbors(query_feature, query_id, bank, m);

  RowVector aggregate = RowVector::Zero(balanced.cols());
  for (const Index row : neighbors) aggregate += balanced.row(row);
  aggregate /= static_cast<double>(m);

  // Balanced columns scale entries like 1/N, so normalize the row before
  // reading off the confidence; the argmax is unchanged by positive scaling.
  PseudoLabel out;
  out.soft = aggregate / aggregate.sum();
  out.label = static_cast<int>(argmax_row(out.soft));
  out.confidence = raw_confidence ? aggregate[out.label] : out.soft[out.label];
  return out;
}

}  // namespace atdoc
