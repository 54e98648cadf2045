#include "atdoc/ndmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace atdoc {

Matrix softmax_rows(const Eigen::Ref<const Matrix>& logits) {
  if (logits.rows() == 0 || logits.cols() == 0) {
    throw std::invalid_argument("softmax_rows: empty input");
  }
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double row_max = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - row_max).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix cosine_sim(const Eigen::Ref<const Matrix>& queries,
                  const Eigen::Ref<const Matrix>& keys) {
  if (queries.cols() != keys.cols()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch");
  }
  const Vector qn = queries.rowwise().norm();
  const Vector kn = keys.rowwise().norm();
  if ((qn.array() == 0.0).any() || (kn.array() == 0.0).any()) {
    throw std::invalid_argument("cosine_sim: zero vector has undefined direction");
  }
  Matrix out = queries * keys.transpose();
  out.array().colwise() /= qn.array();
  out.array().rowwise() /= kn.transpose().array();
  // Inner products can exceed the norm product by rounding; pin to [-1, 1].
  return out.cwiseMin(1.0).cwiseMax(-1.0);
}

std::vector<Index> topk_indices(const Eigen::Ref<const Vector>& scores, Index k,
                                std::optional<Index> exclude) {
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(scores.size()));
  for (Index i = 0; i < scores.size(); ++i) {
    if (exclude && *exclude == i) continue;
    idx.push_back(i);
  }
  if (k < 0 || static_cast<std::size_t>(k) > idx.size()) {
    throw std::invalid_argument("topk_indices: neighborhood larger than bank");
  }
  auto better = [&scores](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), better);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Index argmax_row(const Eigen::Ref<const RowVector>& row) {
  if (row.size() == 0) throw std::invalid_argument("argmax_row: empty input");
  if (!row.allFinite()) throw std::invalid_argument("argmax_row: non-finite input");
  Index best = 0;
  for (Index j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace atdoc
