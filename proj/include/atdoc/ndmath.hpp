#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace atdoc {

/// Row-major double matrix: the carrier for batches of features, logits and
/// probabilities. Rows are samples, columns are dimensions/classes.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Row-wise softmax with per-row max subtraction. Each output row is a
/// distribution (nonnegative, sums to 1). Throws on an empty input.
Matrix softmax_rows(const Eigen::Ref<const Matrix>& logits);

/// Pairwise cosine similarity: out(i,j) = <q_i, k_j> / (|q_i| |k_j|).
/// Throws if dimensions differ or any row has zero norm.
Matrix cosine_sim(const Eigen::Ref<const Matrix>& queries,
                  const Eigen::Ref<const Matrix>& keys);

/// Indices of the k largest scores, descending; ties resolve to the lowest
/// index. `exclude`, when set, is never returned. Throws when k exceeds the
/// number of usable entries.
std::vector<Index> topk_indices(const Eigen::Ref<const Vector>& scores, Index k,
                                std::optional<Index> exclude = std::nullopt);

/// Argmax over a row, lowest index on ties. Throws on empty or non-finite rows.
Index argmax_row(const Eigen::Ref<const RowVector>& row);

}  // namespace atdoc
