#include "atdoc/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace atdoc {

namespace {

constexpr double kLogFloor = 1e-12;  // clamp before logs; below gradient tolerance

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

void check_nonempty(const Eigen::Ref<const Matrix>& m, const char* who) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument(std::string(who) + ": empty input");
  }
}

void check_labels(const std::vector<PseudoLabel>& pseudo,
                  const Eigen::Ref<const Matrix>& probs, const char* who) {
  if (static_cast<Index>(pseudo.size()) != probs.rows()) {
    throw std::invalid_argument(std::string(who) + ": one pseudo-label per row required");
  }
  for (const auto& p : pseudo) {
    if (p.label < 0 || p.label >= probs.cols()) {
      throw std::invalid_argument(std::string(who) + ": label out of range");
    }
  }
}

}  // namespace

LossOutput lsr_loss(const Eigen::Ref<const Matrix>& logits, const std::vector<int>& labels,
                    double epsilon) {
  check_nonempty(logits, "lsr_loss");
  if (static_cast<Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("lsr_loss: one label per row required");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument("lsr_loss: epsilon must lie in [0, 1)");
  }
  const Index batch = logits.rows();
  const Index K = logits.cols();
  const Matrix probs = softmax_rows(logits);
  const double off_target = epsilon / static_cast<double>(K);

  double total = 0.0;
  Matrix dlogits = probs;
  for (Index i = 0; i < batch; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= K) throw std::invalid_argument("lsr_loss: label out of range");
    for (Index k = 0; k < K; ++k) {
      const double target = off_target + (k == y ? 1.0 - epsilon : 0.0);
      total -= target * safe_log(probs(i, k));
      dlogits(i, k) -= target;
    }
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

LossOutput pl_loss_lee(const Eigen::Ref<const Matrix>& probs) {
  check_nonempty(probs, "pl_loss_lee");
  const Index batch = probs.rows();
  double total = 0.0;
  Matrix dlogits = probs;
  for (Index i = 0; i < batch; ++i) {
    const Index y = argmax_row(probs.row(i));
    total -= safe_log(probs(i, y));
    dlogits(i, y) -= 1.0;
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

LossOutput pl_loss_weighted(const Eigen::Ref<const Matrix>& probs) {
  check_nonempty(probs, "pl_loss_weighted");
  const Index batch = probs.rows();
  double total = 0.0;
  Matrix dlogits(batch, probs.cols());
  for (Index i = 0; i < batch; ++i) {
    const Index y = argmax_row(probs.row(i));
    const double weight = probs(i, y);  // detached
    total -= weight * safe_log(probs(i, y));
    dlogits.row(i) = weight * probs.row(i);
    dlogits(i, y) -= weight;
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

LossOutput minent_loss(const Eigen::Ref<const Matrix>& probs) {
  check_nonempty(probs, "minent_loss");
  const Index batch = probs.rows();
  double total = 0.0;
  Matrix dlogits(batch, probs.cols());
  for (Index i = 0; i < batch; ++i) {
    double entropy = 0.0;
    for (Index k = 0; k < probs.cols(); ++k) {
      entropy -= probs(i, k) * safe_log(probs(i, k));
    }
    total += entropy;
    // dH/dz_k = -p_k (log p_k + H)
    for (Index k = 0; k < probs.cols(); ++k) {
      dlogits(i, k) = -probs(i, k) * (safe_log(probs(i, k)) + entropy);
    }
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

LossOutput nc_loss(const Eigen::Ref<const Matrix>& probs,
                   const std::vector<PseudoLabel>& pseudo) {
  check_nonempty(probs, "nc_loss");
  check_labels(pseudo, probs, "nc_loss");
  const Index batch = probs.rows();
  double total = 0.0;
  Matrix dlogits = probs;
  for (Index i = 0; i < batch; ++i) {
    const int y = pseudo[static_cast<std::size_t>(i)].label;
    total -= safe_log(probs(i, y));
    dlogits(i, y) -= 1.0;
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

LossOutput na_loss(const Eigen::Ref<const Matrix>& probs,
                   const std::vector<PseudoLabel>& pseudo) {
  check_nonempty(probs, "na_loss");
  check_labels(pseudo, probs, "na_loss");
  const Index batch = probs.rows();
  double total = 0.0;
  Matrix dlogits(batch, probs.cols());
  for (Index i = 0; i < batch; ++i) {
    const auto& p = pseudo[static_cast<std::size_t>(i)];
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw std::invalid_argument("na_loss: confidence must lie in [0, 1]");
    }
    total -= p.confidence * safe_log(probs(i, p.label));
    dlogits.row(i) = p.confidence * probs.row(i);
    dlogits(i, p.label) -= p.confidence;
  }
  return LossOutput{total / batch, dlogits / static_cast<double>(batch)};
}

}  // namespace atdoc
