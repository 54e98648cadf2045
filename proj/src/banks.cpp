#include "atdoc/banks.hpp"

#include <stdexcept>

#include "json.hpp"

namespace atdoc {

CentroidBank::CentroidBank(int class_count, int feature_dim, double gamma)
    : centroids_(Matrix::Zero(class_count, feature_dim)),
      gamma_(gamma),
      initialized_(static_cast<std::size_t>(class_count), false) {
  if (class_count <= 0 || feature_dim <= 0) {
    throw std::invalid_argument("CentroidBank: dimensions must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("CentroidBank: gamma must lie in (0, 1]");
  }
}

void CentroidBank::centroid_update(const Eigen::Ref<const Matrix>& batch_features,
                                   const std::vector<int>& batch_pseudo) {
  if (batch_features.cols() != centroids_.cols()) {
    throw std::invalid_argument("centroid_update: feature dimension mismatch");
  }
  if (static_cast<std::size_t>(batch_features.rows()) != batch_pseudo.size()) {
    throw std::invalid_argument("centroid_update: one label per batch row required");
  }
  const int K = class_count();
  Matrix sums = Matrix::Zero(K, centroids_.cols());
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (Index i = 0; i < batch_features.rows(); ++i) {
    const int cls = batch_pseudo[static_cast<std::size_t>(i)];
    if (cls < 0 || cls >= K) {
      throw std::invalid_argument("centroid_update: label out of range");
    }
    sums.row(cls) += batch_features.row(i);
    ++counts[static_cast<std::size_t>(cls)];
  }
  for (int j = 0; j < K; ++j) {
    if (counts[static_cast<std::size_t>(j)] == 0) continue;
    const RowVector batch_mean = sums.row(j) / counts[static_cast<std::size_t>(j)];
    if (initialized_[static_cast<std::size_t>(j)]) {
      centroids_.row(j) = gamma_ * batch_mean + (1.0 - gamma_) * centroids_.row(j);
    } else {
      // First observation replaces: blending against an arbitrary start
      // would bias the centroid.
      centroids_.row(j) = batch_mean;
      initialized_[static_cast<std::size_t>(j)] = true;
    }
  }
}

void CentroidBank::set_centroid(int cls, const Eigen::Ref<const RowVector>& value,
                                bool initialized) {
  if (cls < 0 || cls >= class_count()) {
    throw std::invalid_argument("set_centroid: class out of range");
  }
  if (value.size() != centroids_.cols()) {
    throw std::invalid_argument("set_centroid: feature dimension mismatch");
  }
  centroids_.row(cls) = value;
  initialized_[static_cast<std::size_t>(cls)] = initialized;
}

std::string CentroidBank::snapshot_json() const {
  nlohmann::json j;
  j["gamma"] = gamma_;
  j["class_count"] = class_count();
  j["feature_dim"] = feature_dim();
  j["centroids"] =
      std::vector<double>(centroids_.data(), centroids_.data() + centroids_.size());
  j["initialized"] = std::vector<bool>(initialized_.begin(), initialized_.end());
  return j.dump();
}

InstanceBank::InstanceBank(std::vector<int> ids, int feature_dim, int class_count,
                           double temperature)
    : features_(Matrix::Zero(static_cast<Index>(ids.size()), feature_dim)),
      raw_sharp_(Matrix::Zero(static_cast<Index>(ids.size()), class_count)),
      temperature_(temperature),
      ids_(std::move(ids)) {
  if (temperature_ <= 0.0) {
    throw std::invalid_argument("InstanceBank: temperature must be positive");
  }
  for (Index i = 0; i < static_cast<Index>(ids_.size()); ++i) {
    const auto [it, inserted] = row_of_id_.emplace(ids_[static_cast<std::size_t>(i)], i);
    if (!inserted) throw std::invalid_argument("InstanceBank: duplicate sample id");
  }
}

void InstanceBank::write(const std::vector<int>& sample_ids,
                         const Eigen::Ref<const Matrix>& features,
                         const Eigen::Ref<const Matrix>& probs) {
  if (static_cast<std::size_t>(features.rows()) != sample_ids.size() ||
      static_cast<std::size_t>(probs.rows()) != sample_ids.size()) {
    throw std::invalid_argument("bank write: one row per sample id required");
  }
  if (features.cols() != features_.cols() || probs.cols() != raw_sharp_.cols()) {
    throw std::invalid_argument("bank write: dimension mismatch");
  }
  const double inv_t = 1.0 / temperature_;
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    const auto it = row_of_id_.find(sample_ids[i]);
    if (it == row_of_id_.end()) {
      throw std::invalid_argument("bank write: unknown sample id");
    }
    features_.row(it->second) = features.row(static_cast<Index>(i));
    raw_sharp_.row(it->second) = probs.row(static_cast<Index>(i)).array().pow(inv_t);
  }
}

Matrix InstanceBank::balanced_read() const {
  const RowVector column_mass = raw_sharp_.colwise().sum();
  if ((column_mass.array() <= 0.0).any()) {
    throw std::runtime_error("balanced_read: class has zero total mass");
  }
  Matrix balanced = raw_sharp_;
  balanced.array().rowwise() /= column_mass.array();
  return balanced;
}

Index InstanceBank::row_of(int sample_id) const {
  const auto it = row_of_id_.find(sample_id);
  return it == row_of_id_.end() ? Index{-1} : it->second;
}

std::string InstanceBank::snapshot_json() const {
  nlohmann::json j;
  j["temperature"] = temperature_;
  j["ids"] = ids_;
  j["features"] = std::vector<double>(features_.data(), features_.data() + features_.size());
  j["raw_sharp"] =
      std::vector<double>(raw_sharp_.data(), raw_sharp_.data() + raw_sharp_.size());
  j["rows"] = features_.rows();
  j["feature_dim"] = features_.cols();
  j["class_count"] = raw_sharp_.cols();
  return j.dump();
}

BankInit bank_init(const NetParams& params, const Eigen::Ref<const Matrix>& bank_inputs,
                   std::vector<int> ids, double temperature, double gamma) {
  if (bank_inputs.rows() == 0) {
    throw std::invalid_argument("bank_init: empty bank population");
  }
  const int K = params.spec.class_count;
  const int b = params.spec.bottleneck_dim;
  const ForwardCache cache = forward(params, bank_inputs);

  InstanceBank instances(std::move(ids), b, K, temperature);
  instances.write(instances.ids(), cache.features, cache.probs);

  CentroidBank centroids(K, b, gamma);
  Matrix sums = Matrix::Zero(K, b);
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (Index i = 0; i < cache.features.rows(); ++i) {
    const int cls = static_cast<int>(argmax_row(cache.probs.row(i)));
    sums.row(cls) += cache.features.row(i);
    ++counts[static_cast<std::size_t>(cls)];
  }
  const RowVector global_mean = cache.features.colwise().mean();
  for (int j = 0; j < K; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      centroids.set_centroid(j, sums.row(j) / counts[static_cast<std::size_t>(j)], true);
    } else {
      centroids.set_centroid(j, global_mean, false);
    }
  }
  return BankInit{std::move(centroids), std::move(instances)};
}

}  // namespace atdoc
