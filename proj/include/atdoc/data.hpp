#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atdoc/ndmath.hpp"

namespace atdoc {

enum class Domain { Source, Target };

/// Label value meaning "no label known".
inline constexpr int kUnlabeled = -1;

struct Sample {
  RowVector x;
  int y = kUnlabeled;
  Domain domain = Domain::Source;
};

struct SealedAccess;

/// Ground-truth labels of unlabeled target samples. They exist only for
/// evaluation; the values are reachable solely through SealedAccess, which
/// the training path never includes.
class SealedLabels {
 public:
  SealedLabels() = default;
  explicit SealedLabels(std::vector<int> labels) : labels_(std::move(labels)) {}

  Index size() const { return static_cast<Index>(labels_.size()); }

  /// Shuffled copy (used by the label-leak audit). Does not reveal values.
  SealedLabels permuted(std::uint64_t seed) const;

 private:
  std::vector<int> labels_;
  friend struct SealedAccess;
};

/// A domain-shift classification dataset. Source samples are always labeled;
/// target_unlabeled carries its evaluation labels sealed.
struct DomainDataset {
  Matrix source_x;
  std::vector<int> source_y;
  Matrix target_labeled_x;
  std::vector<int> target_labeled_y;
  Matrix target_unlabeled_x;
  SealedLabels target_unlabeled_eval;
  int class_count = 0;
  int feature_dim = 0;

  Index source_count() const { return source_x.rows(); }
  Index target_labeled_count() const { return target_labeled_x.rows(); }
  Index target_unlabeled_count() const { return target_unlabeled_x.rows(); }
};

enum class Task { Uda, Ssda, Pda, Ssl };

struct SplitSpec {
  Task task = Task::Uda;
  int shots_per_class = 3;     // SSDA / SSL
  int target_class_count = 0;  // PDA: keep sealed classes < C_t
  std::uint64_t seed = 0;
};

std::string task_name(Task task);
Task task_from_name(const std::string& name);

/// Two interleaved half-circles per domain; the target distribution is the
/// source one rotated about the origin. Target labels are retained sealed.
DomainDataset gen_two_moons_shift(int n_per_domain, double rotation_deg, double noise_sigma,
                                  std::uint64_t seed);

/// K isotropic unit-variance Gaussians (mean separation >= 4, laid out on a
/// circle in the first two dimensions); the target means are translated by
/// `shift`. Balanced classes, n_per_class per class per domain.
DomainDataset gen_gaussian_blobs_shift(int class_count, int dim, int n_per_class,
                                       const RowVector& shift, std::uint64_t seed);

/// Carve a freshly generated dataset (empty target_labeled) into the task
/// layout: SSDA/SSL move seeded per-class shots into target_labeled (SSL then
/// drops the source); PDA filters target samples to classes < C_t, leaving
/// the source untouched. Throws when a class lacks the requested shots.
DomainDataset apply_split(const DomainDataset& ds, const SplitSpec& spec);

/// CSV round trip. Header: domain,label,f0,...,f{d-1}; label -1 means
/// unlabeled; values are written with round-trip precision.
void save_csv(const DomainDataset& ds, const std::string& path);
DomainDataset load_csv(const std::string& path);

}  // namespace atdoc
