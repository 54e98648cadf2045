#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "atdoc/banks.hpp"
#include "atdoc/data.hpp"
#include "atdoc/evalkit.hpp"
#include "atdoc/losses.hpp"
#include "atdoc/net.hpp"
#include "atdoc/rng.hpp"
#include "json.hpp"

namespace atdoc {

enum class Method { SourceOnly, MinEnt, PlLee, PlWeighted, AtdocNc, AtdocNa };

std::string method_name(Method method);
Method method_from_name(const std::string& name);

/// Full experiment definition. Field names match the JSON config schema
/// one-to-one; unknown keys are rejected at parse time.
struct TrainConfig {
  Method method = Method::SourceOnly;
  Task task = Task::Uda;
  int shots_per_class = 3;      // SSDA / SSL splits
  int target_class_count = -1;  // PDA split; must be set for PDA
  double lambda_max = -1.0;     // < 0 means "method default"
  int m = 5;                    // NA neighborhood size
  double temperature = 0.5;     // NA sharpening
  double gamma = 0.1;           // NC centroid EMA
  double label_smoothing = 0.1;
  int batch_size = 12;
  int iterations = 3000;
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  double lr_alpha = 10.0;  // inverse-decay schedule constants
  double lr_beta = 0.75;
  double lr_scale_head = 1.0;
  int hidden_dim = 64;
  int bottleneck_dim = 32;
  std::uint64_t seed = 0;
  bool source_memory = false;        // also bank source-batch features/predictions
  bool raw_confidence = false;       // NA: skip row normalization of the confidence
  bool no_confidence_weight = false; // NA: train with unit weights
  bool track_pseudo_quality = true;  // read-only; never feeds back into training
};

/// Regularizer weight defaults: 0 for source_only, 0.1 for ATDOC-NC,
/// 0.2 otherwise. An explicit non-negative lambda_max always wins.
double resolved_lambda_max(const TrainConfig& config);

/// Strict schema: unknown keys throw with the offending key named; absent
/// keys take the defaults above.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& config);

/// Linear ramp: lambda(t) = lambda_max * t / total.
struct RampupSchedule {
  double lambda_max = 0.0;
  int total_iterations = 1;
};
double lambda_at(const RampupSchedule& schedule, int t);

/// Inverse-decay learning rate: lr0 * (1 + alpha * t/total)^(-beta).
double lr_at(double lr0, int t, int total, double alpha = 10.0, double beta = 0.75);

/// SGD-momentum state, shape-congruent with the parameters it updates.
struct OptState {
  std::vector<DenseLayer> velocity;
  int iteration = 0;
};
OptState make_opt_state(const NetParams& params);

/// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
/// The classifier head (last layer) uses lr * head_lr_scale.
void sgd_step(NetParams& params, const NetGrads& grads, OptState& opt, double lr,
              double momentum, double weight_decay, double head_lr_scale = 1.0);

/// What one iteration produced: the logged loss components plus the
/// pseudo-labels the regularizer trained on (empty for methods without any),
/// with their rows into target_unlabeled for read-only quality tracking.
struct StepReport {
  LossPoint losses;
  std::vector<PseudoLabel> pseudo;
  std::vector<Index> pseudo_rows;
};

/// Owns the mutable training state (params, optimizer, banks) for one run on
/// an already-split dataset. Mini-batch order comes from per-stream seeded
/// cyclic shuffles. Within an iteration, pseudo-labels are always read from
/// the bank state left by the previous iteration; the current batch is
/// written back only after the parameter update.
class Trainer {
 public:
  Trainer(TrainConfig config, DomainDataset dataset);

  /// One iteration over explicit batch rows (indices into the respective
  /// dataset splits). `t` is the 0-based iteration number.
  StepReport train_step(const std::vector<Index>& source_rows,
                        const std::vector<Index>& target_labeled_rows,
                        const std::vector<Index>& target_unlabeled_rows, int t);

  /// Full loop plus final evaluation.
  RunResult run();

  const NetParams& params() const { return params_; }
  /// Mutable access, e.g. to restore a checkpoint or probe the loop.
  NetParams& mutable_params() { return params_; }
  const TrainConfig& config() const { return config_; }
  const DomainDataset& dataset() const { return dataset_; }

  /// Mutable bank access for probing; null for methods without that bank.
  CentroidBank* centroid_bank() { return centroids_ ? &*centroids_ : nullptr; }
  InstanceBank* instance_bank() { return instances_ ? &*instances_ : nullptr; }

  /// Bank ids: target_unlabeled rows come first, then target_labeled, then
  /// (with source_memory) source rows.
  int bank_id_of_unlabeled(Index row) const { return static_cast<int>(row); }

 private:
  struct BatchCycler {
    BatchCycler(Index n, std::uint64_t seed);
    std::vector<Index> next(int batch_size);
    std::vector<Index> order;
    std::size_t cursor = 0;
    Rng rng;
  };

  std::vector<PseudoLabel> make_pseudo_labels(const ForwardCache& cache,
                                              const std::vector<Index>& rows) const;
  void update_banks(const ForwardCache& tu_cache, const std::vector<Index>& tu_rows,
                    const ForwardCache* tl_cache, const std::vector<Index>& tl_rows,
                    const ForwardCache* src_cache, const std::vector<Index>& src_rows);
  std::vector<int> predict(const Eigen::Ref<const Matrix>& inputs) const;

  TrainConfig config_;
  DomainDataset dataset_;
  NetParams params_;
  OptState opt_;
  RampupSchedule schedule_;
  std::optional<CentroidBank> centroids_;
  std::optional<InstanceBank> instances_;
  BatchCycler source_cycler_;
  BatchCycler target_labeled_cycler_;
  BatchCycler target_unlabeled_cycler_;
};

/// Split the dataset per the config, train for config.iterations steps and
/// evaluate. Bitwise reproducible for a fixed (config, dataset, seed). The
/// final parameters are copied out when `final_params` is given.
RunResult run(const TrainConfig& config, const DomainDataset& dataset,
              NetParams* final_params = nullptr);

}  // namespace atdoc
