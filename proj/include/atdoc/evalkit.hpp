#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atdoc/data.hpp"
#include "atdoc/labelers.hpp"
#include "json.hpp"

namespace atdoc {

/// Fraction of matching entries. Throws on empty or mismatched inputs.
double accuracy(const std::vector<int>& preds, const std::vector<int>& truth);

struct PerClassAccuracy {
  std::vector<double> recall;      // NaN for classes absent from truth
  double mean = 0.0;               // unweighted mean over defined entries
  std::vector<int> absent_classes; // reported as a warning, excluded from mean
};

/// Per-class recall and its unweighted mean. Classes absent from the truth
/// are flagged and excluded from the mean rather than treated as errors
/// (partial-set splits legitimately produce them).
PerClassAccuracy per_class_mean_accuracy(const std::vector<int>& preds,
                                         const std::vector<int>& truth, int class_count);

/// Accuracy of pseudo-labels against sealed evaluation labels. `truth_rows[i]`
/// is the sealed row that pseudo[i] refers to. Entries whose sealed label is
/// unknown are skipped; with no known labels the result is NaN. Read-only:
/// nothing flows back into training.
double pseudo_label_quality(const std::vector<PseudoLabel>& pseudo, const SealedLabels& truth,
                            const std::vector<Index>& truth_rows);

/// Hard-prediction accuracy against sealed labels (final evaluation).
double sealed_accuracy(const std::vector<int>& preds, const SealedLabels& truth);
PerClassAccuracy sealed_per_class_accuracy(const std::vector<int>& preds,
                                           const SealedLabels& truth, int class_count);

/// One iteration's logged loss components. `total` is exactly
/// lsr_source + lsr_target + reg_scaled.
struct LossPoint {
  double lsr_source = 0.0;
  double lsr_target = 0.0;
  double reg_raw = 0.0;
  double lambda = 0.0;
  double reg_scaled = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct FinalMetrics {
  double target_accuracy = 0.0;
  double target_mean_class_accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<int> absent_classes;
  double source_accuracy = 0.0;
};

/// Everything one training run produces. Curves have one entry per iteration;
/// pseudo-label quality is NaN (serialized as null) for methods that train
/// without pseudo-labels.
struct RunResult {
  nlohmann::json config;
  FinalMetrics metrics;
  std::vector<LossPoint> loss_curve;
  std::vector<double> pseudo_quality_curve;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

nlohmann::json run_result_to_json(const RunResult& result);
void save_run_result(const RunResult& result, const std::string& path);

/// One row of the aggregate report.
struct ReportRow {
  std::string config_hash;
  std::string method;
  std::string task;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean_class_accuracy = 0.0;
  double runtime_seconds = 0.0;
};

/// CSV with one row per run plus mean/std rows per (method, task) group;
/// warnings (unreadable inputs) land in footer comment rows.
std::string make_report_csv(const std::vector<ReportRow>& rows,
                            const std::vector<std::string>& warnings);

}  // namespace atdoc
