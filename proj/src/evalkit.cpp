#include "atdoc/evalkit.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "atdoc/detail/sealed_access.hpp"

namespace atdoc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  if (preds.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

PerClassAccuracy per_class_mean_accuracy(const std::vector<int>& preds,
                                         const std::vector<int>& truth, int class_count) {
  if (preds.empty()) throw std::invalid_argument("per_class_mean_accuracy: empty input");
  if (preds.size() != truth.size()) {
    throw std::invalid_argument("per_class_mean_accuracy: length mismatch");
  }
  std::vector<std::size_t> total(static_cast<std::size_t>(class_count), 0);
  std::vector<std::size_t> correct(static_cast<std::size_t>(class_count), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    if (y < 0 || y >= class_count) {
      throw std::invalid_argument("per_class_mean_accuracy: truth label out of range");
    }
    ++total[static_cast<std::size_t>(y)];
    if (preds[i] == y) ++correct[static_cast<std::size_t>(y)];
  }
  PerClassAccuracy out;
  out.recall.resize(static_cast<std::size_t>(class_count), kNaN);
  double sum = 0.0;
  int defined = 0;
  for (int j = 0; j < class_count; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (total[sj] == 0) {
      out.absent_classes.push_back(j);
      continue;
    }
    out.recall[sj] = static_cast<double>(correct[sj]) / static_cast<double>(total[sj]);
    sum += out.recall[sj];
    ++defined;
  }
  out.mean = defined > 0 ? sum / defined : kNaN;
  return out;
}

double pseudo_label_quality(const std::vector<PseudoLabel>& pseudo, const SealedLabels& truth,
                            const std::vector<Index>& truth_rows) {
  if (pseudo.size() != truth_rows.size()) {
    throw std::invalid_argument("pseudo_label_quality: one row index per pseudo-label");
  }
  const auto& labels = SealedAccess::labels(truth);
  std::size_t known = 0, correct = 0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const Index row = truth_rows[i];
    if (row < 0 || row >= static_cast<Index>(labels.size())) {
      throw std::out_of_range("pseudo_label_quality: row index out of range");
    }
    const int y = labels[static_cast<std::size_t>(row)];
    if (y == kUnlabeled) continue;
    ++known;
    if (pseudo[i].label == y) ++correct;
  }
  if (known == 0) return kNaN;
  return static_cast<double>(correct) / static_cast<double>(known);
}

double sealed_accuracy(const std::vector<int>& preds, const SealedLabels& truth) {
  const auto& labels = SealedAccess::labels(truth);
  if (preds.size() != labels.size()) {
    throw std::invalid_argument("sealed_accuracy: length mismatch");
  }
  std::size_t known = 0, correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == kUnlabeled) continue;
    ++known;
    if (preds[i] == labels[i]) ++correct;
  }
  if (known == 0) return kNaN;
  return static_cast<double>(correct) / static_cast<double>(known);
}

PerClassAccuracy sealed_per_class_accuracy(const std::vector<int>& preds,
                                           const SealedLabels& truth, int class_count) {
  const auto& labels = SealedAccess::labels(truth);
  if (preds.size() != labels.size()) {
    throw std::invalid_argument("sealed_per_class_accuracy: length mismatch");
  }
  std::vector<int> known_preds, known_truth;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == kUnlabeled) continue;
    known_preds.push_back(preds[i]);
    known_truth.push_back(labels[i]);
  }
  if (known_preds.empty()) {
    PerClassAccuracy out;
    out.recall.resize(static_cast<std::size_t>(class_count), kNaN);
    out.mean = kNaN;
    for (int j = 0; j < class_count; ++j) out.absent_classes.push_back(j);
    return out;
  }
  return per_class_mean_accuracy(known_preds, known_truth, class_count);
}

nlohmann::json run_result_to_json(const RunResult& result) {
  nlohmann::json j;
  j["config"] = result.config;
  j["seed"] = result.seed;
  j["wall_seconds"] = result.wall_seconds;

  nlohmann::json metrics;
  metrics["target_accuracy"] = result.metrics.target_accuracy;
  metrics["target_mean_class_accuracy"] = result.metrics.target_mean_class_accuracy;
  metrics["per_class_accuracy"] = result.metrics.per_class;
  metrics["absent_classes"] = result.metrics.absent_classes;
  metrics["source_accuracy"] = result.metrics.source_accuracy;
  j["metrics"] = metrics;

  nlohmann::json curve = nlohmann::json::array();
  for (const auto& point : result.loss_curve) {
    curve.push_back({{"lsr_source", point.lsr_source},
                     {"lsr_target", point.lsr_target},
                     {"reg_raw", point.reg_raw},
                     {"lambda", point.lambda},
                     {"reg_scaled", point.reg_scaled},
                     {"total", point.total},
                     {"lr", point.lr}});
  }
  j["loss_curve"] = curve;
  j["pseudo_quality_curve"] = result.pseudo_quality_curve;  // NaN -> null
  return j;
}

void save_run_result(const RunResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_run_result: cannot open " + path);
  out << run_result_to_json(result).dump(2) << "\n";
}

std::string make_report_csv(const std::vector<ReportRow>& rows,
                            const std::vector<std::string>& warnings) {
  std::ostringstream out;
  out.precision(17);
  out << "config_hash,method,task,seed,accuracy,mean_class_accuracy,runtime_seconds\n";
  for (const auto& row : rows) {
    out << row.config_hash << ',' << row.method << ',' << row.task << ',' << row.seed << ','
        << row.accuracy << ',' << row.mean_class_accuracy << ',' << row.runtime_seconds
        << '\n';
  }

  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& row : rows) groups[{row.method, row.task}].push_back(row.accuracy);
  for (const auto& [key, accs] : groups) {
    double mean = 0.0;
    for (const double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (const double a : accs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(accs.size());
    out << "group," << key.first << ',' << key.second << ",n=" << accs.size() << ','
        << mean << ',' << std::sqrt(var) << ",\n";
  }
  for (const auto& warning : warnings) out << "# warning: " << warning << '\n';
  return out.str();
}

}  // namespace atdoc
