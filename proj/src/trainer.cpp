#include "atdoc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "atdoc/labelers.hpp"

namespace atdoc {

std::string method_name(Method method) {
  switch (method) {
    case Method::SourceOnly: return "source_only";
    case Method::MinEnt: return "minent";
    case Method::PlLee: return "pl_lee";
    case Method::PlWeighted: return "pl_weighted";
    case Method::AtdocNc: return "atdoc_nc";
    case Method::AtdocNa: return "atdoc_na";
  }
  throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "source_only") return Method::SourceOnly;
  if (name == "minent") return Method::MinEnt;
  if (name == "pl_lee") return Method::PlLee;
  if (name == "pl_weighted") return Method::PlWeighted;
  if (name == "atdoc_nc") return Method::AtdocNc;
  if (name == "atdoc_na") return Method::AtdocNa;
  throw std::invalid_argument("unknown method: " + name);
}

double resolved_lambda_max(const TrainConfig& config) {
  if (config.lambda_max >= 0.0) return config.lambda_max;
  switch (config.method) {
    case Method::SourceOnly: return 0.0;
    case Method::AtdocNc: return 0.1;
    default: return 0.2;
  }
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig config;
  bool have_method = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "method") { config.method = method_from_name(value.get<std::string>()); have_method = true; }
    else if (key == "task") config.task = task_from_name(value.get<std::string>());
    else if (key == "shots_per_class") config.shots_per_class = value.get<int>();
    else if (key == "target_class_count") config.target_class_count = value.get<int>();
    else if (key == "lambda_max") config.lambda_max = value.get<double>();
    else if (key == "m") config.m = value.get<int>();
    else if (key == "temperature") config.temperature = value.get<double>();
    else if (key == "gamma") config.gamma = value.get<double>();
    else if (key == "label_smoothing") config.label_smoothing = value.get<double>();
    else if (key == "batch_size") config.batch_size = value.get<int>();
    else if (key == "iterations") config.iterations = value.get<int>();
    else if (key == "lr0") config.lr0 = value.get<double>();
    else if (key == "momentum") config.momentum = value.get<double>();
    else if (key == "weight_decay") config.weight_decay = value.get<double>();
    else if (key == "lr_alpha") config.lr_alpha = value.get<double>();
    else if (key == "lr_beta") config.lr_beta = value.get<double>();
    else if (key == "lr_scale_head") config.lr_scale_head = value.get<double>();
    else if (key == "hidden_dim") config.hidden_dim = value.get<int>();
    else if (key == "bottleneck_dim") config.bottleneck_dim = value.get<int>();
    else if (key == "seed") config.seed = value.get<std::uint64_t>();
    else if (key == "source_memory") config.source_memory = value.get<bool>();
    else if (key == "raw_confidence") config.raw_confidence = value.get<bool>();
    else if (key == "no_confidence_weight") config.no_confidence_weight = value.get<bool>();
    else if (key == "track_pseudo_quality") config.track_pseudo_quality = value.get<bool>();
    else throw std::runtime_error("unknown config key: \"" + key + "\"");
  }
  if (!have_method) throw std::runtime_error("config is missing required key \"method\"");
  if (config.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (config.iterations < 0) throw std::runtime_error("iterations must be >= 0");
  if (config.m < 1) throw std::runtime_error("m must be >= 1");
  if (config.temperature <= 0.0) throw std::runtime_error("temperature must be > 0");
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw std::runtime_error("gamma must lie in (0, 1]");
  }
  if (config.task == Task::Pda && config.target_class_count < 1) {
    throw std::runtime_error("PDA requires target_class_count >= 1");
  }
  return config;
}

nlohmann::json config_to_json(const TrainConfig& config) {
  nlohmann::json j;
  j["method"] = method_name(config.method);
  j["task"] = task_name(config.task);
  j["shots_per_class"] = config.shots_per_class;
  j["target_class_count"] = config.target_class_count;
  j["lambda_max"] = resolved_lambda_max(config);
  j["m"] = config.m;
  j["temperature"] = config.temperature;
  j["gamma"] = config.gamma;
  j["label_smoothing"] = config.label_smoothing;
  j["batch_size"] = config.batch_size;
  j["iterations"] = config.iterations;
  j["lr0"] = config.lr0;
  j["momentum"] = config.momentum;
  j["weight_decay"] = config.weight_decay;
  j["lr_alpha"] = config.lr_alpha;
  j["lr_beta"] = config.lr_beta;
  j["lr_scale_head"] = config.lr_scale_head;
  j["hidden_dim"] = config.hidden_dim;
  j["bottleneck_dim"] = config.bottleneck_dim;
  j["seed"] = config.seed;
  j["source_memory"] = config.source_memory;
  j["raw_confidence"] = config.raw_confidence;
  j["no_confidence_weight"] = config.no_confidence_weight;
  j["track_pseudo_quality"] = config.track_pseudo_quality;
  return j;
}

double lambda_at(const RampupSchedule& schedule, int t) {
  if (t < 0 || t > schedule.total_iterations) {
    throw std::out_of_range("lambda_at: t outside [0, total]");
  }
  if (schedule.total_iterations == 0) return schedule.lambda_max;
  return schedule.lambda_max * static_cast<double>(t) /
         static_cast<double>(schedule.total_iterations);
}

double lr_at(double lr0, int t, int total, double alpha, double beta) {
  const double p = total > 0 ? static_cast<double>(t) / static_cast<double>(total) : 0.0;
  return lr0 * std::pow(1.0 + alpha * p, -beta);
}

OptState make_opt_state(const NetParams& params) {
  OptState opt;
  for (const auto& layer : params.layers) {
    DenseLayer v;
    v.weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
    v.bias = RowVector::Zero(layer.bias.size());
    opt.velocity.push_back(std::move(v));
  }
  return opt;
}

void sgd_step(NetParams& params, const NetGrads& grads, OptState& opt, double lr,
              double momentum, double weight_decay, double head_lr_scale) {
  if (grads.layers.size() != params.layers.size() ||
      opt.velocity.size() != params.layers.size()) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& v = opt.velocity[l];
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    const double layer_lr = (l + 1 == params.layers.size()) ? lr * head_lr_scale : lr;
    v.weight = momentum * v.weight + g.weight + weight_decay * p.weight;
    v.bias = momentum * v.bias + g.bias + weight_decay * p.bias;
    p.weight -= layer_lr * v.weight;
    p.bias -= layer_lr * v.bias;
  }
  ++opt.iteration;
}

namespace {

void add_grads(NetGrads& into, const NetGrads& from) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    into.layers[l].weight += from.layers[l].weight;
    into.layers[l].bias += from.layers[l].bias;
  }
}

NetGrads zero_grads(const NetParams& params) {
  NetGrads grads;
  for (const auto& layer : params.layers) {
    DenseLayer g;
    g.weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
    g.bias = RowVector::Zero(layer.bias.size());
    grads.layers.push_back(std::move(g));
  }
  return grads;
}

Matrix gather_rows(const Eigen::Ref<const Matrix>& source, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), source.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    out.row(i) = source.row(rows[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<Index>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const Index row : rows) out.push_back(labels[static_cast<std::size_t>(row)]);
  return out;
}

}  // namespace

Trainer::BatchCycler::BatchCycler(Index n, std::uint64_t seed)
    : rng(seed) {
  order.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
}

std::vector<Index> Trainer::BatchCycler::next(int batch_size) {
  std::vector<Index> batch;
  if (order.empty()) return batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    if (cursor == order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    batch.push_back(order[cursor++]);
  }
  return batch;
}

Trainer::Trainer(TrainConfig config, DomainDataset dataset)
    : config_(std::move(config)),
      dataset_(std::move(dataset)),
      params_(init_params(NetSpec{dataset_.feature_dim, config_.hidden_dim,
                                  config_.bottleneck_dim, dataset_.class_count},
                          derive_seed(config_.seed, 0))),
      opt_(make_opt_state(params_)),
      schedule_{resolved_lambda_max(config_), std::max(config_.iterations, 1)},
      source_cycler_(dataset_.source_count(), derive_seed(config_.seed, 10)),
      target_labeled_cycler_(dataset_.target_labeled_count(), derive_seed(config_.seed, 11)),
      target_unlabeled_cycler_(dataset_.target_unlabeled_count(),
                               derive_seed(config_.seed, 12)) {
  if (dataset_.target_unlabeled_count() == 0) {
    throw std::invalid_argument("Trainer: no unlabeled target samples");
  }
  const bool needs_banks =
      config_.method == Method::AtdocNc || config_.method == Method::AtdocNa;
  if (!needs_banks) return;

  // Bank population: all target samples, plus source with source_memory.
  const Index n_tu = dataset_.target_unlabeled_count();
  const Index n_tl = dataset_.target_labeled_count();
  const Index n_src = config_.source_memory ? dataset_.source_count() : 0;
  Matrix population(n_tu + n_tl + n_src, dataset_.feature_dim);
  population.topRows(n_tu) = dataset_.target_unlabeled_x;
  if (n_tl > 0) population.middleRows(n_tu, n_tl) = dataset_.target_labeled_x;
  if (n_src > 0) population.bottomRows(n_src) = dataset_.source_x;
  std::vector<int> ids(static_cast<std::size_t>(population.rows()));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);

  BankInit banks =
      bank_init(params_, population, std::move(ids), config_.temperature, config_.gamma);
  centroids_.emplace(std::move(banks.centroids));
  instances_.emplace(std::move(banks.instances));
}

std::vector<PseudoLabel> Trainer::make_pseudo_labels(const ForwardCache& cache,
                                                     const std::vector<Index>& rows) const {
  std::vector<PseudoLabel> pseudo;
  pseudo.reserve(rows.size());
  switch (config_.method) {
    case Method::PlLee:
    case Method::PlWeighted: {
      for (Index i = 0; i < cache.probs.rows(); ++i) {
        pseudo.push_back(argmax_label(cache.probs.row(i)));
      }
      break;
    }
    case Method::AtdocNc: {
      for (Index i = 0; i < cache.features.rows(); ++i) {
        pseudo.push_back(nc_label(cache.features.row(i), *centroids_));
      }
      break;
    }
    case Method::AtdocNa: {
      const Matrix balanced = instances_->balanced_read();
      for (Index i = 0; i < cache.features.rows(); ++i) {
        const int bank_id = bank_id_of_unlabeled(rows[static_cast<std::size_t>(i)]);
        PseudoLabel label =
            na_aggregate_balanced(cache.features.row(i), bank_id, *instances_, balanced,
                                  config_.m, config_.raw_confidence);
        if (config_.no_confidence_weight) label.confidence = 1.0;
        pseudo.push_back(std::move(label));
      }
      break;
    }
    default:
      break;
  }
  return pseudo;
}

void Trainer::update_banks(const ForwardCache& tu_cache, const std::vector<Index>& tu_rows,
                           const ForwardCache* tl_cache, const std::vector<Index>& tl_rows,
                           const ForwardCache* src_cache,
                           const std::vector<Index>& src_rows) {
  if (!centroids_ && !instances_) return;
  const Index n_tu = dataset_.target_unlabeled_count();
  const Index n_tl = dataset_.target_labeled_count();

  auto apply = [&](const ForwardCache& cache, const std::vector<Index>& rows, Index id_base) {
    if (centroids_) {
      std::vector<int> argmax_labels;
      argmax_labels.reserve(rows.size());
      for (Index i = 0; i < cache.probs.rows(); ++i) {
        argmax_labels.push_back(static_cast<int>(argmax_row(cache.probs.row(i))));
      }
      centroids_->centroid_update(cache.features, argmax_labels);
    }
    if (instances_) {
      std::vector<int> ids;
      ids.reserve(rows.size());
      for (const Index row : rows) ids.push_back(static_cast<int>(id_base + row));
      instances_->write(ids, cache.features, cache.probs);
    }
  };

  apply(tu_cache, tu_rows, 0);
  if (tl_cache && !tl_rows.empty()) apply(*tl_cache, tl_rows, n_tu);
  if (config_.source_memory && src_cache && !src_rows.empty()) {
    apply(*src_cache, src_rows, n_tu + n_tl);
  }
}

StepReport Trainer::train_step(const std::vector<Index>& source_rows,
                               const std::vector<Index>& target_labeled_rows,
                               const std::vector<Index>& target_unlabeled_rows, int t) {
  const bool needs_banks =
      config_.method == Method::AtdocNc || config_.method == Method::AtdocNa;
  if (needs_banks && (!centroids_ || !instances_)) {
    throw std::logic_error("train_step: banks not initialized for this method");
  }

  StepReport report;
  const double lambda = lambda_at(schedule_, t);
  const double lr =
      lr_at(config_.lr0, t, schedule_.total_iterations, config_.lr_alpha, config_.lr_beta);
  report.losses.lambda = lambda;
  report.losses.lr = lr;

  NetGrads grads = zero_grads(params_);
  bool any_term = false;

  // (1) supervised losses on labeled data
  std::optional<ForwardCache> src_cache;
  if (!source_rows.empty()) {
    src_cache = forward(params_, gather_rows(dataset_.source_x, source_rows));
    const LossOutput lsr =
        lsr_loss(src_cache->logits, gather_labels(dataset_.source_y, source_rows),
                 config_.label_smoothing);
    report.losses.lsr_source = lsr.value;
    add_grads(grads, backward(params_, *src_cache, lsr.dlogits));
    any_term = true;
  }
  std::optional<ForwardCache> tl_cache;
  if (!target_labeled_rows.empty()) {
    tl_cache =
        forward(params_, gather_rows(dataset_.target_labeled_x, target_labeled_rows));
    const LossOutput lsr = lsr_loss(
        tl_cache->logits, gather_labels(dataset_.target_labeled_y, target_labeled_rows),
        config_.label_smoothing);
    report.losses.lsr_target = lsr.value;
    add_grads(grads, backward(params_, *tl_cache, lsr.dlogits));
    any_term = true;
  }

  // (2)-(4) unlabeled-target regularizer; pseudo-labels come from the bank
  // state left by the previous iteration.
  std::optional<ForwardCache> tu_cache;
  if (config_.method != Method::SourceOnly) {
    tu_cache =
        forward(params_, gather_rows(dataset_.target_unlabeled_x, target_unlabeled_rows));
    report.pseudo = make_pseudo_labels(*tu_cache, target_unlabeled_rows);
    report.pseudo_rows = target_unlabeled_rows;

    LossOutput reg;
    switch (config_.method) {
      case Method::MinEnt: reg = minent_loss(tu_cache->probs); break;
      case Method::PlLee: reg = pl_loss_lee(tu_cache->probs); break;
      case Method::PlWeighted: reg = pl_loss_weighted(tu_cache->probs); break;
      case Method::AtdocNc: reg = nc_loss(tu_cache->probs, report.pseudo); break;
      case Method::AtdocNa: reg = na_loss(tu_cache->probs, report.pseudo); break;
      default: break;
    }
    report.losses.reg_raw = reg.value;
    report.losses.reg_scaled = lambda * reg.value;
    if (lambda > 0.0) {
      add_grads(grads, backward(params_, *tu_cache, Matrix(lambda * reg.dlogits)));
      any_term = true;
    }
  }

  report.losses.total =
      report.losses.lsr_source + report.losses.lsr_target + report.losses.reg_scaled;

  // (5) parameter update
  if (any_term) {
    sgd_step(params_, grads, opt_, lr, config_.momentum, config_.weight_decay,
             config_.lr_scale_head);
  }

  // (6) bank maintenance with this batch's pre-update features/predictions
  if (tu_cache) {
    update_banks(*tu_cache, target_unlabeled_rows, tl_cache ? &*tl_cache : nullptr,
                 target_labeled_rows, src_cache ? &*src_cache : nullptr, source_rows);
  }
  return report;
}

std::vector<int> Trainer::predict(const Eigen::Ref<const Matrix>& inputs) const {
  const ForwardCache cache = forward(params_, inputs);
  std::vector<int> preds;
  preds.reserve(static_cast<std::size_t>(cache.probs.rows()));
  for (Index i = 0; i < cache.probs.rows(); ++i) {
    preds.push_back(static_cast<int>(argmax_row(cache.probs.row(i))));
  }
  return preds;
}

RunResult Trainer::run() {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.config = config_to_json(config_);
  result.seed = config_.seed;
  result.loss_curve.reserve(static_cast<std::size_t>(config_.iterations));
  result.pseudo_quality_curve.reserve(static_cast<std::size_t>(config_.iterations));

  for (int t = 0; t < config_.iterations; ++t) {
    const auto src_rows = source_cycler_.next(config_.batch_size);
    const auto tl_rows = target_labeled_cycler_.next(config_.batch_size);
    const auto tu_rows = target_unlabeled_cycler_.next(config_.batch_size);
    const StepReport report = train_step(src_rows, tl_rows, tu_rows, t);
    result.loss_curve.push_back(report.losses);
    double quality = std::numeric_limits<double>::quiet_NaN();
    if (config_.track_pseudo_quality && !report.pseudo.empty()) {
      quality = pseudo_label_quality(report.pseudo, dataset_.target_unlabeled_eval,
                                     report.pseudo_rows);
    }
    result.pseudo_quality_curve.push_back(quality);
  }

  const auto target_preds = predict(dataset_.target_unlabeled_x);
  result.metrics.target_accuracy =
      sealed_accuracy(target_preds, dataset_.target_unlabeled_eval);
  const PerClassAccuracy per_class = sealed_per_class_accuracy(
      target_preds, dataset_.target_unlabeled_eval, dataset_.class_count);
  result.metrics.target_mean_class_accuracy = per_class.mean;
  result.metrics.per_class = per_class.recall;
  result.metrics.absent_classes = per_class.absent_classes;
  if (dataset_.source_count() > 0) {
    result.metrics.source_accuracy = accuracy(predict(dataset_.source_x), dataset_.source_y);
  } else {
    result.metrics.source_accuracy = std::numeric_limits<double>::quiet_NaN();
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run(const TrainConfig& config, const DomainDataset& dataset,
              NetParams* final_params) {
  SplitSpec split;
  split.task = config.task;
  split.shots_per_class = config.shots_per_class;
  split.target_class_count = config.target_class_count;
  split.seed = config.seed;
  Trainer trainer(config, apply_split(dataset, split));
  RunResult result = trainer.run();
  if (final_params) *final_params = trainer.params();
  return result;
}

}  // namespace atdoc
