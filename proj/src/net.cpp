#include "atdoc/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "atdoc/rng.hpp"
#include "json.hpp"

namespace atdoc {

namespace {

DenseLayer glorot_layer(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  DenseLayer layer;
  layer.weight.resize(fan_in, fan_out);
  for (Index i = 0; i < layer.weight.rows(); ++i) {
    for (Index j = 0; j < layer.weight.cols(); ++j) {
      layer.weight(i, j) = rng.uniform(-a, a);
    }
  }
  layer.bias = RowVector::Zero(fan_out);
  return layer;
}

}  // namespace

NetParams init_params(const NetSpec& spec, std::uint64_t seed) {
  if (spec.input_dim <= 0 || spec.hidden_dim <= 0 || spec.bottleneck_dim <= 0 ||
      spec.class_count <= 0) {
    throw std::invalid_argument("init_params: dimensions must be positive");
  }
  Rng rng(seed);
  NetParams params;
  params.spec = spec;
  params.layers.push_back(glorot_layer(spec.input_dim, spec.hidden_dim, rng));
  params.layers.push_back(glorot_layer(spec.hidden_dim, spec.bottleneck_dim, rng));
  params.layers.push_back(glorot_layer(spec.bottleneck_dim, spec.class_count, rng));
  return params;
}

ForwardCache forward(const NetParams& params, const Eigen::Ref<const Matrix>& inputs) {
  if (inputs.cols() != params.spec.input_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  ForwardCache cache;
  cache.input = inputs;
  cache.hidden_pre = inputs * params.layers[0].weight;
  cache.hidden_pre.rowwise() += params.layers[0].bias;
  cache.hidden = cache.hidden_pre.cwiseMax(0.0);
  cache.features = cache.hidden * params.layers[1].weight;
  cache.features.rowwise() += params.layers[1].bias;
  cache.logits = cache.features * params.layers[2].weight;
  cache.logits.rowwise() += params.layers[2].bias;
  cache.probs = softmax_rows(cache.logits);
  return cache;
}

NetGrads backward(const NetParams& params, const ForwardCache& cache,
                  const Eigen::Ref<const Matrix>& dlogits) {
  if (dlogits.rows() != cache.logits.rows() || dlogits.cols() != cache.logits.cols()) {
    throw std::invalid_argument("backward: dlogits shape mismatch");
  }
  NetGrads grads;
  grads.layers.resize(3);

  grads.layers[2].weight = cache.features.transpose() * dlogits;
  grads.layers[2].bias = dlogits.colwise().sum();
  Matrix dfeatures = dlogits * params.layers[2].weight.transpose();

  grads.layers[1].weight = cache.hidden.transpose() * dfeatures;
  grads.layers[1].bias = dfeatures.colwise().sum();
  Matrix dhidden = dfeatures * params.layers[1].weight.transpose();

  // ReLU subgradient: pass where the pre-activation was strictly positive.
  Matrix dpre = (cache.hidden_pre.array() > 0.0).cast<double>() * dhidden.array();

  grads.layers[0].weight = cache.input.transpose() * dpre;
  grads.layers[0].bias = dpre.colwise().sum();
  grads.dinput = dpre * params.layers[0].weight.transpose();
  return grads;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = data;
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw std::runtime_error("checkpoint: data length does not match shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

void save_params(const NetParams& params, const std::string& path) {
  nlohmann::json j;
  j["spec"] = {{"input_dim", params.spec.input_dim},
               {"hidden_dim", params.spec.hidden_dim},
               {"bottleneck_dim", params.spec.bottleneck_dim},
               {"class_count", params.spec.class_count}};
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    nlohmann::json lj;
    lj["weight"] = matrix_to_json(layer.weight);
    lj["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    j["layers"].push_back(lj);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_params: cannot open " + path);
  out << j.dump(2) << "\n";
}

NetParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_params: cannot open " + path);
  nlohmann::json j;
  in >> j;
  NetParams params;
  params.spec.input_dim = j.at("spec").at("input_dim").get<int>();
  params.spec.hidden_dim = j.at("spec").at("hidden_dim").get<int>();
  params.spec.bottleneck_dim = j.at("spec").at("bottleneck_dim").get<int>();
  params.spec.class_count = j.at("spec").at("class_count").get<int>();
  for (const auto& lj : j.at("layers")) {
    DenseLayer layer;
    layer.weight = matrix_from_json(lj.at("weight"));
    const auto bias = lj.at("bias").get<std::vector<double>>();
    layer.bias = Eigen::Map<const RowVector>(bias.data(), static_cast<Index>(bias.size()));
    params.layers.push_back(std::move(layer));
  }

  const auto& s = params.spec;
  const std::vector<std::pair<int, int>> expected{{s.input_dim, s.hidden_dim},
                                                  {s.hidden_dim, s.bottleneck_dim},
                                                  {s.bottleneck_dim, s.class_count}};
  if (params.layers.size() != expected.size()) {
    throw std::runtime_error("checkpoint: expected three layers");
  }
  for (std::size_t l = 0; l < expected.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.weight.rows() != expected[l].first || layer.weight.cols() != expected[l].second ||
        layer.bias.size() != expected[l].second) {
      throw std::runtime_error("checkpoint: layer shapes do not chain with the spec header");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw std::runtime_error("checkpoint: non-finite parameter");
    }
  }
  return params;
}

}  // namespace atdoc
