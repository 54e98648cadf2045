#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atdoc/ndmath.hpp"

namespace atdoc {

/// Architecture of the model: feature extractor G (input -> hidden, ReLU;
/// hidden -> bottleneck, linear) and classifier head F (bottleneck -> classes).
struct NetSpec {
  int input_dim = 0;
  int hidden_dim = 64;
  int bottleneck_dim = 32;
  int class_count = 0;
};

/// One dense layer. Weight is (in x out) so a batch maps as X * W + bias.
struct DenseLayer {
  Matrix weight;
  RowVector bias;
};

/// Layers [0] and [1] form G, layer [2] is F.
struct NetParams {
  NetSpec spec;
  std::vector<DenseLayer> layers;
};

/// Everything the backward pass needs about one mini-batch.
struct ForwardCache {
  Matrix input;          // batch x d
  Matrix hidden_pre;     // batch x h, pre-ReLU
  Matrix hidden;         // batch x h
  Matrix features;       // batch x b, G output
  Matrix logits;         // batch x K
  Matrix probs;          // batch x K, softmax_rows(logits)
};

/// Shape-congruent with the NetParams it came from; also carries the gradient
/// w.r.t. the batch inputs (exposed for testing only).
struct NetGrads {
  std::vector<DenseLayer> layers;
  Matrix dinput;
};

/// Glorot-uniform weights (a = sqrt(6 / (fan_in + fan_out))), zero biases.
/// Reproducible per seed. Throws on non-positive dimensions.
NetParams init_params(const NetSpec& spec, std::uint64_t seed);

/// Deterministic forward pass. Throws when inputs.cols() != spec.input_dim.
ForwardCache forward(const NetParams& params, const Eigen::Ref<const Matrix>& inputs);

/// Exact reverse-mode gradients of the loss whose logit-gradient is dlogits.
NetGrads backward(const NetParams& params, const ForwardCache& cache,
                  const Eigen::Ref<const Matrix>& dlogits);

/// Checkpoint I/O. JSON with a shape header per layer; doubles are written
/// with round-trip precision so save/load is bit-exact.
void save_params(const NetParams& params, const std::string& path);
NetParams load_params(const std::string& path);

}  // namespace atdoc
