#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "atdoc/losses.hpp"
#include "atdoc/net.hpp"
#include "atdoc/rng.hpp"
#include "testutil.hpp"

using namespace atdoc;

namespace {

NetParams zeroed(const NetSpec& spec) {
  NetParams params = init_params(spec, 0);
  for (auto& layer : params.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return params;
}

/// Redraw until no hidden pre-activation sits near the ReLU kink, where
/// central differences are meaningless.
std::pair<NetParams, Matrix> kink_free_instance(Rng& rng, const NetSpec& spec, Index batch,
                                                double margin) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const NetParams params = init_params(spec, rng.below(1u << 30));
    const Matrix inputs = testutil::random_matrix(rng, batch, spec.input_dim, -2.0, 2.0);
    const ForwardCache cache = forward(params, inputs);
    if (cache.hidden_pre.array().abs().minCoeff() > margin) return {params, inputs};
  }
  FAIL("could not draw a kink-free instance");
  return {NetParams{}, Matrix{}};
}

}  // namespace

TEST_CASE("init_params is reproducible per seed") {
  const NetSpec spec{4, 6, 3, 2};
  CHECK(testutil::params_equal(init_params(spec, 7), init_params(spec, 7)));
  CHECK_FALSE(testutil::params_equal(init_params(spec, 7), init_params(spec, 8)));
}

TEST_CASE("init_params rejects bad dimensions") {
  CHECK_THROWS_AS(init_params(NetSpec{0, 6, 3, 2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(init_params(NetSpec{4, -1, 3, 2}, 0), std::invalid_argument);
}

TEST_CASE("init_params weight statistics") {
  // One hidden layer of 100x100 gives 1e4 draws from uniform(-a, a).
  const NetSpec spec{100, 100, 3, 2};
  const NetParams params = init_params(spec, 3);
  const Matrix& w = params.layers[0].weight;
  const double a = std::sqrt(6.0 / (100 + 100));
  CHECK(w.maxCoeff() <= a);
  CHECK(w.minCoeff() >= -a);
  const double mean = w.mean();
  const double sigma_mean = (a / std::sqrt(3.0)) / std::sqrt(static_cast<double>(w.size()));
  CHECK(std::abs(mean) < 3.0 * sigma_mean);
  for (const auto& layer : params.layers) CHECK(layer.bias.isZero(0.0));
}

TEST_CASE("forward with zero parameters gives uniform probabilities") {
  const NetSpec spec{3, 5, 4, 4};
  const NetParams params = zeroed(spec);
  Rng rng(1);
  const Matrix inputs = testutil::random_matrix(rng, 6, 3);
  const ForwardCache cache = forward(params, inputs);
  CHECK(cache.features.rows() == 6);
  CHECK(cache.features.cols() == 4);
  CHECK((cache.probs.array() == 0.25).all());
}

TEST_CASE("forward through an identity extractor exposes the head directly") {
  const int n = 3;
  NetParams params = zeroed(NetSpec{n, n, n, 2});
  params.layers[0].weight = Matrix::Identity(n, n);
  params.layers[1].weight = Matrix::Identity(n, n);
  Rng rng(2);
  params.layers[2].weight = testutil::random_matrix(rng, n, 2);
  params.layers[2].bias << 0.3, -0.2;

  for (int k = 0; k < n; ++k) {
    Matrix basis = Matrix::Zero(1, n);
    basis(0, k) = 1.0;  // positive, so ReLU passes it through
    const ForwardCache cache = forward(params, basis);
    CHECK(cache.features.row(0) == basis.row(0));
    const RowVector expected = params.layers[2].weight.row(k) + params.layers[2].bias;
    CHECK(cache.logits.row(0) == expected);
  }
}

TEST_CASE("forward is deterministic and checks input dimension") {
  const NetSpec spec{4, 6, 3, 2};
  const NetParams params = init_params(spec, 9);
  Rng rng(3);
  const Matrix inputs = testutil::random_matrix(rng, 5, 4);
  const ForwardCache a = forward(params, inputs);
  const ForwardCache b = forward(params, inputs);
  CHECK(a.probs == b.probs);
  CHECK(a.features == b.features);

  const Matrix bad = testutil::random_matrix(rng, 5, 3);
  CHECK_THROWS_AS(forward(params, bad), std::invalid_argument);
}

TEST_CASE("backward of zero dlogits is zero everywhere") {
  const NetSpec spec{4, 6, 3, 2};
  const NetParams params = init_params(spec, 5);
  Rng rng(4);
  const Matrix inputs = testutil::random_matrix(rng, 5, 4);
  const ForwardCache cache = forward(params, inputs);
  const NetGrads grads = backward(params, cache, Matrix::Zero(5, 2));
  for (const auto& layer : grads.layers) {
    CHECK(layer.weight.isZero(0.0));
    CHECK(layer.bias.isZero(0.0));
  }
  CHECK(grads.dinput.isZero(0.0));
}

TEST_CASE("backward matches the hand-derived scalar chain rule") {
  NetParams params = zeroed(NetSpec{1, 1, 1, 1});
  const double w1 = 0.8, b1 = 0.1, w2 = -1.2, b2 = 0.4, w3 = 0.5, b3 = -0.3;
  params.layers[0].weight(0, 0) = w1;
  params.layers[0].bias[0] = b1;
  params.layers[1].weight(0, 0) = w2;
  params.layers[1].bias[0] = b2;
  params.layers[2].weight(0, 0) = w3;
  params.layers[2].bias[0] = b3;

  const double x = 1.5;
  Matrix input(1, 1);
  input << x;
  const ForwardCache cache = forward(params, input);
  const double z1 = x * w1 + b1;  // 1.3 > 0, ReLU active
  const double f = z1 * w2 + b2;
  CHECK(cache.features(0, 0) == doctest::Approx(f).epsilon(1e-15));

  const double g = 0.7;
  Matrix dlogits(1, 1);
  dlogits << g;
  const NetGrads grads = backward(params, cache, dlogits);
  CHECK(grads.layers[2].weight(0, 0) == doctest::Approx(g * f).epsilon(1e-15));
  CHECK(grads.layers[2].bias[0] == doctest::Approx(g).epsilon(1e-15));
  CHECK(grads.layers[1].weight(0, 0) == doctest::Approx(g * w3 * z1).epsilon(1e-15));
  CHECK(grads.layers[1].bias[0] == doctest::Approx(g * w3).epsilon(1e-15));
  CHECK(grads.layers[0].weight(0, 0) == doctest::Approx(g * w3 * w2 * x).epsilon(1e-15));
  CHECK(grads.layers[0].bias[0] == doctest::Approx(g * w3 * w2).epsilon(1e-15));
  CHECK(grads.dinput(0, 0) == doctest::Approx(g * w3 * w2 * w1).epsilon(1e-15));
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(123);
  const NetSpec spec{5, 7, 4, 3};
  for (int instance = 0; instance < 20; ++instance) {
    const auto [params, inputs] = kink_free_instance(rng, spec, 4, 1e-3);
    const Matrix direction = testutil::random_matrix(rng, 4, 3);

    // L(params) = sum(direction .* logits(params)) has dlogits == direction.
    const ForwardCache cache = forward(params, inputs);
    const NetGrads grads = backward(params, cache, direction);
    auto loss = [&](const NetParams& p) {
      return (forward(p, inputs).logits.array() * direction.array()).sum();
    };
    CHECK(testutil::fd_param_check(loss, params, grads) < 1e-4);
  }
}

TEST_CASE("backward composed with cross-entropy matches finite differences") {
  Rng rng(321);
  const NetSpec spec{4, 6, 3, 3};
  for (int instance = 0; instance < 5; ++instance) {
    const auto [params, inputs] = kink_free_instance(rng, spec, 3, 1e-3);
    std::vector<int> labels;
    for (int i = 0; i < 3; ++i) labels.push_back(static_cast<int>(rng.below(3)));

    const ForwardCache cache = forward(params, inputs);
    const LossOutput lsr = lsr_loss(cache.logits, labels, 0.1);
    const NetGrads grads = backward(params, cache, lsr.dlogits);
    auto loss = [&](const NetParams& p) {
      return lsr_loss(forward(p, inputs).logits, labels, 0.1).value;
    };
    CHECK(testutil::fd_param_check(loss, params, grads) < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const NetSpec spec{4, 6, 3, 2};
  const NetParams params = init_params(spec, 99);
  const std::string path = "net_test_checkpoint.json";
  save_params(params, path);
  const NetParams loaded = load_params(path);
  CHECK(loaded.spec.input_dim == spec.input_dim);
  CHECK(loaded.spec.hidden_dim == spec.hidden_dim);
  CHECK(loaded.spec.bottleneck_dim == spec.bottleneck_dim);
  CHECK(loaded.spec.class_count == spec.class_count);
  CHECK(testutil::params_equal(params, loaded));
  std::remove(path.c_str());
}
