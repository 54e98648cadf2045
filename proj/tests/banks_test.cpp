#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "atdoc/banks.hpp"
#include "atdoc/rng.hpp"
#include "json.hpp"
#include "testutil.hpp"

using namespace atdoc;

namespace {

InstanceBank random_bank(Rng& rng, int n, int feature_dim, int class_count, double T) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  InstanceBank bank(std::move(ids), feature_dim, class_count, T);
  bank.write(bank.ids(), testutil::random_matrix(rng, n, feature_dim, 0.1, 1.0),
             testutil::random_probs(rng, n, class_count));
  return bank;
}

}  // namespace

TEST_CASE("centroid_update blends per the EMA rule") {
  CentroidBank bank(2, 2, 0.1);
  RowVector c0(2);
  c0 << 1.0, 0.0;
  bank.set_centroid(0, c0, true);

  Matrix batch(2, 2);
  batch << 0.0, 1.0, 0.0, 1.0;  // batch centroid of class 0 is (0, 1)
  bank.centroid_update(batch, {0, 0});
  CHECK(bank.centroids()(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(bank.centroids()(0, 1) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("centroid_update leaves absent classes untouched") {
  CentroidBank bank(3, 2, 0.1);
  RowVector c(2);
  c << 0.5, -0.5;
  bank.set_centroid(2, c, true);
  const Matrix before = bank.centroids();

  Matrix batch(1, 2);
  batch << 4.0, 4.0;
  bank.centroid_update(batch, {0});
  CHECK(bank.centroids().row(2) == before.row(2));
  CHECK(bank.centroids().row(1) == before.row(1));
  CHECK(bank.centroids().row(0) != before.row(0));
}

TEST_CASE("first observation replaces an uninitialized centroid") {
  CentroidBank bank(2, 2, 0.1);
  RowVector global(2);
  global << 9.0, 9.0;
  bank.set_centroid(0, global, false);
  Matrix batch(1, 2);
  batch << 1.0, 2.0;
  bank.centroid_update(batch, {0});
  CHECK(bank.centroids()(0, 0) == 1.0);  // adopted directly, no blend
  CHECK(bank.centroids()(0, 1) == 2.0);
  CHECK(bank.is_initialized(0));
}

TEST_CASE("repeated identical updates decay geometrically") {
  Rng rng(17);
  const double gamma = 0.1;
  CentroidBank bank(1, 3, gamma);
  RowVector c0(3), v(3);
  for (int k = 0; k < 3; ++k) {
    c0[k] = rng.uniform(-1.0, 1.0);
    v[k] = rng.uniform(-1.0, 1.0);
  }
  bank.set_centroid(0, c0, true);
  Matrix batch(1, 3);
  batch.row(0) = v;
  const double initial_gap = (c0 - v).norm();
  for (int n = 1; n <= 10; ++n) {
    bank.centroid_update(batch, {0});
    const double gap = (bank.centroids().row(0) - v).norm();
    CHECK(std::abs(gap - std::pow(1.0 - gamma, n) * initial_gap) < 1e-10);
  }
}

TEST_CASE("updated centroid norm stays inside the convex hull bound") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = rng.uniform(0.05, 1.0);
    CentroidBank bank(1, 4, gamma);
    Matrix old_c = testutil::random_matrix(rng, 1, 4, -2.0, 2.0);
    bank.set_centroid(0, old_c.row(0), true);
    Matrix batch = testutil::random_matrix(rng, 3, 4, -2.0, 2.0);
    bank.centroid_update(batch, {0, 0, 0});
    const double batch_norm = (batch.colwise().mean()).norm();
    const double bound = std::max(old_c.row(0).norm(), batch_norm);
    CHECK(bank.centroids().row(0).norm() <= bound + 1e-12);
  }
}

TEST_CASE("centroid_update validates shapes and labels") {
  CentroidBank bank(2, 3, 0.1);
  Matrix bad(1, 2);
  bad << 1.0, 2.0;
  CHECK_THROWS_AS(bank.centroid_update(bad, {0}), std::invalid_argument);
  Matrix ok(1, 3);
  ok << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(bank.centroid_update(ok, {5}), std::invalid_argument);
  CHECK_THROWS_AS(bank.centroid_update(ok, {0, 1}), std::invalid_argument);
}

TEST_CASE("bank write sharpens with the configured temperature") {
  InstanceBank bank({7}, 2, 2, 0.5);
  Matrix f(1, 2), p(1, 2);
  f << 0.3, 0.4;
  p << 0.8, 0.2;
  bank.write({7}, f, p);
  CHECK(bank.features().row(0) == f.row(0));
  CHECK(bank.raw_sharp()(0, 0) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(bank.raw_sharp()(0, 1) == doctest::Approx(0.04).epsilon(1e-12));

  InstanceBank identity_bank({7}, 2, 2, 1.0);
  identity_bank.write({7}, f, p);
  CHECK(identity_bank.raw_sharp().row(0) == p.row(0));

  // overwrite, no moving average
  Matrix p2(1, 2);
  p2 << 0.5, 0.5;
  bank.write({7}, f, p2);
  CHECK(bank.raw_sharp()(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bank write rejects unknown ids") {
  InstanceBank bank({0, 1}, 2, 2, 0.5);
  Matrix f(1, 2), p(1, 2);
  f << 1.0, 0.0;
  p << 0.5, 0.5;
  CHECK_THROWS_WITH_AS(bank.write({3}, f, p), "bank write: unknown sample id",
                       std::invalid_argument);
}

TEST_CASE("balanced_read column-normalizes the sharpened table") {
  InstanceBank bank({0, 1}, 2, 2, 0.5);
  Matrix f(2, 2), p(2, 2);
  f << 1.0, 0.0, 0.0, 1.0;
  p << 0.8, 0.2, 0.2, 0.8;
  bank.write({0, 1}, f, p);
  const Matrix balanced = bank.balanced_read();
  CHECK(balanced(0, 0) == doctest::Approx(0.9412).epsilon(1e-4));
  CHECK(balanced(0, 1) == doctest::Approx(0.0588).epsilon(1e-4));
  CHECK(balanced(1, 0) == doctest::Approx(0.0588).epsilon(1e-4));
  CHECK(balanced(1, 1) == doctest::Approx(0.9412).epsilon(1e-4));
}

TEST_CASE("balanced_read of a single-sample bank is all ones") {
  InstanceBank bank({0}, 2, 3, 0.5);
  Matrix f(1, 2), p(1, 3);
  f << 1.0, 2.0;
  p << 0.2, 0.5, 0.3;
  bank.write({0}, f, p);
  const Matrix balanced = bank.balanced_read();
  CHECK((balanced.array() == 1.0).all());
}

TEST_CASE("balanced_read of a uniform bank is 1/N everywhere") {
  const int n = 8;
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(i);
  InstanceBank bank(ids, 2, 4, 1.0);
  Matrix f = Matrix::Ones(n, 2);
  Matrix p = Matrix::Constant(n, 4, 0.25);
  bank.write(ids, f, p);
  const Matrix balanced = bank.balanced_read();
  for (Index i = 0; i < balanced.rows(); ++i) {
    for (Index j = 0; j < balanced.cols(); ++j) {
      CHECK(balanced(i, j) == doctest::Approx(1.0 / n).epsilon(1e-14));
    }
  }
}

TEST_CASE("balanced_read errors on a zero class column") {
  InstanceBank bank({0}, 2, 2, 0.5);
  Matrix f(1, 2), p(1, 2);
  f << 1.0, 0.0;
  p << 1.0, 0.0;  // class 1 never predicted
  bank.write({0}, f, p);
  CHECK_THROWS_WITH_AS(bank.balanced_read(), "balanced_read: class has zero total mass",
                       std::runtime_error);
}

TEST_CASE("balanced_read columns sum to one on random banks") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(60));
    const int K = 2 + static_cast<int>(rng.below(6));
    InstanceBank bank = random_bank(rng, n, 3, K, 0.5);
    const Matrix balanced = bank.balanced_read();
    for (Index k = 0; k < balanced.cols(); ++k) {
      CHECK(std::abs(balanced.col(k).sum() - 1.0) < 1e-10);
    }
    // unchanged inputs: a second read is bitwise identical
    CHECK(bank.balanced_read() == balanced);
  }
}

TEST_CASE("bank_init fills both banks from one evaluation pass") {
  // Identity-like net: features equal the (positive) inputs, the head is a
  // strong diagonal so each sample is confidently its own class.
  NetParams params;
  params.spec = NetSpec{2, 2, 2, 2};
  params.layers.resize(3);
  params.layers[0].weight = Matrix::Identity(2, 2);
  params.layers[0].bias = RowVector::Zero(2);
  params.layers[1].weight = Matrix::Identity(2, 2);
  params.layers[1].bias = RowVector::Zero(2);
  params.layers[2].weight = 10.0 * Matrix::Identity(2, 2);
  params.layers[2].bias = RowVector::Zero(2);

  Matrix inputs(2, 2);
  inputs << 1.0, 0.01, 0.01, 1.0;
  BankInit banks = bank_init(params, inputs, {0, 1}, 0.5, 0.1);
  CHECK(banks.instances.size() == 2);
  CHECK(banks.instances.features() == inputs);
  CHECK(banks.centroids.centroids().row(0) == inputs.row(0));
  CHECK(banks.centroids.centroids().row(1) == inputs.row(1));
  CHECK(banks.centroids.is_initialized(0));
  CHECK(banks.centroids.is_initialized(1));
}

TEST_CASE("bank_init flags empty pseudo-classes and uses the global mean") {
  NetParams params;
  params.spec = NetSpec{2, 2, 2, 2};
  params.layers.resize(3);
  params.layers[0].weight = Matrix::Identity(2, 2);
  params.layers[0].bias = RowVector::Zero(2);
  params.layers[1].weight = Matrix::Identity(2, 2);
  params.layers[1].bias = RowVector::Zero(2);
  params.layers[2].weight = Matrix::Zero(2, 2);
  params.layers[2].bias = RowVector(2);
  params.layers[2].bias << 10.0, 0.0;  // everything lands in class 0

  Matrix inputs(3, 2);
  inputs << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  BankInit banks = bank_init(params, inputs, {0, 1, 2}, 0.5, 0.1);
  CHECK(banks.instances.size() == 3);
  CHECK(banks.centroids.is_initialized(0));
  CHECK_FALSE(banks.centroids.is_initialized(1));
  const RowVector global_mean = inputs.colwise().mean();
  CHECK(banks.centroids.centroids().row(1) == global_mean);
}

TEST_CASE("instance bank snapshot is valid JSON") {
  Rng rng(3);
  InstanceBank bank = random_bank(rng, 4, 2, 3, 0.5);
  const auto j = nlohmann::json::parse(bank.snapshot_json());
  CHECK(j.at("rows").get<int>() == 4);
  CHECK(j.at("ids").size() == 4);
}
