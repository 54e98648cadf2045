#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "atdoc/ndmath.hpp"
#include "atdoc/rng.hpp"
#include "testutil.hpp"

using namespace atdoc;

TEST_CASE("softmax_rows basic values") {
  Matrix logits(1, 2);
  logits << 0.0, 0.0;
  Matrix p = softmax_rows(logits);
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  logits.resize(1, 2);
  logits << 1.0, 0.0;
  p = softmax_rows(logits);
  CHECK(p(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));
}

TEST_CASE("softmax_rows is stable for huge logits") {
  Matrix logits(1, 3);
  logits << 1000.0, 1000.0, 1000.0;
  const Matrix p = softmax_rows(logits);
  CHECK(p.allFinite());
  for (int k = 0; k < 3; ++k) CHECK(p(0, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax_rows rejects empty input") {
  Matrix empty(0, 3);
  CHECK_THROWS_WITH_AS(softmax_rows(empty), "softmax_rows: empty input",
                       std::invalid_argument);
}

TEST_CASE("softmax_rows rows sum to one on random input") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix logits = testutil::random_matrix(rng, 7, 5, -30.0, 30.0);
    const Matrix p = softmax_rows(logits);
    CHECK(p.allFinite());
    CHECK((p.array() >= 0.0).all());
    for (Index i = 0; i < p.rows(); ++i) {
      CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("cosine_sim basic values") {
  Matrix q(1, 2), k(1, 2);
  q << 1.0, 0.0;
  k << 0.0, 1.0;
  CHECK(cosine_sim(q, k)(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

  q << 2.0, 0.0;
  k << 1.0, 0.0;
  CHECK(cosine_sim(q, k)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  q << 1.0, 1.0;
  k << 1.0, 0.0;
  CHECK(cosine_sim(q, k)(0, 0) == doctest::Approx(0.7071).epsilon(1e-4));
}

TEST_CASE("cosine_sim rejects zero rows and dimension mismatch") {
  Matrix q(1, 2), k(1, 2);
  q << 0.0, 0.0;
  k << 1.0, 0.0;
  CHECK_THROWS_WITH_AS(cosine_sim(q, k), "cosine_sim: zero vector has undefined direction",
                       std::invalid_argument);
  Matrix k3(1, 3);
  k3 << 1.0, 0.0, 0.0;
  q << 1.0, 0.0;
  CHECK_THROWS_AS(cosine_sim(q, k3), std::invalid_argument);
}

TEST_CASE("cosine_sim self-similarity diagonal is one") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testutil::random_matrix(rng, 6, 4, 0.1, 2.0);
    const Matrix sims = cosine_sim(a, a);
    for (Index i = 0; i < a.rows(); ++i) CHECK(std::abs(sims(i, i) - 1.0) < 1e-12);
    CHECK((sims.array() <= 1.0).all());
    CHECK((sims.array() >= -1.0).all());
  }
}

namespace {

std::vector<Index> topk_oracle(const Vector& scores, Index k, std::optional<Index> exclude) {
  std::vector<Index> idx;
  for (Index i = 0; i < scores.size(); ++i) {
    if (exclude && *exclude == i) continue;
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

TEST_CASE("topk_indices basic cases") {
  Vector s(3);
  s << 0.1, 0.9, 0.5;
  CHECK(topk_indices(s, 2) == std::vector<Index>{1, 2});

  Vector tie(2);
  tie << 0.7, 0.7;
  CHECK(topk_indices(tie, 1) == std::vector<Index>{0});

  CHECK_THROWS_WITH_AS(topk_indices(tie, 3), "topk_indices: neighborhood larger than bank",
                       std::invalid_argument);
  // the excluded entry also shrinks the usable length
  CHECK_THROWS_AS(topk_indices(tie, 2, Index{0}), std::invalid_argument);
  CHECK(topk_indices(tie, 1, Index{0}) == std::vector<Index>{1});
}

TEST_CASE("topk_indices matches a full-sort oracle") {
  Rng rng(42);
  Vector s(200);
  for (Index i = 0; i < s.size(); ++i) s[i] = rng.uniform();
  CHECK(topk_indices(s, 5) == topk_oracle(s, 5, std::nullopt));

  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(40));
    Vector scores(n);
    // small discrete support keeps ties frequent
    for (Index i = 0; i < n; ++i) scores[i] = static_cast<double>(rng.below(8)) / 4.0;
    std::optional<Index> exclude;
    if (rng.uniform() < 0.5) exclude = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const Index usable = n - (exclude ? 1 : 0);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(usable)));
    const auto got = topk_indices(scores, k, exclude);
    CHECK(got == topk_oracle(scores, k, exclude));
    if (exclude) CHECK(std::find(got.begin(), got.end(), *exclude) == got.end());
  }
}

TEST_CASE("argmax_row tie-breaking and error paths") {
  RowVector row(3);
  row << 0.4, 0.4, 0.2;
  CHECK(argmax_row(row) == 0);
  row << 0.1, 0.1, 0.8;
  CHECK(argmax_row(row) == 2);
  row << 0.1, std::numeric_limits<double>::quiet_NaN(), 0.8;
  CHECK_THROWS_AS(argmax_row(row), std::invalid_argument);
}
