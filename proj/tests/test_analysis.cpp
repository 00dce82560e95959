#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sefe/analysis.hpp"
#include "support/toy.hpp"

using namespace sefe;
using namespace sefe::testing;

namespace {

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Cyclic Jacobi rotations on a small symmetric matrix; returns eigenvalues and
// eigenvectors (columns of V).
void jacobi(std::vector<double> a, std::size_t n, std::vector<double>& values,
            std::vector<double>& vectors) {
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p * n + q] == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
          vectors[k * n + p] = c * vkp - s * vkq;
          vectors[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a[i * n + i];
}

// Sefe checkpoint whose group embeddings are all uniform noise.
Checkpoint noisy_sefe(std::size_t L, std::size_t S, std::size_t K, std::uint64_t seed) {
  return toy_checkpoint(random_params(toy_shape(Mode::Sefe, L, S, K), seed, 1.0));
}

}  // namespace

TEST_CASE("cosine similarity") {
  const std::vector<double> a{1, 2, 3}, b{-2, 0.5, 4}, z{0, 0, 0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, z) == 0.0);
  const double expected = (-2 + 1 + 12) / (std::sqrt(14.0) * std::sqrt(4 + 0.25 + 16));
  CHECK(std::abs(cosine_similarity(a, b) - expected) < 1e-15);
}

TEST_CASE("two-group spectrum sits at plus and minus half the difference") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(6), y(6), d(6);
    for (int k = 0; k < 6; ++k) {
      x[k] = n(rng);
      y[k] = n(rng);
      d[k] = x[k] - y[k];
    }
    const auto r = spectrum({x, y}, {"b", "a"});
    const double half = norm(d) / 2.0;
    // "a" sorts first, so its coordinate is the nonnegative one.
    CHECK(std::abs(r.projections[1].second - half) < 1e-8);
    CHECK(std::abs(r.projections[0].second + half) < 1e-8);
    CHECK(std::abs(norm(r.component) - 1.0) < 1e-12);
  }
}

TEST_CASE("spectrum matches a Jacobi eigendecomposition") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t S = 3, K = 4;
    std::vector<std::vector<double>> rows(S, std::vector<double>(K));
    for (auto& r : rows)
      for (auto& v : r) v = n(rng);

    std::vector<double> mean(K, 0.0);
    for (const auto& r : rows)
      for (std::size_t k = 0; k < K; ++k) mean[k] += r[k] / S;
    // K x K covariance (unnormalized) of the centered rows.
    std::vector<double> cov(K * K, 0.0);
    for (const auto& r : rows)
      for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) cov[i * K + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    std::vector<double> values, vectors;
    jacobi(cov, K, values, vectors);
    const std::size_t top = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());

    std::vector<double> coords(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t k = 0; k < K; ++k) coords[s] += (rows[s][k] - mean[k]) * vectors[k * K + top];
    if (coords[0] < 0)
      for (auto& c : coords) c = -c;

    const auto r = spectrum(rows, {"g0", "g1", "g2"});
    for (std::size_t s = 0; s < S; ++s) CHECK(std::abs(r.projections[s].second - coords[s]) < 1e-8);

    double sum = 0.0;
    for (const auto& [id, c] : r.projections) sum += c;
    CHECK(std::abs(sum) < 1e-10);
  }
}

TEST_CASE("spectrum edge cases") {
  const std::vector<double> v{1, -2, 3};
  const auto same = spectrum({v, v, v}, {"a", "b", "c"});
  for (const auto& [id, c] : same.projections) CHECK(c == 0.0);
  CHECK_THROWS(spectrum({v}, {"a"}));
  CHECK_THROWS(spectrum({v, v}, {"a"}));

  const auto [vec, lambda] = leading_eigenvector(std::vector<double>(9, 0.0), 3);
  CHECK(vec == std::vector<double>{1, 0, 0});
  CHECK(lambda == 0.0);
  const auto [v2, l2] = leading_eigenvector({2, 1, 1, 2}, 2);
  CHECK(std::abs(l2 - 3.0) < 1e-10);
  CHECK(std::abs(std::abs(v2[0]) - std::sqrt(0.5)) < 1e-8);
}

TEST_CASE("spectrum is invariant to translating and rotating the embedding space") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> rows(4, std::vector<double>(2));
  for (auto& r : rows)
    for (auto& v : r) v = n(rng);
  const double c = std::cos(0.7), s = std::sin(0.7);
  auto moved = rows;
  for (auto& r : moved) r = {c * r[0] - s * r[1] + 5.0, s * r[0] + c * r[1] - 3.0};
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const auto r1 = spectrum(rows, ids), r2 = spectrum(moved, ids);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r1.projections[i].second - r2.projections[i].second) < 1e-8);
}

TEST_CASE("group_spectrum reads the word's group embeddings") {
  auto c = noisy_sefe(5, 2, 3, 2);
  const auto r = group_spectrum(c, "w3");
  CHECK(r.word == "w3");
  std::vector<double> d(3);
  for (int k = 0; k < 3; ++k) d[k] = c.params.group_embedding(3, 0)[k] - c.params.group_embedding(3, 1)[k];
  CHECK(std::abs(r.projections[0].second - norm(d) / 2) < 1e-8);
  CHECK(r.projections[0].first == "g0");

  const auto single = toy_checkpoint(random_params(toy_shape(Mode::Sefe, 5, 1), 1));
  CHECK_THROWS(group_spectrum(single, "w0"));
  CHECK_THROWS(group_spectrum(c, "nope"));
}

TEST_CASE("planted deviation ranks first") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto p = random_params(toy_shape(Mode::Sefe, 40, 4, 5), seed, 0.3);
    const Index planted = static_cast<Index>(seed * 3 % 40);
    for (auto& x : p.group_embedding(planted, 2)) x += 2.0;
    const auto ckpt = toy_checkpoint(p);
    const auto ranking = deviation_ranking(ckpt, "g2", 1000, 3);
    REQUIRE(ranking.size() == 3);
    CHECK(ranking[0].token == "w" + std::to_string(planted));
    CHECK(ranking[0].distance > ranking[1].distance);
    CHECK(ranking[1].distance >= ranking[2].distance);
  }
}

TEST_CASE("deviation ranking limits and identical groups") {
  ParameterSet p(toy_shape(Mode::Hierarchical, 6, 3));
  const auto ckpt = toy_checkpoint(p);
  for (const auto& d : deviation_ranking(ckpt, "g0", 1000, 3)) CHECK(d.distance == 0.0);
  CHECK(deviation_ranking(ckpt, "g1", 2, 5).size() == 2);
  CHECK_THROWS(deviation_ranking(ckpt, "g7"));

  // Global mode has no group structure, so nothing deviates.
  const auto g = toy_checkpoint(random_params(toy_shape(Mode::Global, 6, 3), 1));
  for (const auto& d : deviation_ranking(g, "g2")) CHECK(d.distance == 0.0);
}

TEST_CASE("cosine neighbors") {
  auto c = noisy_sefe(30, 2, 4, 3);
  const auto base = cosine_neighbors(c, "w0", "g1", 8);
  REQUIRE(base.size() == 8);
  for (const auto& nb : base) CHECK(nb.token != "w0");
  for (std::size_t i = 1; i < base.size(); ++i) CHECK(base[i - 1].similarity >= base[i].similarity);
  CHECK(cosine_neighbors(c, "w0", "g1", 100).size() == 29);

  SUBCASE("ranking is invariant to positive rescaling") {
    auto scaled = c;
    for (auto& x : scaled.params.values()) x *= 3.7;
    const auto r = cosine_neighbors(scaled, "w0", "g1", 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(r[i].token == base[i].token);
      CHECK(std::abs(r[i].similarity - base[i].similarity) < 1e-12);
    }
  }
  SUBCASE("a duplicate embedding has similarity one") {
    auto dup = c;
    auto src = dup.params.group_embedding(0, 1);
    auto dst = dup.params.group_embedding(17, 1);
    std::copy(src.begin(), src.end(), dst.begin());
    const auto r = cosine_neighbors(dup, "w0", "g1", 1);
    CHECK(r[0].token == "w17");
    CHECK(std::abs(r[0].similarity - 1.0) < 1e-12);
  }
  CHECK_THROWS(cosine_neighbors(c, "w0", "nope", 3));
}
