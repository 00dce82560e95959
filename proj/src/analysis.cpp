#include "sefe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sefe/model.hpp"

namespace sefe {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> cosine_neighbors(const Checkpoint& ckpt, const std::string& word,
                                       const std::string& group, std::size_t k) {
  const Index query = ckpt.token_index(word);
  const std::size_t s = ckpt.group_index(group);
  const std::size_t L = ckpt.shape.vocab;
  const auto q = resolve_embedding(ckpt.params, query, s);

  std::vector<std::pair<double, Index>> scored;
  scored.reserve(L);
  for (Index v = 0; v < L; ++v) {
    if (v == query) continue;
    scored.emplace_back(cosine_similarity(q, resolve_embedding(ckpt.params, v, s)), v);
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({ckpt.tokens[scored[i].second], scored[i].first});
  return out;
}

std::pair<std::vector<double>, double> leading_eigenvector(const std::vector<double>& m,
                                                           std::size_t n, double tol,
                                                           std::size_t max_iter) {
  if (m.size() != n * n || n == 0) throw std::invalid_argument("leading_eigenvector: bad matrix");
  auto multiply = [&](const std::vector<double>& x) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) y[i] += m[i * n + j] * x[j];
    }
    return y;
  };
  auto norm = [](const std::vector<double>& x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
  };

  // Start from the largest column, which lies in the range of the matrix.
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += m[i * n + j] * m[i * n + j];
    if (c > best_norm) {
      best_norm = c;
      best = j;
    }
  }
  std::vector<double> x(n, 0.0);
  if (best_norm <= 0.0) {
    x[0] = 1.0;
    return {x, 0.0};
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = m[i * n + best];
  double nx = norm(x);
  for (auto& xi : x) xi /= nx;

  for (std::size_t it = 0; it < max_iter; ++it) {
    auto y = multiply(x);
    const double ny = norm(y);
    if (ny == 0.0) break;
    for (auto& yi : y) yi /= ny;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(y[i] - x[i]));
    x = std::move(y);
    if (diff < tol) break;
  }
  const auto mx = multiply(x);
  const double lambda = std::inner_product(x.begin(), x.end(), mx.begin(), 0.0);
  return {x, lambda};
}

SpectrumResult spectrum(const std::vector<std::vector<double>>& vectors,
                        const std::vector<std::string>& ids) {
  const std::size_t S = vectors.size();
  if (S < 2) throw std::invalid_argument("spectrum needs at least two groups");
  if (ids.size() != S) throw std::invalid_argument("spectrum: one id per vector required");
  const std::size_t K = vectors.front().size();

  std::vector<double> mean(K, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != K) throw std::invalid_argument("spectrum: vectors differ in length");
    for (std::size_t k = 0; k < K; ++k) mean[k] += v[k] / static_cast<double>(S);
  }
  std::vector<std::vector<double>> centered(S, std::vector<double>(K));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < K; ++k) centered[s][k] = vectors[s][k] - mean[k];
  }

  // Gram matrix of the centered rows shares its nonzero spectrum with the covariance.
  std::vector<double> gram(S * S, 0.0);
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t j = 0; j < S; ++j) {
      gram[i * S + j] = std::inner_product(centered[i].begin(), centered[i].end(),
                                           centered[j].begin(), 0.0);
    }
  }
  const auto [u, lambda] = leading_eigenvector(gram, S);

  SpectrumResult result;
  result.component.assign(K, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < K; ++k) result.component[k] += u[s] * centered[s][k];
  }
  const double cn = std::sqrt(std::inner_product(result.component.begin(), result.component.end(),
                                                 result.component.begin(), 0.0));
  if (cn > 0.0) {
    for (auto& c : result.component) c /= cn;
  } else {
    std::fill(result.component.begin(), result.component.end(), 0.0);
    result.component[0] = 1.0;
  }

  std::vector<double> coords(S, 0.0);
  if (cn > 0.0) {
    for (std::size_t s = 0; s < S; ++s) {
      coords[s] = std::inner_product(centered[s].begin(), centered[s].end(),
                                     result.component.begin(), 0.0);
    }
  }
  const std::size_t anchor =
      static_cast<std::size_t>(std::min_element(ids.begin(), ids.end()) - ids.begin());
  if (coords[anchor] < 0.0) {
    for (auto& c : coords) c = -c;
    for (auto& c : result.component) c = -c;
  }
  for (std::size_t s = 0; s < S; ++s) result.projections.emplace_back(ids[s], coords[s]);
  return result;
}

SpectrumResult group_spectrum(const Checkpoint& ckpt, const std::string& word) {
  if (ckpt.shape.groups < 2) throw std::invalid_argument("spectrum needs at least two groups");
  const Index v = ckpt.token_index(word);
  std::vector<std::vector<double>> vectors;
  for (std::size_t s = 0; s < ckpt.shape.groups; ++s) {
    vectors.push_back(resolve_embedding(ckpt.params, v, s));
  }
  auto result = spectrum(vectors, ckpt.group_ids);
  result.word = word;
  return result;
}

std::vector<Deviation> deviation_ranking(const Checkpoint& ckpt, const std::string& group,
                                         std::size_t pool_size, std::size_t top_k) {
  const std::size_t s = ckpt.group_index(group);
  const std::size_t S = ckpt.shape.groups, K = ckpt.shape.dim;
  const std::size_t pool = std::min(pool_size, static_cast<std::size_t>(ckpt.shape.vocab));

  std::vector<std::pair<double, Index>> scored;
  scored.reserve(pool);
  std::vector<double> mean(K);
  for (Index v = 0; v < pool; ++v) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::vector<double> mine;
    for (std::size_t t = 0; t < S; ++t) {
      auto rho = resolve_embedding(ckpt.params, v, t);
      for (std::size_t k = 0; k < K; ++k) mean[k] += rho[k] / static_cast<double>(S);
      if (t == s) mine = std::move(rho);
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) sq += (mine[k] - mean[k]) * (mine[k] - mean[k]);
    scored.emplace_back(std::sqrt(sq), v);
  }
  const std::size_t n = std::min(top_k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<Deviation> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({ckpt.tokens[scored[i].second], scored[i].first});
  return out;
}

}  // namespace sefe
