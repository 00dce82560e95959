#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sefe/checkpoint.hpp"

namespace sefe {

struct Neighbor {
  std::string token;
  double similarity = 0.0;
};

/// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Top-k tokens by cosine similarity of their group embeddings to the query's,
/// excluding the query. Ties go to the more frequent token.
std::vector<Neighbor> cosine_neighbors(const Checkpoint& ckpt, const std::string& word,
                                       const std::string& group, std::size_t k);

struct SpectrumResult {
  std::string word;
  std::vector<std::pair<std::string, double>> projections;
  std::vector<double> component;
};

/// Leading eigenvector of a symmetric PSD matrix (row-major n x n) by power iteration.
/// Returns the unit vector and its eigenvalue; the zero matrix yields e_0 and 0.
std::pair<std::vector<double>, double> leading_eigenvector(const std::vector<double>& matrix,
                                                           std::size_t n, double tol = 1e-10,
                                                           std::size_t max_iter = 10000);

/// First-principal-component coordinates of `vectors` (S rows of length K). The sign is fixed
/// so that the row with the lexicographically smallest id has a nonnegative coordinate.
SpectrumResult spectrum(const std::vector<std::vector<double>>& vectors,
                        const std::vector<std::string>& ids);

/// Spectrum of one word's group embeddings. Requires S >= 2.
SpectrumResult group_spectrum(const Checkpoint& ckpt, const std::string& word);

struct Deviation {
  std::string token;
  double distance = 0.0;
};

/// Among the `pool_size` most frequent terms, the `top_k` whose embedding in `group`
/// lies farthest from their across-group mean embedding.
std::vector<Deviation> deviation_ranking(const Checkpoint& ckpt, const std::string& group,
                                         std::size_t pool_size = 1000, std::size_t top_k = 3);

}  // namespace sefe
