#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sefe/checkpoint.hpp"
#include "sefe/corpus.hpp"
#include "sefe/model.hpp"

namespace sefe {

struct EvalOptions {
  std::size_t n_negatives = 20;
  std::uint64_t seed = 0;
  std::size_t window = 8;
  std::size_t basket_context_limit = 20;
};

/// Held-out pseudo log-likelihood. Positive and negative terms carry equal weight.
struct EvalReport {
  double mean_pll = 0.0;
  std::size_t n_positive_terms = 0;
  std::size_t n_negative_terms = 0;
  /// Mean over the terms of each group; NaN for groups without held-out data.
  std::vector<std::pair<std::string, double>> per_group_pll;
};

/// Scores every observation of `corpus` against its context plus `n_negatives` uniform
/// negatives. Negatives for observation j are drawn from a generator seeded by (seed, j),
/// so any two models evaluated on the same corpus and seed see the same draws.
EvalReport heldout_pll(const ParameterSet& params, Family family, const GroupedCorpus& corpus,
                       const EvalOptions& options);

/// Same, after checking that the checkpoint's vocabulary and groups match the corpus.
EvalReport heldout_pll(const Checkpoint& ckpt, const GroupedCorpus& corpus,
                       const EvalOptions& options);

void write_report_tsv(const EvalReport& report, std::ostream& out);
void write_report_json(const EvalReport& report, std::ostream& out);

}  // namespace sefe
