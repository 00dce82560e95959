#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sefe/checkpoint.hpp"
#include "sefe/corpus.hpp"
#include "sefe/model.hpp"
#include "sefe/types.hpp"

namespace sefe {

enum class InitScheme {
  PriorDraw,     // every vector drawn from its prior
  FromGlobal,    // copy contexts and embeddings from a global-mode fit
  FixedContext,  // contexts from a global-mode fit, frozen; embeddings from the prior
};

std::string_view to_string(InitScheme s);
InitScheme parse_init_scheme(std::string_view s);

/// Allowed prior variances for the isotropic Gaussian regularizer.
inline constexpr double kPriorVarianceGrid[] = {100.0, 10.0, 1.0, 0.1};

struct TrainConfig {
  double prior_variance = 1.0;
  double hier_variance = 1.0;
  std::size_t n_negatives = 20;
  std::size_t window = 8;
  std::size_t minibatch_size = 0;  // 0: N/10000 for text, N/100 trips for baskets
  std::size_t epochs = 5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  InitScheme init_scheme = InitScheme::PriorDraw;
  std::size_t basket_context_limit = 20;
  bool subsample = true;
  double subsample_threshold = 1e-5;

  void validate() const;
};

struct ObjectiveValue {
  double total = 0.0;
  double data_term = 0.0;
  double prior_terms = 0.0;
};

/// `n` distinct indices drawn uniformly from {0..L-1} \ {positive}. Throws if n >= L.
std::vector<Index> negative_sample(std::size_t vocab_size, Index positive, std::size_t n, Rng& rng);
std::vector<Index> negative_sample(std::size_t vocab_size, Index positive, std::size_t n, SplitMix64& rng);

using NegativeDraws = std::vector<std::vector<Index>>;

NegativeDraws draw_negatives(const std::vector<ContextWindow>& batch, std::size_t vocab_size,
                             std::size_t n, Rng& rng);

/// Full log prior of the mode: N(0, lambda I) on contexts and top-level embeddings,
/// N(rho0, sigma^2 I) on group embeddings in hierarchical mode, networks unregularized.
/// Adds the gradient to `grad` when given.
double log_prior(const ParameterSet& params, const TrainConfig& config, ParameterSet* grad);

/// Data term over the batch with the given negatives, multiplied by `scale`.
/// Adds the gradient to `grad` when given.
double data_log_likelihood(const ParameterSet& params, Family family,
                           const std::vector<ContextWindow>& batch, const NegativeDraws& negatives,
                           double scale, ParameterSet* grad);

/// Stochastic objective: scale * data term + unscaled log priors.
ObjectiveValue minibatch_objective(const ParameterSet& params, Family family,
                                   const std::vector<ContextWindow>& batch,
                                   const NegativeDraws& negatives, const TrainConfig& config,
                                   double scale, ParameterSet* grad);

ObjectiveValue minibatch_objective(const ParameterSet& params, Family family,
                                   const std::vector<ContextWindow>& batch,
                                   const TrainConfig& config, double scale, Rng& rng,
                                   ParameterSet* grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam step in the ascent direction. Throws on a NaN gradient.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config);

/// sqrt(6) / sqrt(K + H).
double glorot_bound(std::size_t dim, std::size_t hidden);

/// Initial parameters under the configured scheme. FromGlobal and FixedContext require a
/// global-mode ParameterSet with matching K and L.
ParameterSet initialize(const ModelShape& shape, const TrainConfig& config, Rng& rng,
                        const ParameterSet* global = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;
  double objective = 0.0;
  double validation_pll = 0.0;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;
  std::vector<EpochRecord> log;
};

/// Adam on minibatch objectives for `epochs` passes over `train`, scoring `validation`
/// after every epoch. `global_init` is required by FromGlobal and FixedContext.
TrainResult train(const GroupedCorpus& train, const GroupedCorpus& validation,
                  const ModelShape& shape, Family family, const TrainConfig& config,
                  const Checkpoint* global_init = nullptr);

/// `epoch<TAB>objective<TAB>validation_pll`, one line per epoch.
void write_training_log(const std::vector<EpochRecord>& log, std::ostream& out);

}  // namespace sefe
