#include "sefe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "sefe/evaluator.hpp"
#include "sefe/expfam.hpp"

namespace sefe {

std::string_view to_string(InitScheme s) {
  switch (s) {
    case InitScheme::PriorDraw: return "prior_draw";
    case InitScheme::FromGlobal: return "from_global";
    case InitScheme::FixedContext: return "fixed_context";
  }
  return "unknown";
}

InitScheme parse_init_scheme(std::string_view s) {
  for (auto scheme : {InitScheme::PriorDraw, InitScheme::FromGlobal, InitScheme::FixedContext}) {
    if (to_string(scheme) == s) return scheme;
  }
  throw std::invalid_argument("unknown init scheme '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (std::find(std::begin(kPriorVarianceGrid), std::end(kPriorVarianceGrid), prior_variance) ==
      std::end(kPriorVarianceGrid)) {
    throw std::invalid_argument("prior_variance must be one of 100, 10, 1, 0.1");
  }
  if (!(hier_variance > 0.0)) throw std::invalid_argument("hier_variance must be positive");
  if (n_negatives < 1) throw std::invalid_argument("n_negatives must be >= 1");
  if (window == 0 || window % 2 != 0) throw std::invalid_argument("window must be even and positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(subsample_threshold > 0.0)) throw std::invalid_argument("subsample_threshold must be positive");
}

// ---------------------------------------------------------------------------
// Negative sampling

namespace {

template <typename Engine>
std::vector<Index> negative_sample_impl(std::size_t vocab_size, Index positive, std::size_t n, Engine& rng) {
  if (n >= vocab_size) {
    throw std::invalid_argument("cannot draw " + std::to_string(n) + " negatives from a vocabulary of " +
                                std::to_string(vocab_size));
  }
  const std::size_t pool = vocab_size - 1;
  std::vector<Index> out;
  out.reserve(n);
  auto unshift = [positive](std::size_t r) {
    return static_cast<Index>(r >= positive ? r + 1 : r);
  };
  if (n * 4 <= pool) {
    std::uniform_int_distribution<std::size_t> dist(0, pool - 1);
    while (out.size() < n) {
      const Index cand = unshift(dist(rng));
      if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
    }
  } else {
    // Dense case: partial Fisher-Yates over the whole pool.
    std::vector<std::size_t> idx(pool);
    for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, pool - 1);
      std::swap(idx[i], idx[dist(rng)]);
      out.push_back(unshift(idx[i]));
    }
  }
  return out;
}

}  // namespace

std::vector<Index> negative_sample(std::size_t vocab_size, Index positive, std::size_t n, Rng& rng) {
  return negative_sample_impl(vocab_size, positive, n, rng);
}

std::vector<Index> negative_sample(std::size_t vocab_size, Index positive, std::size_t n, SplitMix64& rng) {
  return negative_sample_impl(vocab_size, positive, n, rng);
}

NegativeDraws draw_negatives(const std::vector<ContextWindow>& batch, std::size_t vocab_size,
                             std::size_t n, Rng& rng) {
  NegativeDraws draws;
  draws.reserve(batch.size());
  for (const auto& w : batch) draws.push_back(negative_sample(vocab_size, w.target, n, rng));
  return draws;
}

// ---------------------------------------------------------------------------
// Objective

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Sum of log N(x_i; 0, var) over a block; gradient -x/var.
double isotropic_prior(std::span<const double> x, double var, std::span<double> grad) {
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    if (!grad.empty()) grad[i] -= x[i] / var;
  }
  return -0.5 * sq / var - 0.5 * static_cast<double>(x.size()) * (kLog2Pi + std::log(var));
}

std::span<double> grad_block(ParameterSet* grad, std::string_view name) {
  return grad ? grad->block(name) : std::span<double>{};
}

}  // namespace

double log_prior(const ParameterSet& params, const TrainConfig& config, ParameterSet* grad) {
  const double lambda = config.prior_variance;
  const Mode mode = params.shape().mode;
  double total = 0.0;

  const std::string_view alpha_name = params.separate_contexts() ? "alpha_groups" : "alpha";
  total += isotropic_prior(params.block(alpha_name), lambda, grad_block(grad, alpha_name));

  if (mode == Mode::Separate || mode == Mode::Sefe) {
    total += isotropic_prior(params.block("rho_groups"), lambda, grad_block(grad, "rho_groups"));
  } else {
    total += isotropic_prior(params.block("rho_global"), lambda, grad_block(grad, "rho_global"));
  }

  if (mode == Mode::Hierarchical) {
    const double var = config.hier_variance;
    const auto& shape = params.shape();
    const std::size_t K = shape.dim;
    double sq = 0.0;
    for (std::size_t s = 0; s < shape.groups; ++s) {
      for (Index v = 0; v < shape.vocab; ++v) {
        const auto rho = params.group_embedding(v, s);
        const auto rho0 = params.global_embedding(v);
        for (std::size_t k = 0; k < K; ++k) {
          const double d = rho[k] - rho0[k];
          sq += d * d;
          if (grad) {
            grad->group_embedding(v, s)[k] -= d / var;
            grad->global_embedding(v)[k] += d / var;
          }
        }
      }
    }
    const double n = static_cast<double>(shape.groups * shape.vocab * K);
    total += -0.5 * sq / var - 0.5 * n * (kLog2Pi + std::log(var));
  }
  return total;
}

double data_log_likelihood(const ParameterSet& params, Family family,
                           const std::vector<ContextWindow>& batch, const NegativeDraws& negatives,
                           double scale, ParameterSet* grad) {
  if (negatives.size() != batch.size()) {
    throw std::invalid_argument("negative draws do not match the batch");
  }
  const auto& shape = params.shape();
  const std::size_t K = shape.dim, H = shape.hidden;
  const Mode mode = shape.mode;
  const NetKind kind = mode == Mode::AmortizedResnet ? NetKind::Residual : NetKind::FeedForward;

  const std::size_t L = shape.vocab;
  const bool amortized = is_amortized(mode);

  // Amortized embeddings are computed once per (group, word) touched by the batch; their
  // output gradients are accumulated and backpropagated through the network at the end.
  std::vector<double> net_out, net_hidden, net_grad;
  std::vector<std::size_t> touched;
  std::unordered_map<std::size_t, std::size_t> row_of;
  auto amortized_row = [&](Index v, std::size_t s) {
    const auto [it, fresh] = row_of.try_emplace(s * L + v, touched.size());
    const std::size_t row = it->second;
    if (fresh) {
      touched.push_back(s * L + v);
      net_out.resize(net_out.size() + K);
      net_hidden.resize(net_hidden.size() + H);
      if (grad) net_grad.resize(net_grad.size() + K, 0.0);
      amortize_into(kind, params.global_embedding(v), params.net(s),
                    std::span<double>(net_out.data() + row * K, K),
                    std::span<double>(net_hidden.data() + row * H, H));
    }
    return row;
  };

  std::vector<double> g_csum(K), dz(H);
  double total = 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const ContextWindow& w = batch[b];
    const std::size_t s = w.group;
    const auto csum = context_sum(params, w);
    std::fill(g_csum.begin(), g_csum.end(), 0.0);

    auto term = [&](Index v, double x) {
      std::span<const double> r;
      const std::size_t row = amortized ? amortized_row(v, s) : 0;
      if (mode == Mode::Global) {
        r = params.global_embedding(v);
      } else if (amortized) {
        r = std::span<const double>(net_out.data() + row * K, K);
      } else {
        r = params.group_embedding(v, s);
      }
      const double eta = natural_parameter(r, csum);
      total += log_prob(family, x, eta);
      if (!grad) return;

      const double d = scale * dlogp_deta(family, x, eta);
      for (std::size_t k = 0; k < K; ++k) g_csum[k] += d * r[k];

      std::span<double> g;
      if (mode == Mode::Global) {
        g = grad->global_embedding(v);
      } else if (amortized) {
        g = std::span<double>(net_grad.data() + row * K, K);
      } else {
        g = grad->group_embedding(v, s);
      }
      for (std::size_t k = 0; k < K; ++k) g[k] += d * csum[k];
    };

    term(w.target, w.value);
    for (Index neg : negatives[b]) term(neg, 0.0);

    if (grad) {
      for (const auto& c : w.context) {
        auto g = grad->context(c.item, s);
        for (std::size_t k = 0; k < K; ++k) g[k] += c.value * g_csum[k];
      }
    }
  }

  if (amortized && grad) {
    // Backprop through rho = [rho0 +] W2 tanh(W1 rho0).
    for (std::size_t row = 0; row < touched.size(); ++row) {
      const std::size_t s = touched[row] / L;
      const auto v = static_cast<Index>(touched[row] % L);
      const double* g_out = net_grad.data() + row * K;
      const double* hidden = net_hidden.data() + row * H;
      const auto w2 = params.w2(s);
      const auto w1 = params.w1(s);
      auto gw2 = grad->w2(s);
      auto gw1 = grad->w1(s);
      auto grho0 = grad->global_embedding(v);
      const auto rho0 = params.global_embedding(v);
      for (std::size_t h = 0; h < H; ++h) {
        double da = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          gw2[k * H + h] += g_out[k] * hidden[h];
          da += w2[k * H + h] * g_out[k];
        }
        dz[h] = da * (1.0 - hidden[h] * hidden[h]);
      }
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t k = 0; k < K; ++k) {
          gw1[h * K + k] += dz[h] * rho0[k];
          grho0[k] += w1[h * K + k] * dz[h];
        }
      }
      if (kind == NetKind::Residual) {
        for (std::size_t k = 0; k < K; ++k) grho0[k] += g_out[k];
      }
    }
  }
  return scale * total;
}

ObjectiveValue minibatch_objective(const ParameterSet& params, Family family,
                                   const std::vector<ContextWindow>& batch,
                                   const NegativeDraws& negatives, const TrainConfig& config,
                                   double scale, ParameterSet* grad) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  ObjectiveValue value;
  value.data_term = data_log_likelihood(params, family, batch, negatives, scale, grad);
  value.prior_terms = log_prior(params, config, grad);
  value.total = value.data_term + value.prior_terms;
  return value;
}

ObjectiveValue minibatch_objective(const ParameterSet& params, Family family,
                                   const std::vector<ContextWindow>& batch,
                                   const TrainConfig& config, double scale, Rng& rng,
                                   ParameterSet* grad) {
  const auto negatives = draw_negatives(batch, params.shape().vocab, config.n_negatives, rng);
  return minibatch_objective(params, family, batch, negatives, config, scale, grad);
}

// ---------------------------------------------------------------------------
// Optimizer and initialization

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  for (double g : grad) {
    if (std::isnan(g)) throw std::runtime_error("NaN gradient; training aborted");
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] += config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

double glorot_bound(std::size_t dim, std::size_t hidden) {
  return std::sqrt(6.0) / std::sqrt(static_cast<double>(dim + hidden));
}

namespace {

void fill_normal(std::span<double> x, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : x) v = dist(rng);
}

void copy_rows(std::span<const double> src, std::span<double> dst) {
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

ParameterSet initialize(const ModelShape& shape, const TrainConfig& config, Rng& rng,
                        const ParameterSet* global) {
  ParameterSet p(shape);
  const double sd = std::sqrt(config.prior_variance);
  const bool needs_global = config.init_scheme != InitScheme::PriorDraw;
  if (needs_global) {
    if (!global) {
      throw std::invalid_argument(std::string("init scheme ") +
                                  std::string(to_string(config.init_scheme)) +
                                  " requires a global checkpoint");
    }
    const auto& gs = global->shape();
    if (gs.mode != Mode::Global || gs.dim != shape.dim || gs.vocab != shape.vocab) {
      throw std::invalid_argument("initial checkpoint must be a global-mode fit with matching K and L");
    }
  }

  // Contexts.
  if (needs_global) {
    for (std::size_t s = 0; s < (p.separate_contexts() ? shape.groups : 1); ++s) {
      for (Index v = 0; v < shape.vocab; ++v) copy_rows(global->context(v, 0), p.context(v, s));
    }
  } else {
    fill_normal(p.contexts(), sd, rng);
  }

  // Embeddings.
  const bool copy_embeddings = config.init_scheme == InitScheme::FromGlobal;
  if (p.has_global_embeddings()) {
    if (copy_embeddings) {
      copy_rows(global->block("rho_global"), p.block("rho_global"));
    } else {
      fill_normal(p.block("rho_global"), sd, rng);
    }
  }
  if (p.has_group_embeddings()) {
    for (std::size_t s = 0; s < shape.groups; ++s) {
      for (Index v = 0; v < shape.vocab; ++v) {
        auto row = p.group_embedding(v, s);
        if (copy_embeddings) {
          copy_rows(global->global_embedding(v), row);
        } else if (shape.mode == Mode::Hierarchical) {
          // Hierarchical prior: centered on the freshly drawn global vector.
          std::normal_distribution<double> dist(0.0, std::sqrt(config.hier_variance));
          const auto rho0 = p.global_embedding(v);
          for (std::size_t k = 0; k < shape.dim; ++k) row[k] = rho0[k] + dist(rng);
        } else {
          fill_normal(row, sd, rng);
        }
      }
    }
  }

  if (p.has_networks()) {
    const double bound = glorot_bound(shape.dim, shape.hidden);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : p.block("W1")) w = dist(rng);
    for (auto& w : p.block("W2")) w = dist(rng);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

std::string format_double(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

}  // namespace

TrainResult train(const GroupedCorpus& train_corpus, const GroupedCorpus& validation,
                  const ModelShape& shape, Family family, const TrainConfig& config,
                  const Checkpoint* global_init) {
  config.validate();
  shape.validate();
  train_corpus.validate();
  if (shape.vocab != train_corpus.vocab->size()) {
    throw std::invalid_argument("model shape L does not match the vocabulary size");
  }
  if (shape.groups != train_corpus.groups.size()) {
    throw std::invalid_argument("model shape S does not match the number of groups");
  }
  if (family == Family::Bernoulli && train_corpus.modality == Modality::Basket) {
    // Quantities above one fall outside the Bernoulli support.
    for (const auto& g : train_corpus.groups) {
      for (const auto& trip : g.trips) {
        for (const auto& it : trip) {
          if (it.quantity > 1) throw std::invalid_argument("Bernoulli family requires binary data");
        }
      }
    }
  }
  if (global_init && global_init->tokens.size() != shape.vocab) {
    throw std::invalid_argument("initial checkpoint vocabulary does not match the corpus");
  }

  Rng rng(config.seed);
  ParameterSet params =
      initialize(shape, config, rng, global_init ? &global_init->params : nullptr);
  ParameterSet grad(shape);
  AdamState adam(params.size());
  const bool freeze_contexts = config.init_scheme == InitScheme::FixedContext;

  const SamplerOptions sampler{config.window, config.basket_context_limit};
  EvalOptions eval_options;
  eval_options.n_negatives = config.n_negatives;
  eval_options.seed = config.seed;
  eval_options.window = config.window;
  eval_options.basket_context_limit = config.basket_context_limit;

  std::vector<std::string> group_ids;
  for (const auto& g : train_corpus.groups) group_ids.push_back(g.id);

  const bool has_validation = validation.observations() > 0;
  TrainResult result;
  ParameterSet best = params;
  double best_pll = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    GroupedCorpus subsampled;
    const GroupedCorpus* corpus = &train_corpus;
    if (config.subsample && train_corpus.modality == Modality::Text) {
      subsampled = subsample_corpus(train_corpus, config.subsample_threshold, rng);
      if (subsampled.units() == 0) throw std::runtime_error("subsampling removed the whole corpus");
      corpus = &subsampled;
    }
    const std::size_t units = corpus->units();
    std::size_t mb = config.minibatch_size;
    if (mb == 0) mb = std::max<std::size_t>(1, units / (corpus->modality == Modality::Text ? 10000 : 100));
    mb = std::min(mb, units);
    const std::size_t steps = std::max<std::size_t>(1, units / mb);
    const double n_obs = static_cast<double>(corpus->observations());

    double objective_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const auto batch = sample_minibatch(*corpus, mb, sampler, rng);
      grad.set_zero();
      const double scale = n_obs / static_cast<double>(batch.size());
      const auto value = minibatch_objective(params, family, batch, config, scale, rng, &grad);
      if (freeze_contexts) {
        auto g = grad.contexts();
        std::fill(g.begin(), g.end(), 0.0);
      }
      adam_step(params.values(), grad.values(), adam, config);
      objective_sum += value.total;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.objective = objective_sum / static_cast<double>(steps);
    record.validation_pll = has_validation
                                ? heldout_pll(params, family, validation, eval_options).mean_pll
                                : std::numeric_limits<double>::quiet_NaN();
    result.log.push_back(record);
    if (!has_validation || record.validation_pll > best_pll) {
      best_pll = record.validation_pll;
      best = params;
      best_epoch = epoch;
    }
  }

  const auto& vocab = *train_corpus.vocab;
  result.final_checkpoint = make_checkpoint(params, family, config.seed, vocab, group_ids);
  result.final_checkpoint.metadata = {
      {"epoch", std::to_string(config.epochs)},
      {"init_scheme", std::string(to_string(config.init_scheme))},
      {"modality", std::string(to_string(train_corpus.modality))},
      {"objective", format_double(result.log.back().objective)},
      {"validation_pll", format_double(result.log.back().validation_pll)},
  };
  result.best_checkpoint = make_checkpoint(best, family, config.seed, vocab, group_ids);
  result.best_checkpoint.metadata = result.final_checkpoint.metadata;
  result.best_checkpoint.metadata["epoch"] = std::to_string(best_epoch);
  result.best_checkpoint.metadata["objective"] = format_double(result.log[best_epoch - 1].objective);
  result.best_checkpoint.metadata["validation_pll"] = format_double(best_pll);
  return result;
}

void write_training_log(const std::vector<EpochRecord>& log, std::ostream& out) {
  for (const auto& r : log) {
    out << r.epoch << '\t' << format_double(r.objective) << '\t' << format_double(r.validation_pll)
        << '\n';
  }
}

}  // namespace sefe
