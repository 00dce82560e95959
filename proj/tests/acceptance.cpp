// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//
//   sefe_acceptance            run everything
//   sefe_acceptance 1 4 7      run only the listed criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sefe/analysis.hpp"
#include "sefe/checkpoint.hpp"
#include "sefe/corpus.hpp"
#include "sefe/evaluator.hpp"
#include "sefe/expfam.hpp"
#include "sefe/model.hpp"
#include "sefe/trainer.hpp"
#include "support/synthetic.hpp"
#include "support/toy.hpp"

using namespace sefe;
using namespace sefe::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 3) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << x;
  return ss.str();
}

// ---- 1: gradients ----

Outcome gradient_suite() {
  TrainConfig config;
  config.prior_variance = 10.0;
  config.hier_variance = 0.5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (Mode m : kAllModes) {
    for (Family f : {Family::Bernoulli, Family::Poisson}) {
      const auto params = random_params(toy_shape(m), 17, 1.0);
      const auto batch = toy_batch(f);
      const auto negatives = toy_negatives(batch, 5, 2, 5);
      const auto r = check_gradient(params, f, batch, negatives, config, 3.0);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
    }
  }
  return {worst < 1e-4, "max relative error " + fmt(worst) + " over " + std::to_string(checked) +
                            " coordinates, 6 modes x 2 families"};
}

// ---- 2: amortization identities ----

Outcome amortization_identities() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const std::size_t K = 1 + trial % 7, H = 1 + trial % 5;
    std::vector<double> rho0(K);
    for (auto& x : rho0) x = n(rng);
    AmortizationNet zero(H, K);
    ok = amortize(NetKind::Residual, rho0, zero.ref()) == rho0 &&
         amortize(NetKind::FeedForward, rho0, zero.ref()) == std::vector<double>(K, 0.0);
  }
  return {ok, "zero-weight resnet returns rho0, zero-weight ff returns 0, exactly, 100 draws"};
}

// ---- 3: parameter counts ----

Outcome parameter_counts() {
  const auto sefe = parameter_count(toy_shape(Mode::Sefe, 15000, 19, 100));
  const auto ff = parameter_count(toy_shape(Mode::AmortizedFF, 15000, 19, 100, 25));
  const auto res = parameter_count(toy_shape(Mode::AmortizedResnet, 15000, 19, 100, 25));
  return {sefe == 30000000ULL && ff == 3095000ULL && res == 3095000ULL,
          "sefe " + std::to_string(sefe) + ", amortized " + std::to_string(ff) + "/" + std::to_string(res)};
}

// ---- 4: evaluator calibration ----

GroupedCorpus eval_corpus(std::size_t L, const std::vector<std::vector<std::vector<Index>>>& docs) {
  GroupedCorpus c;
  c.vocab = toy_vocab(L);
  for (std::size_t g = 0; g < docs.size(); ++g) {
    Group group;
    group.id = "g" + std::to_string(g);
    for (const auto& d : docs[g]) group.add_document(d);
    c.groups.push_back(std::move(group));
  }
  return c;
}

Outcome evaluator_calibration() {
  double worst_zero = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.vocab = 60;
    spec.topics = 6;
    spec.total_tokens = 3000;
    spec.seed = seed;
    const auto splits = prepare_text_corpus(make_synthetic_text(spec), 60);
    for (Mode m : kAllModes) {
      ParameterSet zero(toy_shape(m, splits.vocab->size(), 4, 5, 3));
      EvalOptions o;
      o.seed = seed;
      const auto r = heldout_pll(zero, Family::Bernoulli, splits.test, o);
      worst_zero = std::max(worst_zero, std::abs(r.mean_pll - std::log(0.5)));
    }
  }

  // Three observations, L = 4 and three negatives each, so the negatives are exactly the
  // other three words. The oracle enumerates all twelve terms.
  const std::size_t L = 4, K = 3;
  const auto p = random_params(toy_shape(Mode::Sefe, L, 1, K), 40, 1.2);
  const auto corpus = eval_corpus(L, {{{2, 0, 3}}});
  const std::vector<std::vector<Index>> ctx{{0}, {2, 3}, {0}};
  const std::vector<Index> doc{2, 0, 3};
  double total = 0.0;
  int terms = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> csum(K, 0.0);
    for (Index c : ctx[i])
      for (std::size_t k = 0; k < K; ++k) csum[k] += p.context(c, 0)[k];
    for (Index v = 0; v < L; ++v) {
      double eta = 0.0;
      for (std::size_t k = 0; k < K; ++k) eta += p.group_embedding(v, 0)[k] * csum[k];
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      total += v == doc[i] ? std::log(prob) : std::log(1.0 - prob);
      ++terms;
    }
  }
  EvalOptions o;
  o.n_negatives = 3;
  o.window = 2;
  const double got = heldout_pll(p, Family::Bernoulli, corpus, o).mean_pll;
  const double err = std::abs(got - total / terms);
  return {worst_zero < 1e-12 && err < 1e-12,
          "zero model |pll - ln 0.5| <= " + fmt(worst_zero) + " (5 corpora x 6 modes); brute force error " +
              fmt(err)};
}

// ---- 5: ordering experiment ----

// Every mode starts from the same global fit (the from_global scheme) and is refined under a
// weak prior, which is where sharing structure matters: separate and sefe can overfit the small
// groups, the hierarchical tie and the shared networks cannot.
struct OrderingProtocol {
  std::size_t seeds = 5;
  std::size_t dim = 10;
  std::size_t hidden = 25;
  std::vector<double> shares{0.85, 0.05, 0.05, 0.05};
  std::size_t planted_stride = 20;
  std::size_t minibatch = 1000;
  // global fit used as the starting point
  double global_prior_variance = 1.0;
  std::size_t global_epochs = 20;
  double global_learning_rate = 0.02;
  // refinement of each mode
  double prior_variance = 10.0;
  double hier_variance = 0.03;
  std::size_t epochs = 30;
  double learning_rate = 0.01;
};

const OrderingProtocol kOrdering;

Outcome ordering_experiment() {
  const Mode modes[] = {Mode::Separate, Mode::Sefe, Mode::Hierarchical, Mode::AmortizedFF,
                        Mode::AmortizedResnet};
  constexpr std::size_t kSeparate = 0, kSefe = 1, kHier = 2;
  std::vector<std::vector<double>> pll(std::size(modes));
  std::size_t holds = 0;

  for (std::size_t seed = 1; seed <= kOrdering.seeds; ++seed) {
    SyntheticSpec spec;
    spec.group_shares = kOrdering.shares;
    spec.planted_stride = kOrdering.planted_stride;
    spec.seed = seed;
    const auto splits = prepare_text_corpus(make_synthetic_text(spec), spec.vocab);
    const std::size_t L = splits.vocab->size(), S = spec.group_shares.size();

    TrainConfig c;
    c.minibatch_size = kOrdering.minibatch;
    c.subsample = false;  // every synthetic word is far above the threshold
    c.seed = seed;
    c.prior_variance = kOrdering.global_prior_variance;
    c.epochs = kOrdering.global_epochs;
    c.learning_rate = kOrdering.global_learning_rate;
    const auto global = train(splits.train, splits.validation, toy_shape(Mode::Global, L, S, kOrdering.dim),
                              Family::Bernoulli, c);

    c.prior_variance = kOrdering.prior_variance;
    c.hier_variance = kOrdering.hier_variance;
    c.epochs = kOrdering.epochs;
    c.learning_rate = kOrdering.learning_rate;
    c.init_scheme = InitScheme::FromGlobal;

    EvalOptions o;
    o.seed = 1000 + seed;
    std::cout << "  seed " << seed << ": global=" << std::setprecision(6)
              << heldout_pll(global.best_checkpoint, splits.test, o).mean_pll;
    std::vector<double> row;
    for (std::size_t i = 0; i < std::size(modes); ++i) {
      const auto shape = toy_shape(modes[i], L, S, kOrdering.dim, kOrdering.hidden);
      const auto result = train(splits.train, splits.validation, shape, Family::Bernoulli, c, &global.best_checkpoint);
      const double v = heldout_pll(result.best_checkpoint, splits.test, o).mean_pll;
      pll[i].push_back(v);
      row.push_back(v);
      std::cout << ' ' << to_string(modes[i]) << '=' << v;
    }
    bool ok = row[kHier] > row[kSefe];
    for (std::size_t i = 1; i < row.size(); ++i) ok = ok && row[i] > row[kSeparate];
    holds += ok;
    std::cout << (ok ? "  ordered" : "  not ordered") << std::endl;
  }

  std::vector<double> median;
  for (auto v : pll) {
    std::sort(v.begin(), v.end());
    median.push_back(v[v.size() / 2]);
  }
  bool median_ok = median[kHier] > median[kSefe];
  for (std::size_t i = 1; i < median.size(); ++i) median_ok = median_ok && median[i] > median[kSeparate];

  std::ostringstream d;
  d << "ordering on " << holds << '/' << kOrdering.seeds << " seeds; medians";
  for (std::size_t i = 0; i < median.size(); ++i) d << ' ' << to_string(modes[i]) << '=' << std::setprecision(6) << median[i];
  return {median_ok && holds >= 4, d.str()};
}

// ---- 6: concavity ----

Outcome concavity() {
  // With contexts frozen, eta is linear in the embeddings, so the Bernoulli objective is a sum
  // of concave terms in them. Amortized modes are excluded: rho0 enters through tanh.
  // A weak prior and a large data scale keep the prior from hiding the data term.
  TrainConfig config;
  config.prior_variance = 100.0;
  config.hier_variance = 0.5;
  const auto batch = toy_batch(Family::Bernoulli);
  const auto negatives = toy_negatives(batch, 5, 3, 8);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::size_t checks = 0, failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mode m = kAllModes[trial % 4];
    const auto a = random_params(toy_shape(m), 100 + trial, 2.0);
    auto b = a;
    for (const char* name : {"rho_global", "rho_groups"}) {
      if (!b.find_block(name)) continue;
      for (auto& x : b.block(name)) x = trial % 3 == 0 ? -x : u(rng);
    }
    auto mid = a;
    for (std::size_t i = 0; i < a.size(); ++i) mid.values()[i] = 0.5 * (a.values()[i] + b.values()[i]);
    auto f = [&](const ParameterSet& p) {
      return minibatch_objective(p, Family::Bernoulli, batch, negatives, config, 1000.0, nullptr).total;
    };
    ++checks;
    if (f(mid) < 0.5 * (f(a) + f(b)) - 1e-9 * std::abs(f(a) + f(b))) ++failures;
  }
  return {failures == 0, std::to_string(checks - failures) + "/" + std::to_string(checks) +
                             " midpoint checks hold (global, separate, sefe, hierarchical)"};
}

// ---- 7: analysis oracles ----

Outcome analysis_oracles() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  double spectrum_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(8), y(8);
    double sq = 0.0;
    for (int k = 0; k < 8; ++k) {
      x[k] = n(rng);
      y[k] = n(rng);
      sq += (x[k] - y[k]) * (x[k] - y[k]);
    }
    const auto r = spectrum({x, y}, {"a", "b"});
    spectrum_err = std::max({spectrum_err, std::abs(r.projections[0].second - std::sqrt(sq) / 2),
                             std::abs(r.projections[1].second + std::sqrt(sq) / 2)});
  }

  int planted_first = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto p = random_params(toy_shape(Mode::Sefe, 50, 4, 6), seed, 0.3);
    const Index planted = static_cast<Index>(seed * 7 % 50);
    for (auto& x : p.group_embedding(planted, 1)) x += 1.5;
    const auto ranking = deviation_ranking(toy_checkpoint(p), "g1");
    planted_first += !ranking.empty() && ranking[0].token == "w" + std::to_string(planted);
  }

  bool invariant = true;
  for (std::uint64_t seed = 1; seed <= 10 && invariant; ++seed) {
    const auto c = toy_checkpoint(random_params(toy_shape(Mode::Hierarchical, 40, 3, 5), seed, 1.0));
    auto scaled = c;
    for (auto& x : scaled.params.values()) x *= 0.37 * static_cast<double>(seed);
    const auto a = cosine_neighbors(c, "w3", "g2", 10), b = cosine_neighbors(scaled, "w3", "g2", 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
      invariant = invariant && a[i].token == b[i].token && std::abs(a[i].similarity - b[i].similarity) < 1e-8;
    }
  }
  return {spectrum_err < 1e-8 && planted_first == 20 && invariant,
          "spectrum error " + fmt(spectrum_err) + "; planted word first " + std::to_string(planted_first) +
              "/20; neighbor ranking scale invariant: " + (invariant ? "yes" : "no")};
}

// ---- 8: determinism ----

Outcome determinism() {
  SyntheticSpec spec;
  spec.vocab = 60;
  spec.topics = 6;
  spec.total_tokens = 20000;
  const auto splits = prepare_text_corpus(make_synthetic_text(spec), 60);
  TrainConfig c;
  c.epochs = 2;
  c.minibatch_size = 500;
  c.n_negatives = 5;
  c.subsample_threshold = 1e-2;
  c.seed = 11;
  bool identical = true, round_trip = true;
  for (Mode m : {Mode::Hierarchical, Mode::AmortizedFF}) {
    const auto shape = toy_shape(m, splits.vocab->size(), 4, 6, 4);
    const auto a = train(splits.train, splits.validation, shape, Family::Bernoulli, c);
    const auto b = train(splits.train, splits.validation, shape, Family::Bernoulli, c);
    std::ostringstream sa(std::ios::binary), sb(std::ios::binary);
    write_checkpoint(a.final_checkpoint, sa);
    write_checkpoint(b.final_checkpoint, sb);
    identical = identical && sa.str() == sb.str();

    std::istringstream in(sa.str(), std::ios::binary);
    const auto back = read_checkpoint(in);
    std::ostringstream again(std::ios::binary);
    write_checkpoint(back, again);
    round_trip = round_trip && back == a.final_checkpoint && again.str() == sa.str() &&
                 std::memcmp(back.params.values().data(), a.final_checkpoint.params.values().data(),
                             back.params.size() * sizeof(double)) == 0;
  }
  return {identical && round_trip, std::string("repeat training bit-identical: ") + (identical ? "yes" : "no") +
                                       "; checkpoint round trip bit-exact: " + (round_trip ? "yes" : "no")};
}

// ---- 9: subsampling ----

Outcome subsampling() {
  Vocabulary vocab({{"hot", 4, 4e-5}, {"rest", 99996, 1.0 - 4e-5}});
  const std::vector<Index> stream(10000, 0);
  Rng rng(2024);
  const double rate = static_cast<double>(subsample_tokens(stream, vocab, 1e-5, rng).size()) / 10000.0;
  return {std::abs(rate - 0.5) <= 0.02, "keep rate " + fmt(rate, 4) + " over 10000 trials"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"amortization identities", amortization_identities},
      {"parameter counts", parameter_counts},
      {"evaluator calibration", evaluator_calibration},
      {"ordering experiment", ordering_experiment},
      {"concavity", concavity},
      {"analysis oracles", analysis_oracles},
      {"determinism", determinism},
      {"subsampling statistics", subsampling},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << " (" << std::fixed << std::setprecision(1) << secs << "s)" << std::defaultfloat << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
