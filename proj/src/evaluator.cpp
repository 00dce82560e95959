#include "sefe/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "sefe/expfam.hpp"
#include "sefe/trainer.hpp"

namespace sefe {

namespace {

struct Accumulator {
  double sum = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t terms() const { return positives + negatives; }
};

// Embedding vectors of every object in group s, row-major L x K.
std::vector<double> group_table(const ParameterSet& params, std::size_t s) {
  const std::size_t L = params.shape().vocab, K = params.shape().dim;
  std::vector<double> table(L * K);
  for (std::size_t v = 0; v < L; ++v) {
    const auto r = resolve_embedding(params, static_cast<Index>(v), s);
    std::copy(r.begin(), r.end(), table.begin() + static_cast<std::ptrdiff_t>(v * K));
  }
  return table;
}

// Log terms of one held-out conditional: the observation and its negatives.
void score(const ParameterSet& params, Family family, const std::vector<double>& table,
           const ContextWindow& w, std::size_t n_negatives, SplitMix64& rng, Accumulator& group,
           Accumulator& all) {
  const std::size_t K = params.shape().dim;
  auto row = [&](Index v) { return std::span<const double>(table.data() + v * K, K); };
  const auto csum = context_sum(params, w);
  const auto positive = log_prob(family, w.value, natural_parameter(row(w.target), csum));
  group.sum += positive;
  all.sum += positive;
  ++group.positives;
  ++all.positives;
  for (Index neg : negative_sample(params.shape().vocab, w.target, n_negatives, rng)) {
    const auto lp = log_prob(family, 0.0, natural_parameter(row(neg), csum));
    group.sum += lp;
    all.sum += lp;
    ++group.negatives;
    ++all.negatives;
  }
}

}  // namespace

EvalReport heldout_pll(const ParameterSet& params, Family family, const GroupedCorpus& corpus,
                       const EvalOptions& options) {
  corpus.validate(/*allow_empty_groups=*/true);
  if (corpus.vocab->size() != params.shape().vocab) {
    throw std::invalid_argument("vocabulary mismatch between model and corpus");
  }
  if (corpus.groups.size() != params.shape().groups) {
    throw std::invalid_argument("group count mismatch between model and corpus");
  }

  EvalReport report;
  Accumulator all;
  std::uint64_t observation = 0;

  for (std::size_t g = 0; g < corpus.groups.size(); ++g) {
    const Group& group = corpus.groups[g];
    Accumulator acc;
    const auto table = corpus.units(g) > 0 ? group_table(params, g) : std::vector<double>{};
    if (corpus.modality == Modality::Text) {
      for (std::size_t d = 0; d < group.document_count(); ++d) {
        const auto doc = group.document(d);
        for (std::size_t i = 0; i < doc.size(); ++i, ++observation) {
          SplitMix64 rng(mix_seed(options.seed, observation));
          ContextWindow w = context_window(doc, i, options.window);
          w.group = g;
          score(params, family, table, w, options.n_negatives, rng, acc, all);
        }
      }
    } else {
      for (const auto& trip : group.trips) {
        for (std::size_t i = 0; i < trip.size(); ++i, ++observation) {
          SplitMix64 rng(mix_seed(options.seed, observation));
          ContextWindow w = basket_window(trip, i, options.basket_context_limit, rng);
          w.group = g;
          score(params, family, table, w, options.n_negatives, rng, acc, all);
        }
      }
    }
    const double mean = acc.terms() > 0 ? acc.sum / static_cast<double>(acc.terms())
                                        : std::numeric_limits<double>::quiet_NaN();
    report.per_group_pll.emplace_back(group.id, mean);
  }

  if (all.terms() == 0) throw std::invalid_argument("no held-out observations to evaluate");
  report.mean_pll = all.sum / static_cast<double>(all.terms());
  report.n_positive_terms = all.positives;
  report.n_negative_terms = all.negatives;
  return report;
}

EvalReport heldout_pll(const Checkpoint& ckpt, const GroupedCorpus& corpus,
                       const EvalOptions& options) {
  const auto& vocab = *corpus.vocab;
  bool same = vocab.size() == ckpt.tokens.size();
  for (std::size_t v = 0; same && v < vocab.size(); ++v) same = vocab.token(static_cast<Index>(v)) == ckpt.tokens[v];
  if (!same) throw std::invalid_argument("vocabulary mismatch between checkpoint and corpus");
  if (corpus.groups.size() != ckpt.group_ids.size()) {
    throw std::invalid_argument("group mismatch between checkpoint and corpus");
  }
  for (std::size_t g = 0; g < corpus.groups.size(); ++g) {
    if (corpus.groups[g].id != ckpt.group_ids[g]) {
      throw std::invalid_argument("group mismatch between checkpoint and corpus: '" +
                                  corpus.groups[g].id + "' vs '" + ckpt.group_ids[g] + "'");
    }
  }
  return heldout_pll(ckpt.params, ckpt.family, corpus, options);
}

void write_report_tsv(const EvalReport& report, std::ostream& out) {
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << "mean_pll\t" << report.mean_pll << '\n';
  out << "n_positive_terms\t" << report.n_positive_terms << '\n';
  out << "n_negative_terms\t" << report.n_negative_terms << '\n';
  for (const auto& [group, pll] : report.per_group_pll) out << "group\t" << group << '\t' << pll << '\n';
  out.precision(precision);
}

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["mean_pll"] = report.mean_pll;
  j["n_positive_terms"] = report.n_positive_terms;
  j["n_negative_terms"] = report.n_negative_terms;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& [group, pll] : report.per_group_pll) {
    nlohmann::ordered_json g;
    g["group"] = group;
    if (std::isfinite(pll)) {
      g["pll"] = pll;
    } else {
      g["pll"] = nullptr;
    }
    groups.push_back(g);
  }
  j["per_group"] = groups;
  out << j.dump(2) << '\n';
}

}  // namespace sefe
