#include "sefe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sefe {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  lookup_.reserve(entries_.size());
  for (std::size_t v = 0; v < entries_.size(); ++v) {
    if (!lookup_.emplace(entries_[v].token, static_cast<Index>(v)).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + entries_[v].token + "'");
    }
  }
}

std::optional<Index> Vocabulary::find(std::string_view token) const {
  auto it = lookup_.find(std::string(token));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::same_tokens(const Vocabulary& other) const {
  if (size() != other.size()) return false;
  for (std::size_t v = 0; v < size(); ++v) {
    if (entries_[v].token != other.entries_[v].token) return false;
  }
  return true;
}

Vocabulary build_vocabulary(const std::unordered_map<std::string, std::uint64_t>& counts,
                            std::size_t cap) {
  if (counts.empty()) throw std::invalid_argument("empty corpus");
  if (cap == 0) throw std::invalid_argument("vocabulary cap must be positive");

  std::vector<VocabEntry> entries;
  entries.reserve(counts.size());
  for (const auto& [token, count] : counts) entries.push_back({token, count, 0.0});
  std::sort(entries.begin(), entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.token < b.token;
  });
  if (entries.size() > cap) entries.resize(cap);

  // Renormalized over the retained entries.
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.count;
  for (auto& e : entries) {
    e.frequency = static_cast<double>(e.count) / static_cast<double>(total);
  }
  return Vocabulary(std::move(entries));
}

Vocabulary build_vocabulary(std::span<const std::string> tokens, std::size_t cap) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return build_vocabulary(counts, cap);
}

void write_vocabulary_tsv(const Vocabulary& vocab, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    const auto& e = vocab.entries()[v];
    out << (v + 1) << '\t' << e.token << '\t' << e.count << '\t' << e.frequency << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

// ---------------------------------------------------------------------------
// Corpus containers

void Group::add_document(std::span<const Index> doc) {
  if (doc.empty()) return;
  tokens.insert(tokens.end(), doc.begin(), doc.end());
  doc_offsets.push_back(tokens.size());
}

std::size_t GroupedCorpus::units(std::size_t g) const {
  return modality == Modality::Text ? groups[g].tokens.size() : groups[g].trips.size();
}

std::size_t GroupedCorpus::units() const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) n += units(g);
  return n;
}

std::size_t GroupedCorpus::observations() const {
  if (modality == Modality::Text) return units();
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (const auto& trip : g.trips) n += trip.size();
  }
  return n;
}

void GroupedCorpus::validate(bool allow_empty_groups) const {
  if (!vocab) throw std::invalid_argument("corpus has no vocabulary");
  if (groups.empty()) throw std::invalid_argument("corpus has no groups");
  const auto L = vocab->size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (!allow_empty_groups && units(g) == 0) {
      throw std::invalid_argument("group '" + group.id + "' is empty");
    }
    for (Index v : group.tokens) {
      if (v >= L) throw std::invalid_argument("token index out of range in group '" + group.id + "'");
    }
    for (const auto& trip : group.trips) {
      for (const auto& it : trip) {
        if (it.item >= L) {
          throw std::invalid_argument("item index out of range in group '" + group.id + "'");
        }
        if (it.quantity < 1) {
          throw std::invalid_argument("nonpositive quantity in group '" + group.id + "'");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Subsampling

double drop_probability(double frequency, double threshold) {
  if (frequency <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - std::sqrt(threshold / frequency));
}

std::vector<Index> subsample_tokens(std::span<const Index> stream, const Vocabulary& vocab,
                                    double threshold, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Index> kept;
  kept.reserve(stream.size());
  for (Index v : stream) {
    const double p = drop_probability(vocab.frequency(v), threshold);
    // One draw per occurrence keeps the random stream aligned with the input.
    if (unif(rng) >= p) kept.push_back(v);
  }
  return kept;
}

GroupedCorpus subsample_corpus(const GroupedCorpus& corpus, double threshold, Rng& rng) {
  if (corpus.modality != Modality::Text) return corpus;
  GroupedCorpus out;
  out.modality = corpus.modality;
  out.vocab = corpus.vocab;
  out.groups.reserve(corpus.groups.size());
  for (const auto& g : corpus.groups) {
    Group sub;
    sub.id = g.id;
    for (std::size_t d = 0; d < g.document_count(); ++d) {
      sub.add_document(subsample_tokens(g.document(d), *corpus.vocab, threshold, rng));
    }
    out.groups.push_back(std::move(sub));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windows and minibatches

ContextWindow context_window(std::span<const Index> doc, std::size_t i, std::size_t window) {
  if (window == 0 || window % 2 != 0) {
    throw std::invalid_argument("window must be an even positive integer");
  }
  if (i >= doc.size()) throw std::out_of_range("window position outside document");
  const std::size_t half = window / 2;
  ContextWindow w;
  w.target = doc[i];
  w.position = i;
  w.value = 1.0;
  const std::size_t lo = i >= half ? i - half : 0;
  const std::size_t hi = std::min(doc.size() - 1, i + half);
  w.context.reserve(hi - lo);
  for (std::size_t j = lo; j <= hi; ++j) {
    if (j != i) w.context.push_back({doc[j], 1.0});
  }
  return w;
}

namespace {

template <typename Engine>
ContextWindow basket_window_impl(const Trip& trip, std::size_t i, std::size_t limit, Engine& rng) {
  if (i >= trip.size()) throw std::out_of_range("item position outside trip");
  ContextWindow w;
  w.target = trip[i].item;
  w.position = i;
  w.value = static_cast<double>(trip[i].quantity);
  std::vector<ContextEntry> others;
  others.reserve(trip.size() - 1);
  for (std::size_t j = 0; j < trip.size(); ++j) {
    if (j != i) others.push_back({trip[j].item, static_cast<double>(trip[j].quantity)});
  }
  if (limit > 0 && others.size() > limit) {
    w.context.reserve(limit);
    std::sample(others.begin(), others.end(), std::back_inserter(w.context), limit, rng);
  } else {
    w.context = std::move(others);
  }
  return w;
}

}  // namespace

ContextWindow basket_window(const Trip& trip, std::size_t i, std::size_t limit, Rng& rng) {
  return basket_window_impl(trip, i, limit, rng);
}

ContextWindow basket_window(const Trip& trip, std::size_t i, std::size_t limit, SplitMix64& rng) {
  return basket_window_impl(trip, i, limit, rng);
}

std::vector<std::size_t> group_quotas(const GroupedCorpus& corpus, std::size_t size) {
  const std::size_t total = corpus.units();
  if (size > total) {
    throw std::invalid_argument("minibatch size " + std::to_string(size) +
                                " exceeds corpus size " + std::to_string(total));
  }
  const std::size_t S = corpus.groups.size();
  std::vector<std::size_t> quota(S, 0);
  std::vector<std::pair<double, std::size_t>> remainder(S);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < S; ++g) {
    const double exact =
        static_cast<double>(size) * static_cast<double>(corpus.units(g)) / static_cast<double>(total);
    quota[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = {exact - static_cast<double>(quota[g]), g};
    assigned += quota[g];
  }
  // Largest fractional remainder first, lower group index on ties.
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < size; ++r) {
    const std::size_t g = remainder[r % S].second;
    if (quota[g] < corpus.units(g)) {
      ++quota[g];
      ++assigned;
    }
  }
  return quota;
}

std::vector<ContextWindow> sample_minibatch(const GroupedCorpus& corpus, std::size_t size,
                                            const SamplerOptions& options, Rng& rng) {
  if (size == 0) throw std::invalid_argument("minibatch size must be positive");
  const auto quota = group_quotas(corpus, size);
  std::vector<ContextWindow> batch;
  batch.reserve(size);

  for (std::size_t g = 0; g < corpus.groups.size(); ++g) {
    const std::size_t q = quota[g];
    if (q == 0) continue;
    const Group& group = corpus.groups[g];

    if (corpus.modality == Modality::Text) {
      const std::size_t n = group.tokens.size();
      std::uniform_int_distribution<std::size_t> start_dist(0, n - q);
      const std::size_t start = start_dist(rng);
      auto doc_it = std::upper_bound(group.doc_offsets.begin(), group.doc_offsets.end(), start);
      std::size_t d = static_cast<std::size_t>(doc_it - group.doc_offsets.begin()) - 1;
      for (std::size_t p = start; p < start + q; ++p) {
        while (p >= group.doc_offsets[d + 1]) ++d;
        ContextWindow w = context_window(group.document(d), p - group.doc_offsets[d], options.window);
        w.position = p;
        w.group = g;
        batch.push_back(std::move(w));
      }
    } else {
      std::vector<std::size_t> all(group.trips.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      std::vector<std::size_t> chosen;
      chosen.reserve(q);
      std::sample(all.begin(), all.end(), std::back_inserter(chosen), q, rng);
      for (std::size_t t : chosen) {
        const Trip& trip = group.trips[t];
        for (std::size_t i = 0; i < trip.size(); ++i) {
          ContextWindow w = basket_window(trip, i, options.basket_context_limit, rng);
          w.position = t;
          w.group = g;
          batch.push_back(std::move(w));
        }
      }
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Ingestion

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  const auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    std::size_t a = i, b = j;
    while (a < b && is_punct(line[a])) ++a;
    while (b > a && is_punct(line[b - 1])) --b;
    if (a < b) {
      std::string tok(line.substr(a, b - a));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<RawTextGroup> load_text_groups(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error("text corpus directory not found: " + root.string());
  }
  std::vector<RawTextGroup> groups;
  for (const auto& dir : sorted_entries(root, true)) {
    RawTextGroup group;
    group.id = dir.filename().string();
    for (const auto& file : sorted_entries(dir, false)) {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("cannot read " + file.string());
      std::string line;
      while (std::getline(in, line)) {
        auto doc = tokenize(line);
        if (!doc.empty()) group.documents.push_back(std::move(doc));
      }
    }
    if (!group.documents.empty()) groups.push_back(std::move(group));
  }
  if (groups.empty()) throw std::runtime_error("no group directories with text under " + root.string());
  return groups;
}

std::vector<RawBasketGroup> parse_basket_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("basket file is empty");
  const auto header = split_fields(line);
  const std::vector<std::string> expected{"trip_id", "group", "item", "quantity"};
  if (header != expected) {
    throw std::runtime_error("basket header must be 'trip_id,group,item,quantity'");
  }

  std::map<std::string, RawBasketGroup> by_group;
  // trip id -> (group id, position of the trip within its group)
  std::unordered_map<std::string, std::pair<std::string, std::size_t>> trips;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw std::runtime_error("malformed basket row at line " + std::to_string(lineno));
    }
    long long qty = 0;
    try {
      std::size_t used = 0;
      qty = std::stoll(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("invalid quantity at line " + std::to_string(lineno));
    }
    if (qty < 1) throw std::runtime_error("quantity must be >= 1 at line " + std::to_string(lineno));

    auto& group = by_group[f[1]];
    group.id = f[1];
    auto [it, inserted] = trips.try_emplace(f[0], f[1], group.trips.size());
    if (inserted) {
      group.trips.push_back(RawTrip{f[0], {}});
    } else if (it->second.first != f[1]) {
      throw std::runtime_error("trip '" + f[0] + "' appears in two groups (line " +
                               std::to_string(lineno) + ")");
    }
    auto& items = group.trips[it->second.second].items;
    auto existing = std::find_if(items.begin(), items.end(),
                                 [&](const auto& p) { return p.first == f[2]; });
    if (existing != items.end()) {
      existing->second += static_cast<std::uint32_t>(qty);
    } else {
      items.emplace_back(f[2], static_cast<std::uint32_t>(qty));
    }
  }
  std::vector<RawBasketGroup> out;
  for (auto& [id, g] : by_group) out.push_back(std::move(g));
  if (out.empty()) throw std::runtime_error("empty corpus");
  return out;
}

std::vector<RawBasketGroup> load_basket_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read basket file " + path.string());
  return parse_basket_csv(in);
}

std::array<std::size_t, 3> split_sizes(std::size_t n, SplitFractions fractions) {
  auto boundary = [n](double f) {
    return std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * f)));
  };
  std::size_t train = std::max<std::size_t>(n > 0 ? 1 : 0, boundary(fractions.train));
  std::size_t valid_end = std::max(train, boundary(fractions.train + fractions.validation));
  return {train, valid_end - train, n - valid_end};
}

namespace {

GroupedCorpus empty_like(Modality modality, const std::shared_ptr<const Vocabulary>& vocab,
                         const std::vector<std::string>& ids) {
  GroupedCorpus c;
  c.modality = modality;
  c.vocab = vocab;
  for (const auto& id : ids) c.groups.push_back(Group{id, {}, {0}, {}});
  return c;
}

}  // namespace

CorpusSplits prepare_text_corpus(const std::vector<RawTextGroup>& groups, std::size_t cap,
                                 SplitFractions fractions) {
  if (groups.empty()) throw std::invalid_argument("empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  std::vector<std::array<std::size_t, 3>> sizes;
  std::vector<std::string> ids;
  for (const auto& g : groups) {
    sizes.push_back(split_sizes(g.documents.size(), fractions));
    ids.push_back(g.id);
    for (std::size_t d = 0; d < sizes.back()[0]; ++d) {
      for (const auto& t : g.documents[d]) ++counts[t];
    }
  }
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(counts, cap));

  CorpusSplits out{vocab, empty_like(Modality::Text, vocab, ids),
                   empty_like(Modality::Text, vocab, ids), empty_like(Modality::Text, vocab, ids)};
  GroupedCorpus* targets[3] = {&out.train, &out.validation, &out.test};
  std::vector<Index> mapped;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t d = 0;
    for (int part = 0; part < 3; ++part) {
      for (std::size_t k = 0; k < sizes[g][part]; ++k, ++d) {
        mapped.clear();
        for (const auto& t : groups[g].documents[d]) {
          if (auto v = vocab->find(t)) mapped.push_back(*v);
        }
        targets[part]->groups[g].add_document(mapped);
      }
    }
  }
  out.train.validate();
  return out;
}

CorpusSplits prepare_basket_corpus(const std::vector<RawBasketGroup>& groups, std::size_t cap,
                                   SplitFractions fractions) {
  if (groups.empty()) throw std::invalid_argument("empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  std::vector<std::array<std::size_t, 3>> sizes;
  std::vector<std::string> ids;
  for (const auto& g : groups) {
    sizes.push_back(split_sizes(g.trips.size(), fractions));
    ids.push_back(g.id);
    for (std::size_t t = 0; t < sizes.back()[0]; ++t) {
      for (const auto& [item, qty] : g.trips[t].items) counts[item] += qty;
    }
  }
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(counts, cap));

  CorpusSplits out{vocab, empty_like(Modality::Basket, vocab, ids),
                   empty_like(Modality::Basket, vocab, ids),
                   empty_like(Modality::Basket, vocab, ids)};
  GroupedCorpus* targets[3] = {&out.train, &out.validation, &out.test};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t t = 0;
    for (int part = 0; part < 3; ++part) {
      for (std::size_t k = 0; k < sizes[g][part]; ++k, ++t) {
        Trip trip;
        for (const auto& [item, qty] : groups[g].trips[t].items) {
          if (auto v = vocab->find(item)) trip.push_back({*v, qty});
        }
        if (!trip.empty()) targets[part]->groups[g].trips.push_back(std::move(trip));
      }
    }
  }
  out.train.validate();
  return out;
}

}  // namespace sefe
