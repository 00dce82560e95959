#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sefe/types.hpp"

namespace sefe {

struct VocabEntry {
  std::string token;
  std::uint64_t count = 0;
  double frequency = 0.0;
};

/// Term table sorted by count descending, ties by token ascending.
/// Frequencies are renormalized over the retained entries.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  const VocabEntry& operator[](Index v) const { return entries_[v]; }
  const std::string& token(Index v) const { return entries_[v].token; }
  double frequency(Index v) const { return entries_[v].frequency; }
  std::optional<Index> find(std::string_view token) const;

  bool same_tokens(const Vocabulary& other) const;

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, Index> lookup_;
};

/// Keeps the `cap` most frequent tokens. Throws on an empty stream.
Vocabulary build_vocabulary(std::span<const std::string> tokens, std::size_t cap);
Vocabulary build_vocabulary(const std::unordered_map<std::string, std::uint64_t>& counts,
                            std::size_t cap);

/// `rank<TAB>token<TAB>count<TAB>frequency`, rank starting at 1.
void write_vocabulary_tsv(const Vocabulary& vocab, std::ostream& out);

struct BasketItem {
  Index item = 0;
  std::uint32_t quantity = 1;
};

using Trip = std::vector<BasketItem>;

/// One group of observations. Text groups use `tokens` with document
/// boundaries in `doc_offsets` (size = documents + 1); basket groups use `trips`.
struct Group {
  std::string id;
  std::vector<Index> tokens;
  std::vector<std::size_t> doc_offsets{0};
  std::vector<Trip> trips;

  std::size_t document_count() const { return doc_offsets.size() - 1; }
  std::span<const Index> document(std::size_t d) const {
    return std::span<const Index>(tokens).subspan(doc_offsets[d],
                                                  doc_offsets[d + 1] - doc_offsets[d]);
  }
  void add_document(std::span<const Index> doc);
};

struct GroupedCorpus {
  Modality modality = Modality::Text;
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<Group> groups;

  /// Sampling units: tokens for text, trips for baskets.
  std::size_t units(std::size_t g) const;
  std::size_t units() const;
  /// Nonzero observations x_vi: tokens for text, trip-item pairs for baskets.
  std::size_t observations() const;
  std::size_t group_count() const { return groups.size(); }

  /// Checks index and quantity invariants. Empty groups are rejected unless allowed.
  void validate(bool allow_empty_groups = false) const;
};

/// One conditional: the target, its value and the (object, value) pairs of its context.
struct ContextEntry {
  Index item = 0;
  double value = 1.0;
};

struct ContextWindow {
  Index target = 0;
  std::size_t position = 0;
  double value = 1.0;
  std::vector<ContextEntry> context;
  std::size_t group = 0;
};

/// Drop probability max(0, 1 - sqrt(threshold / f)).
double drop_probability(double frequency, double threshold);

std::vector<Index> subsample_tokens(std::span<const Index> stream, const Vocabulary& vocab,
                                    double threshold, Rng& rng);

/// Subsamples every document of a text corpus; documents left empty are dropped.
GroupedCorpus subsample_corpus(const GroupedCorpus& corpus, double threshold, Rng& rng);

/// Text window centered at `i`: window/2 positions on each side, clipped to `doc`.
ContextWindow context_window(std::span<const Index> doc, std::size_t i, std::size_t window);

/// Basket conditional for `trip[i]`: all other items, randomly truncated to `limit`
/// when larger (limit 0 disables truncation).
ContextWindow basket_window(const Trip& trip, std::size_t i, std::size_t limit, Rng& rng);
ContextWindow basket_window(const Trip& trip, std::size_t i, std::size_t limit, SplitMix64& rng);

/// Proportional allocation of `size` units over groups (largest remainder).
std::vector<std::size_t> group_quotas(const GroupedCorpus& corpus, std::size_t size);

struct SamplerOptions {
  std::size_t window = 8;
  std::size_t basket_context_limit = 20;
};

/// Text: each group contributes a consecutive span of its quota length.
/// Baskets: each group contributes whole trips, one window per item.
std::vector<ContextWindow> sample_minibatch(const GroupedCorpus& corpus, std::size_t size,
                                            const SamplerOptions& options, Rng& rng);

// ---- ingestion ----

std::vector<std::string> tokenize(std::string_view line);

struct RawTextGroup {
  std::string id;
  std::vector<std::vector<std::string>> documents;
};

struct RawTrip {
  std::string id;
  std::vector<std::pair<std::string, std::uint32_t>> items;
};

struct RawBasketGroup {
  std::string id;
  std::vector<RawTrip> trips;
};

/// One subdirectory per group (sorted by name), files sorted by name, one document per line.
std::vector<RawTextGroup> load_text_groups(const std::filesystem::path& root);

/// CSV with header `trip_id,group,item,quantity`. Groups sorted by id; trips keep file order.
std::vector<RawBasketGroup> load_basket_file(const std::filesystem::path& path);
std::vector<RawBasketGroup> parse_basket_csv(std::istream& in);

struct CorpusSplits {
  std::shared_ptr<const Vocabulary> vocab;
  GroupedCorpus train;
  GroupedCorpus validation;
  GroupedCorpus test;
};

struct SplitFractions {
  double train;
  double validation;
};

inline constexpr SplitFractions kTextSplit{0.8, 0.1};
inline constexpr SplitFractions kBasketSplit{0.9, 0.05};

/// Sizes of consecutive train/validation/test chunks of `n` units.
std::array<std::size_t, 3> split_sizes(std::size_t n, SplitFractions fractions);

/// Splits documents per group, builds the vocabulary on the training chunk only,
/// and maps every split onto it (out-of-vocabulary tokens removed).
CorpusSplits prepare_text_corpus(const std::vector<RawTextGroup>& groups, std::size_t cap,
                                 SplitFractions fractions = kTextSplit);
CorpusSplits prepare_basket_corpus(const std::vector<RawBasketGroup>& groups, std::size_t cap,
                                   SplitFractions fractions = kBasketSplit);

}  // namespace sefe
