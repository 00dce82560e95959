#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sefe/corpus.hpp"
#include "sefe/types.hpp"

namespace sefe {

/// Dimensions of a model: K (embedding dim), L (objects), S (groups), H (hidden units).
struct ModelShape {
  std::size_t dim = 100;
  std::size_t vocab = 1;
  std::size_t groups = 1;
  std::size_t hidden = 0;
  Mode mode = Mode::Sefe;

  /// K, L, S >= 1; H >= 1 iff the mode is amortized.
  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

/// Number of free parameters:
///   global 2KL, separate 2KLS, sefe KL(S+1), hierarchical KL(S+2), amortized 2KL + S*2KH.
std::uint64_t parameter_count(const ModelShape& shape);

/// A named, shaped slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> dims;

  std::size_t size() const;
};

/// Weights of one group's amortization network, row-major: W1 is H x K, W2 is K x H.
struct AmortizationNetRef {
  std::span<const double> w1;
  std::span<const double> w2;
  std::size_t hidden = 0;
  std::size_t dim = 0;
};

struct AmortizationNet {
  std::size_t hidden = 0;
  std::size_t dim = 0;
  std::vector<double> w1;
  std::vector<double> w2;

  AmortizationNet(std::size_t hidden, std::size_t dim)
      : hidden(hidden), dim(dim), w1(hidden * dim, 0.0), w2(dim * hidden, 0.0) {}
  AmortizationNetRef ref() const { return {w1, w2, hidden, dim}; }
  std::size_t parameter_count() const { return 2 * hidden * dim; }
};

/// All model parameters in one contiguous buffer, laid out as the blocks demanded by the mode:
///
///   alpha         L x K        every mode except separate
///   alpha_groups  S x L x K    separate
///   rho_global    L x K        global, hierarchical, amortized
///   rho_groups    S x L x K    separate, sefe, hierarchical
///   W1            S x H x K    amortized
///   W2            S x K x H    amortized
///
/// A ParameterSet of the same shape doubles as the gradient container.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(const ModelShape& shape);

  const ModelShape& shape() const { return shape_; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::size_t size() const { return data_.size(); }

  const std::vector<ParameterBlock>& blocks() const { return blocks_; }
  const ParameterBlock* find_block(std::string_view name) const;
  std::span<double> block(std::string_view name);
  std::span<const double> block(std::string_view name) const;

  bool separate_contexts() const { return shape_.mode == Mode::Separate; }
  bool has_global_embeddings() const;
  bool has_group_embeddings() const;
  bool has_networks() const { return is_amortized(shape_.mode); }

  /// Context vector of v; in separate mode the table of group s is used, otherwise s is ignored.
  std::span<double> context(Index v, std::size_t s);
  std::span<const double> context(Index v, std::size_t s) const;
  std::span<double> global_embedding(Index v);
  std::span<const double> global_embedding(Index v) const;
  std::span<double> group_embedding(Index v, std::size_t s);
  std::span<const double> group_embedding(Index v, std::size_t s) const;
  std::span<double> w1(std::size_t s);
  std::span<const double> w1(std::size_t s) const;
  std::span<double> w2(std::size_t s);
  std::span<const double> w2(std::size_t s) const;
  AmortizationNetRef net(std::size_t s) const;

  /// Spans covering every context vector (one or S tables).
  std::span<double> contexts();

  void set_zero();
  bool all_finite() const;

  bool operator==(const ParameterSet& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::size_t add_block(std::string name, std::vector<std::size_t> dims);
  std::size_t row_offset(std::size_t block_offset, std::size_t s, Index v) const;

  ModelShape shape_;
  std::vector<double> data_;
  std::vector<ParameterBlock> blocks_;
  static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::size_t alpha_ = kAbsent;
  std::size_t rho_global_ = kAbsent;
  std::size_t rho_groups_ = kAbsent;
  std::size_t w1_ = kAbsent;
  std::size_t w2_ = kAbsent;
};

/// Sum over the window's context of x * alpha_{v'} (contexts of the window's group in separate mode).
std::vector<double> context_sum(const ParameterSet& params, const ContextWindow& window);

/// eta = rho . csum (identity link). Throws on dimension mismatch.
double natural_parameter(std::span<const double> rho, std::span<const double> csum);

enum class NetKind { FeedForward, Residual };

/// ff: W2 tanh(W1 rho0); resnet: rho0 + W2 tanh(W1 rho0). Throws on shape mismatch.
std::vector<double> amortize(NetKind kind, std::span<const double> rho0,
                             const AmortizationNetRef& net);

/// Same as amortize, writing the output to `out` (K) and tanh activations to `hidden_out` (H).
void amortize_into(NetKind kind, std::span<const double> rho0, const AmortizationNetRef& net,
                   std::span<double> out, std::span<double> hidden_out);

/// rho_v^(s) under the parameter sharing structure of the mode.
std::vector<double> resolve_embedding(const ParameterSet& params, Index v, std::size_t s);

}  // namespace sefe
