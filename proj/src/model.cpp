#include "sefe/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sefe {

void ModelShape::validate() const {
  if (dim < 1 || vocab < 1 || groups < 1) {
    throw std::invalid_argument("model shape requires K, L, S >= 1");
  }
  if (is_amortized(mode) && hidden < 1) {
    throw std::invalid_argument("amortized modes require H >= 1");
  }
  if (!is_amortized(mode) && hidden != 0) {
    throw std::invalid_argument("H must be 0 unless the mode is amortized");
  }
}

std::uint64_t parameter_count(const ModelShape& shape) {
  shape.validate();
  const std::uint64_t K = shape.dim, L = shape.vocab, S = shape.groups, H = shape.hidden;
  switch (shape.mode) {
    case Mode::Global: return 2 * K * L;
    case Mode::Separate: return 2 * K * L * S;
    case Mode::Sefe: return K * L * (S + 1);
    case Mode::Hierarchical: return K * L * (S + 2);
    case Mode::AmortizedFF:
    case Mode::AmortizedResnet: return 2 * K * L + S * (2 * K * H);
  }
  return 0;
}

std::size_t ParameterBlock::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

ParameterSet::ParameterSet(const ModelShape& shape) : shape_(shape) {
  shape_.validate();
  const std::size_t K = shape.dim, L = shape.vocab, S = shape.groups, H = shape.hidden;
  if (shape.mode == Mode::Separate) {
    alpha_ = add_block("alpha_groups", {S, L, K});
  } else {
    alpha_ = add_block("alpha", {L, K});
  }
  if (has_global_embeddings()) rho_global_ = add_block("rho_global", {L, K});
  if (has_group_embeddings()) rho_groups_ = add_block("rho_groups", {S, L, K});
  if (has_networks()) {
    w1_ = add_block("W1", {S, H, K});
    w2_ = add_block("W2", {S, K, H});
  }
  data_.assign(blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size(), 0.0);
}

std::size_t ParameterSet::add_block(std::string name, std::vector<std::size_t> dims) {
  const std::size_t offset = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size();
  blocks_.push_back({std::move(name), offset, std::move(dims)});
  return offset;
}

bool ParameterSet::has_global_embeddings() const {
  return shape_.mode == Mode::Global || shape_.mode == Mode::Hierarchical ||
         is_amortized(shape_.mode);
}

bool ParameterSet::has_group_embeddings() const {
  return shape_.mode == Mode::Separate || shape_.mode == Mode::Sefe ||
         shape_.mode == Mode::Hierarchical;
}

const ParameterBlock* ParameterSet::find_block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

std::span<double> ParameterSet::block(std::string_view name) {
  const auto* b = find_block(name);
  if (!b) throw std::out_of_range("no parameter block '" + std::string(name) + "'");
  return std::span<double>(data_).subspan(b->offset, b->size());
}

std::span<const double> ParameterSet::block(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->block(name);
}

std::size_t ParameterSet::row_offset(std::size_t block_offset, std::size_t s, Index v) const {
  if (block_offset == kAbsent) throw std::logic_error("parameter block absent for this mode");
  if (v >= shape_.vocab) throw std::out_of_range("object index out of range");
  if (s >= shape_.groups) throw std::out_of_range("group index out of range");
  return block_offset + (s * shape_.vocab + v) * shape_.dim;
}

std::span<double> ParameterSet::context(Index v, std::size_t s) {
  const std::size_t table = separate_contexts() ? s : 0;
  if (s >= shape_.groups) throw std::out_of_range("group index out of range");
  return std::span<double>(data_).subspan(row_offset(alpha_, table, v), shape_.dim);
}

std::span<const double> ParameterSet::context(Index v, std::size_t s) const {
  return const_cast<ParameterSet*>(this)->context(v, s);
}

std::span<double> ParameterSet::global_embedding(Index v) {
  return std::span<double>(data_).subspan(row_offset(rho_global_, 0, v), shape_.dim);
}

std::span<const double> ParameterSet::global_embedding(Index v) const {
  return const_cast<ParameterSet*>(this)->global_embedding(v);
}

std::span<double> ParameterSet::group_embedding(Index v, std::size_t s) {
  return std::span<double>(data_).subspan(row_offset(rho_groups_, s, v), shape_.dim);
}

std::span<const double> ParameterSet::group_embedding(Index v, std::size_t s) const {
  return const_cast<ParameterSet*>(this)->group_embedding(v, s);
}

std::span<double> ParameterSet::w1(std::size_t s) {
  if (w1_ == kAbsent) throw std::logic_error("mode has no amortization networks");
  if (s >= shape_.groups) throw std::out_of_range("group index out of range");
  const std::size_t n = shape_.hidden * shape_.dim;
  return std::span<double>(data_).subspan(w1_ + s * n, n);
}

std::span<const double> ParameterSet::w1(std::size_t s) const {
  return const_cast<ParameterSet*>(this)->w1(s);
}

std::span<double> ParameterSet::w2(std::size_t s) {
  if (w2_ == kAbsent) throw std::logic_error("mode has no amortization networks");
  if (s >= shape_.groups) throw std::out_of_range("group index out of range");
  const std::size_t n = shape_.hidden * shape_.dim;
  return std::span<double>(data_).subspan(w2_ + s * n, n);
}

std::span<const double> ParameterSet::w2(std::size_t s) const {
  return const_cast<ParameterSet*>(this)->w2(s);
}

AmortizationNetRef ParameterSet::net(std::size_t s) const {
  return {w1(s), w2(s), shape_.hidden, shape_.dim};
}

std::span<double> ParameterSet::contexts() {
  return block(separate_contexts() ? "alpha_groups" : "alpha");
}

void ParameterSet::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool ParameterSet::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------

std::vector<double> context_sum(const ParameterSet& params, const ContextWindow& window) {
  std::vector<double> sum(params.shape().dim, 0.0);
  for (const auto& c : window.context) {
    const auto alpha = params.context(c.item, window.group);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += c.value * alpha[k];
  }
  return sum;
}

double natural_parameter(std::span<const double> rho, std::span<const double> csum) {
  if (rho.size() != csum.size()) {
    throw std::invalid_argument("natural_parameter: dimension mismatch (" +
                                std::to_string(rho.size()) + " vs " +
                                std::to_string(csum.size()) + ")");
  }
  double eta = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) eta += rho[k] * csum[k];
  return eta;
}

void amortize_into(NetKind kind, std::span<const double> rho0, const AmortizationNetRef& net,
                   std::span<double> out, std::span<double> hidden_out) {
  const std::size_t K = net.dim, H = net.hidden;
  if (rho0.size() != K || out.size() != K || hidden_out.size() != H ||
      net.w1.size() != H * K || net.w2.size() != K * H) {
    throw std::invalid_argument("amortize: shape mismatch");
  }
  for (std::size_t h = 0; h < H; ++h) {
    double a = 0.0;
    const double* row = net.w1.data() + h * K;
    for (std::size_t k = 0; k < K; ++k) a += row[k] * rho0[k];
    hidden_out[h] = std::tanh(a);
  }
  for (std::size_t k = 0; k < K; ++k) {
    double o = kind == NetKind::Residual ? rho0[k] : 0.0;
    const double* row = net.w2.data() + k * H;
    for (std::size_t h = 0; h < H; ++h) o += row[h] * hidden_out[h];
    out[k] = o;
  }
}

std::vector<double> amortize(NetKind kind, std::span<const double> rho0,
                             const AmortizationNetRef& net) {
  std::vector<double> out(net.dim), hidden(net.hidden);
  amortize_into(kind, rho0, net, out, hidden);
  return out;
}

std::vector<double> resolve_embedding(const ParameterSet& params, Index v, std::size_t s) {
  const auto& shape = params.shape();
  if (v >= shape.vocab) throw std::out_of_range("object index out of range");
  if (s >= shape.groups) throw std::out_of_range("group index out of range");
  switch (shape.mode) {
    case Mode::Global: {
      auto r = params.global_embedding(v);
      return {r.begin(), r.end()};
    }
    case Mode::Separate:
    case Mode::Sefe:
    case Mode::Hierarchical: {
      auto r = params.group_embedding(v, s);
      return {r.begin(), r.end()};
    }
    case Mode::AmortizedFF:
      return amortize(NetKind::FeedForward, params.global_embedding(v), params.net(s));
    case Mode::AmortizedResnet:
      return amortize(NetKind::Residual, params.global_embedding(v), params.net(s));
  }
  return {};
}

}  // namespace sefe
