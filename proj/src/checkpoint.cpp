#include "sefe/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace sefe {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'E', 'F', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error("checkpoint truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 28)) throw std::runtime_error("checkpoint string length implausible");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace

std::size_t Checkpoint::group_index(const std::string& id) const {
  auto it = std::find(group_ids.begin(), group_ids.end(), id);
  if (it == group_ids.end()) throw std::invalid_argument("unknown group '" + id + "'");
  return static_cast<std::size_t>(it - group_ids.begin());
}

Index Checkpoint::token_index(const std::string& token) const {
  auto it = std::find(tokens.begin(), tokens.end(), token);
  if (it == tokens.end()) throw std::invalid_argument("unknown word '" + token + "'");
  return static_cast<Index>(it - tokens.begin());
}

Checkpoint make_checkpoint(const ParameterSet& params, Family family, std::uint64_t seed,
                           const Vocabulary& vocab, const std::vector<std::string>& group_ids) {
  if (vocab.size() != params.shape().vocab) {
    throw std::invalid_argument("vocabulary size does not match model shape");
  }
  if (group_ids.size() != params.shape().groups) {
    throw std::invalid_argument("group count does not match model shape");
  }
  Checkpoint c;
  c.shape = params.shape();
  c.family = family;
  c.seed = seed;
  c.group_ids = group_ids;
  for (const auto& e : vocab.entries()) {
    c.tokens.push_back(e.token);
    c.counts.push_back(e.count);
  }
  c.params = params;
  for (double& x : c.params.values()) x = static_cast<double>(static_cast<float>(x));
  return c;
}

void write_checkpoint(const Checkpoint& c, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, Checkpoint::kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.shape.mode));
  put<std::uint64_t>(out, c.shape.dim);
  put<std::uint64_t>(out, c.shape.vocab);
  put<std::uint64_t>(out, c.shape.groups);
  put<std::uint64_t>(out, c.shape.hidden);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.family));
  put<std::uint64_t>(out, c.seed);

  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.group_ids.size()));
  for (const auto& g : c.group_ids) put_string(out, g);

  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tokens.size()));
  for (std::size_t v = 0; v < c.tokens.size(); ++v) {
    put_string(out, c.tokens[v]);
    put<std::uint64_t>(out, v < c.counts.size() ? c.counts[v] : 0);
  }

  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    put_string(out, k);
    put_string(out, v);
  }

  const auto& blocks = c.params.blocks();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  const auto values = c.params.values();
  for (const auto& b : blocks) {
    put_string(out, b.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.dims.size()));
    for (auto d : b.dims) put<std::uint64_t>(out, d);
    for (std::size_t i = 0; i < b.size(); ++i) {
      put<float>(out, static_cast<float>(values[b.offset + i]));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != Checkpoint::kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto mode = get<std::uint32_t>(in);
  if (mode > static_cast<std::uint32_t>(Mode::AmortizedResnet)) {
    throw std::runtime_error("checkpoint has unknown mode");
  }
  c.shape.mode = static_cast<Mode>(mode);
  c.shape.dim = get<std::uint64_t>(in);
  c.shape.vocab = get<std::uint64_t>(in);
  c.shape.groups = get<std::uint64_t>(in);
  c.shape.hidden = get<std::uint64_t>(in);
  const auto family = get<std::uint32_t>(in);
  if (family > static_cast<std::uint32_t>(Family::Poisson)) {
    throw std::runtime_error("checkpoint has unknown family");
  }
  c.family = static_cast<Family>(family);
  c.seed = get<std::uint64_t>(in);
  c.shape.validate();

  const auto n_groups = get<std::uint32_t>(in);
  if (n_groups != c.shape.groups) throw std::runtime_error("checkpoint group table size mismatch");
  for (std::uint32_t i = 0; i < n_groups; ++i) c.group_ids.push_back(get_string(in));

  const auto n_vocab = get<std::uint32_t>(in);
  if (n_vocab != c.shape.vocab) throw std::runtime_error("checkpoint vocabulary size mismatch");
  for (std::uint32_t i = 0; i < n_vocab; ++i) {
    c.tokens.push_back(get_string(in));
    c.counts.push_back(get<std::uint64_t>(in));
  }

  const auto n_meta = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto key = get_string(in);
    c.metadata[key] = get_string(in);
  }

  c.params = ParameterSet(c.shape);
  const auto n_arrays = get<std::uint32_t>(in);
  if (n_arrays != c.params.blocks().size()) {
    throw std::runtime_error("checkpoint array count does not match its mode");
  }
  for (std::uint32_t a = 0; a < n_arrays; ++a) {
    const auto name = get_string(in);
    const auto* block = c.params.find_block(name);
    if (!block) throw std::runtime_error("unexpected checkpoint array '" + name + "'");
    const auto ndim = get<std::uint32_t>(in);
    std::vector<std::size_t> dims(ndim);
    for (auto& d : dims) d = get<std::uint64_t>(in);
    if (dims != block->dims) throw std::runtime_error("shape mismatch for array '" + name + "'");
    auto dst = c.params.block(name);
    for (auto& x : dst) x = static_cast<double>(get<float>(in));
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace sefe
