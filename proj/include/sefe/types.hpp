#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sefe {

/// Row index into the vocabulary (word or item).
using Index = std::uint32_t;

/// Training-time random engine. Seeded explicitly everywhere; never default-constructed.
using Rng = std::mt19937_64;

enum class Modality { Text, Basket };

enum class Family { Bernoulli, Poisson };

/// Parameter sharing structure of the model.
enum class Mode {
  Global,           // one EFE over all groups
  Separate,         // independent EFE per group (own contexts and embeddings)
  Sefe,             // shared contexts, per-group embeddings
  Hierarchical,     // Sefe plus a Gaussian tie to global embeddings
  AmortizedFF,      // rho^(s) = W2 tanh(W1 rho0)
  AmortizedResnet,  // rho^(s) = rho0 + W2 tanh(W1 rho0)
};

std::string_view to_string(Modality m);
std::string_view to_string(Family f);
std::string_view to_string(Mode m);

// Parsers throw std::invalid_argument on unrecognized names.
Modality parse_modality(std::string_view s);
Family parse_family(std::string_view s);
Mode parse_mode(std::string_view s);

inline bool is_amortized(Mode m) {
  return m == Mode::AmortizedFF || m == Mode::AmortizedResnet;
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 generator. Used for per-observation streams in evaluation, where seeding an
/// mt19937_64 for every observation would cost more than the scoring itself.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace sefe
