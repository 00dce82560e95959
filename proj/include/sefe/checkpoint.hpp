#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sefe/corpus.hpp"
#include "sefe/model.hpp"
#include "sefe/types.hpp"

namespace sefe {

/// Trained model plus everything needed to interpret it.
///
/// On-disk layout (all integers and floats little-endian; strings are u32 length + bytes):
///
///   magic "SEFECKPT"
///   u32 format version
///   u32 mode, u64 K, u64 L, u64 S, u64 H, u32 family, u64 seed
///   u32 #groups,  group ids
///   u32 #vocab,   (token, u64 count) per entry
///   u32 #meta,    (key, value) string pairs
///   u32 #arrays,  per array: name, u32 ndim, u64 dims[ndim], float32 data
///
/// Parameters are held at float32 precision so that write-then-read is bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  ModelShape shape;
  Family family = Family::Bernoulli;
  std::uint64_t seed = 0;
  std::vector<std::string> group_ids;
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::map<std::string, std::string> metadata;
  ParameterSet params;

  std::size_t group_index(const std::string& id) const;
  Index token_index(const std::string& token) const;

  bool operator==(const Checkpoint&) const = default;
};

/// Builds a checkpoint, rounding every parameter to float32.
Checkpoint make_checkpoint(const ParameterSet& params, Family family, std::uint64_t seed,
                           const Vocabulary& vocab, const std::vector<std::string>& group_ids);

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sefe
