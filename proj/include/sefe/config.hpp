#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sefe/model.hpp"
#include "sefe/trainer.hpp"
#include "sefe/types.hpp"

namespace sefe {

/// Everything a CLI run needs. Populated from a `key = value` file, then `--set` overrides.
struct RunConfig {
  Modality modality = Modality::Text;
  std::string text_dir;
  std::string basket_file;
  std::size_t vocab_cap = 15000;

  Mode mode = Mode::Sefe;
  std::optional<Family> family;  // default: bernoulli for text, poisson for baskets
  std::size_t dim = 100;
  std::size_t hidden = 25;

  TrainConfig train;
  std::string init_checkpoint;

  std::string eval_split = "test";
  std::string out_dir = ".";

  Family resolved_family() const;
  ModelShape shape(std::size_t vocab_size, std::size_t groups) const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Applies one setting. Unknown keys and invalid values throw std::invalid_argument
/// with a message naming the key.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; blank lines and lines starting with '#' are ignored.
void parse_config(RunConfig& config, std::istream& in);
void load_config_file(RunConfig& config, const std::filesystem::path& path);

}  // namespace sefe
