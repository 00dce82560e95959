#include "sefe/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace sefe {

Family RunConfig::resolved_family() const {
  if (family) return *family;
  return modality == Modality::Text ? Family::Bernoulli : Family::Poisson;
}

ModelShape RunConfig::shape(std::size_t vocab_size, std::size_t groups) const {
  ModelShape s;
  s.dim = dim;
  s.vocab = vocab_size;
  s.groups = groups;
  s.hidden = is_amortized(mode) ? hidden : 0;
  s.mode = mode;
  return s;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"modality", "text | basket"},
      {"text_dir", "directory with one subdirectory of text files per group"},
      {"basket_file", "CSV with header trip_id,group,item,quantity"},
      {"vocab_cap", "maximum vocabulary size (default 15000)"},
      {"mode", "global | separate | sefe | hierarchical | amortized_ff | amortized_resnet"},
      {"family", "bernoulli | poisson (default: bernoulli for text, poisson for baskets)"},
      {"dim", "embedding dimension K (default 100)"},
      {"hidden", "hidden units H of the amortization networks (default 25)"},
      {"prior_variance", "Gaussian prior variance, one of 100, 10, 1, 0.1 (default 1)"},
      {"hier_variance", "variance of group embeddings around the global ones (default 1)"},
      {"n_negatives", "negative samples per observation (default 20)"},
      {"window", "total text context size, even (default 8)"},
      {"minibatch_size", "units per minibatch; 0 = N/10000 tokens or N/100 trips (default 0)"},
      {"epochs", "passes over the training data (default 5)"},
      {"learning_rate", "Adam step size (default 0.001)"},
      {"beta1", "Adam first-moment decay (default 0.9)"},
      {"beta2", "Adam second-moment decay (default 0.999)"},
      {"epsilon", "Adam epsilon (default 1e-8)"},
      {"seed", "random seed (default 1)"},
      {"init_scheme", "prior_draw | from_global | fixed_context (default prior_draw)"},
      {"init_checkpoint", "global-mode checkpoint used by from_global and fixed_context"},
      {"basket_context_limit", "random truncation size for basket contexts; 0 disables (default 20)"},
      {"subsample", "true | false: drop frequent words each epoch (default true)"},
      {"subsample_threshold", "subsampling threshold t (default 1e-5)"},
      {"eval_split", "test | validation (default test)"},
      {"out_dir", "directory for outputs (default .)"},
  };
  return keys;
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  throw std::invalid_argument("config key '" + std::string(key) + "': invalid value '" +
                              std::string(value) + "' (" + std::string(why) + ")");
}

std::size_t to_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "expected a nonnegative integer");
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(value), &used);
    if (used != value.size()) bad_value(key, value, "expected a number");
    return d;
  } catch (const std::invalid_argument&) {
    bad_value(key, value, "expected a number");
  } catch (const std::out_of_range&) {
    bad_value(key, value, "number out of range");
  }
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "expected true or false");
}

template <typename F>
auto parse_enum(std::string_view key, std::string_view value, F parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    bad_value(key, value, e.what());
  }
}

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  auto& t = c.train;
  if (key == "modality") {
    c.modality = parse_enum(key, value, parse_modality);
  } else if (key == "text_dir") {
    c.text_dir = value;
  } else if (key == "basket_file") {
    c.basket_file = value;
  } else if (key == "vocab_cap") {
    c.vocab_cap = to_size(key, value);
    if (c.vocab_cap == 0) bad_value(key, value, "must be positive");
  } else if (key == "mode") {
    c.mode = parse_enum(key, value, parse_mode);
  } else if (key == "family") {
    c.family = parse_enum(key, value, parse_family);
  } else if (key == "dim") {
    c.dim = to_size(key, value);
    if (c.dim == 0) bad_value(key, value, "must be positive");
  } else if (key == "hidden") {
    c.hidden = to_size(key, value);
    if (c.hidden == 0) bad_value(key, value, "must be positive");
  } else if (key == "prior_variance") {
    t.prior_variance = to_double(key, value);
    bool ok = false;
    for (double g : kPriorVarianceGrid) ok = ok || g == t.prior_variance;
    if (!ok) bad_value(key, value, "must be one of 100, 10, 1, 0.1");
  } else if (key == "hier_variance") {
    t.hier_variance = to_double(key, value);
    if (!(t.hier_variance > 0.0)) bad_value(key, value, "must be positive");
  } else if (key == "n_negatives") {
    t.n_negatives = to_size(key, value);
    if (t.n_negatives == 0) bad_value(key, value, "must be positive");
  } else if (key == "window") {
    t.window = to_size(key, value);
    if (t.window == 0 || t.window % 2 != 0) bad_value(key, value, "must be even and positive");
  } else if (key == "minibatch_size") {
    t.minibatch_size = to_size(key, value);
  } else if (key == "epochs") {
    t.epochs = to_size(key, value);
    if (t.epochs == 0) bad_value(key, value, "must be positive");
  } else if (key == "learning_rate") {
    t.learning_rate = to_double(key, value);
    if (!(t.learning_rate > 0.0)) bad_value(key, value, "must be positive");
  } else if (key == "beta1") {
    t.beta1 = to_double(key, value);
    if (!(t.beta1 >= 0.0 && t.beta1 < 1.0)) bad_value(key, value, "must be in [0, 1)");
  } else if (key == "beta2") {
    t.beta2 = to_double(key, value);
    if (!(t.beta2 >= 0.0 && t.beta2 < 1.0)) bad_value(key, value, "must be in [0, 1)");
  } else if (key == "epsilon") {
    t.epsilon = to_double(key, value);
    if (!(t.epsilon > 0.0)) bad_value(key, value, "must be positive");
  } else if (key == "seed") {
    t.seed = to_size(key, value);
  } else if (key == "init_scheme") {
    t.init_scheme = parse_enum(key, value, parse_init_scheme);
  } else if (key == "init_checkpoint") {
    c.init_checkpoint = value;
  } else if (key == "basket_context_limit") {
    t.basket_context_limit = to_size(key, value);
  } else if (key == "subsample") {
    t.subsample = to_bool(key, value);
  } else if (key == "subsample_threshold") {
    t.subsample_threshold = to_double(key, value);
    if (!(t.subsample_threshold > 0.0)) bad_value(key, value, "must be positive");
  } else if (key == "eval_split") {
    if (value != "test" && value != "validation") bad_value(key, value, "expected test or validation");
    c.eval_split = value;
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else {
    throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  }
}

void parse_config(RunConfig& config, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    apply_setting(config, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  parse_config(config, in);
  // Relative data paths resolve against the config file's directory.
  const auto base = path.parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(config.text_dir);
  rebase(config.basket_file);
  rebase(config.init_checkpoint);
}

}  // namespace sefe
