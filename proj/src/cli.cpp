#include "sefe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sefe/analysis.hpp"
#include "sefe/checkpoint.hpp"
#include "sefe/config.hpp"
#include "sefe/corpus.hpp"
#include "sefe/evaluator.hpp"
#include "sefe/trainer.hpp"

namespace sefe {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string word;
  std::string group;
  std::optional<std::size_t> k;
  std::size_t pool = 1000;
  std::string checkpoint;
  std::string out;
};

// File settings first, then --set overrides in order, then --seed.
RunConfig resolve_config(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) load_config_file(c, o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    apply_setting(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (o.seed) c.train.seed = *o.seed;
  return c;
}

CorpusSplits load_corpus(const RunConfig& c) {
  if (c.modality == Modality::Text) {
    if (c.text_dir.empty()) throw std::invalid_argument("config key 'text_dir' is required for text data");
    return prepare_text_corpus(load_text_groups(c.text_dir), c.vocab_cap);
  }
  if (c.basket_file.empty()) throw std::invalid_argument("config key 'basket_file' is required for basket data");
  return prepare_basket_corpus(load_basket_file(c.basket_file), c.vocab_cap);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

fs::path out_dir(const Options& o, const RunConfig& c) {
  fs::path dir = o.out.empty() ? fs::path(c.out_dir) : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

std::string keys_footer() {
  std::ostringstream ss;
  ss << "Config keys (file `key = value`, overridden by --set key=value, then --seed):\n";
  for (const auto& k : config_keys()) ss << "  " << std::left << std::setw(22) << k.name << k.description << '\n';
  return ss.str();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
}

int cmd_build_vocab(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto splits = load_corpus(c);
  const fs::path path = o.out.empty() ? fs::path(c.out_dir) / "vocab.tsv" : fs::path(o.out);
  auto f = open_out(path);
  write_vocabulary_tsv(*splits.vocab, f);
  out << "vocabulary\t" << splits.vocab->size() << '\t' << path.string() << '\n';
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto splits = load_corpus(c);
  const auto shape = c.shape(splits.vocab->size(), splits.train.groups.size());

  std::optional<Checkpoint> global;
  if (!c.init_checkpoint.empty()) global = load_checkpoint(c.init_checkpoint);
  const auto result = train(splits.train, splits.validation, shape, c.resolved_family(), c.train,
                            global ? &*global : nullptr);

  const auto dir = out_dir(o, c);
  save_checkpoint(result.final_checkpoint, dir / "checkpoint.sefe");
  save_checkpoint(result.best_checkpoint, dir / "checkpoint.best.sefe");
  {
    auto f = open_out(dir / "train.log");
    write_training_log(result.log, f);
  }
  {
    auto f = open_out(dir / "vocab.tsv");
    write_vocabulary_tsv(*splits.vocab, f);
  }
  write_training_log(result.log, out);
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  const auto c = resolve_config(o);
  const auto ckpt = load_checkpoint(o.checkpoint);
  const auto splits = load_corpus(c);
  EvalOptions eo;
  eo.n_negatives = c.train.n_negatives;
  eo.seed = c.train.seed;
  eo.window = c.train.window;
  eo.basket_context_limit = c.train.basket_context_limit;
  const auto& corpus = c.eval_split == "test" ? splits.test : splits.validation;
  const auto report = heldout_pll(ckpt, corpus, eo);

  fs::path json_path;
  if (o.out.empty()) {
    write_report_tsv(report, out);
    fs::create_directories(c.out_dir);
    json_path = fs::path(c.out_dir) / "eval_report.json";
  } else {
    auto f = open_out(o.out);
    write_report_tsv(report, f);
    json_path = o.out + ".json";
  }
  auto jf = open_out(json_path);
  write_report_json(report, jf);
  return 0;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
  } else {
    auto f = open_out(o.out);
    f << text;
  }
}

int cmd_neighbors(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  require(o.word, "--word");
  require(o.group, "--group");
  const auto ckpt = load_checkpoint(o.checkpoint);
  std::ostringstream ss;
  ss << std::setprecision(10);
  for (const auto& n : cosine_neighbors(ckpt, o.word, o.group, o.k.value_or(8))) {
    ss << n.token << '\t' << n.similarity << '\n';
  }
  emit(o, ss.str(), out);
  return 0;
}

int cmd_spectrum(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  require(o.word, "--word");
  const auto ckpt = load_checkpoint(o.checkpoint);
  const auto result = group_spectrum(ckpt, o.word);
  std::ostringstream tsv, csv;
  tsv << std::setprecision(10);
  csv << std::setprecision(17) << "group,coordinate\n";
  for (const auto& [group, x] : result.projections) {
    tsv << group << '\t' << x << '\n';
    csv << group << ',' << x << '\n';
  }
  out << tsv.str();
  const fs::path csv_path = o.out.empty() ? fs::path("spectrum_" + o.word + ".csv") : fs::path(o.out);
  auto f = open_out(csv_path);
  f << csv.str();
  return 0;
}

int cmd_deviations(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  const auto ckpt = load_checkpoint(o.checkpoint);
  std::vector<std::string> groups = o.group.empty() ? ckpt.group_ids : std::vector<std::string>{o.group};
  std::ostringstream ss;
  ss << std::setprecision(10);
  for (const auto& g : groups) {
    const auto ranking = deviation_ranking(ckpt, g, o.pool, o.k.value_or(3));
    for (std::size_t r = 0; r < ranking.size(); ++r) {
      ss << g << '\t' << (r + 1) << '\t' << ranking[r].token << '\t' << ranking[r].distance << '\n';
    }
  }
  emit(o, ss.str(), out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured exponential family embeddings: training, evaluation and analysis", "sefe"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "config file with key = value lines");
    sub->add_option("--seed", o.seed, "random seed (overrides config)");
    sub->add_option("--set", o.overrides, "override one config key: key=value (repeatable)");
    sub->add_option("--out", o.out, "output path");
    sub->footer(keys_footer());
  };

  auto* build = app.add_subcommand("build-vocab", "build and write the vocabulary table");
  add_common(build);
  auto* train_cmd = app.add_subcommand("train", "fit a model; writes checkpoints, log and vocabulary to --out/out_dir");
  add_common(train_cmd);
  auto* eval = app.add_subcommand("eval", "held-out pseudo log-likelihood of a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file");

  auto* neighbors = app.add_subcommand("neighbors", "nearest words by cosine similarity within a group");
  add_common(neighbors);
  neighbors->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  neighbors->add_option("--word", o.word, "query word");
  neighbors->add_option("--group", o.group, "group id");
  neighbors->add_option("--k", o.k, "number of neighbors (default 8)");

  auto* spectrum_cmd = app.add_subcommand("spectrum", "one-dimensional PCA spectrum of a word across groups");
  add_common(spectrum_cmd);
  spectrum_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  spectrum_cmd->add_option("--word", o.word, "query word");

  auto* deviations = app.add_subcommand("deviations", "words deviating most from their across-group mean");
  add_common(deviations);
  deviations->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  deviations->add_option("--group", o.group, "group id (default: every group)");
  deviations->add_option("--k", o.k, "words per group (default 3)");
  deviations->add_option("--pool", o.pool, "candidate pool of most frequent words (default 1000)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (build->parsed()) return cmd_build_vocab(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (neighbors->parsed()) return cmd_neighbors(o, out);
    if (spectrum_cmd->parsed()) return cmd_spectrum(o, out);
    if (deviations->parsed()) return cmd_deviations(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sefe
