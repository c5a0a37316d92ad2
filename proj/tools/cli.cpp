#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "cadv/checkpoint.hpp"
#include "cadv/config.hpp"
#include "cadv/dataio.hpp"
#include "cadv/error.hpp"
#include "cadv/explain.hpp"
#include "cadv/metrics.hpp"
#include "cadv/ops.hpp"
#include "cadv/search.hpp"
#include "cadv/trainer.hpp"

namespace cadv::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Flags {
  std::string config_path;
  std::string corpus;
  std::string out;
  std::string model;
  std::string emoji_table;
  std::string counts;
  // Config keys set on the command line; applied over the config file.
  std::map<std::string, std::string> overrides;
  std::string lambdas, epsilons, taus, batch_sizes;
  std::size_t parallel = 1;
  std::size_t k = 10;
  std::size_t steps = 64;
  std::size_t n = 2000;
  std::size_t count = 0;
  std::uint64_t seed = 42;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed for " + path.string());
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

// Everything needed to repeat a run: the arguments, the resolved
// configuration, checksums of every input, and the files written.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv)) {}

  void set_config(const ExperimentConfig& config) {
    config_ = to_config_text(config);
    seed_ = config.train.seed;
  }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  void output(const std::string& name) { outputs_.push_back(name); }

  void write(const fs::path& dir) const {
    json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["seed"] = seed_ ? json(*seed_) : json(nullptr);
    m["config"] = config_ ? json(*config_) : json(nullptr);
    m["corpus_sha256"] = nullptr;
    for (const auto& in : inputs_) {
      if (in["role"] == "corpus") m["corpus_sha256"] = in["sha256"];
    }
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) throw IoError("cannot write manifest in " + dir.string());
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::optional<std::string> config_;
  std::optional<std::uint64_t> seed_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
};

struct Context {
  Flags& flags;
  Manifest& manifest;
  std::ostream& out;
  std::ostream& err;
  fs::path out_dir;

  void write_file(const std::string& name, const std::string& content) {
    std::ofstream file(out_dir / name, std::ios::binary);
    file << content;
    if (!file) throw IoError("cannot write " + (out_dir / name).string());
    manifest.output(name);
  }
};

const EmojiTable& emoji_table(Context& ctx) {
  if (ctx.flags.emoji_table.empty()) return EmojiTable::builtin();
  static std::map<std::string, EmojiTable> loaded;
  auto it = loaded.find(ctx.flags.emoji_table);
  if (it == loaded.end()) it = loaded.emplace(ctx.flags.emoji_table, EmojiTable::load(ctx.flags.emoji_table)).first;
  ctx.manifest.input("emoji_table", ctx.flags.emoji_table);
  return it->second;
}

std::vector<Example> read_corpus_file(Context& ctx) {
  ctx.manifest.input("corpus", ctx.flags.corpus);
  auto report = load_corpus(ctx.flags.corpus);
  for (const auto& m : report.malformed) {
    ctx.err << "warning: " << ctx.flags.corpus << ":" << m.line << ": " << m.reason << '\n';
  }
  return std::move(report.examples);
}

std::vector<Example> read_preprocessed(Context& ctx) {
  const EmojiTable& table = emoji_table(ctx);
  auto examples = read_corpus_file(ctx);
  for (auto& ex : examples) ex.text = preprocess(ex.text, table);
  return examples;
}

ExperimentConfig resolve_config(Context& ctx) {
  ExperimentConfig config;
  if (!ctx.flags.config_path.empty()) {
    config = load_config(ctx.flags.config_path);
    ctx.manifest.input("config", ctx.flags.config_path);
  }
  for (const auto& [key, value] : ctx.flags.overrides) apply_setting(config, key, value);
  config.train.validate();
  return config;
}

Vocab build_vocab(const std::vector<Example>& examples, std::span<const std::size_t> indices, std::size_t min_count) {
  std::vector<std::string> texts;
  texts.reserve(indices.size());
  for (std::size_t i : indices) texts.push_back(examples[i].text);
  return Vocab::build(texts, min_count);
}

std::vector<TokenizedExample> tokenize(const std::vector<Example>& examples, std::span<const std::size_t> indices,
                                       const Vocab& vocab, const ExperimentConfig& config) {
  std::vector<TokenizedExample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    auto t = encode(examples[i].text, vocab, config.model.max_len);
    t.label = label_map(examples[i].label, config.scheme);
    t.disease = examples[i].disease;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

void fit_model_config(ExperimentConfig& config, const Vocab& vocab) {
  config.model.vocab_size = vocab.size();
  config.model.n_classes = class_count(config.scheme);
  config.model.validate();
}

json prf_json(const PrecisionRecallF1& m) {
  return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json loss_fields(json record, const LossBreakdown& loss) {
  record["ce_clean"] = loss.ce_clean;
  record["ce_adv"] = loss.ce_adv;
  record["ctr"] = loss.contrastive;
  record["combined"] = loss.combined;
  return record;
}

json val_fields(json record, const PrecisionRecallF1& val) {
  record["val_precision"] = val.precision;
  record["val_recall"] = val.recall;
  record["val_f1"] = val.f1;
  return record;
}

json metrics_json(const std::vector<TokenizedExample>& examples, const std::vector<int>& preds,
                  std::size_t n_classes) {
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& ex : examples) {
    labels.push_back(ex.label);
    groups.push_back(ex.disease);
  }
  std::vector<std::string> expected;
  for (auto d : kDiseases) expected.emplace_back(d);
  const auto classwise = classwise_average_f1(preds, labels, groups, n_classes, expected);
  const auto per_label = per_label_f1(preds, labels, n_classes);

  json m;
  m["n"] = examples.size();
  m["overall"] = prf_json(classification_report(preds, labels, n_classes));
  json rows = json::array();
  for (const auto& g : classwise.groups) rows.push_back({{"disease", g.group}, {"count", g.count}, {"f1", g.f1}});
  m["classwise_f1"] = {{"groups", rows}, {"macro_f1", classwise.macro_f1}, {"warnings", classwise.warnings}};
  m["per_label_f1"] = {{"f1", per_label.f1}, {"macro_f1", per_label.macro_f1}};
  return m;
}

struct LoadedModel {
  Checkpoint checkpoint;
  Vocab vocab;
};

LoadedModel load_model(Context& ctx) {
  const fs::path dir = ctx.flags.model;
  ctx.manifest.input("checkpoint", dir / "checkpoint.bin");
  ctx.manifest.input("vocab", dir / "vocab.txt");
  LoadedModel m{load_checkpoint(dir / "checkpoint.bin"), Vocab::load(dir / "vocab.txt")};
  if (m.vocab.size() != m.checkpoint.config.model.vocab_size) {
    throw InputError("vocab.txt has " + std::to_string(m.vocab.size()) + " tokens but the checkpoint expects " +
                     std::to_string(m.checkpoint.config.model.vocab_size));
  }
  ctx.manifest.set_config(m.checkpoint.config);
  return m;
}

// ---- commands ----

void cmd_preprocess(Context& ctx) {
  const auto examples = read_preprocessed(ctx);
  std::ostringstream text;
  write_corpus(text, examples);
  ctx.write_file("preprocessed.jsonl", text.str());
  ctx.out << "preprocessed " << examples.size() << " records\n";
}

void cmd_synth(Context& ctx) {
  ctx.manifest.set_seed(ctx.flags.seed);
  const auto examples = synthesize_corpus(ctx.flags.n, ctx.flags.seed, emoji_table(ctx));
  std::ostringstream text;
  write_corpus(text, examples);
  ctx.write_file("corpus.jsonl", text.str());
  ctx.out << "wrote " << examples.size() << " synthetic records\n";
}

void cmd_stats(Context& ctx) {
  DatasetStats stats;
  if (!ctx.flags.corpus.empty()) {
    stats = dataset_stats(read_corpus_file(ctx));
  } else if (!ctx.flags.counts.empty()) {
    ctx.manifest.input("counts", ctx.flags.counts);
    stats = load_counts(ctx.flags.counts);
  } else {
    stats = phm2017_counts();
  }
  const std::string table = format_stats(stats);
  ctx.out << table;
  ctx.write_file("stats.txt", table);
  ctx.write_file("counts.tsv", format_counts(stats));
}

void cmd_train(Context& ctx) {
  ExperimentConfig config = resolve_config(ctx);
  const auto examples = read_preprocessed(ctx);
  SplitSpec spec;
  spec.seed = config.train.seed;
  const Split split = stratified_split(std::span<const Example>(examples), spec);
  const Vocab vocab = build_vocab(examples, split.train, config.min_count);
  fit_model_config(config, vocab);
  ctx.manifest.set_config(config);

  const auto train_set = tokenize(examples, split.train, vocab, config);
  const auto val_set = tokenize(examples, split.val, vocab, config);
  const auto test_set = tokenize(examples, split.test, vocab, config);
  ctx.out << "split " << train_set.size() << " / " << val_set.size() << " / " << test_set.size() << ", vocab "
          << vocab.size() << '\n';

  std::ostringstream results;
  TrainOptions options;
  options.on_epoch = [&](const EpochRecord& r) {
    json record{{"epoch", r.epoch}};
    record = val_fields(loss_fields(record, r.loss), r.val);
    record["train_pair_cosine"] = r.train_pair_cosine;
    record["val_pair_cosine"] = r.val_pair_cosine;
    results << record.dump() << '\n';
    ctx.out << "epoch " << r.epoch << "  loss " << format_double(r.loss.combined) << "  val_f1 "
            << format_double(r.val.f1) << '\n';
  };
  const TrainResult run =
      train(init_params(config.model, config.train.seed), config.model, config.train, train_set, val_set, options);

  save_checkpoint(ctx.out_dir / "checkpoint.bin", config, run.best);
  ctx.manifest.output("checkpoint.bin");
  vocab.save(ctx.out_dir / "vocab.txt");
  ctx.manifest.output("vocab.txt");
  ctx.write_file("results.jsonl", results.str());

  json summary;
  summary["best_epoch"] = run.best_epoch;
  summary["best_val"] = prf_json(run.best_val);
  summary["initial_val_pair_cosine"] = run.initial_val_pair_cosine;
  summary["test"] = metrics_json(test_set, predict_labels(run.best, config.model, test_set), config.model.n_classes);
  ctx.write_file("test_metrics.json", summary.dump(2) + "\n");
  ctx.out << "best epoch " << run.best_epoch << ", test F1 " << format_double(summary["test"]["overall"]["f1"])
          << '\n';
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    T value{};
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(std::string(flag) + ": cannot parse \"" + item + "\"");
    }
    values.push_back(value);
  }
  if (values.empty()) throw ConfigError(std::string(flag) + ": empty list");
  return values;
}

void cmd_gridsearch(Context& ctx) {
  ExperimentConfig config = resolve_config(ctx);
  GridSpec grid = GridSpec::standard();
  if (!ctx.flags.lambdas.empty()) grid.lambdas = parse_list<double>(ctx.flags.lambdas, "--lambda");
  if (!ctx.flags.epsilons.empty()) grid.epsilons = parse_list<double>(ctx.flags.epsilons, "--epsilon");
  if (!ctx.flags.taus.empty()) grid.taus = parse_list<double>(ctx.flags.taus, "--tau");
  if (!ctx.flags.batch_sizes.empty()) grid.batch_sizes = parse_list<std::size_t>(ctx.flags.batch_sizes, "--batch-size");

  const auto examples = read_preprocessed(ctx);
  SplitSpec spec;
  spec.seed = config.train.seed;
  const Split split = stratified_split(std::span<const Example>(examples), spec);
  const Vocab vocab = build_vocab(examples, split.train, config.min_count);
  fit_model_config(config, vocab);
  ctx.manifest.set_config(config);
  const auto train_set = tokenize(examples, split.train, vocab, config);
  const auto val_set = tokenize(examples, split.val, vocab, config);

  ctx.out << "evaluating " << grid.cell_count() << " cells\n";
  const auto result = grid_search(init_params(config.model, config.train.seed), config.model, config.train, grid,
                                  train_set, val_set, ctx.flags.parallel);
  std::ostringstream lines;
  for (std::size_t rank = 0; rank < result.ranked.size(); ++rank) {
    const auto& r = result.ranked[rank];
    json record{{"rank", rank + 1},
                {"cell", r.cell.index},
                {"lambda", r.cell.config.lambda},
                {"epsilon", r.cell.config.epsilon},
                {"tau", r.cell.config.tau},
                {"batch_size", r.cell.config.batch_size},
                {"epoch", r.best_epoch}};
    lines << val_fields(loss_fields(record, r.loss), r.val).dump() << '\n';
  }
  ctx.write_file("grid.jsonl", lines.str());

  ExperimentConfig selected = config;
  selected.train = result.ranked.front().cell.config;
  ctx.write_file("selected.cfg", to_config_text(selected));
  const auto& best = result.ranked.front();
  ctx.out << "selected lambda=" << format_double(best.cell.config.lambda)
          << " epsilon=" << format_double(best.cell.config.epsilon) << " tau=" << format_double(best.cell.config.tau)
          << " batch_size=" << best.cell.config.batch_size << " val_f1=" << format_double(best.val.f1) << '\n';
}

void cmd_kfold(Context& ctx) {
  ExperimentConfig config = resolve_config(ctx);
  config.model.n_classes = class_count(config.scheme);
  ctx.manifest.set_config(config);
  const auto examples = read_preprocessed(ctx);
  std::vector<int> strata;
  for (const auto& ex : examples) strata.push_back(label_map(ex.label, config.scheme));

  // Each fold builds its vocabulary from its own training part.
  auto run_fold = [&](std::size_t, std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx) {
    ExperimentConfig fold_config = config;
    const Vocab vocab = build_vocab(examples, train_idx, config.min_count);
    fit_model_config(fold_config, vocab);
    TrainOptions options;
    options.track_pair_cosine = false;
    const TrainResult run = train(init_params(fold_config.model, config.train.seed), fold_config.model,
                                  fold_config.train, tokenize(examples, train_idx, vocab, fold_config),
                                  tokenize(examples, val_idx, vocab, fold_config), options);
    FoldResult r;
    r.best_epoch = run.best_epoch;
    r.val = run.best_val;
    if (run.best_epoch > 0) r.loss = run.history[run.best_epoch - 1].loss;
    return r;
  };
  const KFoldResult result = kfold_cv(strata, ctx.flags.k, config.train.seed, run_fold, ctx.flags.parallel);
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';

  std::ostringstream lines;
  for (const auto& f : result.folds) {
    json record{{"fold", f.fold}, {"train_size", f.train_size}, {"val_size", f.val_size}, {"epoch", f.best_epoch}};
    lines << val_fields(loss_fields(record, f.loss), f.val).dump() << '\n';
    ctx.out << "fold " << f.fold << "  val_f1 " << format_double(f.val.f1) << '\n';
  }
  ctx.write_file("folds.jsonl", lines.str());
  json summary{{"k", ctx.flags.k},
               {"mean_precision", result.mean.precision},
               {"mean_recall", result.mean.recall},
               {"mean_f1", result.mean.f1},
               {"warnings", result.warnings}};
  ctx.write_file("summary.json", summary.dump(2) + "\n");
  ctx.out << "mean val_f1 " << format_double(result.mean.f1) << '\n';
}

void cmd_eval(Context& ctx) {
  const LoadedModel m = load_model(ctx);
  const auto& config = m.checkpoint.config;
  const auto examples = read_preprocessed(ctx);
  const auto data = tokenize(examples, all_indices(examples.size()), m.vocab, config);
  const auto preds = predict_labels(m.checkpoint.params, config.model, data);
  const json metrics = metrics_json(data, preds, config.model.n_classes);
  ctx.write_file("metrics.json", metrics.dump(2) + "\n");
  ctx.out << "F1 " << format_double(metrics["overall"]["f1"]) << " on " << data.size() << " examples\n";
}

std::size_t limit(std::size_t count, std::size_t available) {
  return count == 0 ? available : std::min(count, available);
}

void cmd_attribute(Context& ctx) {
  const LoadedModel m = load_model(ctx);
  const auto& config = m.checkpoint.config;
  const auto examples = read_preprocessed(ctx);
  const std::size_t n = limit(ctx.flags.count, examples.size());
  std::ostringstream lines;
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>attributions</title></head><body>\n";
  for (std::size_t i = 0; i < n; ++i) {
    auto ex = encode(examples[i].text, m.vocab, config.model.max_len);
    ex.label = label_map(examples[i].label, config.scheme);
    const auto r = integrated_gradients(m.checkpoint.params, config.model, ex, m.vocab, -1, ctx.flags.steps);
    json record{{"index", i},
                {"label", r.true_label},
                {"predicted", r.predicted},
                {"target", r.target_class},
                {"tokens", r.tokens},
                {"scores", r.scores},
                {"output", r.output},
                {"baseline_output", r.baseline_output},
                {"completeness_gap", r.completeness_gap}};
    lines << record.dump() << '\n';
    html += render_html(r) + "\n";
    ctx.out << "[" << r.true_label << "->" << r.predicted << "] " << render_ansi(r) << '\n';
  }
  html += "</body></html>\n";
  ctx.write_file("attributions.jsonl", lines.str());
  ctx.write_file("attributions.html", html);
}

void cmd_embed_viz(Context& ctx) {
  const LoadedModel m = load_model(ctx);
  const auto& config = m.checkpoint.config;
  const auto examples = read_preprocessed(ctx);
  const std::size_t n = limit(ctx.flags.count, examples.size());
  const auto data = tokenize(examples, all_indices(n), m.vocab, config);

  NoGradGuard no_grad;
  std::vector<double> h_rows;
  std::vector<double> z_rows;
  std::size_t z_dim = 0;
  for (std::size_t start = 0; start < n; start += 64) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(n, start + 64); ++i) idx.push_back(i);
    const auto out = forward(m.checkpoint.params, config.model, make_batch(data, idx));
    const Tensor z = project(m.checkpoint.params, out.h_cls);
    z_dim = z.dim(1);
    h_rows.insert(h_rows.end(), out.h_cls.data().begin(), out.h_cls.data().end());
    z_rows.insert(z_rows.end(), z.data().begin(), z.data().end());
  }
  std::vector<std::string> labels;
  std::vector<std::string> diseases;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(to_string(examples[i].label));
    diseases.push_back(examples[i].disease);
  }
  auto emit = [&](const std::string& name, std::vector<double> rows, std::size_t dim, const std::string& what) {
    std::ostringstream csv;
    write_embedding_csv(csv, project_2d(Tensor::from({n, dim}, std::move(rows))), labels, diseases, what);
    ctx.write_file(name, csv.str());
  };
  emit("embed_hcls.csv", std::move(h_rows), config.model.d_h, "h_cls");
  emit("embed_z.csv", std::move(z_rows), z_dim, "projection_z");
  ctx.out << "projected " << n << " examples\n";
}

// ---- flag wiring ----

void add_override(CLI::App* cmd, Flags& flags, const std::string& flag, const std::string& key,
                  const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&flags, key](const std::string& value) { flags.overrides[key] = value; }, help);
}

void add_training_overrides(CLI::App* cmd, Flags& flags, bool grid_axes) {
  add_override(cmd, flags, "--seed", "seed", "Random seed (split, initialization, shuffling)");
  add_override(cmd, flags, "--mode", "mode", "baseline | adversarial_only | contrastive_adversarial");
  add_override(cmd, flags, "--epochs", "epochs", "Training epochs");
  add_override(cmd, flags, "--lr", "lr", "Learning rate");
  add_override(cmd, flags, "--fgsm-direction", "fgsm_direction", "ascent | paper_literal");
  add_override(cmd, flags, "--scheme", "scheme", "binary | three_class");
  if (grid_axes) {
    cmd->add_option("--lambda", flags.lambdas, "Comma-separated λ grid");
    cmd->add_option("--epsilon", flags.epsilons, "Comma-separated ε grid");
    cmd->add_option("--tau", flags.taus, "Comma-separated τ grid");
    cmd->add_option("--batch-size", flags.batch_sizes, "Comma-separated batch-size grid");
  } else {
    add_override(cmd, flags, "--lambda", "lambda", "Contrastive weight λ");
    add_override(cmd, flags, "--epsilon", "epsilon", "Perturbation size ε");
    add_override(cmd, flags, "--tau", "tau", "Temperature τ");
    add_override(cmd, flags, "--batch-size", "batch_size", "Batch size");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags flags;
  CLI::App app{"Contrastive adversarial training for health-mention classification", "cadv"};
  app.require_subcommand(1);

  using Handler = void (*)(Context&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto command = [&](const std::string& name, const std::string& help, Handler handler) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--out", flags.out, "Output directory")->required();
    commands.emplace_back(cmd, handler);
    return cmd;
  };
  auto emoji_flag = [&](CLI::App* cmd) {
    cmd->add_option("--emoji-table", flags.emoji_table, "Emoji name table (TSV), replaces the built-in one");
  };

  CLI::App* preprocess_cmd = command("preprocess", "Normalize the texts of a corpus", cmd_preprocess);
  preprocess_cmd->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  emoji_flag(preprocess_cmd);

  CLI::App* synth = command("synth", "Generate a synthetic corpus", cmd_synth);
  synth->add_option("--n", flags.n, "Number of examples")->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
  synth->add_option("--seed", flags.seed, "Random seed");
  emoji_flag(synth);

  CLI::App* stats = command("stats", "Per-disease label counts", cmd_stats);
  auto* stats_corpus = stats->add_option("--corpus", flags.corpus, "Corpus (JSON lines)");
  stats->add_option("--counts", flags.counts, "Counts table (TSV) instead of a corpus")->excludes(stats_corpus);

  CLI::App* train_cmd = command("train", "Train one model", cmd_train);
  train_cmd->add_option("--config", flags.config_path, "Config file (key = value)");
  train_cmd->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  add_training_overrides(train_cmd, flags, false);
  emoji_flag(train_cmd);

  CLI::App* grid = command("gridsearch", "Grid search over λ, ε, τ and batch size", cmd_gridsearch);
  grid->add_option("--config", flags.config_path, "Config file (key = value)");
  grid->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  grid->add_option("--parallel", flags.parallel, "Cells trained concurrently")->check(CLI::PositiveNumber);
  add_training_overrides(grid, flags, true);
  emoji_flag(grid);

  CLI::App* kfold = command("kfold", "Stratified k-fold cross-validation", cmd_kfold);
  kfold->add_option("--config", flags.config_path, "Config file (key = value)");
  kfold->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  kfold->add_option("--k", flags.k, "Number of folds")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  kfold->add_option("--parallel", flags.parallel, "Folds trained concurrently")->check(CLI::PositiveNumber);
  add_training_overrides(kfold, flags, false);
  emoji_flag(kfold);

  CLI::App* eval = command("eval", "Evaluate a trained model on a corpus", cmd_eval);
  eval->add_option("--model", flags.model, "Directory written by train")->required();
  eval->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  emoji_flag(eval);

  CLI::App* attribute = command("attribute", "Integrated-gradients word attributions", cmd_attribute);
  attribute->add_option("--model", flags.model, "Directory written by train")->required();
  attribute->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  attribute->add_option("--steps", flags.steps, "Integration steps")->check(CLI::PositiveNumber);
  attribute->add_option("--count", flags.count, "Examples to attribute (0 = all)");
  emoji_flag(attribute);

  CLI::App* embed = command("embed-viz", "2D projections of [CLS] and projection-head vectors", cmd_embed_viz);
  embed->add_option("--model", flags.model, "Directory written by train")->required();
  embed->add_option("--corpus", flags.corpus, "Corpus (JSON lines)")->required();
  embed->add_option("--count", flags.count, "Examples to project (0 = all)");
  emoji_flag(embed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUser;
  }

  try {
    for (auto& [cmd, handler] : commands) {
      if (!cmd->parsed()) continue;
      const fs::path out_dir = flags.out;
      fs::create_directories(out_dir);
      Manifest manifest(cmd->get_name(), args);
      Context ctx{flags, manifest, out, err, out_dir};
      handler(ctx);
      manifest.write(out_dir);
      return kExitOk;
    }
    return kExitInternal;
  } catch (const ContractError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace cadv::cli
