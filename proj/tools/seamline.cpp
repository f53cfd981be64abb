#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seamline/baselines.hpp"
#include "seamline/corpus.hpp"
#include "seamline/corpus_io.hpp"
#include "seamline/detector.hpp"
#include "seamline/embeddings.hpp"
#include "seamline/error.hpp"
#include "seamline/experiment.hpp"
#include "seamline/generators.hpp"
#include "seamline/metric.hpp"
#include "seamline/parallel.hpp"
#include "seamline/report.hpp"
#include "seamline/splits.hpp"
#include "seamline/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seamline;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4, kExternal = 5 };

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return kUsage;
    case Errc::NonFiniteLoss: return kNumeric;
    case Errc::Transport:
    case Errc::Protocol:
    case Errc::GeneratorUnavailable: return kExternal;
    default: return kData;
  }
}

/// "dir/name.json" + ".history.json" -> "dir/name.history.json".
fs::path sibling(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

/// For output prefixes such as "results/eval": appends the suffix as-is.
fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %6s %10s %10s %8s %8s %8s\n", "#Bry", "docs", "words/doc", "sents/doc",
                "len(G)", "len(H)", "G ratio");
  out << buf;
  auto row = [&](const std::string& name, const StatsCell& c) {
    std::snprintf(buf, sizeof buf, "%-8s %6zu %10.2f %10.2f %8.2f %8.2f %8.3f\n", name.c_str(), c.doc_count,
                  c.words_per_doc, c.sentences_per_doc, c.mean_len_generated, c.mean_len_human, c.generated_ratio);
    out << buf;
  };
  for (const auto& [key, cell] : stats.breakdown) row(key, cell);
  row("all", stats.all);
  return out.str();
}

json stats_json(const CorpusStats& stats) {
  auto cell = [](const StatsCell& c) {
    return json{{"doc_count", c.doc_count},
                {"words_per_doc", c.words_per_doc},
                {"sentences_per_doc", c.sentences_per_doc},
                {"mean_len_generated", c.mean_len_generated},
                {"mean_len_human", c.mean_len_human},
                {"generated_ratio", c.generated_ratio}};
  };
  json breakdown = json::object();
  for (const auto& [key, c] : stats.breakdown) breakdown[key] = cell(c);
  return {{"all", cell(stats.all)}, {"breakdown", breakdown}};
}

struct TrainFlags {
  std::vector<double> lr_grid = kHeadLrGrid;
  bool fine_tune_grid = false;
  std::size_t max_epochs = 20;
  std::size_t epoch_size = 5000;
  std::size_t batch_size = 32;
  double margin = 1.0;
  double decay = 0.2;
  std::size_t patience = 1;
  std::size_t val_p = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lr-grid", lr_grid, "Initial learning rates to try")->delimiter(',')->capture_default_str();
    cmd->add_flag("--fine-tune-grid", fine_tune_grid, "Use the small learning rates meant for encoder fine-tuning");
    cmd->add_option("--max-epochs", max_epochs)->capture_default_str();
    cmd->add_option("--epoch-size", epoch_size, "Triplets per epoch")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--margin", margin)->capture_default_str();
    cmd->add_option("--decay", decay, "Fraction of the rate removed after each epoch")->capture_default_str();
    cmd->add_option("--patience", patience)->capture_default_str();
    cmd->add_option("--val-p", val_p, "Prototype size used for validation F1")->capture_default_str();
  }

  TrainConfig config(std::uint64_t seed, std::size_t k) const {
    TrainConfig c;
    c.lr_grid = fine_tune_grid ? kFineTuneLrGrid : lr_grid;
    c.max_epochs = max_epochs;
    c.epoch_size = epoch_size;
    c.batch_size = batch_size;
    c.margin = margin;
    c.decay = decay;
    c.patience = patience;
    c.validation_p = val_p;
    c.validation_k = k;
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct Options {
  // shared
  std::string corpus;
  std::string out;
  std::string provider = "hashing";
  std::string head;
  std::string split;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::size_t k = kDefaultK;
  std::string format = "text";
  // synth
  std::string source;
  std::vector<int> tasks = {1, 2, 3, 4, 5, 6};
  std::string generator = "mock";
  std::size_t max_attempts = kMaxSynthesisAttempts;
  // split / eval
  std::string mode = "id";
  int fold = 0;
  // detect / eval
  std::size_t p = 1;
  bool sweep_p = false;
  std::vector<std::string> methods = {"random", "tribert-nt"};
  std::size_t runs = 3;
  // report
  std::string input;
  std::size_t method_index = 0;
  TrainFlags train;
};

void add_jobs(CLI::App* cmd, Options& o) {
  cmd->add_option("--jobs", o.jobs, "Worker threads for document-level work (0 = all cores)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

void add_provider(CLI::App* cmd, Options& o) {
  cmd->add_option("--provider", o.provider, "hashing | hashing:DIM | cache:PATH | remote:URL | remote")
      ->capture_default_str();
}

/// Resolved options of one subcommand, readable again through --config.
void persist_config(const CLI::App& cmd, const fs::path& path) {
  write_text_file(path, "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false));
}

std::vector<SplitSpec> resolve_splits(const Options& o, const std::vector<HybridDocument>& docs) {
  if (!o.split.empty()) return load_splits(o.split);
  if (o.mode == "ood") return make_ood_folds(docs, o.seed);
  return {make_id_split(docs, {0.70, 0.15, 0.15}, o.seed)};
}

int cmd_synth(const CLI::App& app, const Options& o) {
  const auto sources = load_source_essays(o.source);
  auto generator = make_generator(o.generator, o.seed);
  auto result = synthesize_corpus(sources, o.tasks, *generator, o.seed, o.max_attempts);
  save_corpus(result.documents, o.out);

  std::ostringstream log;
  std::size_t skipped = 0;
  for (const auto& e : result.log) {
    if (!e.accepted) ++skipped;
    log << json{{"source_id", e.source_id},
                {"task_id", e.task_id},
                {"status", e.accepted ? "accepted" : "skipped"},
                {"attempts", e.attempts},
                {"reasons", e.reasons}}
               .dump()
        << '\n';
  }
  write_text_file(sibling(o.out, ".log.jsonl"), log.str());
  persist_config(app, sibling(o.out, ".config.toml"));

  std::cout << "sources: " << sources.size() << ", filtered out: " << result.filtered_out
            << ", accepted: " << result.documents.size() << ", skipped: " << skipped << "\n";
  if (!result.documents.empty()) std::cout << format_stats(corpus_stats(result.documents));
  return kOk;
}

int cmd_stats(const Options& o) {
  const auto stats = corpus_stats(load_corpus(o.corpus));
  if (o.format == "json") {
    std::cout << stats_json(stats).dump(2) << '\n';
  } else {
    std::cout << format_stats(stats);
  }
  return kOk;
}

int cmd_split(const CLI::App& app, const Options& o) {
  const auto docs = load_corpus(o.corpus);
  const auto splits = o.mode == "ood" ? make_ood_folds(docs, o.seed)
                                      : std::vector<SplitSpec>{make_id_split(docs, {0.70, 0.15, 0.15}, o.seed)};
  save_splits(splits, o.out);
  persist_config(app, sibling(o.out, ".config.toml"));
  for (const auto& s : splits) {
    std::map<Partition, std::size_t> counts;
    for (const auto& [id, part] : s.assignments) ++counts[part];
    if (s.fold_id) std::cout << "fold " << *s.fold_id << ": ";
    std::cout << "train " << counts[Partition::Train] << ", val " << counts[Partition::Val] << ", test "
              << counts[Partition::Test] << "\n";
  }
  return kOk;
}

int cmd_embed(const CLI::App& app, const Options& o) {
  const auto docs = load_corpus(o.corpus);
  const auto provider = make_provider(o.provider);
  std::ostringstream out;
  for (const auto& doc : docs) {
    const auto m = provider->embed(doc.texts());
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto r = m.vectors.row(i);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    out << json{{"doc_id", doc.doc_id}, {"provider_id", m.provider_id}, {"vectors", rows}}.dump() << '\n';
  }
  write_text_file(o.out, out.str());
  persist_config(app, sibling(o.out, ".config.toml"));
  std::cout << "embedded " << docs.size() << " documents with " << provider->provider_id() << "\n";
  return kOk;
}

int cmd_train(const CLI::App& app, const Options& o) {
  const auto docs = load_corpus(o.corpus);
  const auto splits = resolve_splits(o, docs);
  if (o.fold < 0 || static_cast<std::size_t>(o.fold) >= splits.size()) {
    fail(Errc::InvalidArgument, "--fold " + std::to_string(o.fold) + " out of range; split has " +
                                    std::to_string(splits.size()) + " fold(s)");
  }
  const auto& split = splits[static_cast<std::size_t>(o.fold)];
  const auto provider = make_provider(o.provider);
  const auto config = o.train.config(o.seed, o.k);
  const auto result =
      train_projection(split.select(docs, Partition::Train), split.select(docs, Partition::Val), *provider, config);
  save_head(result.head, provider->provider_id(), to_json(config), o.out);
  write_text_file(sibling(o.out, ".history.json"), to_json(result.history).dump(2) + "\n");
  persist_config(app, sibling(o.out, ".config.toml"));

  const auto& h = result.history;
  std::printf("learning rate %g, initial val F1 %.4f, best val F1 %.4f at epoch %zu of %zu%s\n", h.learning_rate,
              h.initial_val_f1, h.best_val_f1, h.best_epoch, h.epochs.size(), h.early_stopped ? " (early stop)" : "");
  return kOk;
}

std::optional<ProjectionHead> load_head_for(const std::string& path, const EmbeddingProvider& provider) {
  if (path.empty()) return std::nullopt;
  auto loaded = load_head(path);
  if (loaded.head.weights.cols() != provider.dim()) {
    fail(Errc::DimensionMismatch, "head expects " + std::to_string(loaded.head.weights.cols()) +
                                      "-dim input, provider " + provider.provider_id() + " gives " +
                                      std::to_string(provider.dim()));
  }
  return std::move(loaded.head);
}

int cmd_detect(const CLI::App& app, const Options& o) {
  const auto docs = load_corpus(o.corpus);
  const auto provider = make_provider(o.provider);
  const auto head = load_head_for(o.head, *provider);
  const PrototypeParams params{o.p, o.k};

  std::vector<BoundaryPrediction> preds(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) {
    preds[i] = detect(docs[i], *provider, head ? &*head : nullptr, params);
  });

  if (o.format == "html") {
    std::map<std::string, std::vector<std::size_t>> marks;
    for (std::size_t i = 0; i < docs.size(); ++i) marks[docs[i].doc_id] = preds[i].positions();
    const auto title = tribert_method_id(params, head.has_value());
    write_text_file(o.out, render_predictions_html(docs, marks, title));
  } else {
    std::ostringstream out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      json cands = json::array();
      for (const auto& c : preds[i].candidates) cands.push_back({{"pos", c.position}, {"score", c.score}});
      out << json{{"doc_id", docs[i].doc_id}, {"method_id", preds[i].method_id}, {"candidates", cands}}.dump()
          << '\n';
    }
    write_text_file(o.out, out.str());
  }
  persist_config(app, sibling(o.out, ".config.toml"));
  return kOk;
}

std::unique_ptr<Method> make_method(const std::string& spec, const Options& o,
                                    const std::shared_ptr<const EmbeddingProvider>& provider,
                                    const std::vector<std::size_t>& p_values) {
  if (spec == "random") return std::make_unique<RandomMethod>(o.k);
  if (spec == "tribert-nt") return TriBertMethod::untrained(provider, p_values, o.k);
  if (spec == "tribert") {
    if (auto head = load_head_for(o.head, *provider)) return TriBertMethod::with_head(provider, *head, p_values, o.k);
    return TriBertMethod::trained(provider, o.train.config(o.seed, o.k), p_values, o.k);
  }
  if (spec == "lr") return std::make_unique<LogisticMethod>(provider, o.k);
  if (spec == "lr-all") return std::make_unique<LogisticMethod>(provider, std::nullopt);
  for (const std::string prefix : {"labels:", "labels-all:"}) {
    if (spec.rfind(prefix, 0) == 0) {
      const fs::path path = spec.substr(prefix.size());
      std::optional<std::size_t> k;
      if (prefix == "labels:") k = o.k;
      return std::make_unique<ExternalLabelsMethod>(path.stem().string(), load_label_sequences(path), k);
    }
  }
  fail(Errc::InvalidArgument, "unknown method '" + spec +
                                  "' (expected random, tribert, tribert-nt, lr, lr-all, labels:PATH, labels-all:PATH)");
}

int cmd_eval(const CLI::App& app, const Options& o) {
  const auto docs = load_corpus(o.corpus);
  const auto splits = resolve_splits(o, docs);
  const auto provider = make_provider(o.provider);
  std::vector<std::size_t> p_values{o.p};
  if (o.sweep_p) p_values = {1, 2, 3, 4, 5, 6};

  std::vector<std::unique_ptr<Method>> owned;
  std::vector<Method*> methods;
  for (const auto& spec : o.methods) {
    owned.push_back(make_method(spec, o, provider, p_values));
    methods.push_back(owned.back().get());
  }

  ExperimentOptions options;
  options.runs = o.runs;
  options.seed = o.seed;
  options.config = {{"corpus", o.corpus},
                    {"provider", provider->provider_id()},
                    {"mode", o.split.empty() ? o.mode : "file"},
                    {"split", o.split},
                    {"methods", o.methods},
                    {"p", p_values},
                    {"k", o.k},
                    {"runs", o.runs},
                    {"seed", o.seed},
                    {"head", o.head}};
  const auto report = run_experiment(docs, methods, splits, options);

  write_text_file(with_suffix(o.out, ".txt"), render_text(report));
  write_text_file(with_suffix(o.out, ".json"), render_report(report, ReportFormat::Json));
  if (o.format == "html") write_text_file(with_suffix(o.out, ".html"), render_html(report, docs));
  persist_config(app, with_suffix(o.out, ".config.toml"));

  std::cout << render_text(report);
  if (report.unscored_docs > 0) {
    std::cout << report.unscored_docs << " test document(s) without a boundary were not scored\n";
  }
  bool any_ok = false;
  for (const auto& m : report.methods) any_ok = any_ok || !m.error;
  if (!any_ok && !report.methods.empty()) {
    std::cerr << "error: every method failed\n";
    return kData;
  }
  return kOk;
}

int cmd_report(const Options& o) {
  const auto report = report_from_json(json::parse(read_text_file(o.input)));
  const auto format = parse_report_format(o.format);
  std::vector<HybridDocument> docs;
  if (format == ReportFormat::Html) {
    if (o.corpus.empty()) fail(Errc::InvalidArgument, "--format html needs --corpus");
    docs = load_corpus(o.corpus);
  }
  const auto text =
      format == ReportFormat::Html ? render_html(report, docs, o.method_index) : render_report(report, format);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(o.out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human/AI authorship boundary detection toolkit"};
  app.set_config("--config", "", "Read options from a TOML or INI file");
  app.require_subcommand(1);
  Options o;
  const auto formats = CLI::IsMember({"text", "json", "html"});
  const auto modes = CLI::IsMember({"id", "ood"});

  auto* synth = app.add_subcommand("synth", "Build a hybrid corpus from human source essays");
  synth->add_option("--source", o.source, "Source essays (JSON lines)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "Output corpus (JSON lines)")->required();
  synth->add_option("--tasks", o.tasks, "Fill-in task ids, assigned round-robin")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::Range(1, 6));
  synth->add_option("--generator", o.generator, "mock | mock:duplicate | mock:drop-ending | process:CMD | http:URL")
      ->capture_default_str();
  synth->add_option("--seed", o.seed)->capture_default_str();
  synth->add_option("--max-attempts", o.max_attempts)->capture_default_str()->check(CLI::PositiveNumber);
  add_jobs(synth, o);

  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  stats->add_option("--format", o.format)->capture_default_str()->check(CLI::IsMember({"text", "json"}));

  auto* split = app.add_subcommand("split", "Write in-domain or per-prompt splits");
  split->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  split->add_option("--mode", o.mode)->capture_default_str()->check(modes);
  split->add_option("--seed", o.seed)->capture_default_str();
  split->add_option("--out", o.out)->required();

  auto* embed = app.add_subcommand("embed", "Embed every sentence of a corpus");
  embed->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  add_provider(embed, o);
  embed->add_option("--out", o.out, "Output vectors (JSON lines)")->required();
  add_jobs(embed, o);

  auto* train = app.add_subcommand("train", "Train a projection head with the triplet objective");
  train->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  train->add_option("--split", o.split, "Split file; default is a fresh in-domain split")->check(CLI::ExistingFile);
  train->add_option("--fold", o.fold, "Fold of the split file to train on")->capture_default_str();
  add_provider(train, o);
  train->add_option("--seed", o.seed)->capture_default_str();
  train->add_option("--k", o.k, "Candidates used by validation F1")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--out", o.out, "Head file (JSON)")->required();
  o.train.add_to(train);
  add_jobs(train, o);

  auto* det = app.add_subcommand("detect", "Predict boundaries for every document");
  det->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  add_provider(det, o);
  det->add_option("--head", o.head, "Projection head; omit for base embeddings")->check(CLI::ExistingFile);
  det->add_option("--p", o.p, "Prototype size")->capture_default_str()->check(CLI::PositiveNumber);
  det->add_option("--k", o.k, "Candidates per document")->capture_default_str()->check(CLI::PositiveNumber);
  det->add_option("--format", o.format, "jsonl or html")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "jsonl", "html"}));
  det->add_option("--out", o.out)->required();
  add_jobs(det, o);

  auto* eval = app.add_subcommand("eval", "Score methods with F1@K over repeated runs");
  eval->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  eval->add_option("--methods", o.methods, "random, tribert, tribert-nt, lr, lr-all, labels:PATH, labels-all:PATH")
      ->delimiter(',')
      ->capture_default_str();
  eval->add_option("--mode", o.mode)->capture_default_str()->check(modes);
  eval->add_option("--split", o.split, "Split file overriding --mode")->check(CLI::ExistingFile);
  add_provider(eval, o);
  eval->add_option("--head", o.head, "Fixed head for tribert instead of training")->check(CLI::ExistingFile);
  eval->add_option("--p", o.p, "Prototype size")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_flag("--sweep-p", o.sweep_p, "Report prototype-based methods for p = 1..6");
  eval->add_option("--k", o.k)->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--runs", o.runs)->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--seed", o.seed)->capture_default_str();
  eval->add_option("--format", o.format, "Also write HTML when set to html")->capture_default_str()->check(formats);
  eval->add_option("--out", o.out, "Output prefix for .txt, .json and .html")->required();
  o.train.add_to(eval);
  add_jobs(eval, o);

  auto* rep = app.add_subcommand("report", "Render a saved JSON report");
  rep->add_option("--in", o.input)->required()->check(CLI::ExistingFile);
  rep->add_option("--format", o.format)->capture_default_str()->check(formats);
  rep->add_option("--corpus", o.corpus, "Corpus for the HTML view")->check(CLI::ExistingFile);
  rep->add_option("--method", o.method_index, "Method row shown in the HTML view")->capture_default_str();
  rep->add_option("--out", o.out, "Output file; default stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (o.jobs > 0) set_thread_count(o.jobs);
    if (synth->parsed()) return cmd_synth(*synth, o);
    if (stats->parsed()) return cmd_stats(o);
    if (split->parsed()) return cmd_split(*split, o);
    if (embed->parsed()) return cmd_embed(*embed, o);
    if (train->parsed()) return cmd_train(*train, o);
    if (det->parsed()) return cmd_detect(*det, o);
    if (eval->parsed()) return cmd_eval(*eval, o);
    if (rep->parsed()) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error [parse]: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
