#include "lahcn/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lahcn/checkpoint.hpp"
#include "lahcn/corpus.hpp"
#include "lahcn/error.hpp"
#include "lahcn/explain.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/metrics.hpp"
#include "lahcn/synthetic.hpp"
#include "lahcn/training.hpp"

namespace lahcn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig rc;
  auto path_of = [&](const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string path");
    fs::path p = v.get<std::string>();
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "hierarchy") rc.hierarchy = path_of(v, key);
    else if (key == "train_corpus") rc.train_corpus = path_of(v, key);
    else if (key == "valid_corpus") rc.valid_corpus = path_of(v, key);
    else if (key == "test_corpus") rc.test_corpus = path_of(v, key);
    else if (key == "embeddings") rc.embeddings = path_of(v, key);
    else if (key == "checkpoint") rc.checkpoint = path_of(v, key);
    else if (key == "output_dir") rc.output_dir = path_of(v, key);
    else if (key == "training") rc.training = config_from_json(v, rc.training);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

namespace {

std::string count_noun(std::size_t n, const std::string& noun) {
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> variant;
  bool no_timestamp = false;

  std::optional<std::string> hierarchy, train_corpus, valid_corpus, test_corpus, embeddings, checkpoint, output_dir;
  std::optional<std::size_t> epochs, batch_size, patience, dim, max_len;
  std::optional<double> lr;
  std::optional<std::string> optimizer;
  std::vector<std::size_t> components;
  bool freeze = false;
  std::vector<std::string> sets;  // training.key=json

  // subcommand specific
  std::string input;
  std::string output;
  std::vector<std::string> ids;
  std::size_t top_k = 10;
  double min_score = 0.1;
  std::string synth_dir;
  std::uint64_t synth_seed = 42;
};

RunConfig resolve(const Flags& f) {
  RunConfig rc = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.hierarchy) rc.hierarchy = *f.hierarchy;
  if (f.train_corpus) rc.train_corpus = *f.train_corpus;
  if (f.valid_corpus) rc.valid_corpus = *f.valid_corpus;
  if (f.test_corpus) rc.test_corpus = *f.test_corpus;
  if (f.embeddings) rc.embeddings = *f.embeddings;
  if (f.checkpoint) rc.checkpoint = *f.checkpoint;
  if (f.output_dir) rc.output_dir = *f.output_dir;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    json value;
    try {
      value = json::parse(s.substr(eq + 1));
    } catch (const json::parse_error&) {
      value = s.substr(eq + 1);
    }
    rc.training = config_from_json(json{{s.substr(0, eq), value}}, rc.training);
  }
  TrainConfig& t = rc.training;
  if (f.seed) t.seed = *f.seed;
  if (f.alpha) t.alpha = *f.alpha;
  if (f.variant) t.variant = parse_variant(*f.variant);
  if (f.epochs) t.max_epochs = *f.epochs;
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.patience) t.patience = *f.patience;
  if (f.dim) t.dim = *f.dim;
  if (f.max_len) t.max_len = *f.max_len;
  if (f.lr) t.learning_rate = *f.lr;
  if (f.optimizer) t.optimizer = parse_optimizer(*f.optimizer);
  if (!f.components.empty()) t.components = f.components;
  if (f.freeze) t.freeze_embeddings = true;
  t.validate();
  return rc;
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("no ") + what + " path configured");
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

fs::path checkpoint_path(const RunConfig& rc) {
  return rc.checkpoint.empty() ? rc.output_dir / "model.ckpt.json" : rc.checkpoint;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

std::string fixed6(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << v;
  return ss.str();
}

int cmd_validate(const Flags& f, std::ostream& out) {
  const RunConfig rc = resolve(f);
  require(rc.hierarchy, "hierarchy");
  const LabelHierarchy hier = load_hierarchy(rc.hierarchy);
  out << "hierarchy: " << rc.hierarchy.string() << " (" << hier.size() << " labels, " << hier.depth()
      << " levels)\n";
  out << "levels: " << join_sizes(hier.level_sizes()) << "\n";
  const std::pair<const char*, fs::path> splits[] = {
      {"train", rc.train_corpus}, {"valid", rc.valid_corpus}, {"test", rc.test_corpus}};
  for (const auto& [name, path] : splits) {
    if (path.empty()) continue;
    require(path, name);
    CorpusStats stats;
    load_corpus(path, hier, &stats);
    out << name << ": " << stats.documents << " documents; closure added " << stats.closure_additions
        << " ancestor labels in " << stats.documents_corrected << " documents\n";
  }
  return 0;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig rc = resolve(f);
  require(rc.hierarchy, "hierarchy");
  require(rc.train_corpus, "train corpus");
  const LabelHierarchy hier = load_hierarchy(rc.hierarchy);
  const auto train_docs = load_corpus(rc.train_corpus, hier);
  std::vector<Document> valid_docs;
  if (!rc.valid_corpus.empty()) {
    require(rc.valid_corpus, "valid corpus");
    valid_docs = load_corpus(rc.valid_corpus, hier);
  } else {
    err << "note: no validation corpus; early stopping monitors the training split\n";
  }
  const Vocabulary vocab = build_vocabulary(train_docs, rc.training.min_count);

  if (!rc.embeddings.empty()) {
    require(rc.embeddings, "embeddings");
  } else {
    err << "note: no embeddings file; word vectors initialised randomly with dim " << rc.training.dim << "\n";
  }
  const EmbeddingTable emb = initial_embeddings(rc.training, vocab, rc.embeddings);

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    err << "epoch " << r.epoch << " loss " << fixed6(r.loss) << " valid "
        << (r.valid_metric ? fixed6(*r.valid_metric) : std::string("n/a")) << (r.improved ? " *" : "") << "\n";
  };
  const TrainResult result = train(rc.training, train_docs, valid_docs, hier, vocab, emb, hooks);

  const fs::path ckpt = checkpoint_path(rc);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(result.params, vocab, hier, ckpt, {f.no_timestamp ? std::string() : utc_timestamp()});
  write_file(rc.output_dir / "history.jsonl", history_jsonl(result.history));
  out << "checkpoint: " << ckpt.string() << " (best epoch " << result.best_epoch << ")\n";
  out << "final validation AU(PRC): " << (result.best_metric ? fixed6(*result.best_metric) : std::string("n/a"))
      << "\n";
  return 0;
}

struct Loaded {
  RunConfig rc;
  LabelHierarchy hier;
  Checkpoint ckpt;
  double alpha;
};

Loaded load_model(const Flags& f) {
  RunConfig rc = resolve(f);
  require(rc.hierarchy, "hierarchy");
  LabelHierarchy hier = load_hierarchy(rc.hierarchy);
  const fs::path path = checkpoint_path(rc);
  require(path, "checkpoint");
  Checkpoint ckpt = load_checkpoint(path, hier);
  const double alpha = f.alpha ? *f.alpha : ckpt.params.config.alpha;
  return {std::move(rc), std::move(hier), std::move(ckpt), alpha};
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const Loaded m = load_model(f);
  const fs::path corpus = f.input.empty() ? m.rc.test_corpus : fs::path(f.input);
  require(corpus, "test corpus");
  const auto docs = load_corpus(corpus, m.hier);
  const EvaluationReport report = evaluate(m.ckpt.params, docs, m.ckpt.vocab, m.hier, m.alpha);
  const fs::path dest = f.output.empty() ? m.rc.output_dir / "metrics.json" : fs::path(f.output);
  write_file(dest, report_json(report, m.hier) + "\n");

  auto show = [](const std::optional<double>& v) { return v ? fixed6(*v) : std::string("n/a"); };
  out << "documents: " << report.documents << ", pairs: " << report.pairs << ", positives: " << report.positives
      << "\n";
  for (std::size_t h = 0; h < report.blended.per_level.size(); ++h) {
    out << "level " << h + 1 << ": " << show(report.blended.per_level[h]) << "\n";
  }
  out << "local: " << show(report.local.overall) << ", global: " << show(report.global.overall) << "\n";
  out << "report: " << dest.string() << "\n";
  out << show(report.blended.overall) << "\n";
  return 0;
}

int cmd_predict(const Flags& f, std::ostream& out) {
  const Loaded m = load_model(f);
  const fs::path input = f.input.empty() ? m.rc.test_corpus : fs::path(f.input);
  require(input, "input corpus");
  const auto docs = load_corpus(input, m.hier, nullptr, {.labels_required = false});
  const fs::path dest = f.output.empty() ? m.rc.output_dir / "predictions.jsonl" : fs::path(f.output);
  std::string text;
  if (!docs.empty()) {
    const Batch batch = encode_batch(docs, m.ckpt.vocab, m.hier, m.ckpt.params.config.max_len);
    const auto scores = predict_batch(m.ckpt.params, batch, m.alpha);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      json labels = json::array();
      for (std::size_t j = 0; j < m.hier.size(); ++j) {
        labels.push_back({{"label", m.hier.name(j)}, {"score", scores[i].blended[j]}});
      }
      text += json{{"id", docs[i].id}, {"scores", labels}}.dump() + "\n";
    }
  }
  write_file(dest, text);
  out << "predictions: " << dest.string() << " (" << count_noun(docs.size(), "document") << ")\n";
  return 0;
}

std::string safe_file_name(const std::string& id) {
  std::string s;
  for (char c : id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return s.empty() ? "_" : s;
}

int cmd_explain(const Flags& f, std::ostream& out) {
  const Loaded m = load_model(f);
  const fs::path input = f.input.empty() ? m.rc.test_corpus : fs::path(f.input);
  require(input, "input corpus");
  const auto docs = load_corpus(input, m.hier, nullptr, {.labels_required = false});

  std::vector<const Document*> chosen;
  if (f.ids.empty()) {
    for (const auto& d : docs) chosen.push_back(&d);
  } else {
    for (const auto& id : f.ids) {
      auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == id; });
      if (it == docs.end()) throw UnknownDocumentError("document '" + id + "' is not in " + input.string());
      chosen.push_back(&*it);
    }
  }
  const ExplainOptions opts{f.top_k, f.min_score, m.alpha};
  std::string lines;
  for (const Document* d : chosen) {
    const ExplanationRecord rec = explain_document(m.ckpt.params, *d, m.ckpt.vocab, m.hier, opts);
    lines += explanation_json(rec) + "\n";
    write_file(m.rc.output_dir / ("explain_" + safe_file_name(d->id) + ".html"), heatmap_html(rec));
  }
  const fs::path dest = f.output.empty() ? m.rc.output_dir / "explanations.jsonl" : fs::path(f.output);
  write_file(dest, lines);
  out << "explanations: " << dest.string() << " (" << count_noun(chosen.size(), "document") << ")\n";
  return 0;
}

int cmd_generate(const Flags& f, std::ostream& out) {
  SyntheticSpec spec;
  spec.seed = f.synth_seed;
  const SyntheticCorpus c = make_synthetic_corpus(spec);
  write_synthetic(c, f.synth_dir);
  out << "wrote " << (fs::path(f.synth_dir) / "hierarchy.tsv").string() << " and "
      << (fs::path(f.synth_dir) / "corpus.jsonl").string() << "\n";
  return 0;
}

void add_shared(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "run configuration (JSON)");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--alpha", f.alpha, "local/global blend weight in [0,1]");
  app->add_option("--variant", f.variant, "full, nc, local or global");
  app->add_flag("--no-timestamp", f.no_timestamp, "omit creation timestamps from outputs");
  app->add_option("--hierarchy", f.hierarchy, "hierarchy file");
  app->add_option("--train-corpus", f.train_corpus, "training corpus");
  app->add_option("--valid-corpus", f.valid_corpus, "validation corpus");
  app->add_option("--test-corpus", f.test_corpus, "test corpus");
  app->add_option("--embeddings", f.embeddings, "word-vector text file");
  app->add_option("--checkpoint", f.checkpoint, "checkpoint path");
  app->add_option("--output-dir", f.output_dir, "directory for outputs");
  app->add_option("--epochs", f.epochs, "maximum epochs");
  app->add_option("--batch-size", f.batch_size, "documents per update");
  app->add_option("--patience", f.patience, "early-stopping patience");
  app->add_option("--dim", f.dim, "word embedding dimension");
  app->add_option("--max-len", f.max_len, "maximum tokens per document");
  app->add_option("--lr", f.lr, "learning rate");
  app->add_option("--optimizer", f.optimizer, "adam or sgd");
  app->add_option("--components", f.components, "components per level (one value or one per level)");
  app->add_flag("--freeze-embeddings", f.freeze, "keep word vectors fixed");
  app->add_option("--set", f.sets, "training.<key>=<value> override, repeatable");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical multi-label text classification with label-based attention", "lahcn"};
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "check a hierarchy and corpora");
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "AU(PRC) report on the test corpus");
  auto* predict = app.add_subcommand("predict", "blended scores for every label");
  auto* explain = app.add_subcommand("explain", "label attention records and heatmap pages");
  auto* generate = app.add_subcommand("generate-synthetic", "write the synthetic toy corpus");
  for (auto* sub : {validate, train, evaluate, predict, explain}) add_shared(sub, f);
  for (auto* sub : {evaluate, predict, explain}) {
    sub->add_option("--input", f.input, "corpus to score (default: test corpus)");
    sub->add_option("--output", f.output, "output file");
  }
  explain->add_option("--ids", f.ids, "document ids (default: all)")->delimiter(',');
  explain->add_option("--top-k", f.top_k, "tokens listed per label");
  explain->add_option("--min-score", f.min_score, "explain labels scoring above this");
  generate->add_option("--out", f.synth_dir, "output directory")->required();
  generate->add_option("--seed", f.synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(f, out);
    if (train->parsed()) return cmd_train(f, out, err);
    if (evaluate->parsed()) return cmd_evaluate(f, out);
    if (predict->parsed()) return cmd_predict(f, out);
    if (explain->parsed()) return cmd_explain(f, out);
    if (generate->parsed()) return cmd_generate(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace lahcn::cli
