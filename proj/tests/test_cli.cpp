#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lahcn/checkpoint.hpp"
#include "lahcn/cli.hpp"
#include "lahcn/metrics.hpp"
#include "lahcn/synthetic.hpp"

using namespace lahcn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lahcn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string last_line(const std::string& text) {
  std::string s = text;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s.substr(s.rfind('\n') + 1);
}

// A synthetic corpus on disk plus a small config.
struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("lahcn_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_synthetic(make_synthetic_corpus(), dir);
    std::ofstream(dir / "run.json") << R"({
      "hierarchy": "hierarchy.tsv",
      "train_corpus": "corpus.jsonl",
      "test_corpus": "corpus.jsonl",
      "output_dir": "out",
      "training": {"dim": 8, "components": [4], "max_epochs": 6, "patience": 3, "learning_rate": 0.01, "batch_size": 8}
    })";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string config() const { return (dir / "run.json").string(); }
  fs::path out() const { return dir / "out"; }
};

}  // namespace

TEST_CASE("validate reports per-level counts") {
  Workspace ws("validate");
  const Run r = run_cli({"validate", "--config", ws.config()});
  CHECK(r.code == 0);
  CHECK(r.out.find("levels: 3, 6") != std::string::npos);
  CHECK(r.out.find("train: 60 documents") != std::string::npos);

  std::ofstream(ws.dir / "leaf.jsonl") << R"({"id":"a","tokens":["w00"],"labels":["C1.1"]})" << "\n";
  const Run leaf = run_cli({"validate", "--config", ws.config(), "--train-corpus", (ws.dir / "leaf.jsonl").string()});
  CHECK(leaf.code == 0);
  CHECK(leaf.out.find("closure added 1 ancestor labels in 1 documents") != std::string::npos);

  std::ofstream(ws.dir / "bad.jsonl") << R"({"id":"a","tokens":["w00"],"labels":["Nope"]})" << "\n";
  const Run bad = run_cli({"validate", "--config", ws.config(), "--train-corpus", (ws.dir / "bad.jsonl").string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("Nope") != std::string::npos);

  std::ofstream(ws.dir / "broken.jsonl") << "{\n";
  const Run broken =
      run_cli({"validate", "--config", ws.config(), "--train-corpus", (ws.dir / "broken.jsonl").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("broken.jsonl:1") != std::string::npos);
}

TEST_CASE("validate on a four-level hierarchy of the patent-classification shape") {
  Workspace ws("wipo");
  const std::size_t sizes[] = {8, 114, 451, 4656};
  std::ofstream tsv(ws.dir / "wipo.tsv");
  std::vector<std::string> prev{"root"};
  for (std::size_t h = 0; h < 4; ++h) {
    std::vector<std::string> cur;
    for (std::size_t i = 0; i < sizes[h]; ++i) {
      cur.push_back("L" + std::to_string(h + 1) + "_" + std::to_string(i));
      tsv << prev[i % prev.size()] << '\t' << cur.back() << '\n';
    }
    prev = cur;
  }
  tsv.close();
  const Run r = run_cli({"validate", "--hierarchy", (ws.dir / "wipo.tsv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("levels: 8, 114, 451, 4656\n") != std::string::npos);
  CHECK(r.out.find("5229 labels") != std::string::npos);
}

TEST_CASE("config handling") {
  Workspace ws("config");
  std::ofstream(ws.dir / "unknown.json") << R"({"hierarchy": "hierarchy.tsv", "colour": "blue"})";
  CHECK(run_cli({"validate", "--config", (ws.dir / "unknown.json").string()}).code == 2);
  std::ofstream(ws.dir / "unknown_train.json") << R"({"hierarchy": "hierarchy.tsv", "training": {"colour": 1}})";
  CHECK(run_cli({"validate", "--config", (ws.dir / "unknown_train.json").string()}).code == 2);
  CHECK(run_cli({"validate"}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"train", "--config", ws.config(), "--alpha", "2"}).code == 2);
  CHECK(run_cli({"train", "--config", ws.config(), "--variant", "bogus"}).code == 2);

  const cli::RunConfig rc = cli::load_run_config(ws.config());
  CHECK(rc.hierarchy == ws.dir / "hierarchy.tsv");
  CHECK(rc.training.dim == 8);
}

TEST_CASE("train, evaluate, predict and explain") {
  Workspace ws("pipeline");
  const Run tr = run_cli({"train", "--config", ws.config(), "--no-timestamp", "--seed", "5"});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("final validation AU(PRC): ") != std::string::npos);
  CHECK(tr.err.find("initialised randomly") != std::string::npos);
  const fs::path ckpt = ws.out() / "model.ckpt.json";
  REQUIRE(fs::exists(ckpt));
  REQUIRE(fs::exists(ws.out() / "history.jsonl"));
  const std::string first_ckpt = slurp(ckpt);
  const std::string first_history = slurp(ws.out() / "history.jsonl");
  CHECK(first_ckpt.find("\"created\"") == std::string::npos);
  CHECK(json::parse(first_ckpt)["config"]["seed"] == 5);

  // identical inputs give identical files
  REQUIRE(run_cli({"train", "--config", ws.config(), "--no-timestamp", "--seed", "5"}).code == 0);
  CHECK(slurp(ckpt) == first_ckpt);
  CHECK(slurp(ws.out() / "history.jsonl") == first_history);

  const Run ev = run_cli({"evaluate", "--config", ws.config()});
  REQUIRE(ev.code == 0);
  const double overall = std::stod(last_line(ev.out));
  const json metrics = json::parse(slurp(ws.out() / "metrics.json"));
  CHECK(metrics["blended"]["per_level"].size() == 2);
  CHECK(metrics["blended"]["overall"].get<double>() == doctest::Approx(overall).epsilon(1e-6));
  CHECK(metrics.contains("local"));
  CHECK(metrics.contains("global"));

  // predictions pooled outside the tool reproduce the in-process metric
  REQUIRE(run_cli({"predict", "--config", ws.config()}).code == 0);
  const auto syn = make_synthetic_corpus();
  const auto& hier = syn.hierarchy;
  std::ifstream preds(ws.out() / "predictions.jsonl");
  std::vector<ScoredPair> pairs;
  std::string line;
  std::size_t row = 0;
  while (std::getline(preds, line)) {
    const json rec = json::parse(line);
    const auto& doc = syn.documents[row++];
    CHECK(rec["id"] == doc.id);
    REQUIRE(rec["scores"].size() == hier.size());
    for (std::size_t j = 0; j < hier.size(); ++j) {
      CHECK(rec["scores"][j]["label"] == hier.name(j));
      pairs.push_back({rec["scores"][j]["score"].get<double>(), doc.labels.count(hier.name(j)) > 0, 0, j});
    }
  }
  CHECK(row == syn.documents.size());
  const Checkpoint c = load_checkpoint(ckpt, hier);
  const auto in_process = evaluate(c.params, syn.documents, c.vocab, hier, c.params.config.alpha);
  CHECK(std::abs(au_prc_of(pairs) - *in_process.blended.overall) <= 1e-12);

  // alpha 1 reproduces the local scores
  REQUIRE(run_cli({"predict", "--config", ws.config(), "--alpha", "1", "--output", (ws.out() / "a1.jsonl").string()})
              .code == 0);
  std::ifstream a1(ws.out() / "a1.jsonl");
  std::getline(a1, line);
  const json first = json::parse(line);
  const auto batch = encode_batch(syn.documents, c.vocab, hier, c.params.config.max_len);
  const auto local = forward_document(c.params, batch.row_tokens(0), batch.row_mask(0), 1.0).scores.local_concat();
  for (std::size_t j = 0; j < hier.size(); ++j) CHECK(first["scores"][j]["score"].get<double>() == local[j]);

  // unknown tokens and empty input
  std::ofstream(ws.dir / "unk.jsonl") << R"({"id":"u","tokens":["zzz","qqq"]})" << "\n";
  const Run unk = run_cli({"predict", "--config", ws.config(), "--input", (ws.dir / "unk.jsonl").string(), "--output",
                           (ws.out() / "unk_pred.jsonl").string()});
  CHECK(unk.code == 0);
  CHECK(json::parse(slurp(ws.out() / "unk_pred.jsonl"))["scores"].size() == hier.size());
  std::ofstream(ws.dir / "empty.jsonl").close();
  const Run empty = run_cli({"predict", "--config", ws.config(), "--input", (ws.dir / "empty.jsonl").string(),
                             "--output", (ws.out() / "empty_pred.jsonl").string()});
  CHECK(empty.code == 0);
  CHECK(fs::exists(ws.out() / "empty_pred.jsonl"));
  CHECK(fs::file_size(ws.out() / "empty_pred.jsonl") == 0);

  // explain
  const Run ex = run_cli({"explain", "--config", ws.config(), "--ids", "doc0,doc3", "--top-k", "100"});
  REQUIRE(ex.code == 0);
  std::ifstream exp(ws.out() / "explanations.jsonl");
  std::vector<json> records;
  while (std::getline(exp, line)) records.push_back(json::parse(line));
  REQUIRE(records.size() == 2);
  CHECK(records[0]["id"] == "doc0");
  for (const auto& lab : records[0]["labels"]) CHECK(lab["tokens"].size() == 12);
  CHECK(fs::exists(ws.out() / "explain_doc0.html"));
  const std::string html = slurp(ws.out() / "explain_doc3.html");
  CHECK(html.find("<html") != std::string::npos);
  CHECK(html.find("http") == std::string::npos);

  REQUIRE(run_cli({"explain", "--config", ws.config(), "--ids", "doc0", "--min-score", "1.1"}).code == 0);
  const json none = json::parse(slurp(ws.out() / "explanations.jsonl"));
  CHECK(none["labels"].empty());
  CHECK(run_cli({"explain", "--config", ws.config(), "--ids", "missing"}).code == 3);

  // a checkpoint trained on another hierarchy is refused
  std::ofstream(ws.dir / "other.tsv") << "root\tX\n";
  CHECK(run_cli({"evaluate", "--config", ws.config(), "--hierarchy", (ws.dir / "other.tsv").string()}).code == 3);
}

TEST_CASE("variant flag reaches training") {
  Workspace ws("variant");
  REQUIRE(run_cli({"train", "--config", ws.config(), "--variant", "nc", "--epochs", "1", "--no-timestamp"}).code == 0);
  const json ck = json::parse(slurp(ws.out() / "model.ckpt.json"));
  CHECK(ck["config"]["variant"] == "nc");
  REQUIRE(run_cli({"train", "--config", ws.config(), "--set", "variant=global", "--epochs", "1"}).code == 0);
  CHECK(json::parse(slurp(ws.out() / "model.ckpt.json"))["config"]["variant"] == "global");
  CHECK(json::parse(slurp(ws.out() / "model.ckpt.json")).contains("created"));
}
