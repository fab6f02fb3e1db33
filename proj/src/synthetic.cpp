#include "lahcn/synthetic.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "lahcn/error.hpp"
#include "lahcn/rng.hpp"

namespace lahcn {

namespace {

std::string token_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%02zu", i);
  return buf;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  const std::size_t leaves = spec.top_labels * spec.children_per_label;
  if (leaves == 0 || spec.documents == 0) throw ConfigError("synthetic corpus needs labels and documents");
  if (spec.vocabulary <= leaves) throw ConfigError("synthetic vocabulary must exceed the number of leaves");
  if (spec.doc_length < spec.signature_repeats) throw ConfigError("documents too short for their signature");

  SyntheticCorpus c;
  std::vector<std::string> leaf_names;
  for (std::size_t t = 0; t < spec.top_labels; ++t) {
    const std::string top = "C" + std::to_string(t + 1);
    c.edges.emplace_back(std::string(kVirtualRoot), top);
    for (std::size_t k = 0; k < spec.children_per_label; ++k) {
      const std::string leaf = top + "." + std::to_string(k + 1);
      c.edges.emplace_back(top, leaf);
      c.signature[leaf] = token_name(leaf_names.size());
      leaf_names.push_back(leaf);
    }
  }
  c.hierarchy = build_hierarchy(c.edges);

  Rng rng(spec.seed);
  const std::size_t fillers = spec.vocabulary - leaves;
  for (std::size_t i = 0; i < spec.documents; ++i) {
    const std::string& leaf = leaf_names[i % leaves];
    Document d;
    d.id = "doc" + std::to_string(i);
    d.tokens.assign(spec.signature_repeats, c.signature[leaf]);
    while (d.tokens.size() < spec.doc_length) d.tokens.push_back(token_name(leaves + rng.below(fillers)));
    rng.shuffle(d.tokens);
    d.labels = ancestor_closure({leaf}, c.hierarchy);
    c.leaf_of[d.id] = leaf;
    c.documents.push_back(std::move(d));
  }
  return c;
}

void write_hierarchy(std::ostream& out, const std::vector<Edge>& edges) {
  for (const auto& [p, ch] : edges) out << p << '\t' << ch << '\n';
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    nlohmann::json j{{"id", d.id}, {"tokens", d.tokens}, {"labels", std::vector<std::string>(d.labels.begin(), d.labels.end())}};
    out << j.dump() << '\n';
  }
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream h(dir / "hierarchy.tsv");
  std::ofstream c(dir / "corpus.jsonl");
  if (!h || !c) throw ConfigError("cannot write synthetic corpus under " + dir.string());
  write_hierarchy(h, corpus.edges);
  write_corpus(c, corpus.documents);
}

}  // namespace lahcn
