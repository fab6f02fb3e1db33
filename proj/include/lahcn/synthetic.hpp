#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"

namespace lahcn {

// A two-level toy taxonomy in which every leaf owns one "signature" token.
// Each document belongs to exactly one leaf and carries that leaf's signature
// `signature_repeats` times among uniformly drawn filler tokens.
struct SyntheticSpec {
  std::size_t documents = 60;
  std::size_t vocabulary = 40;
  std::size_t top_labels = 3;
  std::size_t children_per_label = 2;
  std::size_t doc_length = 12;
  std::size_t signature_repeats = 3;
  std::uint64_t seed = 42;
};

struct SyntheticCorpus {
  std::vector<Edge> edges;
  LabelHierarchy hierarchy;
  std::vector<Document> documents;
  std::map<std::string, std::string> signature;  // leaf label -> token
  std::map<std::string, std::string> leaf_of;    // document id -> leaf label
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec = {});

void write_hierarchy(std::ostream& out, const std::vector<Edge>& edges);
void write_corpus(std::ostream& out, const std::vector<Document>& docs);
// hierarchy.tsv and corpus.jsonl under `dir`.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace lahcn
