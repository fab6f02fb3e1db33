#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lahcn/hierarchy.hpp"
#include "lahcn/matrix.hpp"
#include "lahcn/rng.hpp"

namespace lahcn {

struct Document {
  std::string id;
  std::vector<std::string> tokens;  // non-empty
  LabelSet labels;                  // ancestor-closed
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t closure_additions = 0;  // ancestor labels added on load
  std::size_t documents_corrected = 0;
};

struct CorpusOptions {
  // Prediction inputs may omit the labels key.
  bool labels_required = true;
};

// One JSON object per line: {"id": str, "tokens": [str...], "labels": [str...]}.
// Throws ParseError (with line number), UnknownLabelError, DuplicateIdError.
std::vector<Document> parse_corpus(std::istream& in, const LabelHierarchy& hier,
                                   const std::string& source = "<stream>", CorpusStats* stats = nullptr,
                                   CorpusOptions options = {});
std::vector<Document> load_corpus(const std::filesystem::path& path, const LabelHierarchy& hier,
                                  CorpusStats* stats = nullptr, CorpusOptions options = {});

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  // Rebuilds from a stored token list (index order); the first two entries
  // must be the PAD and UNK tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  // UNK for out-of-vocabulary tokens.
  int index(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  void add(const std::string& token);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// Tokens with count >= min_count, ordered by descending frequency then
// lexicographically. EmptyCorpus if docs is empty.
Vocabulary build_vocabulary(std::span<const Document> docs, std::size_t min_count = 1);

struct EmbeddingTable {
  Matrix vectors;  // V×d, row 0 (PAD) is zero
  std::size_t dim() const noexcept { return vectors.cols(); }
};

// Rows initialised uniformly in [-0.1, 0.1], PAD row zero.
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng);

// Word-vector text format with optional "V d" header. Vocabulary tokens found
// in the file take the file vector; the rest (and UNK) are drawn uniformly in
// [-0.1, 0.1]. DimMismatch for lines with a value count other than dim.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               Rng& rng);
EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, Rng& rng,
                                const std::string& source = "<stream>");
// Vector dimension declared by (or inferred from the first line of) a file.
std::size_t embedding_file_dim(const std::filesystem::path& path);

// Padded, masked, index-encoded documents.
struct Batch {
  std::size_t size = 0;     // B
  std::size_t max_len = 0;  // N
  std::vector<int> tokens;     // B×N, PAD-filled
  std::vector<double> mask;    // B×N, 1 for real tokens
  std::vector<Matrix> targets;  // per level: B×|labels at level|

  std::span<const int> row_tokens(std::size_t i) const { return {tokens.data() + i * max_len, max_len}; }
  std::span<const double> row_mask(std::size_t i) const { return {mask.data() + i * max_len, max_len}; }
  // Level targets of document i concatenated in global output order (1×M).
  Matrix global_targets(std::size_t i) const;
  // Level-h targets of document i (1×q_h), h 1-based.
  Matrix level_targets(std::size_t i, std::size_t h) const;
};

inline constexpr std::size_t kDefaultMaxLen = 256;

// Tokens beyond max_len are dropped from the tail; short documents are
// right-padded. Pure function of its inputs.
Batch encode_batch(std::span<const Document> docs, const Vocabulary& vocab, const LabelHierarchy& hier,
                   std::size_t max_len = kDefaultMaxLen);

}  // namespace lahcn
