#include "lahcn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lahcn/error.hpp"

namespace lahcn {

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool is_count(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::vector<Document> parse_corpus(std::istream& in, const LabelHierarchy& hier, const std::string& source,
                                   CorpusStats* stats, CorpusOptions options) {
  using nlohmann::json;
  std::vector<Document> docs;
  std::set<std::string> ids;
  CorpusStats local;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where(source, lineno) + "malformed record: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() || !rec.contains("tokens") ||
        !rec["tokens"].is_array()) {
      throw ParseError(where(source, lineno) + "record needs string 'id' and array 'tokens'");
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    for (const auto& t : rec["tokens"]) {
      if (!t.is_string()) throw ParseError(where(source, lineno) + "tokens must be strings");
      doc.tokens.push_back(t.get<std::string>());
    }
    if (doc.tokens.empty()) throw ParseError(where(source, lineno) + "document '" + doc.id + "' has no tokens");

    LabelSet given;
    if (rec.contains("labels")) {
      if (!rec["labels"].is_array()) throw ParseError(where(source, lineno) + "'labels' must be an array");
      for (const auto& l : rec["labels"]) {
        if (!l.is_string()) throw ParseError(where(source, lineno) + "labels must be strings");
        const auto name = l.get<std::string>();
        if (!hier.contains(name)) {
          throw UnknownLabelError(where(source, lineno) + "unknown label '" + name + "' in document '" + doc.id + "'");
        }
        given.insert(name);
      }
    } else if (options.labels_required) {
      throw ParseError(where(source, lineno) + "record has no 'labels'");
    }
    doc.labels = ancestor_closure(given, hier);
    if (doc.labels.size() != given.size()) {
      local.closure_additions += doc.labels.size() - given.size();
      ++local.documents_corrected;
    }
    if (!ids.insert(doc.id).second) {
      throw DuplicateIdError(where(source, lineno) + "duplicate document id '" + doc.id + "'");
    }
    docs.push_back(std::move(doc));
  }
  local.documents = docs.size();
  if (stats) *stats = local;
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, const LabelHierarchy& hier,
                                  CorpusStats* stats, CorpusOptions options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file " + path.string());
  return parse_corpus(in, hier, path.string(), stats, options);
}

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw ParseError("stored vocabulary must start with <pad>, <unk>");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < tokens.size(); ++i) v.add(tokens[i]);
  if (v.size() != tokens.size()) throw ParseError("stored vocabulary has duplicate tokens");
  return v;
}

int Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  // A literal "<pad>" in text is not padding.
  return it == index_.end() || it->second == kPad ? kUnk : it->second;
}

void Vocabulary::add(const std::string& token) {
  if (index_.emplace(token, static_cast<int>(tokens_.size())).second) tokens_.push_back(token);
}

Vocabulary build_vocabulary(std::span<const Document> docs, std::size_t min_count) {
  if (docs.empty()) throw EmptyCorpus("cannot build a vocabulary from zero documents");
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs)
    for (const auto& t : d.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts)
    if (n >= min_count && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, _] : kept) v.add(tok);
  return v;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingTable t{Matrix(vocab.size(), dim)};
  for (std::size_t r = 1; r < vocab.size(); ++r)
    for (double& v : t.vectors.row_span(r)) v = rng.uniform(-0.1, 0.1);
  return t;
}

EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, Rng& rng,
                                const std::string& source) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingTable t{Matrix(vocab.size(), dim)};
  std::vector<bool> found(vocab.size(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (lineno == 1 && fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) {
      if (std::stoull(fields[1]) != dim) {
        throw DimMismatch(where(source, lineno) + "header declares dimension " + fields[1] + ", expected " +
                          std::to_string(dim));
      }
      continue;
    }
    if (fields.size() - 1 != dim) {
      throw DimMismatch(where(source, lineno) + "expected " + std::to_string(dim) + " values, got " +
                        std::to_string(fields.size() - 1));
    }
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], values[i]) || !std::isfinite(values[i])) {
        throw ParseError(where(source, lineno) + "bad number '" + fields[i + 1] + "'");
      }
    }
    const std::string& tok = fields[0];
    if (!vocab.contains(tok)) continue;
    const auto idx = static_cast<std::size_t>(vocab.index(tok));
    if (idx == static_cast<std::size_t>(Vocabulary::kPad) || idx == static_cast<std::size_t>(Vocabulary::kUnk)) {
      continue;
    }
    std::copy(values.begin(), values.end(), t.vectors.row_span(idx).begin());
    found[idx] = true;
  }
  for (std::size_t r = 1; r < vocab.size(); ++r) {
    if (found[r]) continue;
    for (double& v : t.vectors.row_span(r)) v = rng.uniform(-0.1, 0.1);
  }
  return t;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               Rng& rng) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file " + path.string());
  return parse_embeddings(in, vocab, dim, rng, path.string());
}

std::size_t embedding_file_dim(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) return std::stoull(fields[1]);
    if (fields.size() < 2) throw ParseError(path.string() + ": first line has no vector values");
    return fields.size() - 1;
  }
  throw ParseError(path.string() + ": empty embedding file");
}

Matrix Batch::global_targets(std::size_t i) const {
  std::size_t m = 0;
  for (const auto& t : targets) m += t.cols();
  Matrix out(1, m);
  std::size_t off = 0;
  for (const auto& t : targets) {
    for (std::size_t c = 0; c < t.cols(); ++c) out(0, off + c) = t(i, c);
    off += t.cols();
  }
  return out;
}

Matrix Batch::level_targets(std::size_t i, std::size_t h) const {
  const Matrix& t = targets.at(h - 1);
  return Matrix::row(t.row_span(i));
}

Batch encode_batch(std::span<const Document> docs, const Vocabulary& vocab, const LabelHierarchy& hier,
                   std::size_t max_len) {
  if (max_len < 1) throw ConfigError("maximum sequence length must be >= 1");
  Batch b;
  b.size = docs.size();
  b.max_len = max_len;
  b.tokens.assign(b.size * max_len, Vocabulary::kPad);
  b.mask.assign(b.size * max_len, 0.0);
  for (std::size_t h = 1; h <= hier.depth(); ++h) b.targets.emplace_back(b.size, hier.level_size(h));

  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto n = std::min(max_len, docs[i].tokens.size());
    for (std::size_t j = 0; j < n; ++j) {
      b.tokens[i * max_len + j] = vocab.index(docs[i].tokens[j]);
      b.mask[i * max_len + j] = 1.0;
    }
    for (const auto& label : docs[i].labels) {
      const std::size_t g = hier.index_of(label);
      const std::size_t h = hier.level_of_index(g);
      b.targets[h - 1](i, g - hier.level_offset(h)) = 1.0;
    }
  }
  return b;
}

}  // namespace lahcn
