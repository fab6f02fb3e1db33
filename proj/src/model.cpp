#include "lahcn/model.hpp"

#include <cmath>

#include "lahcn/error.hpp"
#include "lahcn/rng.hpp"

namespace lahcn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoComponent: return "nc";
    case Variant::kLocalOnly: return "local";
    case Variant::kGlobalOnly: return "global";
  }
  return "full";
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "nc") return Variant::kNoComponent;
  if (s == "local" || s == "local_only") return Variant::kLocalOnly;
  if (s == "global" || s == "global_only") return Variant::kGlobalOnly;
  throw ConfigError("unknown variant '" + s + "' (expected full, nc, local, global)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam, sgd)");
}

std::string projection_name(Activation a) { return a == Activation::kLinear ? "linear" : "tanh"; }

Activation parse_projection(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown projection activation '" + s + "' (expected tanh, linear)");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(batch_size, "batch_size");
  positive(max_epochs, "max_epochs");
  positive(max_len, "max_len");
  positive(dim, "dim");
  positive(min_count, "min_count");
  if (components.empty()) throw ConfigError("components must list at least one count");
  for (auto m : components) positive(m, "components");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (projection != Activation::kTanh && projection != Activation::kLinear) {
    throw ConfigError("projection activation must be tanh or linear");
  }
}

std::size_t TrainConfig::components_at(std::size_t h, std::size_t depth) const {
  if (components.size() == 1) return components.front();
  if (components.size() != depth) {
    throw ConfigError("components lists " + std::to_string(components.size()) + " counts for a depth-" +
                      std::to_string(depth) + " hierarchy");
  }
  return components.at(h - 1);
}

namespace {

Matrix uniform(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform(fan_in, fan_out, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

template <typename Self, typename Out>
void collect(Self& self, Out& out) {
  out.emplace_back(kEmbeddingName, &self.embedding);
  for (std::size_t h = 0; h < self.levels.size(); ++h) {
    auto& l = self.levels[h];
    const std::string p = "level" + std::to_string(h + 1) + ".";
    out.emplace_back(p + "components", &l.components);
    out.emplace_back(p + "label_emb", &l.label_emb);
    out.emplace_back(p + "fw_W", &l.fw_W);
    out.emplace_back(p + "fw_b", &l.fw_b);
    out.emplace_back(p + "fl_W", &l.fl_W);
    out.emplace_back(p + "fl_b", &l.fl_b);
    out.emplace_back(p + "fm_W", &l.fm_W);
    out.emplace_back(p + "fm_b", &l.fm_b);
    out.emplace_back(p + "W", &l.W);
    out.emplace_back(p + "b", &l.b);
  }
  out.emplace_back("global.W1", &self.global.W1);
  out.emplace_back("global.b1", &self.global.b1);
  out.emplace_back("global.W2", &self.global.W2);
  out.emplace_back("global.b2", &self.global.b2);
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  collect(*this, out);
  return out;
}

ModelParams init_params(const TrainConfig& cfg, const LabelHierarchy& hier, const Vocabulary& vocab,
                        const EmbeddingTable& embeddings) {
  cfg.validate();
  if (embeddings.dim() != cfg.dim) {
    throw ConfigError("embedding dimension " + std::to_string(embeddings.dim()) + " does not match dim " +
                      std::to_string(cfg.dim));
  }
  if (embeddings.vectors.rows() != vocab.size()) {
    throw ConfigError("embedding table has " + std::to_string(embeddings.vectors.rows()) + " rows for a vocabulary of " +
                      std::to_string(vocab.size()));
  }
  if (hier.depth() == 0) throw ConfigError("hierarchy has no labels");

  const std::size_t d = cfg.dim;
  const std::size_t dc = cfg.resolved_component_dim();
  const std::size_t hidden = cfg.resolved_hidden_dim();
  Rng rng(cfg.seed);

  ModelParams p;
  p.config = cfg;
  p.embedding = embeddings.vectors;
  for (double& v : p.embedding.row_span(Vocabulary::kPad)) v = 0.0;

  for (std::size_t h = 1; h <= hier.depth(); ++h) {
    LevelParams l;
    l.components = uniform(cfg.components_at(h, hier.depth()), dc, 0.1, rng);
    l.label_emb = uniform(hier.level_size(h), d, 0.1, rng);
    l.fw_W = glorot(2 * d, dc, rng);
    l.fw_b = Matrix(1, dc);
    l.fl_W = glorot(d, dc, rng);
    l.fl_b = Matrix(1, dc);
    l.fm_W = glorot(d, d, rng);
    l.fm_b = Matrix(1, d);
    l.W = glorot(d, d, rng);
    l.b = Matrix(1, d);
    p.levels.push_back(std::move(l));
  }
  p.global.W1 = glorot(hier.depth() * d, hidden, rng);
  p.global.b1 = Matrix(1, hidden);
  p.global.W2 = glorot(hidden, hier.size(), rng);
  p.global.b2 = Matrix(1, hier.size());
  return p;
}

}  // namespace lahcn
