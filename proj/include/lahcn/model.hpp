#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/matrix.hpp"
#include "lahcn/tape.hpp"

namespace lahcn {

// full: joint local+global loss; nc: no component factorisation;
// local/global: optimise only that loss.
enum class Variant { kFull, kNoComponent, kLocalOnly, kGlobalOnly };
enum class OptimizerKind { kAdam, kSgd };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);
// Only tanh and linear are valid for the word/label projections.
std::string projection_name(Activation a);
Activation parse_projection(const std::string& s);

struct TrainConfig {
  std::uint64_t seed = 1;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  std::size_t max_len = kDefaultMaxLen;      // N
  std::size_t dim = 200;                     // d
  std::size_t component_dim = 0;             // d_c, 0 means d
  std::vector<std::size_t> components{64};   // m_h; one entry applies to every level
  std::size_t hidden_dim = 0;                // global head width, 0 means d
  double alpha = 0.5;
  Variant variant = Variant::kFull;
  bool freeze_embeddings = false;
  Activation projection = Activation::kTanh;
  double leaky_slope = 0.01;
  double clip_norm = 5.0;                    // 0 disables clipping
  std::size_t min_count = 1;

  // ConfigError on non-positive sizes, alpha outside [0,1], and so on.
  void validate() const;
  std::size_t resolved_component_dim() const { return component_dim ? component_dim : dim; }
  std::size_t resolved_hidden_dim() const { return hidden_dim ? hidden_dim : dim; }
  // m_h for level h (1-based). ConfigError when the list length matches
  // neither 1 nor the depth.
  std::size_t components_at(std::size_t h, std::size_t depth) const;
};

// Trainable tensors of one hierarchy level.
struct LevelParams {
  Matrix components;  // m_h × d_c
  Matrix label_emb;   // q_h × d, rows in labels_at_level order
  Matrix fw_W, fw_b;  // 2d × d_c, 1 × d_c   word projection
  Matrix fl_W, fl_b;  // d × d_c,  1 × d_c   label projection
  Matrix fm_W, fm_b;  // d × d,    1 × d     label-mask projection
  Matrix W, b;        // d × d,    1 × d     label document embedding
};

struct GlobalHeadParams {
  Matrix W1, b1;  // (H·d) × hidden, 1 × hidden
  Matrix W2, b2;  // hidden × M, 1 × M
};

struct ModelParams {
  TrainConfig config;
  Matrix embedding;  // V × d, row 0 (PAD) stays zero
  std::vector<LevelParams> levels;
  GlobalHeadParams global;

  std::size_t depth() const noexcept { return levels.size(); }
  std::size_t dim() const noexcept { return embedding.cols(); }

  // Every tensor with its stable name ("embedding", "level1.components",
  // ..., "global.W2"), in a fixed order.
  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
};

inline constexpr const char* kEmbeddingName = "embedding";

// Deterministic from cfg.seed: component and label embeddings uniform in
// [-0.1, 0.1], weight matrices uniform in ±sqrt(6/(fan_in+fan_out)), biases
// zero. The embedding table is copied from `embeddings`.
ModelParams init_params(const TrainConfig& cfg, const LabelHierarchy& hier, const Vocabulary& vocab,
                        const EmbeddingTable& embeddings);

}  // namespace lahcn
