#pragma once

// Local (per-level) and global classification heads, their losses, and the
// blended final prediction, composed into a whole-document forward pass.

#include <cstddef>
#include <span>
#include <vector>

#include "lahcn/attention.hpp"
#include "lahcn/corpus.hpp"
#include "lahcn/model.hpp"
#include "lahcn/tape.hpp"

namespace lahcn {

struct GlobalHeadVars {
  Var W1, b1, W2, b2;
};

struct ModelParamVars {
  std::vector<LevelParamVars> levels;
  GlobalHeadVars global;
};

// Registers every non-embedding tensor; the embedding table is registered by
// the row gather inside build_document_graph.
ModelParamVars bind_params(Tape& tape, const ModelParams& params);

// sigmoid(<Dtilde[j,:], label_emb[j,:]>) per label, q × 1.
Var local_predict(Var Dtilde, Var label_emb);
// Σ_h bce_sum(p^h, z^h) / batch_size. Targets are q_h × 1 columns.
Var local_loss(std::span<const Var> level_probs, std::span<const Matrix> level_targets, std::size_t batch_size);
// Concatenation of the per-level global embeddings, (H·d) × 1.
Var global_embed(std::span<const Var> v_globals);
// sigmoid(relu(v_gᵀ·W1 + b1)·W2 + b2), 1 × M.
Var global_predict(Var v_global_concat, const GlobalHeadVars& head);
// bce_sum(p^g, z_all) / batch_size; z_all is 1 × M in global output order.
Var global_loss(Var global_probs, const Matrix& global_targets, std::size_t batch_size);
Var total_loss(Var local, Var global);

// alpha·concat(local) + (1-alpha)·global, elementwise.
std::vector<double> combine_predictions(std::span<const std::vector<double>> local_levels,
                                        std::span<const double> global, double alpha);

struct ForwardOptions {
  // Drop trailing padding before the attention pass. Padded positions get
  // exactly zero attention either way; the trace keeps full width N with zero
  // attention columns and zero S rows there.
  bool trim_padding = true;
};

struct DocumentGraph {
  std::vector<LevelVars> levels;
  std::vector<Var> local_probs;  // per level, q_h × 1
  Var v_global_concat;           // (H·d) × 1
  Var global_probs;              // 1 × M
  std::size_t max_len = 0;       // N of the input row
  std::size_t length = 0;        // positions actually evaluated
};

DocumentGraph build_document_graph(Tape& tape, const ModelParams& params, const ModelParamVars& vars,
                                   std::span<const int> tokens, std::span<const double> mask,
                                   ForwardOptions options = {});

// O_all for row i of the batch scaled by 1/batch_size, honouring the variant:
// local-only drops the global term, global-only drops the local term.
Var document_loss(const DocumentGraph& graph, const Batch& batch, std::size_t row, Variant variant,
                  std::size_t batch_size);

struct PredictionScores {
  std::vector<std::vector<double>> local;  // p^h per level
  std::vector<double> global;              // p^g, length M
  std::vector<double> blended;             // p^all, length M
  std::vector<double> v_global_concat;     // v^g
  std::vector<double> local_concat() const;
};

struct DocumentForward {
  PredictionScores scores;
  std::vector<LevelTrace> traces;
};

DocumentForward forward_document(const ModelParams& params, std::span<const int> tokens,
                                 std::span<const double> mask, double alpha, ForwardOptions options = {});

// Effective length: one past the last unmasked position.
std::size_t effective_length(std::span<const double> mask);

}  // namespace lahcn
