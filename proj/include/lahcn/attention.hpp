#pragma once

// Label-based attention for one hierarchy level.
//
// Words and labels are projected into a shared component space; each label
// attends over the document's words through its softmax association with the
// learned components. The previous level's local document embedding both
// enriches the word vectors and gates each label's document embedding.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "lahcn/matrix.hpp"
#include "lahcn/model.hpp"
#include "lahcn/tape.hpp"

namespace lahcn {

struct LevelParamVars {
  Var components, label_emb;
  Var fw_W, fw_b, fl_W, fl_b, fm_W, fm_b;
  Var W, b;
};

// Registers every tensor of `params` under "level<h>.*".
LevelParamVars bind_level(Tape& tape, const LevelParams& params, std::size_t h);

struct AttentionOptions {
  Activation projection = Activation::kTanh;  // f_w and f_l
  double leaky_slope = 0.01;                  // f_m
  bool no_component = false;
};

// Tape handles of one level's intermediates. `Rtilde` is invalid in the
// no-component variant.
struct LevelVars {
  Var S, Rtilde, A, D, m, Dtilde, v_local, v_global;
};

// Per-level intermediates for inspection. In the no-component variant S holds
// the projected words (N × d_c) and Rtilde is empty.
struct LevelTrace {
  Matrix S;        // N × m_h
  Matrix Rtilde;   // q × m_h
  Matrix A;        // q × N
  Matrix D;        // q × d
  Matrix m;        // q × 1
  Matrix Dtilde;   // q × d
  Matrix v_local;  // d × 1
  Matrix v_global; // d × 1
};

// Row j becomes v_prevᵀ ∥ I[j]; zeros stand in for v_prev at level 1.
Var enrich_words(Var words, std::optional<Var> v_local_prev);
// act(Ih·fw_W + fw_b) · componentsᵀ  (N × m_h)
Var component_word_relevance(Var enriched, const LevelParamVars& lp, Activation projection);
// row_softmax(act(label_emb·fl_W + fl_b) · componentsᵀ)  (q × m_h)
Var label_component_association(const LevelParamVars& lp, Activation projection);
// row_softmax_masked(Rtilde · Sᵀ)  (q × N)
Var label_attention(Var Rtilde, Var S, std::span<const double> pad_mask);
// relu(A · I · W + b)  (q × d); I is the un-enriched word matrix.
Var label_document_embeddings(Var A, Var words, const LevelParamVars& lp);
// All ones at level 1, else sigmoid(label_emb · leaky(v_prevᵀ·fm_W + fm_b)ᵀ).
Var label_mask(std::optional<Var> v_local_prev, const LevelParamVars& lp, double leaky_slope);
// Row j of D scaled by m[j].
Var apply_label_mask(Var D, Var m);
// (column mean of Dtilde, column mean of D), both d × 1.
std::pair<Var, Var> pool_local_global(Var Dtilde, Var D);

LevelVars level_forward(Var words, std::span<const double> pad_mask, std::optional<Var> v_local_prev,
                        const LevelParamVars& lp, const AttentionOptions& options);

LevelTrace to_trace(const LevelVars& vars);

}  // namespace lahcn
