#include "lahcn/attention.hpp"

#include <array>
#include <string>

#include "lahcn/error.hpp"

namespace lahcn {

LevelParamVars bind_level(Tape& tape, const LevelParams& p, std::size_t h) {
  const std::string pre = "level" + std::to_string(h) + ".";
  LevelParamVars v;
  v.components = tape.parameter(pre + "components", p.components);
  v.label_emb = tape.parameter(pre + "label_emb", p.label_emb);
  v.fw_W = tape.parameter(pre + "fw_W", p.fw_W);
  v.fw_b = tape.parameter(pre + "fw_b", p.fw_b);
  v.fl_W = tape.parameter(pre + "fl_W", p.fl_W);
  v.fl_b = tape.parameter(pre + "fl_b", p.fl_b);
  v.fm_W = tape.parameter(pre + "fm_W", p.fm_W);
  v.fm_b = tape.parameter(pre + "fm_b", p.fm_b);
  v.W = tape.parameter(pre + "W", p.W);
  v.b = tape.parameter(pre + "b", p.b);
  return v;
}

Var enrich_words(Var words, std::optional<Var> v_local_prev) {
  Tape& t = *words.tape();
  const std::size_t n = words.rows();
  const std::size_t d = words.cols();
  Var prev_row;
  if (v_local_prev) {
    if (v_local_prev->rows() != d || v_local_prev->cols() != 1) {
      throw ShapeMismatch("enrich_words: previous embedding " + v_local_prev->value().shape_string() +
                          ", expected " + std::to_string(d) + "x1");
    }
    prev_row = transpose(*v_local_prev);
  } else {
    prev_row = t.constant(Matrix(1, d));
  }
  const std::array<Var, 2> parts{tile_rows(prev_row, n), words};
  return concat_cols(parts);
}

Var component_word_relevance(Var enriched, const LevelParamVars& lp, Activation projection) {
  Var projected = activate(affine(enriched, lp.fw_W, lp.fw_b), {projection});
  return matmul(projected, transpose(lp.components));
}

Var label_component_association(const LevelParamVars& lp, Activation projection) {
  Var projected = activate(affine(lp.label_emb, lp.fl_W, lp.fl_b), {projection});
  return row_softmax(matmul(projected, transpose(lp.components)));
}

Var label_attention(Var Rtilde, Var S, std::span<const double> pad_mask) {
  return row_softmax_masked(matmul(Rtilde, transpose(S)), pad_mask);
}

Var label_document_embeddings(Var A, Var words, const LevelParamVars& lp) {
  return activate(affine(matmul(A, words), lp.W, lp.b), {Activation::kRelu});
}

Var label_mask(std::optional<Var> v_local_prev, const LevelParamVars& lp, double leaky_slope) {
  Tape& t = *lp.label_emb.tape();
  const std::size_t q = lp.label_emb.rows();
  if (!v_local_prev) return t.constant(Matrix(q, 1, 1.0));
  if (v_local_prev->cols() != 1 || v_local_prev->rows() != lp.fm_W.rows()) {
    throw ShapeMismatch("label_mask: previous embedding " + v_local_prev->value().shape_string());
  }
  Var gate = activate(affine(transpose(*v_local_prev), lp.fm_W, lp.fm_b), {Activation::kLeakyRelu, leaky_slope});
  return activate(matmul(lp.label_emb, transpose(gate)), {Activation::kSigmoid});
}

Var apply_label_mask(Var D, Var m) { return scale_rows(D, m); }

std::pair<Var, Var> pool_local_global(Var Dtilde, Var D) {
  if (Dtilde.rows() == 0 || D.rows() == 0) throw EmptyAxis("pooling over zero labels");
  return {row_average(transpose(Dtilde)), row_average(transpose(D))};
}

LevelVars level_forward(Var words, std::span<const double> pad_mask, std::optional<Var> v_local_prev,
                        const LevelParamVars& lp, const AttentionOptions& options) {
  LevelVars out;
  Var enriched = enrich_words(words, v_local_prev);
  if (options.no_component) {
    Var word_proj = activate(affine(enriched, lp.fw_W, lp.fw_b), {options.projection});
    Var label_proj = activate(affine(lp.label_emb, lp.fl_W, lp.fl_b), {options.projection});
    out.S = word_proj;
    out.A = row_softmax_masked(matmul(label_proj, transpose(word_proj)), pad_mask);
  } else {
    out.S = component_word_relevance(enriched, lp, options.projection);
    out.Rtilde = label_component_association(lp, options.projection);
    out.A = label_attention(out.Rtilde, out.S, pad_mask);
  }
  out.D = label_document_embeddings(out.A, words, lp);
  out.m = label_mask(v_local_prev, lp, options.leaky_slope);
  out.Dtilde = apply_label_mask(out.D, out.m);
  std::tie(out.v_local, out.v_global) = pool_local_global(out.Dtilde, out.D);
  return out;
}

LevelTrace to_trace(const LevelVars& v) {
  LevelTrace t;
  t.S = v.S.value();
  if (v.Rtilde.valid()) t.Rtilde = v.Rtilde.value();
  t.A = v.A.value();
  t.D = v.D.value();
  t.m = v.m.value();
  t.Dtilde = v.Dtilde.value();
  t.v_local = v.v_local.value();
  t.v_global = v.v_global.value();
  return t;
}

}  // namespace lahcn
