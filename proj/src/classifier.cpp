#include "lahcn/classifier.hpp"

#include <optional>

#include "lahcn/error.hpp"

namespace lahcn {

ModelParamVars bind_params(Tape& tape, const ModelParams& params) {
  ModelParamVars v;
  for (std::size_t h = 0; h < params.levels.size(); ++h) v.levels.push_back(bind_level(tape, params.levels[h], h + 1));
  v.global.W1 = tape.parameter("global.W1", params.global.W1);
  v.global.b1 = tape.parameter("global.b1", params.global.b1);
  v.global.W2 = tape.parameter("global.W2", params.global.W2);
  v.global.b2 = tape.parameter("global.b2", params.global.b2);
  return v;
}

Var local_predict(Var Dtilde, Var label_emb) {
  if (Dtilde.rows() != label_emb.rows()) {
    throw ShapeMismatch("local_predict: " + Dtilde.value().shape_string() + " vs label embeddings " +
                        label_emb.value().shape_string());
  }
  return activate(rowwise_dot(Dtilde, label_emb), {Activation::kSigmoid});
}

Var local_loss(std::span<const Var> level_probs, std::span<const Matrix> level_targets, std::size_t batch_size) {
  if (level_probs.empty() || level_probs.size() != level_targets.size()) {
    throw ShapeMismatch("local_loss: " + std::to_string(level_probs.size()) + " levels of scores, " +
                        std::to_string(level_targets.size()) + " of targets");
  }
  Var total = bce_sum(level_probs[0], level_targets[0]);
  for (std::size_t h = 1; h < level_probs.size(); ++h) total = add(total, bce_sum(level_probs[h], level_targets[h]));
  return scale(total, 1.0 / static_cast<double>(batch_size));
}

Var global_embed(std::span<const Var> v_globals) {
  if (v_globals.empty()) throw ShapeMismatch("global_embed of zero levels");
  const std::size_t d = v_globals.front().rows();
  std::vector<Var> rows;
  for (const Var& v : v_globals) {
    if (v.rows() != d || v.cols() != 1) {
      throw ShapeMismatch("global_embed: level embedding " + v.value().shape_string() + ", expected " +
                          std::to_string(d) + "x1");
    }
    rows.push_back(transpose(v));
  }
  return transpose(concat_cols(rows));
}

Var global_predict(Var v_global_concat, const GlobalHeadVars& head) {
  if (v_global_concat.cols() != 1 || v_global_concat.rows() != head.W1.rows()) {
    throw ShapeMismatch("global_predict: embedding " + v_global_concat.value().shape_string() + ", head expects " +
                        std::to_string(head.W1.rows()) + "x1");
  }
  Var hidden = activate(affine(transpose(v_global_concat), head.W1, head.b1), {Activation::kRelu});
  return activate(affine(hidden, head.W2, head.b2), {Activation::kSigmoid});
}

Var global_loss(Var global_probs, const Matrix& global_targets, std::size_t batch_size) {
  return scale(bce_sum(global_probs, global_targets), 1.0 / static_cast<double>(batch_size));
}

Var total_loss(Var local, Var global) { return add(local, global); }

std::vector<double> combine_predictions(std::span<const std::vector<double>> local_levels,
                                        std::span<const double> global, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  std::vector<double> out;
  for (const auto& l : local_levels) out.insert(out.end(), l.begin(), l.end());
  if (out.size() != global.size()) {
    throw ShapeMismatch("combine_predictions: " + std::to_string(out.size()) + " local vs " +
                        std::to_string(global.size()) + " global scores");
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * out[i] + (1.0 - alpha) * global[i];
  return out;
}

std::size_t effective_length(std::span<const double> mask) {
  std::size_t n = mask.size();
  while (n > 0 && mask[n - 1] == 0.0) --n;
  return n;
}

DocumentGraph build_document_graph(Tape& tape, const ModelParams& params, const ModelParamVars& vars,
                                   std::span<const int> tokens, std::span<const double> mask,
                                   ForwardOptions options) {
  if (tokens.size() != mask.size()) throw ShapeMismatch("token row and mask differ in length");
  DocumentGraph g;
  g.max_len = tokens.size();
  g.length = options.trim_padding ? effective_length(mask) : tokens.size();
  if (g.length == 0) throw AllMaskedError("document has no unmasked tokens");

  const auto row_tokens = tokens.first(g.length);
  const auto row_mask = mask.first(g.length);
  Var words = tape.gather_rows(kEmbeddingName, params.embedding, row_tokens);

  const AttentionOptions attn{params.config.projection, params.config.leaky_slope,
                              params.config.variant == Variant::kNoComponent};
  std::optional<Var> prev;
  std::vector<Var> v_globals;
  for (std::size_t h = 0; h < vars.levels.size(); ++h) {
    LevelVars lv = level_forward(words, row_mask, prev, vars.levels[h], attn);
    g.local_probs.push_back(local_predict(lv.Dtilde, vars.levels[h].label_emb));
    v_globals.push_back(lv.v_global);
    prev = lv.v_local;
    g.levels.push_back(lv);
  }
  g.v_global_concat = global_embed(v_globals);
  g.global_probs = global_predict(g.v_global_concat, vars.global);
  return g;
}

Var document_loss(const DocumentGraph& graph, const Batch& batch, std::size_t row, Variant variant,
                  std::size_t batch_size) {
  std::vector<Matrix> targets;
  for (std::size_t h = 1; h <= graph.local_probs.size(); ++h) {
    const Matrix t = batch.level_targets(row, h);
    targets.push_back(Matrix::column(t.data()));
  }
  switch (variant) {
    case Variant::kLocalOnly: return local_loss(graph.local_probs, targets, batch_size);
    case Variant::kGlobalOnly: return global_loss(graph.global_probs, batch.global_targets(row), batch_size);
    case Variant::kFull:
    case Variant::kNoComponent: break;
  }
  return total_loss(local_loss(graph.local_probs, targets, batch_size),
                    global_loss(graph.global_probs, batch.global_targets(row), batch_size));
}

std::vector<double> PredictionScores::local_concat() const {
  std::vector<double> out;
  for (const auto& l : local) out.insert(out.end(), l.begin(), l.end());
  return out;
}

namespace {

std::vector<double> flat(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

// Widens trimmed traces back to the full row length.
void widen(LevelTrace& t, std::size_t full) {
  if (t.A.cols() == full) return;
  Matrix A(t.A.rows(), full);
  for (std::size_t r = 0; r < t.A.rows(); ++r)
    for (std::size_t c = 0; c < t.A.cols(); ++c) A(r, c) = t.A(r, c);
  Matrix S(full, t.S.cols());
  for (std::size_t r = 0; r < t.S.rows(); ++r)
    for (std::size_t c = 0; c < t.S.cols(); ++c) S(r, c) = t.S(r, c);
  t.A = std::move(A);
  t.S = std::move(S);
}

}  // namespace

DocumentForward forward_document(const ModelParams& params, std::span<const int> tokens,
                                 std::span<const double> mask, double alpha, ForwardOptions options) {
  Tape tape;
  const ModelParamVars vars = bind_params(tape, params);
  const DocumentGraph g = build_document_graph(tape, params, vars, tokens, mask, options);
  DocumentForward out;
  for (const auto& lv : g.levels) {
    out.traces.push_back(to_trace(lv));
    widen(out.traces.back(), g.max_len);
  }
  for (const Var& p : g.local_probs) out.scores.local.push_back(flat(p.value()));
  out.scores.global = flat(g.global_probs.value());
  out.scores.v_global_concat = flat(g.v_global_concat.value());
  out.scores.blended = combine_predictions(out.scores.local, out.scores.global, alpha);
  return out;
}

}  // namespace lahcn
