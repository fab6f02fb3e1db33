#include "lahcn/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "lahcn/error.hpp"
#include "lahcn/metrics.hpp"
#include "lahcn/rng.hpp"

namespace lahcn {

void optimizer_step(ModelParams& params, const GradientMap& grads, OptimizerState& state, const TrainConfig& cfg) {
  ++state.step;
  const double lr = cfg.learning_rate;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));

  for (auto& [name, tensor] : params.named_tensors()) {
    const bool is_embedding = name == kEmbeddingName;
    if (is_embedding && cfg.freeze_embeddings) continue;
    const auto it = grads.find(name);
    if (it == grads.end()) throw ShapeMismatch("no gradient for " + name);
    require_same_shape(*tensor, it->second, name.c_str());
    auto g = it->second.data();
    auto p = tensor->data();
    // Row 0 of the embedding table is PAD.
    const std::size_t start = is_embedding ? tensor->cols() : 0;

    if (cfg.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = start; i < p.size(); ++i) p[i] -= lr * g[i];
      continue;
    }
    auto [m_it, m_new] = state.first_moment.try_emplace(name, tensor->rows(), tensor->cols());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, tensor->rows(), tensor->cols());
    auto m = m_it->second.data();
    auto v = v_it->second.data();
    for (std::size_t i = start; i < p.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

double clip_gradients(GradientMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, g] : grads)
      for (double& v : g.data()) v *= s;
  }
  return norm;
}

BatchGradient batch_gradient(const ModelParams& params, const Batch& batch, std::span<const std::size_t> rows,
                             Variant variant, ForwardOptions options) {
  BatchGradient out;
  for (const auto& [name, tensor] : params.named_tensors()) out.grads.emplace(name, Matrix(tensor->rows(), tensor->cols()));
  for (std::size_t row : rows) {
    Tape tape;
    const ModelParamVars vars = bind_params(tape, params);
    const DocumentGraph g =
        build_document_graph(tape, params, vars, batch.row_tokens(row), batch.row_mask(row), options);
    const Var loss = document_loss(g, batch, row, variant, rows.size());
    out.loss += loss.value()(0, 0);
    tape.backward(loss, out.grads);
  }
  return out;
}

double batch_loss(const ModelParams& params, const Batch& batch, std::span<const std::size_t> rows, Variant variant,
                  ForwardOptions options) {
  double total = 0.0;
  for (std::size_t row : rows) {
    Tape tape;
    const ModelParamVars vars = bind_params(tape, params);
    const DocumentGraph g =
        build_document_graph(tape, params, vars, batch.row_tokens(row), batch.row_mask(row), options);
    total += document_loss(g, batch, row, variant, rows.size()).value()(0, 0);
  }
  return total;
}

namespace {

bool all_finite(const GradientMap& grads) {
  for (const auto& [_, g] : grads)
    if (!g.all_finite()) return false;
  return true;
}

}  // namespace

EmbeddingTable initial_embeddings(const TrainConfig& cfg, const Vocabulary& vocab,
                                  const std::filesystem::path& path) {
  Rng rng(cfg.seed ^ 0xE3B0C44298FC1C14ULL);
  if (path.empty()) return random_embeddings(vocab, cfg.dim, rng);
  return load_embeddings(path, vocab, embedding_file_dim(path), rng);
}

TrainResult train_from(ModelParams initial, std::span<const Document> train_docs,
                       std::span<const Document> valid_docs, const LabelHierarchy& hier, const Vocabulary& vocab,
                       const TrainHooks& hooks) {
  const TrainConfig cfg = initial.config;
  cfg.validate();
  if (train_docs.empty()) throw EmptyDataset("training split is empty");
  const std::span<const Document> valid = valid_docs.empty() ? train_docs : valid_docs;

  const Batch batch = encode_batch(train_docs, vocab, hier, cfg.max_len);
  const Batch valid_batch = encode_batch(valid, vocab, hier, cfg.max_len);

  // The shuffle stream is separate from the initialisation stream.
  Rng rng(cfg.seed ^ 0x5DEECE66DULL);
  OptimizerState state;
  ModelParams params = std::move(initial);

  TrainResult result;
  result.params = params;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::vector<std::size_t> order(batch.size);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      BatchGradient bg;
      try {
        bg = batch_gradient(params, batch, rows, cfg.variant);
      } catch (const NonFiniteError& e) {
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) + ": " + e.what());
      }
      if (!std::isfinite(bg.loss) || !all_finite(bg.grads)) {
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) +
                            ": loss or gradient is not finite");
      }
      loss_sum += bg.loss * static_cast<double>(rows.size());
      clip_gradients(bg.grads, cfg.clip_norm);
      optimizer_step(params, bg.grads, state, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batch.size);
    const auto scores = predict_batch(params, valid_batch, cfg.alpha);
    rec.valid_metric = evaluate_scores(scores, valid_batch, hier, cfg.alpha).blended.overall;
    const double metric = rec.valid_metric.value_or(-std::numeric_limits<double>::infinity());
    if (epoch == 1 || metric > best) {
      best = metric;
      stale = 0;
      rec.improved = true;
      result.params = params;
      result.best_epoch = epoch;
      result.best_metric = rec.valid_metric;
    } else {
      ++stale;
    }
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (stale >= cfg.patience) break;
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, std::span<const Document> train_docs, std::span<const Document> valid_docs,
                  const LabelHierarchy& hier, const Vocabulary& vocab, const EmbeddingTable& embeddings,
                  const TrainHooks& hooks) {
  return train_from(init_params(cfg, hier, vocab, embeddings), train_docs, valid_docs, hier, vocab, hooks);
}

std::string history_jsonl(std::span<const EpochRecord> history) {
  std::string out;
  for (const auto& r : history) {
    nlohmann::json j{{"epoch", r.epoch}, {"loss", r.loss}, {"improved", r.improved}};
    j["valid_au_prc"] = r.valid_metric ? nlohmann::json(*r.valid_metric) : nlohmann::json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace lahcn
