#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lahcn/classifier.hpp"
#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/model.hpp"
#include "lahcn/tape.hpp"

namespace lahcn {

struct OptimizerState {
  std::size_t step = 0;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One update of every tensor from its gradient. Plain descent or adaptive
// moments per cfg.optimizer. The PAD embedding row is never updated and a
// frozen embedding table is skipped. ShapeMismatch if a gradient is missing
// or mis-shaped.
void optimizer_step(ModelParams& params, const GradientMap& grads, OptimizerState& state, const TrainConfig& cfg);

// Rescales all gradients so their joint L2 norm is at most max_norm; returns
// the norm before scaling.
double clip_gradients(GradientMap& grads, double max_norm);

// O_all of the selected rows (mean per document) and its gradient for every
// tensor. Rows are processed in order, so the result is reproducible.
struct BatchGradient {
  double loss = 0.0;
  GradientMap grads;
};
BatchGradient batch_gradient(const ModelParams& params, const Batch& batch, std::span<const std::size_t> rows,
                             Variant variant, ForwardOptions options = {});
// Forward-only O_all of the selected rows, same scaling as batch_gradient.
double batch_loss(const ModelParams& params, const Batch& batch, std::span<const std::size_t> rows, Variant variant,
                  ForwardOptions options = {});

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;                    // mean O_all per training document
  std::optional<double> valid_metric;   // blended AU(PRC) on the validation split
  bool improved = false;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::optional<double> best_metric;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

// Word vectors for a run: the file's vectors when `path` is non-empty, random
// ones of width cfg.dim otherwise. Draws come from a stream derived from
// cfg.seed, separate from the one init_params uses.
EmbeddingTable initial_embeddings(const TrainConfig& cfg, const Vocabulary& vocab,
                                  const std::filesystem::path& path = {});

// Trains from `initial`. An empty validation split falls back to the
// training split. EmptyDataset for no training documents; NonFiniteLoss if
// the loss or a gradient stops being finite.
TrainResult train_from(ModelParams initial, std::span<const Document> train_docs,
                       std::span<const Document> valid_docs, const LabelHierarchy& hier, const Vocabulary& vocab,
                       const TrainHooks& hooks = {});

TrainResult train(const TrainConfig& cfg, std::span<const Document> train_docs, std::span<const Document> valid_docs,
                  const LabelHierarchy& hier, const Vocabulary& vocab, const EmbeddingTable& embeddings,
                  const TrainHooks& hooks = {});

// One JSON object per epoch, newline-terminated.
std::string history_jsonl(std::span<const EpochRecord> history);

}  // namespace lahcn
