#include "lahcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <json.hpp>

#include "lahcn/error.hpp"

namespace lahcn {

std::vector<PrPoint> pr_curve(std::span<const ScoredPair> pairs) {
  const auto positives = static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const ScoredPair& p) { return p.truth; }));
  if (positives == 0) throw NoPositivesError("precision-recall curve needs at least one positive pair");

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pairs[a].score > pairs[b].score; });

  std::vector<PrPoint> points;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = pairs[order[i]].score;
    for (; i < order.size() && pairs[order[i]].score == t; ++i) {
      if (pairs[order[i]].truth) ++tp; else ++fp;
    }
    points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                      static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  points.insert(points.begin(), PrPoint{0.0, points.front().precision});
  return points;
}

double au_prc(std::span<const PrPoint> points) {
  std::vector<PrPoint> flat;
  for (const auto& p : points) {
    if (!flat.empty() && flat.back().recall == p.recall) {
      flat.back().precision = std::max(flat.back().precision, p.precision);
    } else {
      flat.push_back(p);
    }
  }
  double area = 0.0;
  for (std::size_t i = 1; i < flat.size(); ++i) {
    area += (flat[i].recall - flat[i - 1].recall) * (flat[i].precision + flat[i - 1].precision) / 2.0;
  }
  return area;
}

double au_prc_of(std::span<const ScoredPair> pairs) { return au_prc(pr_curve(pairs)); }

std::vector<PredictionScores> predict_batch(const ModelParams& params, const Batch& batch, double alpha) {
  std::vector<PredictionScores> out(batch.size);
  std::vector<std::exception_ptr> errors(batch.size);
  const auto n = static_cast<long long>(batch.size);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    try {
      out[row] = forward_document(params, batch.row_tokens(row), batch.row_mask(row), alpha).scores;
    } catch (...) {
      errors[row] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

std::optional<double> safe_au(std::span<const ScoredPair> pairs) {
  if (std::none_of(pairs.begin(), pairs.end(), [](const ScoredPair& p) { return p.truth; })) return std::nullopt;
  return au_prc_of(pairs);
}

MetricFlavor flavor(const std::vector<ScoredPair>& pairs, std::size_t depth) {
  MetricFlavor f;
  f.overall = safe_au(pairs);
  for (std::size_t h = 1; h <= depth; ++h) {
    std::vector<ScoredPair> level;
    std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(level), [h](const ScoredPair& p) { return p.level == h; });
    f.per_level.push_back(safe_au(level));
  }
  return f;
}

}  // namespace

EvaluationReport evaluate_scores(std::span<const PredictionScores> scores, const Batch& batch,
                                 const LabelHierarchy& hier, double alpha) {
  if (scores.size() != batch.size) throw ShapeMismatch("one score record per document expected");
  EvaluationReport r;
  r.alpha = alpha;
  r.documents = batch.size;
  std::vector<ScoredPair> blended, local, global;
  for (std::size_t i = 0; i < batch.size; ++i) {
    const Matrix z = batch.global_targets(i);
    const auto local_flat = scores[i].local_concat();
    if (local_flat.size() != hier.size() || scores[i].global.size() != hier.size()) {
      throw ShapeMismatch("score record width does not match the hierarchy");
    }
    for (std::size_t j = 0; j < hier.size(); ++j) {
      const bool truth = z(0, j) != 0.0;
      const std::size_t h = hier.level_of_index(j);
      blended.push_back({scores[i].blended[j], truth, h, j});
      local.push_back({local_flat[j], truth, h, j});
      global.push_back({scores[i].global[j], truth, h, j});
      r.positives += truth ? 1 : 0;
    }
  }
  r.pairs = blended.size();
  r.blended = flavor(blended, hier.depth());
  r.local = flavor(local, hier.depth());
  r.global = flavor(global, hier.depth());
  return r;
}

EvaluationReport evaluate(const ModelParams& params, std::span<const Document> docs, const Vocabulary& vocab,
                          const LabelHierarchy& hier, double alpha) {
  if (docs.empty()) throw EmptyDataset("evaluation over zero documents");
  const Batch batch = encode_batch(docs, vocab, hier, params.config.max_len);
  const auto scores = predict_batch(params, batch, alpha);
  return evaluate_scores(scores, batch, hier, alpha);
}

namespace {

nlohmann::json rounded(std::optional<double> v) {
  if (!v) return nullptr;
  return std::round(*v * 1e6) / 1e6;
}

nlohmann::json flavor_json(const MetricFlavor& f, const LabelHierarchy& hier) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t h = 0; h < f.per_level.size(); ++h) {
    levels.push_back({{"level", h + 1}, {"labels", hier.level_size(h + 1)}, {"au_prc", rounded(f.per_level[h])}});
  }
  return {{"overall", rounded(f.overall)}, {"per_level", levels}};
}

}  // namespace

std::string report_json(const EvaluationReport& r, const LabelHierarchy& hier) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  j["counts"] = {{"documents", r.documents}, {"pairs", r.pairs}, {"positives", r.positives}};
  j["blended"] = flavor_json(r.blended, hier);
  j["local"] = flavor_json(r.local, hier);
  j["global"] = flavor_json(r.global, hier);
  return j.dump(2);
}

}  // namespace lahcn
