#pragma once
// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lahcn/classifier.hpp"
#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/metrics.hpp"
#include "lahcn/model.hpp"
#include "lahcn/rng.hpp"
#include "lahcn/training.hpp"

namespace lahcn::testing {

// Micro setting used for gradient checks: N=6, d=4, H=2, q=(2,3), two
// components per level, batch of two documents, seed 7.
struct MicroSetup {
  LabelHierarchy hier;
  std::vector<Document> docs;
  Vocabulary vocab;
  ModelParams params;
  Batch batch;
};

inline MicroSetup make_micro(std::uint64_t seed = 7, Variant variant = Variant::kFull) {
  MicroSetup s{build_hierarchy({{"root", "A"}, {"root", "B"}, {"A", "A1"}, {"A", "A2"}, {"B", "B1"}}),
               {},
               {},
               {},
               {}};
  s.docs = {
      {"x", {"red", "blue", "red", "green"}, {"A", "A1"}},
      {"y", {"blue", "green", "cyan", "cyan", "red", "blue", "tail"}, {"B", "B1"}},
  };
  s.vocab = build_vocabulary(s.docs);
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.dim = 4;
  cfg.components = {2};
  cfg.max_len = 6;
  cfg.batch_size = 2;
  cfg.variant = variant;
  Rng rng(seed);
  const EmbeddingTable emb = random_embeddings(s.vocab, cfg.dim, rng);
  s.params = init_params(cfg, s.hier, s.vocab, emb);
  s.batch = encode_batch(s.docs, s.vocab, s.hier, cfg.max_len);
  return s;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[index]"
  std::size_t checked = 0;
};

// Central differences of `loss` against `analytic` for every element of
// every tensor in `params`. Relative error uses max(|a|, |n|, 1e-8).
inline GradCheckResult finite_difference_check(ModelParams& params, const GradientMap& analytic,
                                               const std::function<long double()>& loss, double step = 1e-5) {
  GradCheckResult r;
  for (auto& [name, tensor] : params.named_tensors()) {
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < tensor->size(); ++i) {
      double& x = tensor->data()[i];
      const double saved = x;
      x = saved + step;
      const long double up = loss();
      x = saved - step;
      const long double down = loss();
      x = saved;
      // the perturbation actually applied, after rounding
      const double numeric = static_cast<double>((up - down) / ((saved + step) - (saved - step)));
      const double a = it == analytic.end() ? 0.0 : it->second.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        char buf[64];
        std::snprintf(buf, sizeof buf, "] analytic=%.4g numeric=%.4g", a, numeric);
        r.worst = name + "[" + std::to_string(i) + buf;
      }
      ++r.checked;
    }
  }
  return r;
}

// Brute-force AU(PRC): for every distinct score t, count TP/FP over all pairs
// with score >= t, anchor at recall 0 with the top threshold's precision,
// keep the best precision per recall, and integrate with trapezoids.
inline double brute_force_au_prc(const std::vector<ScoredPair>& pairs) {
  std::set<double> distinct;
  double positives = 0;
  for (const auto& p : pairs) {
    distinct.insert(p.score);
    positives += p.truth ? 1 : 0;
  }
  std::vector<std::pair<double, double>> pts;  // (recall, precision)
  for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) {
    double tp = 0, fp = 0;
    for (const auto& p : pairs) {
      if (p.score >= *it) (p.truth ? tp : fp) += 1;
    }
    pts.emplace_back(tp / positives, tp / (tp + fp));
  }
  pts.insert(pts.begin(), {0.0, pts.front().second});
  std::map<double, double> best;
  for (const auto& [r, p] : pts) {
    auto [slot, fresh] = best.emplace(r, p);
    if (!fresh) slot->second = std::max(slot->second, p);
  }
  double area = 0;
  for (auto it = best.begin(); std::next(it) != best.end(); ++it) {
    const auto nx = std::next(it);
    area += (nx->first - it->first) * (nx->second + it->second) / 2;
  }
  return area;
}

// Random tree with up to `max_labels` labels and depth at most `max_depth`.
inline std::vector<Edge> random_tree(Rng& rng, std::size_t max_labels, std::size_t max_depth) {
  const std::size_t n = 1 + rng.below(max_labels);
  std::vector<std::pair<std::string, std::size_t>> placed{{"root", 0}};
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p;
    do {
      p = rng.below(placed.size());
    } while (placed[p].second >= max_depth);
    const std::string name = "L" + std::to_string(i);
    edges.emplace_back(placed[p].first, name);
    placed.emplace_back(name, placed[p].second + 1);
  }
  rng.shuffle(edges);
  return edges;
}

}  // namespace lahcn::testing
