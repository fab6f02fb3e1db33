#pragma once

// Area under the micro-pooled ("average") precision-recall curve.
//
// Every (document, label) score is pooled into one set; a threshold t marks
// a pair positive iff score >= t. Thresholds are the distinct scores, so tied
// pairs always flip together. Before integrating, each distinct recall keeps
// its best precision; the area is the trapezoid rule over recall.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lahcn/classifier.hpp"
#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/model.hpp"

namespace lahcn {

struct ScoredPair {
  double score = 0.0;
  bool truth = false;
  std::size_t level = 0;  // grouping tags, informational
  std::size_t label = 0;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

// Points in increasing recall, starting with the (0, top precision) anchor.
// NoPositivesError if no pair is positive.
std::vector<PrPoint> pr_curve(std::span<const ScoredPair> pairs);
double au_prc(std::span<const PrPoint> points);
// pr_curve then au_prc.
double au_prc_of(std::span<const ScoredPair> pairs);

struct MetricFlavor {
  std::optional<double> overall;                  // absent when no positives
  std::vector<std::optional<double>> per_level;   // H entries
};

struct EvaluationReport {
  double alpha = 0.5;
  std::size_t documents = 0;
  std::size_t pairs = 0;
  std::size_t positives = 0;
  MetricFlavor blended;  // p^all
  MetricFlavor local;    // concatenated p^h
  MetricFlavor global;   // p^g
};

// Scores every document of the batch; documents are independent, so this
// fans out with OpenMP and writes results by index.
std::vector<PredictionScores> predict_batch(const ModelParams& params, const Batch& batch, double alpha);

EvaluationReport evaluate_scores(std::span<const PredictionScores> scores, const Batch& batch,
                                 const LabelHierarchy& hier, double alpha);

// EmptyDataset for zero documents.
EvaluationReport evaluate(const ModelParams& params, std::span<const Document> docs, const Vocabulary& vocab,
                          const LabelHierarchy& hier, double alpha);

// Report as a JSON object, scores rounded to 6 decimals.
std::string report_json(const EvaluationReport& report, const LabelHierarchy& hier);

}  // namespace lahcn
