#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/model.hpp"

namespace lahcn {

struct TokenWeight {
  std::string token;
  std::size_t position = 0;
  double weight = 0.0;
};

struct LabelExplanation {
  std::size_t level = 0;
  std::string label;
  double score = 0.0;                 // blended p^all
  std::vector<TokenWeight> top;       // top-k, heaviest first
  std::vector<double> weights;        // attention row over the real tokens
};

struct ExplanationRecord {
  std::string id;
  std::vector<std::string> tokens;    // the tokens the model saw (after truncation)
  std::vector<LabelExplanation> labels;
};

struct ExplainOptions {
  std::size_t top_k = 10;
  double min_score = 0.1;  // labels with blended score <= min_score are skipped
  double alpha = 0.5;
};

ExplanationRecord explain_document(const ModelParams& params, const Document& doc, const Vocabulary& vocab,
                                   const LabelHierarchy& hier, const ExplainOptions& options);

// Single-line JSON object.
std::string explanation_json(const ExplanationRecord& record);
// Self-contained HTML page: one row per explained label, token background
// proportional to its attention weight relative to the row maximum.
std::string heatmap_html(const ExplanationRecord& record);

}  // namespace lahcn
