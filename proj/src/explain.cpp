#include "lahcn/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "lahcn/classifier.hpp"

namespace lahcn {

ExplanationRecord explain_document(const ModelParams& params, const Document& doc, const Vocabulary& vocab,
                                   const LabelHierarchy& hier, const ExplainOptions& options) {
  const std::vector<Document> one{doc};
  const Batch batch = encode_batch(one, vocab, hier, params.config.max_len);
  const DocumentForward fwd = forward_document(params, batch.row_tokens(0), batch.row_mask(0), options.alpha);

  ExplanationRecord rec;
  rec.id = doc.id;
  const std::size_t n = std::min(doc.tokens.size(), batch.max_len);
  rec.tokens.assign(doc.tokens.begin(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(n));

  for (std::size_t h = 1; h <= hier.depth(); ++h) {
    const Matrix& A = fwd.traces[h - 1].A;
    const std::size_t offset = hier.level_offset(h);
    for (std::size_t j = 0; j < hier.level_size(h); ++j) {
      const double score = fwd.scores.blended[offset + j];
      if (!(score > options.min_score)) continue;
      LabelExplanation le;
      le.level = h;
      le.label = hier.name(offset + j);
      le.score = score;
      for (std::size_t p = 0; p < n; ++p) {
        le.weights.push_back(A(j, p));
        le.top.push_back({rec.tokens[p], p, A(j, p)});
      }
      std::stable_sort(le.top.begin(), le.top.end(),
                       [](const TokenWeight& a, const TokenWeight& b) { return a.weight > b.weight; });
      if (le.top.size() > options.top_k) le.top.resize(options.top_k);
      rec.labels.push_back(std::move(le));
    }
  }
  return rec;
}

std::string explanation_json(const ExplanationRecord& r) {
  using nlohmann::json;
  auto r6 = [](double v) { return std::round(v * 1e6) / 1e6; };
  json labels = json::array();
  for (const auto& le : r.labels) {
    json top = json::array();
    for (const auto& t : le.top) top.push_back({{"token", t.token}, {"position", t.position}, {"weight", r6(t.weight)}});
    labels.push_back({{"level", le.level}, {"label", le.label}, {"score", r6(le.score)}, {"tokens", top}});
  }
  return json{{"id", r.id}, {"labels", labels}}.dump();
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string heatmap_html(const ExplanationRecord& r) {
  std::string html =
      "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Attention: " + escape(r.id) +
      "</title>\n<style>body{font-family:sans-serif;margin:1.5em}table{border-collapse:collapse}"
      "td{padding:4px 6px;vertical-align:top}td.label{white-space:nowrap;font-weight:bold}"
      "span.t{display:inline-block;margin:1px;padding:1px 3px;border-radius:3px}</style></head>\n<body>\n"
      "<h1>" + escape(r.id) + "</h1>\n";
  if (r.labels.empty()) {
    html += "<p>No label scored above the threshold.</p>\n";
  } else {
    html += "<table>\n<tr><th>level</th><th>label</th><th>score</th><th>tokens</th></tr>\n";
    for (const auto& le : r.labels) {
      const double peak = le.weights.empty() ? 0.0 : *std::max_element(le.weights.begin(), le.weights.end());
      char head[256];
      std::snprintf(head, sizeof head, "<tr><td>%zu</td><td class=\"label\">%s</td><td>%.4f</td><td>", le.level,
                    escape(le.label).c_str(), le.score);
      html += head;
      for (std::size_t p = 0; p < le.weights.size(); ++p) {
        const double rel = peak > 0.0 ? le.weights[p] / peak : 0.0;
        char span[160];
        std::snprintf(span, sizeof span, "<span class=\"t\" style=\"background:rgba(220,40,40,%.3f)\" title=\"%.6f\">",
                      rel, le.weights[p]);
        html += span;
        html += escape(r.tokens[p]) + "</span>";
      }
      html += "</td></tr>\n";
    }
    html += "</table>\n";
  }
  html += "</body></html>\n";
  return html;
}

}  // namespace lahcn
