#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wsm {

struct ScoredCandidate {
  double score = 0.0;
  int relevance = 0;  // binary
};

struct EvalRecord {
  std::string query_id;
  std::vector<ScoredCandidate> candidates;
};

struct Metrics {
  double p_at_1 = 0.0;
  double map = 0.0;
  double mrr = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_skipped = 0;  // records with no relevant candidate
};

// Indices sorted by descending score; ties keep original order.
std::vector<std::size_t> rank(const EvalRecord& record);

double precision_at_1(const std::vector<EvalRecord>& records);

// Records with no relevant candidate are skipped (counted in n_skipped).
Metrics compute_metrics(const std::vector<EvalRecord>& records);

// Metrics JSON with keys in a fixed order:
// {"p_at_1":..,"map":..,"mrr":..,"n_queries":..,"n_skipped":..}
std::string metrics_to_json(const Metrics& m);

// Eval-records JSONL: {"query_id": str, "candidates":[{"text":..,"label":0|1}]}
struct RawEvalRecord {
  std::string query_id;
  std::vector<std::pair<std::string, int>> candidates;  // (text, label)
};
std::vector<RawEvalRecord> load_eval_records(const std::string& path);
void save_eval_records(const std::vector<RawEvalRecord>& records,
                       const std::string& path);

// Two-feature linear pairwise ranker combining matcher score and TF-IDF
// cosine. Each candidate carries the feature pair (model_score, tfidf).
struct FusionExample {
  double model_score = 0.0;
  double tfidf = 0.0;
  int relevance = 0;
};
struct FusionRecord {
  std::vector<FusionExample> candidates;
};
struct FusionWeights {
  double w_model = 1.0;
  double w_tfidf = 0.0;
};

// Pairwise hinge: for each (relevant, irrelevant) pair demand
// w.f+ >= w.f- + 1. Seeded SGD over validation pairs.
FusionWeights fit_fusion(const std::vector<FusionRecord>& validation,
                         std::uint64_t seed = 0, int epochs = 50,
                         double learning_rate = 0.1);

double fused_score(const FusionWeights& w, double model_score, double tfidf);

}  // namespace wsm
