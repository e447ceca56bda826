#include "wsm/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wsm/rng.hpp"

namespace wsm {

std::vector<std::size_t> rank(const EvalRecord& record) {
  std::vector<std::size_t> order(record.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return record.candidates[a].score >
                            record.candidates[b].score;
                   });
  return order;
}

double precision_at_1(const std::vector<EvalRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("precision_at_1: no records");
  }
  std::size_t hits = 0;
  for (const EvalRecord& r : records) {
    if (r.candidates.empty()) continue;
    const auto order = rank(r);
    if (r.candidates[order[0]].relevance == 1) ++hits;
  }
  return static_cast<double>(hits) / records.size();
}

Metrics compute_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("compute_metrics: no records");
  }
  Metrics m;
  double sum_p1 = 0.0, sum_ap = 0.0, sum_rr = 0.0;
  for (const EvalRecord& r : records) {
    const bool has_relevant =
        std::any_of(r.candidates.begin(), r.candidates.end(),
                    [](const ScoredCandidate& c) { return c.relevance == 1; });
    if (!has_relevant) {
      ++m.n_skipped;
      continue;
    }
    const auto order = rank(r);
    std::size_t rel_seen = 0, rel_total = 0;
    double ap = 0.0;
    double rr = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (r.candidates[order[pos]].relevance == 1) {
        ++rel_seen;
        ap += static_cast<double>(rel_seen) / static_cast<double>(pos + 1);
        if (rr == 0.0) rr = 1.0 / static_cast<double>(pos + 1);
      }
    }
    rel_total = rel_seen;
    sum_p1 += r.candidates[order[0]].relevance == 1 ? 1.0 : 0.0;
    sum_ap += ap / static_cast<double>(rel_total);
    sum_rr += rr;
    ++m.n_queries;
  }
  // All-skipped input yields a zeroed report rather than an error; n_skipped
  // tells the caller what happened.
  if (m.n_queries == 0) return m;
  const double n = static_cast<double>(m.n_queries);
  m.p_at_1 = sum_p1 / n;
  m.map = sum_ap / n;
  m.mrr = sum_rr / n;
  return m;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["p_at_1"] = m.p_at_1;
  j["map"] = m.map;
  j["mrr"] = m.mrr;
  j["n_queries"] = m.n_queries;
  j["n_skipped"] = m.n_skipped;
  return j.dump();
}

std::vector<RawEvalRecord> load_eval_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::vector<RawEvalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawEvalRecord r;
      r.query_id = j.at("query_id").get<std::string>();
      for (const auto& jc : j.at("candidates")) {
        r.candidates.emplace_back(jc.at("text").get<std::string>(),
                                  jc.at("label").get<int>());
      }
      out.push_back(std::move(r));
    } catch (const std::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed eval record: " + ex.what());
    }
  }
  return out;
}

void save_eval_records(const std::vector<RawEvalRecord>& records,
                       const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const RawEvalRecord& r : records) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const auto& [text, label] : r.candidates) {
      nlohmann::ordered_json jc;
      jc["text"] = text;
      jc["label"] = label;
      cands.push_back(std::move(jc));
    }
    j["candidates"] = std::move(cands);
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

FusionWeights fit_fusion(const std::vector<FusionRecord>& validation,
                         std::uint64_t seed, int epochs,
                         double learning_rate) {
  // Collect all (relevant, irrelevant) feature pairs.
  struct Pair {
    double d_model, d_tfidf;  // f+ - f-
  };
  std::vector<Pair> pairs;
  for (const FusionRecord& r : validation) {
    for (const FusionExample& pos : r.candidates) {
      if (pos.relevance != 1) continue;
      for (const FusionExample& neg : r.candidates) {
        if (neg.relevance == 1) continue;
        pairs.push_back({pos.model_score - neg.model_score,
                         pos.tfidf - neg.tfidf});
      }
    }
  }
  if (pairs.empty()) {
    throw std::invalid_argument(
        "fit_fusion: validation has no (relevant, irrelevant) pair");
  }
  Rng rng(seed ^ 0xF051);
  FusionWeights w{1.0, 0.0};
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(pairs);
    for (const Pair& p : pairs) {
      const double margin = w.w_model * p.d_model + w.w_tfidf * p.d_tfidf;
      if (margin < 1.0) {
        w.w_model += learning_rate * p.d_model;
        w.w_tfidf += learning_rate * p.d_tfidf;
      }
    }
  }
  return w;
}

double fused_score(const FusionWeights& w, double model_score, double tfidf) {
  return w.w_model * model_score + w.w_tfidf * tfidf;
}

}  // namespace wsm
