#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wsm/corpus.hpp"

namespace wsm {

enum class CandidateSource { kHuman, kRetrieved, kRandom };

std::string to_string(CandidateSource s);
CandidateSource candidate_source_from_string(const std::string& s);

struct Candidate {
  Utterance response;
  CandidateSource source = CandidateSource::kHuman;
  int doc_id = -1;            // position in the indexed corpus, -1 for human
  double s = 0.0;             // annotator log-likelihood (nats)
  double s_prime = 0.0;       // normalized weak signal
  bool s_filled = false;
  bool s_prime_filled = false;
  bool duplicate_of_human = false;
};

struct CandidateSet {
  std::string input_id;
  Utterance input;  // flattened context
  std::vector<Candidate> candidates;  // [0] is always the human response
};

// Inverted index over corpus responses with TF-IDF weighting:
// idf(t) = ln(N / df(t)), raw term frequency, precomputed document norms.
class InvertedIndex {
 public:
  struct Posting {
    std::int32_t doc_id;
    std::int32_t tf;
  };

  static InvertedIndex build(const std::vector<Exchange>& corpus);

  std::size_t doc_count() const { return doc_norms_.size(); }
  double idf(int term) const;
  double doc_norm(int doc) const { return doc_norms_.at(doc); }
  const Utterance& doc_tokens(int doc) const { return doc_tokens_.at(doc); }
  const std::string& doc_owner(int doc) const { return doc_owners_.at(doc); }

  // Cosine of TF-IDF vectors; 0 when either vector is all-zero.
  double tfidf_cosine(const Utterance& a, const Utterance& b) const;

  // Top-k by tfidf_cosine(query, doc), ties broken by ascending doc id.
  std::vector<std::pair<int, double>> retrieve(
      const Utterance& query, std::size_t k,
      const std::vector<int>& exclude = {}) const;

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  std::unordered_map<int, std::vector<Posting>> postings_;
  std::unordered_map<int, std::int32_t> doc_freq_;
  std::vector<double> doc_norms_;
  std::vector<Utterance> doc_tokens_;
  std::vector<std::string> doc_owners_;

  std::unordered_map<int, double> tfidf_vector(const Utterance& u) const;
};

// Candidate 1 = human response; 2..n retrieved from the index with the own
// response excluded. Short retrieval lists are padded by seeded random
// sampling (flagged kRandom) with a warning. Weak scores are left unfilled.
std::vector<CandidateSet> construct_training_set(
    const std::vector<Exchange>& corpus, const InvertedIndex& index,
    std::size_t n, int separator, std::uint64_t pad_seed = 0);

// Candidate-set JSONL round-trip; texts are decoded through the vocabulary.
void save_candidate_sets(const std::vector<CandidateSet>& sets,
                         const Vocabulary& vocab, const std::string& path);
std::vector<CandidateSet> load_candidate_sets(const std::string& path,
                                              const Vocabulary& vocab);

}  // namespace wsm
