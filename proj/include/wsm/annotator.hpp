#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wsm/corpus.hpp"
#include "wsm/index.hpp"
#include "wsm/params.hpp"
#include "wsm/tape.hpp"

namespace wsm {

struct AnnotatorConfig {
  std::size_t embedding_size = 64;
  std::size_t hidden_size = 64;
  std::size_t vocab_size = 0;  // filled from the vocabulary
  double init_scale = 0.1;
  std::uint64_t seed = 7;
};

// Attention Seq2Seq weak annotator. Scores a candidate response by teacher-
// forced conditional log-likelihood, summed over tokens including EOS.
struct AnnotatorModel {
  ParameterStore params;
  AnnotatorConfig config;

  void save(const std::string& path) const;
  static AnnotatorModel load(const std::string& path);
};

AnnotatorModel init_annotator(const AnnotatorConfig& config);

struct AnnotatorTrainConfig {
  std::size_t batch_size = 1;  // plain SGD; lr is scaled by batch size
  double learning_rate = 0.1;
  int max_epochs = 30;
  int patience = 3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 7;
};

struct AnnotatorTrainReport {
  std::vector<double> train_loss;       // mean per-token cross-entropy
  std::vector<double> val_perplexity;
  int best_epoch = -1;                  // 0-based; -1 when max_epochs == 0
};

using AnnotatorPair = std::pair<Utterance, Utterance>;  // (flattened x, y)

// Teacher-forced cross-entropy with SGD; stops when validation perplexity
// fails to improve for `patience` consecutive epochs. Returns the best-
// validation snapshot.
AnnotatorModel train_annotator(const std::vector<AnnotatorPair>& pairs,
                               const AnnotatorConfig& model_config,
                               const AnnotatorTrainConfig& train_config,
                               AnnotatorTrainReport* report = nullptr);

// Sum over y's tokens (and EOS) of log p(token | x, gold prefix). Always < 0.
double score(const AnnotatorModel& model, const Utterance& x,
             const Utterance& y);

// Tape-level version of score(); gradients flow back to the model store.
Var annotator_logprob(Tape& tape, AnnotatorModel& model, const Utterance& x,
                      const Utterance& y);

// Validation perplexity: exp(total cross-entropy / total target tokens).
double perplexity(const AnnotatorModel& model,
                  const std::vector<AnnotatorPair>& pairs);

// Fills every candidate's s via score(); order preserved.
void annotate(const AnnotatorModel& model, std::vector<CandidateSet>& sets);

struct NormalizeOptions {
  bool cap_enabled = true;
  double cap = 1.0;
};

// s'_j = max(0, s_j / s_1 - 1), capped when enabled. s_1 must be < -1e-12.
void normalize_signals(CandidateSet& set,
                       const NormalizeOptions& options = {});
void normalize_signals(std::vector<CandidateSet>& sets,
                       const NormalizeOptions& options = {});

// Ground-truth stand-in: s = -1 for oracle-relevant pairs, -(1 + gap)
// otherwise.
void oracle_annotate(std::vector<CandidateSet>& sets,
                     const std::vector<RawExchange>& corpus,
                     const Vocabulary& vocab, const SyntheticOracle& oracle,
                     double gap = 9.0);

}  // namespace wsm
