#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsm/annotator.hpp"
#include "wsm/corpus.hpp"
#include "wsm/eval.hpp"
#include "wsm/index.hpp"
#include "wsm/matchers.hpp"
#include "wsm/training.hpp"

namespace wsm {

// Experiment-level wiring: synthetic corpus -> index -> annotator ->
// candidate sets -> matcher training -> test metrics. Everything is a pure
// function of the seed.
struct PipelineConfig {
  SyntheticConfig synth;               // training corpus
  int test_exchanges_per_topic = 75;
  // Size of the disjoint corpus the annotator trains on. It doubles as the
  // weak-margin scale control: a sharper annotator spreads the likelihood
  // ratios s_j/s_1 and therefore enlarges every margin.
  int aux_exchanges_per_topic = 500;
  std::size_t vocab_max = 2000;
  std::size_t n_candidates = 10;
  std::size_t n_test_candidates = 10;  // eval protocol is fixed across sweeps

  MatcherConfig matcher;
  AnnotatorConfig annotator;
  AnnotatorTrainConfig annotator_train;

  double learning_rate = 0.1;
  std::size_t batch_size = 8;
  int pretrain_epochs = 4;
  int finetune_epochs = 4;
  double matcher_val_fraction = 0.1;
  NormalizeOptions norm;
};

PipelineConfig default_pipeline_config();

// One test query with oracle labels and per-candidate TF-IDF features.
struct TestRecord {
  std::string query_id;
  Utterance input;
  std::vector<Utterance> candidates;
  std::vector<int> labels;
  std::vector<double> tfidf;
};

// Everything up to (and including) bce_random pretraining, shared by all
// fine-tuning variants of one seed.
struct SeedRun {
  std::uint64_t seed = 0;
  Vocabulary vocab;
  std::vector<RawExchange> train_raw, test_raw;
  std::vector<Exchange> train, test;
  SyntheticOracle oracle;
  InvertedIndex index;
  AnnotatorModel annotator;

  std::vector<CandidateSet> retrieved_train, retrieved_val;  // s, s' filled
  std::vector<CandidateSet> random_train, random_val;        // s, s' filled
  std::vector<TestRecord> test_records;

  MatcherModel pretrained;
  TrainReport pretrain_report;
  Metrics baseline;  // pretrained model on the test records
};

SeedRun prepare_seed(const PipelineConfig& config, std::uint64_t seed);

Metrics evaluate_on_test(const MatcherModel& model,
                         const std::vector<TestRecord>& records,
                         const FusionWeights* fusion = nullptr);

// Fine-tunes the seed's pretrained matcher under one ws-family objective.
std::pair<MatcherModel, TrainReport> finetune(
    const SeedRun& run, const PipelineConfig& config, Objective objective,
    double const_margin = 0.2);

// Grid {0.1, ..., 0.9} on fine-tuning validation P@1.
double select_const_margin(const SeedRun& run, const PipelineConfig& config);

struct AblationRow {
  std::string name;
  Metrics metrics;
  double const_margin = 0.0;  // ws_const only
};

// Rows: bce_random baseline, ws_rand, ws_const (grid-selected), ws.
std::vector<AblationRow> run_ablation(const SeedRun& run,
                                      const PipelineConfig& config);

struct SweepRow {
  std::size_t n = 0;
  Metrics metrics;
};

// Re-runs the pipeline per candidate count n (training-set construction and
// matcher training change; the test protocol stays fixed).
std::vector<SweepRow> candidate_count_sweep(const PipelineConfig& config,
                                            std::uint64_t seed,
                                            const std::vector<std::size_t>& ns);

// Test records built from a test corpus against an index over training
// responses, labeled by the synthetic oracle.
std::vector<TestRecord> build_test_records(
    const std::vector<Exchange>& test, const std::vector<RawExchange>& test_raw,
    const InvertedIndex& index, const SyntheticOracle& oracle,
    const Vocabulary& vocab, std::size_t n, std::uint64_t pad_seed);

}  // namespace wsm
