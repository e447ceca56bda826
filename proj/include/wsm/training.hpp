#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsm/corpus.hpp"
#include "wsm/index.hpp"
#include "wsm/matchers.hpp"
#include "wsm/tape.hpp"

namespace wsm {

enum class Objective { kBceRandom, kWs, kWsConst, kWsRand };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct TrainConfig {
  Objective objective = Objective::kBceRandom;
  double learning_rate = 0.1;
  std::size_t batch_size = 8;  // candidate sets per SGD update
  int max_epochs = 5;
  double const_margin = 0.2;   // ws_const only, grid-selected on validation
  std::uint64_t seed = 7;

  bool is_ws_family() const { return objective != Objective::kBceRandom; }
};

struct EpochStats {
  double loss = 0.0;
  double val_p_at_1 = 0.0;
};

struct TrainReport {
  std::string objective;
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 0-based; -1 when no epoch ran
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  std::string to_json() const;
};

// Candidate 1 = human response; 2..n drawn uniformly without replacement
// from other exchanges' responses. Deterministic in seed.
std::vector<CandidateSet> sample_random_negatives(
    const std::vector<Exchange>& corpus, std::size_t n, int separator,
    std::uint64_t seed);

// -sum_j [r_j log M_j + (1-r_j) log(1-M_j)], scores clamped inside the logs.
// Labels come from candidate sources: human = 1, everything else 0.
Var bce_loss(Tape& tape, const std::vector<Var>& scores,
             const std::vector<int>& labels);

// sum_{j>=2} max(0, M_j - M_1 + margin_j). margins has one entry per
// non-human candidate.
Var ws_loss(Tape& tape, const std::vector<Var>& scores,
            const std::vector<double>& margins);

// Margins for one candidate set under the configured objective; weak margins
// require s' to be filled.
std::vector<double> set_margins(const CandidateSet& set,
                                const TrainConfig& config);

// SGD over candidate sets. For ws-family objectives the model must carry a
// bce_random pretraining mark (set by a previous train() run) and its word
// embeddings are frozen for the duration. Returns the best-validation
// snapshot (validation P@1 = human response ranked top in its own set).
std::pair<MatcherModel, TrainReport> train(
    const MatcherModel& initial, const std::vector<CandidateSet>& data,
    const TrainConfig& config, const std::vector<CandidateSet>& validation);

// Fraction of validation sets whose human response strictly outscores every
// other candidate. Ties count as misses so degenerate constant-score models
// do not win snapshot selection.
double validation_p_at_1(const MatcherModel& model,
                         const std::vector<CandidateSet>& sets);

}  // namespace wsm
