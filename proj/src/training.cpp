#include "wsm/training.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <json.hpp>

#include "wsm/log.hpp"
#include "wsm/rng.hpp"

namespace wsm {

std::string to_string(Objective o) {
  switch (o) {
    case Objective::kBceRandom:
      return "bce_random";
    case Objective::kWs:
      return "ws";
    case Objective::kWsConst:
      return "ws_const";
    case Objective::kWsRand:
      return "ws_rand";
  }
  return "?";
}

Objective objective_from_string(const std::string& s) {
  if (s == "bce_random") return Objective::kBceRandom;
  if (s == "ws") return Objective::kWs;
  if (s == "ws_const") return Objective::kWsConst;
  if (s == "ws_rand") return Objective::kWsRand;
  throw std::invalid_argument("unknown objective: " + s);
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["objective"] = objective;
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  for (const EpochStats& e : epochs) {
    nlohmann::ordered_json je;
    je["loss"] = e.loss;
    je["val_p_at_1"] = e.val_p_at_1;
    eps.push_back(std::move(je));
  }
  j["epochs"] = std::move(eps);
  j["best_epoch"] = best_epoch;
  j["seed"] = seed;
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

std::vector<CandidateSet> sample_random_negatives(
    const std::vector<Exchange>& corpus, std::size_t n, int separator,
    std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("sample_random_negatives: n must be >= 2");
  }
  if (corpus.size() < n) {
    throw std::invalid_argument(
        "sample_random_negatives: corpus smaller than n (" +
        std::to_string(corpus.size()) + " < " + std::to_string(n) + ")");
  }
  Rng rng(seed ^ 0xBADC0DE);
  std::vector<CandidateSet> sets;
  sets.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Exchange& e = corpus[i];
    CandidateSet cs;
    cs.input_id = e.id;
    cs.input = flatten_context(e, separator);
    Candidate human;
    human.response = e.response;
    human.source = CandidateSource::kHuman;
    cs.candidates.push_back(std::move(human));
    // Sample n-1 distinct other exchanges.
    std::vector<std::size_t> chosen;
    while (chosen.size() < n - 1) {
      const std::size_t d = rng.index(corpus.size());
      if (d == i) continue;
      if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) continue;
      chosen.push_back(d);
      Candidate c;
      c.response = corpus[d].response;
      c.source = CandidateSource::kRandom;
      c.doc_id = static_cast<int>(d);
      c.duplicate_of_human = (c.response == e.response);
      cs.candidates.push_back(std::move(c));
    }
    sets.push_back(std::move(cs));
  }
  return sets;
}

Var bce_loss(Tape& tape, const std::vector<Var>& scores,
             const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("bce_loss: scores/labels mismatch");
  }
  Var total = tape.scalar_const(0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const Var m = tape.clamp_(scores[j], 1e-7, 1.0 - 1e-7);
    if (labels[j] == 1) {
      total = tape.sub(total, tape.log_(m));
    } else {
      total = tape.sub(
          total, tape.log_(tape.add_const(tape.scale(m, -1.0), 1.0)));
    }
  }
  return total;
}

Var ws_loss(Tape& tape, const std::vector<Var>& scores,
            const std::vector<double>& margins) {
  if (scores.size() < 2 || margins.size() != scores.size() - 1) {
    throw std::invalid_argument("ws_loss: need 1 human + margins per negative");
  }
  // The j = 1 term of the objective is identically max(0, s'_1) = 0 and is
  // omitted.
  Var total = tape.scalar_const(0.0);
  for (std::size_t j = 1; j < scores.size(); ++j) {
    const Var diff = tape.sub(scores[j], scores[0]);
    total = tape.add(total,
                     tape.relu_(tape.add_const(diff, margins[j - 1])));
  }
  return total;
}

std::vector<double> set_margins(const CandidateSet& set,
                                const TrainConfig& config) {
  std::vector<double> margins;
  margins.reserve(set.candidates.size() - 1);
  for (std::size_t j = 1; j < set.candidates.size(); ++j) {
    if (config.objective == Objective::kWsConst) {
      margins.push_back(config.const_margin);
    } else {
      if (!set.candidates[j].s_prime_filled) {
        throw std::invalid_argument(
            "train: weak objective with unfilled s' in set " + set.input_id);
      }
      margins.push_back(set.candidates[j].s_prime);
    }
  }
  return margins;
}

double validation_p_at_1(const MatcherModel& model,
                         const std::vector<CandidateSet>& sets) {
  if (sets.empty()) return 0.0;
  auto& m = const_cast<MatcherModel&>(model);
  std::size_t hits = 0;
  Tape tape;
  for (const CandidateSet& cs : sets) {
    tape.reset();
    std::vector<const Utterance*> cands;
    for (const Candidate& c : cs.candidates) cands.push_back(&c.response);
    const auto scores = matcher_forward_set(tape, m, cs.input, cands);
    const double human = tape.scalar(scores[0]);
    // Ties count against the human response: a model that scores every
    // candidate identically should not look perfect on validation.
    bool top = true;
    for (std::size_t j = 1; j < scores.size(); ++j) {
      if (tape.scalar(scores[j]) >= human) {
        top = false;
        break;
      }
    }
    if (top) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sets.size());
}

std::pair<MatcherModel, TrainReport> train(
    const MatcherModel& initial, const std::vector<CandidateSet>& data,
    const TrainConfig& config, const std::vector<CandidateSet>& validation) {
  if (data.empty()) throw std::invalid_argument("train: empty data");
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("train: learning rate must be > 0");
  }
  if (config.objective == Objective::kWsConst &&
      (config.const_margin <= 0.0 || config.const_margin >= 1.0)) {
    throw std::invalid_argument("train: const margin must be in (0,1)");
  }
  const auto t_start = std::chrono::steady_clock::now();

  MatcherModel model = initial;
  if (config.is_ws_family()) {
    const auto it = model.params.meta.find("trained_objective");
    if (it == model.params.meta.end() || it->second != "bce_random") {
      throw std::invalid_argument(
          "train: weak-supervision objectives require a matcher pretrained "
          "under the random-negative objective (run bce_random first)");
    }
    // Word embeddings stay fixed during weak-supervision fine-tuning.
    model.params.at("emb").trainable = false;
  }

  TrainReport report;
  report.objective = to_string(config.objective);
  report.seed = config.seed;
  if (config.max_epochs == 0) {
    report.wall_seconds = 0.0;
    if (config.is_ws_family()) model.params.at("emb").trainable = true;
    return {std::move(model), std::move(report)};
  }

  Rng rng(config.seed ^ 0x7141);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  MatcherModel best = model;
  double best_p1 = -1.0;
  Tape tape;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t in_batch = 0;
    model.params.zero_grads();
    for (const std::size_t idx : order) {
      const CandidateSet& cs = data[idx];
      tape.reset();
      std::vector<const Utterance*> cands;
      cands.reserve(cs.candidates.size());
      for (const Candidate& c : cs.candidates) cands.push_back(&c.response);
      const auto scores = matcher_forward_set(tape, model, cs.input, cands);
      Var loss;
      if (config.objective == Objective::kBceRandom) {
        std::vector<int> labels;
        for (const Candidate& c : cs.candidates) {
          labels.push_back(c.source == CandidateSource::kHuman ? 1 : 0);
        }
        loss = bce_loss(tape, scores, labels);
      } else {
        loss = ws_loss(tape, scores, set_margins(cs, config));
      }
      epoch_loss += tape.scalar(loss);
      tape.backward(loss);
      if (++in_batch == config.batch_size) {
        sgd_step(model.params,
                 config.learning_rate / static_cast<double>(in_batch));
        model.params.zero_grads();
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      sgd_step(model.params,
               config.learning_rate / static_cast<double>(in_batch));
      model.params.zero_grads();
    }
    EpochStats stats;
    stats.loss = epoch_loss / static_cast<double>(data.size());
    stats.val_p_at_1 = validation_p_at_1(model, validation);
    report.epochs.push_back(stats);
    log_debug("train " + report.objective + " epoch " +
              std::to_string(epoch) + ": loss=" + std::to_string(stats.loss) +
              " val_p1=" + std::to_string(stats.val_p_at_1));
    if (stats.val_p_at_1 > best_p1) {
      best_p1 = stats.val_p_at_1;
      best = model;
      report.best_epoch = epoch;
    }
  }
  best.params.meta["trained_objective"] = report.objective;
  // The freeze only covers this run; hand back a normally-trainable model.
  if (config.is_ws_family()) best.params.at("emb").trainable = true;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return {std::move(best), std::move(report)};
}

}  // namespace wsm
