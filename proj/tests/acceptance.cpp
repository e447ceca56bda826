// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails. Criteria 5-7 and
// 9-10 are statistical: they run the full synthetic pipeline over seeds
// {7, 17, 27} and assert directional effects with tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wsm/annotator.hpp"
#include "wsm/corpus.hpp"
#include "wsm/eval.hpp"
#include "wsm/index.hpp"
#include "wsm/matchers.hpp"
#include "wsm/pipeline.hpp"
#include "wsm/rng.hpp"
#include "wsm/training.hpp"

namespace fs = std::filesystem;
using namespace wsm;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool ok, double seconds,
            const std::string& detail) {
  std::printf("%s  criterion %2d  %-28s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL",
              num, name.c_str(), seconds,
              detail.empty() ? "" : "  ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

void run_criterion(int num, const std::string& name,
                   const std::function<bool(std::string&)>& body) {
  Timer t;
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& ex) {
    detail = std::string("exception: ") + ex.what();
  }
  report(num, name, ok, t.seconds(), detail);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

void perturb(ParameterStore& store, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& [name, p] : store.params()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] += rng.uniform(-scale, scale);
    }
  }
}

// ---------------------------------------------------------------- criterion 1

bool gradient_correctness(std::string& detail) {
  double worst = 0.0;
  const Utterance x = {5, 6, 7};
  const Utterance y = {8, 9};

  for (const auto arch : {MatcherArch::kDualRnn, MatcherArch::kCnn}) {
    MatcherConfig mcfg;
    mcfg.arch = arch;
    mcfg.embedding_size = 6;
    mcfg.hidden_size = 6;
    mcfg.filter_count = 5;
    mcfg.vocab_size = 14;
    MatcherModel model = init_matcher(mcfg);
    perturb(model.params, 3, 0.3);
    const auto build = [&](bool want_grads) {
      Tape tape;
      const Var s = matcher_forward(tape, model, x, y);
      if (want_grads) tape.backward(s);
      return tape.scalar(s);
    };
    worst = std::max(worst, gradient_check(model.params, build));
  }

  // Seq2Seq annotator: GRU encoder/decoder plus bilinear attention.
  {
    AnnotatorConfig acfg;
    acfg.embedding_size = 6;
    acfg.hidden_size = 6;
    acfg.vocab_size = 14;
    AnnotatorModel model = init_annotator(acfg);
    perturb(model.params, 5, 0.3);
    const auto build = [&](bool want_grads) {
      Tape tape;
      const Var lp = annotator_logprob(tape, model, x, y);
      if (want_grads) tape.backward(lp);
      return tape.scalar(lp);
    };
    worst = std::max(worst, gradient_check(model.params, build));
  }

  // The losses, differentiated through a matcher so every parameter moves.
  {
    MatcherConfig mcfg;
    mcfg.embedding_size = 6;
    mcfg.hidden_size = 6;
    mcfg.vocab_size = 14;
    MatcherModel model = init_matcher(mcfg);
    perturb(model.params, 7, 0.3);
    const std::vector<Utterance> cands = {{8, 9}, {10}, {11, 12}};
    std::vector<const Utterance*> ptrs;
    for (const auto& c : cands) ptrs.push_back(&c);

    const auto build_bce = [&](bool want_grads) {
      Tape tape;
      const auto scores = matcher_forward_set(tape, model, x, ptrs);
      const Var loss = bce_loss(tape, scores, {1, 0, 0});
      if (want_grads) tape.backward(loss);
      return tape.scalar(loss);
    };
    worst = std::max(worst, gradient_check(model.params, build_bce));

    // Margin 0.4 keeps every hinge term active and well away from its kink
    // (score differences on this model are < 0.2).
    const auto build_ws = [&](bool want_grads) {
      Tape tape;
      const auto scores = matcher_forward_set(tape, model, x, ptrs);
      const Var loss = ws_loss(tape, scores, {0.4, 0.4});
      if (want_grads) tape.backward(loss);
      return tape.scalar(loss);
    };
    {
      Tape tape;
      const auto scores = matcher_forward_set(tape, model, x, ptrs);
      const double m1 = tape.scalar(scores[0]);
      for (std::size_t j = 1; j < scores.size(); ++j) {
        const double term = tape.scalar(scores[j]) - m1 + 0.4;
        if (std::fabs(term) < 1e-3) {
          detail = "hinge term too close to its kink for a finite-difference "
                   "check";
          return false;
        }
      }
    }
    worst = std::max(worst, gradient_check(model.params, build_ws));
  }

  detail = "max relative error " + fmt(worst);
  return worst < 1e-4;
}

// ---------------------------------------------------------------- criterion 2

// Metrics recomputed straight from their definitions, independent of eval.cpp.
void reference_metrics(const std::vector<EvalRecord>& records, double& p1,
                       double& map, double& mrr, std::size_t& kept) {
  p1 = map = mrr = 0.0;
  kept = 0;
  for (const EvalRecord& r : records) {
    int total_rel = 0;
    for (const auto& c : r.candidates) total_rel += c.relevance;
    if (total_rel == 0) continue;
    ++kept;
    std::vector<std::size_t> order(r.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return r.candidates[a].score > r.candidates[b].score;
                     });
    p1 += r.candidates[order[0]].relevance;
    double ap = 0.0;
    int seen = 0;
    bool first_found = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (r.candidates[order[i]].relevance == 1) {
        ++seen;
        ap += static_cast<double>(seen) / static_cast<double>(i + 1);
        if (!first_found) {
          mrr += 1.0 / static_cast<double>(i + 1);
          first_found = true;
        }
      }
    }
    map += ap / total_rel;
  }
  if (kept > 0) {
    p1 /= kept;
    map /= kept;
    mrr /= kept;
  }
}

bool metric_oracle_equivalence(std::string& detail) {
  Rng rng(19);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t len = 1; len <= 6; ++len) {
    for (std::uint32_t bits = 0; bits < (1u << len); ++bits) {
      EvalRecord r;
      double score = 1.0;
      for (std::size_t i = 0; i < len; ++i) {
        r.candidates.push_back({score, static_cast<int>((bits >> i) & 1u)});
        score -= 0.05;
      }
      // Also a shuffled-scores variant of the same relevance multiset.
      EvalRecord shuffled = r;
      for (auto& c : shuffled.candidates) c.score = rng.uniform();

      for (const EvalRecord& rec : {r, shuffled}) {
        const Metrics m = compute_metrics({rec});
        double p1, map, mrr;
        std::size_t kept;
        reference_metrics({rec}, p1, map, mrr, kept);
        if (kept == 0) {
          if (m.n_queries != 0 || m.n_skipped != 1) return false;
          continue;
        }
        worst = std::max({worst, std::fabs(m.p_at_1 - p1),
                          std::fabs(m.map - map), std::fabs(m.mrr - mrr)});
        ++checked;
      }
    }
  }
  detail = std::to_string(checked) + " records, max deviation " + fmt(worst);
  return worst < 1e-12;
}

// ---------------------------------------------------------------- criterion 3

bool weak_signal_properties(std::string& detail) {
  Rng rng(29);
  NormalizeOptions uncapped;
  uncapped.cap_enabled = false;
  for (int trial = 0; trial < 200; ++trial) {
    CandidateSet set;
    const std::size_t n = 2 + rng.index(9);
    set.candidates.resize(n);
    for (auto& c : set.candidates) {
      c.s = -rng.uniform(0.5, 30.0);
      c.s_filled = true;
    }
    CandidateSet scaled = set;
    for (auto& c : scaled.candidates) c.s *= 4.0;  // power of two: exact

    normalize_signals(set, uncapped);
    normalize_signals(scaled, uncapped);

    if (set.candidates[0].s_prime != 0.0) {
      detail = "s'_1 != 0";
      return false;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const Candidate& c = set.candidates[j];
      if (c.s_prime < 0.0) {
        detail = "negative s'";
        return false;
      }
      if (c.s >= set.candidates[0].s && c.s_prime != 0.0) {
        detail = "candidate scored above the human kept a positive margin";
        return false;
      }
      if (c.s_prime != scaled.candidates[j].s_prime) {
        detail = "s' not invariant under scaling";
        return false;
      }
    }

    // ws_loss(const eps) == ws_loss(weak) when every s' equals eps.
    const double eps = 0.1 + 0.1 * rng.index(9);
    Tape tape;
    std::vector<Var> scores;
    for (std::size_t j = 0; j < n; ++j) {
      Tensor t(1, 1);
      t.at(0, 0) = rng.uniform();
      scores.push_back(tape.input(t));
    }
    CandidateSet eps_set = set;
    for (auto& c : eps_set.candidates) {
      c.s_prime = eps;
      c.s_prime_filled = true;
    }
    TrainConfig weak_cfg, const_cfg;
    weak_cfg.objective = Objective::kWs;
    const_cfg.objective = Objective::kWsConst;
    const_cfg.const_margin = eps;
    const double lw =
        tape.scalar(ws_loss(tape, scores, set_margins(eps_set, weak_cfg)));
    const double lc =
        tape.scalar(ws_loss(tape, scores, set_margins(eps_set, const_cfg)));
    if (lw != lc) {
      detail = "constant-margin and uniform-weak losses differ";
      return false;
    }
  }
  detail = "200 random candidate sets";
  return true;
}

// ---------------------------------------------------------------- criterion 4

bool uniform_annotator_exactness(std::string& detail) {
  double worst = 0.0;
  for (const std::size_t v : {6u, 10u, 40u, 120u}) {
    AnnotatorConfig cfg;
    cfg.embedding_size = 8;
    cfg.hidden_size = 8;
    cfg.vocab_size = v;
    const AnnotatorModel model = init_annotator(cfg);
    for (const std::size_t len : {1u, 2u, 4u, 7u}) {
      Utterance y;
      for (std::size_t i = 0; i < len; ++i) {
        y.push_back(static_cast<int>(4 + i % (v - 4)));
      }
      const double got = score(model, {4, 5}, y);
      const double expected =
          static_cast<double>(len + 1) * std::log(1.0 / static_cast<double>(v));
      worst = std::max(worst, std::fabs(got - expected));
    }
  }
  detail = "max |score - L*ln(1/V)| = " + fmt(worst);
  return worst < 1e-9;
}

// ----------------------------------------------------- criteria 5, 6, 10 prep

struct SeedOutcome {
  double baseline = 0.0;
  double ws = 0.0;
  double ws_rand = 0.0;
  std::map<int, double> ws_const;  // grid index 1..9 -> test P@1
  double tfidf_gap = 0.0;          // retrieved minus random mean cosine
  double method_seconds = 0.0;     // prepare + ws fine-tune (criterion 5)
  double ablation_seconds = 0.0;   // ws_rand + const grid on top (criterion 6)
};

SeedOutcome run_seed(const PipelineConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  Timer t5;
  SeedRun run = prepare_seed(cfg, seed);
  out.baseline = run.baseline.p_at_1;

  out.ws = evaluate_on_test(finetune(run, cfg, Objective::kWs).first,
                            run.test_records)
               .p_at_1;
  out.method_seconds = t5.seconds();

  Timer t6;
  out.ws_rand =
      evaluate_on_test(finetune(run, cfg, Objective::kWsRand).first,
                       run.test_records)
          .p_at_1;
  for (int i = 1; i <= 9; ++i) {
    const double eps = 0.1 * i;
    out.ws_const[i] =
        evaluate_on_test(finetune(run, cfg, Objective::kWsConst, eps).first,
                         run.test_records)
            .p_at_1;
  }
  out.ablation_seconds = t6.seconds();

  // Mean input-to-candidate TF-IDF cosine, retrieved vs random negatives.
  double sum_ret = 0.0, sum_rnd = 0.0;
  std::size_t n_ret = 0, n_rnd = 0;
  for (const CandidateSet& set : run.retrieved_train) {
    for (const Candidate& c : set.candidates) {
      if (c.source != CandidateSource::kRetrieved) continue;
      sum_ret += run.index.tfidf_cosine(set.input, c.response);
      ++n_ret;
    }
  }
  for (const CandidateSet& set : run.random_train) {
    for (const Candidate& c : set.candidates) {
      if (c.source != CandidateSource::kRandom) continue;
      sum_rnd += run.index.tfidf_cosine(set.input, c.response);
      ++n_rnd;
    }
  }
  out.tfidf_gap = sum_ret / static_cast<double>(n_ret) -
                  sum_rnd / static_cast<double>(n_rnd);
  return out;
}

// ---------------------------------------------------------------- criterion 8

struct CliRunner {
  std::string cli;
  fs::path root;

  void run(const std::string& args) const {
    const std::string cmd = cli + " " + args + " >> " +
                            (root / "cli.log").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      throw std::runtime_error("command failed: " + cmd);
    }
  }

  void chain(const fs::path& d) const {
    const auto p = [&](const char* rel) { return (d / rel).string(); };
    run("gen-synth --out " + p("synth") +
        " --seed 7 --topics 2 --exchanges-per-topic 30 "
        "--test-exchanges-per-topic 10 --noise-rate 0.1");
    run("ingest --corpus " + p("synth/train.jsonl") + " --out " + p("ing") +
        " --vocab-size 2000");
    run("build-index --corpus " + p("synth/train.jsonl") + " --vocab " +
        p("ing/vocab.json") + " --out " + p("idx"));
    run("train-annotator --corpus " + p("synth/train.jsonl") + " --vocab " +
        p("ing/vocab.json") + " --out " + p("ann") + " --seed 7 --epochs 2");
    run("annotate --corpus " + p("synth/train.jsonl") + " --vocab " +
        p("ing/vocab.json") + " --index " + p("idx/index.wsidx") +
        " --annotator " + p("ann/annotator.wspar") +
        " --n 4 --seed 7 --strategy retrieved --out " + p("cand"));
    run("train --candidates " + p("cand/candidates.jsonl") + " --vocab " +
        p("ing/vocab.json") +
        " --objective bce_random --arch dual_rnn --seed 7 --epochs 2 --out " +
        p("pre"));
    run("train --candidates " + p("cand/candidates.jsonl") + " --vocab " +
        p("ing/vocab.json") + " --objective ws --init " +
        p("pre/matcher.wspar") + " --seed 7 --epochs 2 --out " + p("ws"));
    run("evaluate --matcher " + p("ws/matcher.wspar") + " --vocab " +
        p("ing/vocab.json") + " --test-corpus " + p("synth/test.jsonl") +
        " --oracle " + p("synth/oracle.json") + " --index " +
        p("idx/index.wsidx") + " --n 4 --seed 7 --out " + p("eval"));
    run("ablate --seeds 7 --n 3 --topics 2 --exchanges-per-topic 20 "
        "--test-exchanges-per-topic 8 --out " +
        p("abl"));
    run("sweep-n --seeds 7 --n-values 2,3 --topics 2 "
        "--exchanges-per-topic 20 --test-exchanges-per-topic 8 --out " +
        p("swp"));
  }
};

bool files_equal(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

bool determinism(std::string& detail) {
  const char* cli = std::getenv("WSM_CLI");
  if (cli == nullptr) {
    detail = "WSM_CLI not set (path to the command-line binary)";
    return false;
  }
  const fs::path root =
      fs::temp_directory_path() / "wsm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  CliRunner runner{cli, root};
  runner.chain(root / "a");
  runner.chain(root / "b");

  const std::vector<std::string> artifacts = {
      "synth/train.jsonl", "synth/test.jsonl",   "synth/oracle.json",
      "ing/vocab.json",    "idx/index.wsidx",    "ann/annotator.wspar",
      "ann/annotator_report.json",               "cand/candidates.jsonl",
      "pre/matcher.wspar", "ws/matcher.wspar",   "eval/metrics.json",
      "abl/ablation.json", "swp/sweep.json",
  };
  for (const std::string& rel : artifacts) {
    if (!files_equal(root / "a" / rel, root / "b" / rel)) {
      detail = "differs between identical runs: " + rel;
      return false;
    }
  }
  fs::remove_all(root);
  detail = std::to_string(artifacts.size()) +
           " artifacts byte-identical across reruns";
  return true;
}

// ---------------------------------------------------------------- criterion 9

bool annotator_discrimination(const PipelineConfig& base,
                              std::string& detail) {
  PipelineConfig cfg = base;
  cfg.synth.noise_rate = 0.0;

  SyntheticConfig train_cfg = cfg.synth;
  train_cfg.seed = 7;
  train_cfg.id_prefix = "train";
  const SyntheticData train_data = generate_synthetic(train_cfg);

  SyntheticConfig test_cfg = cfg.synth;
  test_cfg.exchanges_per_topic = cfg.test_exchanges_per_topic;
  test_cfg.seed = 7 ^ 0x7E57AB1E;
  test_cfg.id_prefix = "test";
  const SyntheticData test_data = generate_synthetic(test_cfg);

  const Vocabulary vocab = build_vocabulary(train_data.exchanges, cfg.vocab_max);
  const auto train = encode_corpus(train_data.exchanges, vocab);
  const auto test = encode_corpus(test_data.exchanges, vocab);

  std::vector<AnnotatorPair> pairs;
  for (const Exchange& e : train) {
    pairs.emplace_back(flatten_context(e, Vocabulary::kEos), e.response);
  }
  AnnotatorConfig acfg = cfg.annotator;
  acfg.vocab_size = vocab.size();
  acfg.seed = 7;
  AnnotatorTrainConfig atrain = cfg.annotator_train;
  atrain.seed = 7;
  const AnnotatorModel model = train_annotator(pairs, acfg, atrain);

  Rng rng(101);
  int wins = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    const Exchange& e = test[i % test.size()];
    const Utterance x = flatten_context(e, Vocabulary::kEos);
    // random response drawn from a different topic
    const Exchange* other = nullptr;
    while (other == nullptr) {
      const Exchange& cand = test[rng.index(test.size())];
      if (cand.topic_id != e.topic_id) other = &cand;
    }
    if (score(model, x, e.response) > score(model, x, other->response)) {
      ++wins;
    }
  }
  detail = std::to_string(wins) + "/" + std::to_string(trials) +
           " gold responses outscore an other-topic response";
  return wins >= 90;
}

}  // namespace

int main() {
  run_criterion(1, "gradient correctness", gradient_correctness);
  run_criterion(2, "metric oracle equivalence", metric_oracle_equivalence);
  run_criterion(3, "weak-signal properties", weak_signal_properties);
  run_criterion(4, "uniform-annotator exactness", uniform_annotator_exactness);

  const PipelineConfig cfg = default_pipeline_config();
  const std::vector<std::uint64_t> seeds = {7, 17, 27};

  std::vector<SeedOutcome> outcomes;
  Timer seed_timer;
  std::string seed_error;
  try {
    for (const std::uint64_t seed : seeds) {
      outcomes.push_back(run_seed(cfg, seed));
    }
  } catch (const std::exception& ex) {
    seed_error = ex.what();
  }
  const double seed_seconds = seed_timer.seconds();

  if (!seed_error.empty()) {
    report(5, "method effect (ws vs baseline)", false, seed_seconds,
           "exception: " + seed_error);
    report(6, "ablation ordering", false, 0.0, "skipped: pipeline failed");
    report(10, "retrieval hardness", false, 0.0, "skipped: pipeline failed");
  } else {
    std::vector<double> base_v, ws_v, rand_v, gap_v;
    double t5_seconds = 0.0, t6_seconds = 0.0;
    for (const auto& o : outcomes) {
      base_v.push_back(o.baseline);
      ws_v.push_back(o.ws);
      rand_v.push_back(o.ws_rand);
      gap_v.push_back(o.tfidf_gap);
      t5_seconds += o.method_seconds;
      // Criterion 6 reuses the shared preparation, so its budget covers the
      // whole block: preparation, ws, and the ablation variants.
      t6_seconds += o.method_seconds + o.ablation_seconds;
    }
    const double mean_base = mean(base_v);
    const double mean_ws = mean(ws_v);
    const double mean_rand = mean(rand_v);
    double best_const = -1.0;
    for (int i = 1; i <= 9; ++i) {
      std::vector<double> v;
      for (const auto& o : outcomes) v.push_back(o.ws_const.at(i));
      best_const = std::max(best_const, mean(v));
    }

    report(5, "method effect (ws vs baseline)",
           mean_ws - mean_base >= 0.02 && t5_seconds < 900.0, t5_seconds,
           "mean P@1 " + fmt(mean_base) + " -> " + fmt(mean_ws) + " (delta " +
               fmt(mean_ws - mean_base) + ", need >= 0.02)");
    report(6, "ablation ordering",
           mean_ws >= mean_rand + 0.01 && mean_ws >= best_const - 0.005 &&
               t6_seconds < 1800.0,
           t6_seconds,
           "ws " + fmt(mean_ws) + " vs ws_rand " + fmt(mean_rand) +
               " vs best ws_const " + fmt(best_const));
    bool gap_ok = true;
    for (const double g : gap_v) gap_ok = gap_ok && g > 0.0;
    report(10, "retrieval hardness", gap_ok, seed_seconds,
           "tf-idf cosine gap per seed: " + fmt(gap_v[0]) + ", " +
               fmt(gap_v[1]) + ", " + fmt(gap_v[2]));
  }

  {
    Timer t;
    std::string detail;
    bool ok = false;
    try {
      std::vector<double> p2, p10;
      for (const std::uint64_t seed : seeds) {
        const auto rows = candidate_count_sweep(cfg, seed, {2, 5, 10});
        p2.push_back(rows[0].metrics.p_at_1);
        p10.push_back(rows[2].metrics.p_at_1);
      }
      const double m2 = mean(p2), m10 = mean(p10);
      ok = m10 >= m2 - 0.01 && t.seconds() < 1800.0;
      detail = "mean P@1 n=2: " + fmt(m2) + ", n=10: " + fmt(m10);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    report(7, "candidate-count trend", ok, t.seconds(), detail);
  }

  run_criterion(8, "determinism", determinism);
  run_criterion(9, "annotator discrimination", [&](std::string& d) {
    return annotator_discrimination(cfg, d);
  });

  std::printf("%s: %d of 10 criteria failed\n",
              g_failures == 0 ? "OK" : "FAILED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
