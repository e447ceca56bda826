// Command-line front end for the weak-supervision response-selection
// pipeline: gen-synth | ingest | build-index | train-annotator | annotate |
// train | evaluate | ablate | sweep-n. Each stage reads and writes files so
// runs compose and ablations can reuse intermediate artifacts.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsm/annotator.hpp"
#include "wsm/corpus.hpp"
#include "wsm/eval.hpp"
#include "wsm/index.hpp"
#include "wsm/log.hpp"
#include "wsm/pipeline.hpp"
#include "wsm/rng.hpp"
#include "wsm/training.hpp"

namespace fs = std::filesystem;
using namespace wsm;

namespace {

constexpr int kSeparator = Vocabulary::kEos;

void ensure_out_dir(const std::string& out) {
  fs::create_directories(out);
}

// Every run leaves its resolved flag values next to its outputs so it can be
// reproduced bit-for-bit.
void write_resolved_config(CLI::App* cmd, const std::string& out) {
  std::ofstream os(fs::path(out) / "resolved_config.txt");
  os << cmd->config_to_str(true, false);
}

void add_config_flag(CLI::App* cmd) {
  cmd->set_config("--config", "", "key=value config file");
  cmd->allow_config_extras(false);
}

std::string format_metrics_row(const std::string& name, const Metrics& m) {
  std::ostringstream os;
  os << std::left << std::setw(14) << name << std::right << std::fixed
     << std::setprecision(4) << "  p@1=" << m.p_at_1 << "  map=" << m.map
     << "  mrr=" << m.mrr;
  return os.str();
}

Metrics mean_metrics(const std::vector<Metrics>& ms) {
  Metrics out;
  for (const Metrics& m : ms) {
    out.p_at_1 += m.p_at_1;
    out.map += m.map;
    out.mrr += m.mrr;
    out.n_queries += m.n_queries;
    out.n_skipped += m.n_skipped;
  }
  const double k = static_cast<double>(ms.size());
  out.p_at_1 /= k;
  out.map /= k;
  out.mrr /= k;
  return out;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["p_at_1"] = m.p_at_1;
  j["map"] = m.map;
  j["mrr"] = m.mrr;
  j["n_queries"] = m.n_queries;
  j["n_skipped"] = m.n_skipped;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << text;
}

PipelineConfig pipeline_config_for(std::size_t n, double noise,
                                   const std::string& arch) {
  PipelineConfig cfg = default_pipeline_config();
  cfg.n_candidates = n;
  cfg.synth.noise_rate = noise;
  cfg.matcher.arch = matcher_arch_from_string(arch);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-supervision matching for retrieval-based chatbots"};
  app.require_subcommand(1);

  // ---- gen-synth ----
  auto* gen = app.add_subcommand(
      "gen-synth", "generate a synthetic corpus with a relevance oracle");
  std::string gen_out = "out";
  std::uint64_t gen_seed = 7;
  SyntheticConfig gen_cfg;
  int gen_test_per_topic = 75;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--topics", gen_cfg.topic_count, "topic count");
  gen->add_option("--keywords-per-topic", gen_cfg.keywords_per_topic);
  gen->add_option("--exchanges-per-topic", gen_cfg.exchanges_per_topic);
  gen->add_option("--test-exchanges-per-topic", gen_test_per_topic);
  gen->add_option("--keyword-sets-per-topic", gen_cfg.keyword_sets_per_topic,
                  "recurring query pool size per topic (0 = no repetition)");
  gen->add_option("--noise-rate", gen_cfg.noise_rate);
  add_config_flag(gen);

  // ---- ingest ----
  auto* ingest = app.add_subcommand(
      "ingest", "validate a corpus and build its vocabulary");
  std::string in_corpus, in_out = "out";
  std::size_t in_vocab = 2000;
  ingest->add_option("--corpus", in_corpus, "corpus JSONL")->required();
  ingest->add_option("--out", in_out, "output directory");
  ingest->add_option("--vocab-size", in_vocab, "max vocabulary size");
  add_config_flag(ingest);

  // ---- build-index ----
  auto* bidx = app.add_subcommand("build-index",
                                  "build a TF-IDF index over responses");
  std::string bi_corpus, bi_vocab, bi_out = "out";
  bidx->add_option("--corpus", bi_corpus)->required();
  bidx->add_option("--vocab", bi_vocab, "vocab.json")->required();
  bidx->add_option("--out", bi_out, "output directory");
  add_config_flag(bidx);

  // ---- train-annotator ----
  auto* tann = app.add_subcommand("train-annotator",
                                  "pretrain the Seq2Seq weak annotator");
  std::string ta_corpus, ta_vocab, ta_out = "out";
  std::uint64_t ta_seed = 7;
  int ta_epochs = 35, ta_patience = 6;
  std::size_t ta_hidden = 64, ta_emb = 64;
  tann->add_option("--corpus", ta_corpus)->required();
  tann->add_option("--vocab", ta_vocab)->required();
  tann->add_option("--out", ta_out);
  tann->add_option("--seed", ta_seed);
  tann->add_option("--epochs", ta_epochs, "max training epochs");
  tann->add_option("--patience", ta_patience, "early-stopping patience");
  tann->add_option("--hidden", ta_hidden);
  tann->add_option("--embedding", ta_emb);
  add_config_flag(tann);

  // ---- annotate ----
  auto* ann = app.add_subcommand(
      "annotate", "construct candidate sets and fill weak signals");
  std::string an_corpus, an_vocab, an_index, an_model, an_out = "out";
  std::string an_strategy = "retrieved";
  std::size_t an_n = 10;
  std::uint64_t an_seed = 7;
  bool an_no_cap = false;
  ann->add_option("--corpus", an_corpus)->required();
  ann->add_option("--vocab", an_vocab)->required();
  ann->add_option("--index", an_index, "WSIDX1 file (retrieved strategy)");
  ann->add_option("--annotator", an_model, "WSPAR1 annotator")->required();
  ann->add_option("--n", an_n, "candidates per input");
  ann->add_option("--seed", an_seed);
  ann->add_option("--strategy", an_strategy)
      ->check(CLI::IsMember({"retrieved", "random"}));
  ann->add_flag("--no-margin-cap", an_no_cap, "disable the s' cap at 1.0");
  ann->add_option("--out", an_out);
  add_config_flag(ann);

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a matching model");
  std::string tr_cands, tr_vocab, tr_out = "out", tr_objective = "bce_random";
  std::string tr_arch = "dual_rnn", tr_init;
  std::uint64_t tr_seed = 7;
  int tr_epochs = 4;
  double tr_eps = 0.2, tr_lr = 0.1, tr_init_scale = 0.5;
  double tr_val_fraction = 0.1;
  tr->add_option("--candidates", tr_cands, "candidate-set JSONL")->required();
  tr->add_option("--vocab", tr_vocab)->required();
  tr->add_option("--objective", tr_objective)
      ->check(CLI::IsMember({"bce_random", "ws", "ws_const", "ws_rand"}));
  tr->add_option("--arch", tr_arch)
      ->check(CLI::IsMember({"dual_rnn", "cnn"}));
  tr->add_option("--init", tr_init,
                 "pretrained WSPAR1 snapshot (required for ws objectives)");
  tr->add_option("--seed", tr_seed);
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--const-margin", tr_eps);
  tr->add_option("--learning-rate", tr_lr);
  tr->add_option("--init-scale", tr_init_scale,
                 "fresh-model parameter init range (ignored with --init)");
  tr->add_option("--val-fraction", tr_val_fraction);
  tr->add_option("--out", tr_out);
  add_config_flag(tr);

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "rank candidates and report "
                                "P@1 / MAP / MRR");
  std::string ev_matcher, ev_records, ev_out = "out";
  std::string ev_corpus, ev_oracle, ev_index, ev_vocab;
  std::size_t ev_n = 10;
  std::uint64_t ev_seed = 7;
  bool ev_fuse = false;
  ev->add_option("--matcher", ev_matcher)->required();
  ev->add_option("--vocab", ev_vocab)->required();
  ev->add_option("--records", ev_records, "labeled eval-records JSONL");
  ev->add_option("--test-corpus", ev_corpus,
                 "alternative to --records: synthetic test corpus");
  ev->add_option("--oracle", ev_oracle, "oracle.json for --test-corpus");
  ev->add_option("--index", ev_index, "index for candidate retrieval/fusion");
  ev->add_option("--n", ev_n, "candidates per test query");
  ev->add_option("--seed", ev_seed);
  ev->add_flag("--fuse", ev_fuse,
               "fuse matcher score with TF-IDF cosine (needs --index)");
  ev->add_option("--out", ev_out);
  add_config_flag(ev);

  // ---- ablate ----
  auto* ab = app.add_subcommand(
      "ablate", "baseline / ws_rand / ws_const / ws comparison table");
  std::string ab_out = "out", ab_arch = "dual_rnn";
  std::vector<std::uint64_t> ab_seeds = {7};
  std::size_t ab_n = 10;
  double ab_noise = 0.1;
  bool ab_no_cap = false;
  ab->add_option("--out", ab_out);
  ab->add_option("--seeds", ab_seeds, "seeds, results averaged")
      ->delimiter(',');
  ab->add_option("--n", ab_n, "candidates per input");
  ab->add_option("--arch", ab_arch)
      ->check(CLI::IsMember({"dual_rnn", "cnn"}));
  ab->add_option("--noise-rate", ab_noise);
  ab->add_flag("--no-margin-cap", ab_no_cap);
  int ab_topics = -1, ab_per_topic = -1, ab_test_per_topic = -1;
  ab->add_option("--topics", ab_topics, "override synthetic topic count");
  ab->add_option("--exchanges-per-topic", ab_per_topic);
  ab->add_option("--test-exchanges-per-topic", ab_test_per_topic);
  add_config_flag(ab);

  // ---- sweep-n ----
  auto* sw = app.add_subcommand("sweep-n",
                                "vary the candidate count per input");
  std::string sw_out = "out", sw_arch = "dual_rnn";
  std::vector<std::uint64_t> sw_seeds = {7};
  std::vector<std::size_t> sw_ns = {2, 5, 10};
  double sw_noise = 0.1;
  sw->add_option("--out", sw_out);
  sw->add_option("--seeds", sw_seeds)->delimiter(',');
  sw->add_option("--n-values", sw_ns)->delimiter(',');
  sw->add_option("--arch", sw_arch)
      ->check(CLI::IsMember({"dual_rnn", "cnn"}));
  sw->add_option("--noise-rate", sw_noise);
  int sw_topics = -1, sw_per_topic = -1, sw_test_per_topic = -1;
  sw->add_option("--topics", sw_topics, "override synthetic topic count");
  sw->add_option("--exchanges-per-topic", sw_per_topic);
  sw->add_option("--test-exchanges-per-topic", sw_test_per_topic);
  add_config_flag(sw);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ensure_out_dir(gen_out);
      gen_cfg.seed = gen_seed;
      gen_cfg.id_prefix = "train";
      SyntheticData train = generate_synthetic(gen_cfg);
      SyntheticConfig test_cfg = gen_cfg;
      test_cfg.exchanges_per_topic = gen_test_per_topic;
      test_cfg.seed = gen_seed ^ 0x7E57AB1E;
      test_cfg.id_prefix = "test";
      SyntheticData test = generate_synthetic(test_cfg);
      // Disjoint corpus for annotator training; see prepare_seed().
      SyntheticConfig aux_cfg = gen_cfg;
      aux_cfg.seed = gen_seed ^ 0xA22070;
      aux_cfg.id_prefix = "aux";
      SyntheticData aux = generate_synthetic(aux_cfg);
      save_corpus(train.exchanges, (fs::path(gen_out) / "train.jsonl").string());
      save_corpus(test.exchanges, (fs::path(gen_out) / "test.jsonl").string());
      save_corpus(aux.exchanges, (fs::path(gen_out) / "aux.jsonl").string());
      train.oracle.save((fs::path(gen_out) / "oracle.json").string());
      write_resolved_config(gen, gen_out);
      std::cout << "wrote " << train.exchanges.size() << " train / "
                << test.exchanges.size() << " test / " << aux.exchanges.size()
                << " aux exchanges to " << gen_out << "\n";
    } else if (ingest->parsed()) {
      ensure_out_dir(in_out);
      const auto corpus = load_corpus(in_corpus);
      if (corpus.empty()) throw std::runtime_error("corpus is empty");
      const Vocabulary vocab = build_vocabulary(corpus, in_vocab);
      vocab.save((fs::path(in_out) / "vocab.json").string());
      write_resolved_config(ingest, in_out);
      std::cout << corpus.size() << " exchanges, vocabulary size "
                << vocab.size() << "\n";
    } else if (bidx->parsed()) {
      ensure_out_dir(bi_out);
      const Vocabulary vocab = Vocabulary::load(bi_vocab);
      const auto corpus = encode_corpus(load_corpus(bi_corpus), vocab);
      InvertedIndex index = InvertedIndex::build(corpus);
      index.save((fs::path(bi_out) / "index.wsidx").string());
      write_resolved_config(bidx, bi_out);
      std::cout << "indexed " << index.doc_count() << " responses\n";
    } else if (tann->parsed()) {
      ensure_out_dir(ta_out);
      const Vocabulary vocab = Vocabulary::load(ta_vocab);
      const auto corpus = encode_corpus(load_corpus(ta_corpus), vocab);
      std::vector<AnnotatorPair> pairs;
      for (const Exchange& e : corpus) {
        pairs.emplace_back(flatten_context(e, kSeparator), e.response);
      }
      AnnotatorConfig acfg;
      acfg.vocab_size = vocab.size();
      acfg.hidden_size = ta_hidden;
      acfg.embedding_size = ta_emb;
      acfg.seed = ta_seed;
      AnnotatorTrainConfig atrain;
      atrain.seed = ta_seed;
      atrain.max_epochs = ta_epochs;
      atrain.patience = ta_patience;
      AnnotatorTrainReport rep;
      AnnotatorModel model = train_annotator(pairs, acfg, atrain, &rep);
      model.save((fs::path(ta_out) / "annotator.wspar").string());
      nlohmann::ordered_json j;
      j["best_epoch"] = rep.best_epoch;
      j["train_loss"] = rep.train_loss;
      j["val_perplexity"] = rep.val_perplexity;
      write_text((fs::path(ta_out) / "annotator_report.json").string(),
                 j.dump() + "\n");
      write_resolved_config(tann, ta_out);
      std::cout << "annotator trained, best epoch " << rep.best_epoch << "\n";
    } else if (ann->parsed()) {
      ensure_out_dir(an_out);
      const Vocabulary vocab = Vocabulary::load(an_vocab);
      const auto corpus = encode_corpus(load_corpus(an_corpus), vocab);
      std::vector<CandidateSet> sets;
      if (an_strategy == "retrieved") {
        if (an_index.empty()) {
          throw std::runtime_error(
              "annotate --strategy retrieved requires --index");
        }
        InvertedIndex index = InvertedIndex::load(an_index);
        sets = construct_training_set(corpus, index, an_n, kSeparator,
                                      an_seed);
      } else {
        sets = sample_random_negatives(corpus, an_n, kSeparator, an_seed);
      }
      const AnnotatorModel model = AnnotatorModel::load(an_model);
      annotate(model, sets);
      NormalizeOptions norm;
      norm.cap_enabled = !an_no_cap;
      normalize_signals(sets, norm);
      save_candidate_sets(sets, vocab,
                          (fs::path(an_out) / "candidates.jsonl").string());
      write_resolved_config(ann, an_out);
      std::cout << "annotated " << sets.size() << " candidate sets\n";
    } else if (tr->parsed()) {
      ensure_out_dir(tr_out);
      const Vocabulary vocab = Vocabulary::load(tr_vocab);
      auto sets = load_candidate_sets(tr_cands, vocab);
      TrainConfig cfg;
      cfg.objective = objective_from_string(tr_objective);
      cfg.seed = tr_seed;
      cfg.max_epochs = tr_epochs;
      cfg.const_margin = tr_eps;
      cfg.learning_rate = tr_lr;
      MatcherModel initial = [&] {
        if (!tr_init.empty()) return MatcherModel::load(tr_init);
        if (cfg.is_ws_family()) {
          throw std::runtime_error(
              "objective " + tr_objective +
              " must be initialized from a bce_random-pretrained snapshot "
              "(--init); weak-supervision fine-tuning starts from a model "
              "trained with random negatives");
        }
        MatcherConfig mcfg;
        mcfg.arch = matcher_arch_from_string(tr_arch);
        mcfg.vocab_size = vocab.size();
        mcfg.init_scale = tr_init_scale;
        mcfg.seed = tr_seed;
        return init_matcher(mcfg);
      }();
      // Deterministic validation split.
      Rng rng(tr_seed ^ 0x5A11D);
      std::vector<std::size_t> order(sets.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      std::size_t n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(tr_val_fraction * sets.size()));
      n_val = std::min(n_val, sets.size() - 1);
      std::vector<CandidateSet> val, data;
      for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? val : data).push_back(std::move(sets[order[i]]));
      }
      auto [model, report] = train(initial, data, cfg, val);
      model.save((fs::path(tr_out) / "matcher.wspar").string());
      write_text((fs::path(tr_out) / "train_report.json").string(),
                 report.to_json() + "\n");
      write_resolved_config(tr, tr_out);
      std::cout << "trained " << tr_objective << ", best epoch "
                << report.best_epoch << "\n";
    } else if (ev->parsed()) {
      ensure_out_dir(ev_out);
      const Vocabulary vocab = Vocabulary::load(ev_vocab);
      const MatcherModel model = MatcherModel::load(ev_matcher);
      std::vector<TestRecord> records;
      if (!ev_records.empty()) {
        // Labeled records: query ids resolve against --test-corpus contexts.
        if (ev_corpus.empty()) {
          throw std::runtime_error(
              "evaluate --records also needs --test-corpus to resolve query "
              "contexts");
        }
        const auto test_raw = load_corpus(ev_corpus);
        const auto test = encode_corpus(test_raw, vocab);
        std::map<std::string, const Exchange*> by_id;
        for (const Exchange& e : test) by_id[e.id] = &e;
        std::unique_ptr<InvertedIndex> index;
        if (!ev_index.empty()) {
          index = std::make_unique<InvertedIndex>(
              InvertedIndex::load(ev_index));
        }
        for (const RawEvalRecord& r : load_eval_records(ev_records)) {
          auto it = by_id.find(r.query_id);
          if (it == by_id.end()) {
            throw std::runtime_error("evaluate: query id " + r.query_id +
                                     " not in --test-corpus");
          }
          TestRecord t;
          t.query_id = r.query_id;
          t.input = flatten_context(*it->second, kSeparator);
          for (const auto& [text, label] : r.candidates) {
            t.candidates.push_back(vocab.encode(tokenize(text)));
            t.labels.push_back(label);
            t.tfidf.push_back(
                index ? index->tfidf_cosine(t.input, t.candidates.back())
                      : 0.0);
          }
          records.push_back(std::move(t));
        }
        if (ev_fuse && !index) {
          throw std::runtime_error("evaluate --fuse needs --index");
        }
      } else {
        if (ev_corpus.empty() || ev_oracle.empty() || ev_index.empty()) {
          throw std::runtime_error(
              "evaluate needs either --records or --test-corpus with "
              "--oracle and --index");
        }
        const auto test_raw = load_corpus(ev_corpus);
        const auto test = encode_corpus(test_raw, vocab);
        InvertedIndex index = InvertedIndex::load(ev_index);
        const SyntheticOracle oracle = SyntheticOracle::load(ev_oracle);
        records = build_test_records(test, test_raw, index, oracle, vocab,
                                     ev_n, ev_seed);
      }
      Metrics metrics;
      if (ev_fuse) {
        // Fit fusion weights on the first half, evaluate on all records.
        std::vector<FusionRecord> fit;
        for (std::size_t i = 0; i < records.size() / 2; ++i) {
          FusionRecord fr;
          for (std::size_t j = 0; j < records[i].candidates.size(); ++j) {
            fr.candidates.push_back(
                {matcher_score(model, records[i].input,
                               records[i].candidates[j]),
                 records[i].tfidf[j], records[i].labels[j]});
          }
          fit.push_back(std::move(fr));
        }
        const FusionWeights w = fit_fusion(fit, ev_seed);
        metrics = evaluate_on_test(model, records, &w);
        nlohmann::ordered_json jw;
        jw["w_model"] = w.w_model;
        jw["w_tfidf"] = w.w_tfidf;
        write_text((fs::path(ev_out) / "fusion.json").string(),
                   jw.dump() + "\n");
      } else {
        metrics = evaluate_on_test(model, records);
      }
      write_text((fs::path(ev_out) / "metrics.json").string(),
                 metrics_to_json(metrics) + "\n");
      write_resolved_config(ev, ev_out);
      std::cout << format_metrics_row("evaluate", metrics) << "\n";
    } else if (ab->parsed()) {
      ensure_out_dir(ab_out);
      PipelineConfig cfg = pipeline_config_for(ab_n, ab_noise, ab_arch);
      cfg.norm.cap_enabled = !ab_no_cap;
      if (ab_topics > 0) cfg.synth.topic_count = ab_topics;
      if (ab_per_topic > 0) cfg.synth.exchanges_per_topic = ab_per_topic;
      if (ab_test_per_topic > 0) cfg.test_exchanges_per_topic = ab_test_per_topic;
      std::vector<std::vector<AblationRow>> per_seed;
      for (const std::uint64_t seed : ab_seeds) {
        SeedRun run = prepare_seed(cfg, seed);
        per_seed.push_back(run_ablation(run, cfg));
      }
      // Average over seeds, preserving the four-row structure.
      nlohmann::ordered_json j;
      std::ostringstream table;
      nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < per_seed[0].size(); ++r) {
        std::vector<Metrics> ms;
        for (const auto& rows : per_seed) ms.push_back(rows[r].metrics);
        const Metrics mean = mean_metrics(ms);
        nlohmann::ordered_json jr;
        jr["name"] = per_seed[0][r].name;
        jr["metrics"] = metrics_json(mean);
        if (per_seed[0][r].name == "ws_const") {
          std::vector<double> eps;
          for (const auto& rows : per_seed) eps.push_back(rows[r].const_margin);
          jr["const_margin_per_seed"] = eps;
        }
        rows_json.push_back(std::move(jr));
        table << format_metrics_row(per_seed[0][r].name, mean) << "\n";
      }
      j["seeds"] = ab_seeds;
      j["rows"] = std::move(rows_json);
      write_text((fs::path(ab_out) / "ablation.json").string(),
                 j.dump() + "\n");
      write_text((fs::path(ab_out) / "ablation.txt").string(), table.str());
      write_resolved_config(ab, ab_out);
      std::cout << table.str();
    } else if (sw->parsed()) {
      ensure_out_dir(sw_out);
      PipelineConfig cfg = pipeline_config_for(sw_ns.empty() ? 10 : sw_ns[0],
                                               sw_noise, sw_arch);
      if (sw_topics > 0) cfg.synth.topic_count = sw_topics;
      if (sw_per_topic > 0) cfg.synth.exchanges_per_topic = sw_per_topic;
      if (sw_test_per_topic > 0) cfg.test_exchanges_per_topic = sw_test_per_topic;
      std::vector<std::vector<SweepRow>> per_seed;
      for (const std::uint64_t seed : sw_seeds) {
        per_seed.push_back(candidate_count_sweep(cfg, seed, sw_ns));
      }
      nlohmann::ordered_json j;
      std::ostringstream table;
      nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < per_seed[0].size(); ++r) {
        std::vector<Metrics> ms;
        for (const auto& rows : per_seed) ms.push_back(rows[r].metrics);
        const Metrics mean = mean_metrics(ms);
        nlohmann::ordered_json jr;
        jr["n"] = per_seed[0][r].n;
        jr["metrics"] = metrics_json(mean);
        rows_json.push_back(std::move(jr));
        table << format_metrics_row("n=" + std::to_string(per_seed[0][r].n),
                                    mean)
              << "\n";
      }
      j["seeds"] = sw_seeds;
      j["rows"] = std::move(rows_json);
      write_text((fs::path(sw_out) / "sweep.json").string(), j.dump() + "\n");
      write_text((fs::path(sw_out) / "sweep.txt").string(), table.str());
      write_resolved_config(sw, sw_out);
      std::cout << table.str();
    }
  } catch (const std::exception& ex) {
    log_error(ex.what());
    return 1;
  }
  return 0;
}
