#include "wsm/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "wsm/gru.hpp"
#include "wsm/log.hpp"
#include "wsm/rng.hpp"

namespace wsm {

namespace {

// Per-tape bound view of the model parameters.
struct Seq2SeqGraph {
  Tape& t;
  Var emb;
  GruCell::Bound enc, dec;
  Var att_w, out_w, out_b;
  Var h0;

  Seq2SeqGraph(Tape& tape, ParameterStore& store, std::size_t hidden)
      : t(tape),
        emb(tape.param(store.at("emb"))),
        enc(GruCell::bind(tape, store, "enc")),
        dec(GruCell::bind(tape, store, "dec")),
        att_w(tape.param(store.at("att.wa"))),
        out_w(tape.param(store.at("out.w"))),
        out_b(tape.param(store.at("out.b"))),
        h0(tape.input(Tensor(1, hidden))) {}

  // Encoder states stacked into a T x H matrix.
  Var encode(const Utterance& x) {
    const Var xs = t.embedding_rows(emb, x);
    Var h = h0;
    std::vector<Var> states;
    states.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      h = GruCell::step(t, enc, t.slice_rows(xs, i, i + 1), h);
      states.push_back(h);
    }
    return t.concat_rows(states);
  }

  // Teacher-forced sum of log p(token | x, gold prefix) over y + EOS.
  Var sum_logprob(Var enc_states, const Utterance& y) {
    std::vector<int> dec_in;
    dec_in.push_back(Vocabulary::kBos);
    dec_in.insert(dec_in.end(), y.begin(), y.end());
    std::vector<int> targets(y.begin(), y.end());
    targets.push_back(Vocabulary::kEos);

    const Var in_emb = t.embedding_rows(emb, dec_in);
    const std::size_t t_enc = t.value(enc_states).rows();
    Var d = t.slice_rows(enc_states, t_enc - 1, t_enc);
    std::vector<Var> terms;
    terms.reserve(targets.size());
    for (std::size_t k = 0; k < targets.size(); ++k) {
      d = GruCell::step(t, dec, t.slice_rows(in_emb, k, k + 1), d);
      // Bilinear attention: e = (d W_a) H^T, context = softmax(e) H.
      const Var e = t.matmul_nt(t.matmul(d, att_w), enc_states);
      const Var alpha = t.softmax_rows(e);
      const Var context = t.matmul(alpha, enc_states);
      const Var logits =
          t.add(t.matmul(t.concat_cols(d, context), out_w), out_b);
      const Var logp = t.log_softmax_rows(logits);
      terms.push_back(t.pick(logp, 0, targets[k]));
    }
    Var total = terms[0];
    for (std::size_t k = 1; k < terms.size(); ++k) {
      total = t.add(total, terms[k]);
    }
    return total;
  }
};

void check_pair(const Utterance& x, const Utterance& y) {
  if (x.empty()) throw std::invalid_argument("annotator: empty input");
  if (y.empty()) {
    throw std::invalid_argument(
        "annotator: empty response has undefined likelihood");
  }
}

void meta_set(ParameterStore& store, const AnnotatorConfig& c) {
  store.meta["kind"] = "annotator";
  store.meta["cell"] = "gru";
  store.meta["embedding_size"] = std::to_string(c.embedding_size);
  store.meta["hidden_size"] = std::to_string(c.hidden_size);
  store.meta["vocab_size"] = std::to_string(c.vocab_size);
}

AnnotatorConfig meta_get(const ParameterStore& store) {
  AnnotatorConfig c;
  c.embedding_size = std::stoul(store.meta.at("embedding_size"));
  c.hidden_size = std::stoul(store.meta.at("hidden_size"));
  c.vocab_size = std::stoul(store.meta.at("vocab_size"));
  return c;
}

}  // namespace

AnnotatorModel init_annotator(const AnnotatorConfig& config) {
  if (config.vocab_size < Vocabulary::kReserved + 1) {
    throw std::invalid_argument("init_annotator: vocab_size too small");
  }
  AnnotatorModel m;
  m.config = config;
  Rng rng(config.seed ^ 0xA110);
  const std::size_t e = config.embedding_size;
  const std::size_t h = config.hidden_size;
  const std::size_t v = config.vocab_size;
  init_uniform(m.params.create("emb", v, e).value, rng, config.init_scale);
  GruCell::create(m.params, "enc", e, h, rng, config.init_scale);
  GruCell::create(m.params, "dec", e, h, rng, config.init_scale);
  init_uniform(m.params.create("att.wa", h, h).value, rng, config.init_scale);
  // Output projection starts at zero: the untrained model scores with a
  // uniform softmax over the vocabulary.
  m.params.create("out.w", 2 * h, v);
  m.params.create("out.b", 1, v);
  meta_set(m.params, config);
  return m;
}

void AnnotatorModel::save(const std::string& path) const {
  params.save(path);
}

AnnotatorModel AnnotatorModel::load(const std::string& path) {
  AnnotatorModel m;
  m.params = ParameterStore::load(path);
  if (m.params.meta.count("kind") == 0 || m.params.meta["kind"] != "annotator") {
    throw std::runtime_error("not an annotator model: " + path);
  }
  m.config = meta_get(m.params);
  return m;
}

double score(const AnnotatorModel& model, const Utterance& x,
             const Utterance& y) {
  check_pair(x, y);
  Tape tape;
  auto& params = const_cast<ParameterStore&>(model.params);
  Seq2SeqGraph g(tape, params, model.config.hidden_size);
  const Var states = g.encode(x);
  return tape.scalar(g.sum_logprob(states, y));
}

Var annotator_logprob(Tape& tape, AnnotatorModel& model, const Utterance& x,
                      const Utterance& y) {
  check_pair(x, y);
  Seq2SeqGraph g(tape, model.params, model.config.hidden_size);
  return g.sum_logprob(g.encode(x), y);
}

double perplexity(const AnnotatorModel& model,
                  const std::vector<AnnotatorPair>& pairs) {
  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  auto& params = const_cast<ParameterStore&>(model.params);
  Tape tape;
  for (const auto& [x, y] : pairs) {
    check_pair(x, y);
    tape.reset();
    Seq2SeqGraph g(tape, params, model.config.hidden_size);
    const Var states = g.encode(x);
    total_nll -= tape.scalar(g.sum_logprob(states, y));
    total_tokens += y.size() + 1;  // + EOS
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

AnnotatorModel train_annotator(const std::vector<AnnotatorPair>& pairs,
                               const AnnotatorConfig& model_config,
                               const AnnotatorTrainConfig& train_config,
                               AnnotatorTrainReport* report) {
  if (pairs.size() < 2) {
    throw std::invalid_argument("train_annotator: need at least 2 pairs");
  }
  if (train_config.patience < 1) {
    throw std::invalid_argument("train_annotator: patience must be >= 1");
  }
  if (train_config.validation_fraction <= 0.0 ||
      train_config.validation_fraction >= 1.0) {
    throw std::invalid_argument(
        "train_annotator: validation_fraction must be in (0,1)");
  }
  AnnotatorModel model = init_annotator(model_config);
  if (train_config.max_epochs == 0) {
    if (report) *report = {};
    return model;
  }

  Rng rng(train_config.seed ^ 0x5EED);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(
      std::max(1.0, std::floor(train_config.validation_fraction *
                               static_cast<double>(pairs.size()))));
  n_val = std::min(n_val, pairs.size() - 1);
  std::vector<AnnotatorPair> val, train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val : train).push_back(pairs[order[i]]);
  }

  AnnotatorTrainReport rep;
  ParameterStore best = model.params;
  double best_ppl = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
  Tape tape;
  for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    rng.shuffle(train);
    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    std::size_t in_batch = 0;
    model.params.zero_grads();
    for (const auto& [x, y] : train) {
      check_pair(x, y);
      tape.reset();
      Seq2SeqGraph g(tape, model.params, model.config.hidden_size);
      const Var states = g.encode(x);
      const Var sum_lp = g.sum_logprob(states, y);
      const double n_tokens = static_cast<double>(y.size() + 1);
      // Mean per-token cross-entropy.
      const Var loss = tape.scale(sum_lp, -1.0 / n_tokens);
      epoch_nll -= tape.scalar(sum_lp);
      epoch_tokens += y.size() + 1;
      tape.backward(loss);
      if (++in_batch == train_config.batch_size) {
        sgd_step(model.params,
                 train_config.learning_rate / static_cast<double>(in_batch));
        model.params.zero_grads();
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      sgd_step(model.params,
               train_config.learning_rate / static_cast<double>(in_batch));
      model.params.zero_grads();
    }
    rep.train_loss.push_back(epoch_nll /
                             static_cast<double>(epoch_tokens));
    const double ppl = perplexity(model, val);
    rep.val_perplexity.push_back(ppl);
    log_debug("annotator epoch " + std::to_string(epoch) + ": train_ce=" +
              std::to_string(rep.train_loss.back()) +
              " val_ppl=" + std::to_string(ppl));
    if (ppl < best_ppl) {
      best_ppl = ppl;
      best = model.params;
      rep.best_epoch = epoch;
      stale_epochs = 0;
    } else {
      if (++stale_epochs >= train_config.patience) break;
    }
  }
  model.params = best;
  if (report) *report = std::move(rep);
  return model;
}

void annotate(const AnnotatorModel& model, std::vector<CandidateSet>& sets) {
  auto& params = const_cast<ParameterStore&>(model.params);
  Tape tape;
  for (CandidateSet& cs : sets) {
    tape.reset();
    Seq2SeqGraph g(tape, params, model.config.hidden_size);
    // One encoder pass per set, shared across its candidates.
    const Var states = g.encode(cs.input);
    for (Candidate& c : cs.candidates) {
      c.s = tape.scalar(g.sum_logprob(states, c.response));
      c.s_filled = true;
    }
  }
}

void normalize_signals(CandidateSet& set, const NormalizeOptions& options) {
  if (set.candidates.empty()) {
    throw std::invalid_argument("normalize_signals: empty candidate set");
  }
  for (const Candidate& c : set.candidates) {
    if (!c.s_filled) {
      throw std::invalid_argument(
          "normalize_signals: weak score unfilled in set " + set.input_id);
    }
  }
  const double s1 = set.candidates[0].s;
  if (std::abs(s1) < 1e-12) {
    throw std::invalid_argument(
        "normalize_signals: human-response score is degenerate (|s1| < 1e-12) "
        "in set " +
        set.input_id);
  }
  for (Candidate& c : set.candidates) {
    double sp = std::max(0.0, c.s / s1 - 1.0);
    if (options.cap_enabled) sp = std::min(sp, options.cap);
    c.s_prime = sp;
    c.s_prime_filled = true;
  }
  set.candidates[0].s_prime = 0.0;  // exact by construction
}

void normalize_signals(std::vector<CandidateSet>& sets,
                       const NormalizeOptions& options) {
  for (CandidateSet& s : sets) normalize_signals(s, options);
}

void oracle_annotate(std::vector<CandidateSet>& sets,
                     const std::vector<RawExchange>& corpus,
                     const Vocabulary& vocab, const SyntheticOracle& oracle,
                     double gap) {
  std::unordered_map<std::string, const RawExchange*> by_id;
  for (const RawExchange& e : corpus) by_id[e.id] = &e;
  for (CandidateSet& cs : sets) {
    auto it = by_id.find(cs.input_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("oracle_annotate: unknown input id " +
                                  cs.input_id);
    }
    for (Candidate& c : cs.candidates) {
      const bool rel = oracle.relevant(*it->second, vocab.decode(c.response));
      c.s = rel ? -1.0 : -(1.0 + gap);
      c.s_filled = true;
    }
  }
}

}  // namespace wsm
