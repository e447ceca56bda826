#include "wsm/matchers.hpp"

#include <stdexcept>

#include "wsm/gru.hpp"
#include "wsm/rng.hpp"

namespace wsm {

namespace {

void check_nonempty(const Utterance& x, const Utterance& y) {
  if (x.empty() || y.empty()) {
    throw std::invalid_argument("matcher: empty sequence");
  }
}

// Dual recurrent encoder bound to one tape.
struct DualRnnGraph {
  Tape& t;
  Var emb;
  GruCell::Bound xenc, yenc;
  Var w, b, h0;

  DualRnnGraph(Tape& tape, ParameterStore& store, std::size_t hidden)
      : t(tape),
        emb(tape.param(store.at("emb"))),
        xenc(GruCell::bind(tape, store, "xenc")),
        yenc(GruCell::bind(tape, store, "yenc")),
        w(tape.param(store.at("bilinear.w"))),
        b(tape.param(store.at("bilinear.b"))),
        h0(tape.input(Tensor(1, hidden))) {}

  Var encode(const GruCell::Bound& cell, const Utterance& seq) {
    const Var xs = t.embedding_rows(emb, seq);
    Var h = h0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      h = GruCell::step(t, cell, t.slice_rows(xs, i, i + 1), h);
    }
    return h;
  }

  // sigma(hx W hy^T + b)
  Var score(Var hx, Var hy) {
    return t.sigmoid_(t.add(t.matmul_nt(t.matmul(hx, w), hy), b));
  }
};

struct CnnGraph {
  Tape& t;
  const MatcherConfig& cfg;
  Var emb, conv_w, conv_b, mlp_w, mlp_b, out_w, out_b;

  CnnGraph(Tape& tape, ParameterStore& store, const MatcherConfig& config)
      : t(tape),
        cfg(config),
        emb(tape.param(store.at("emb"))),
        conv_w(tape.param(store.at("conv.w"))),
        conv_b(tape.param(store.at("conv.b"))),
        mlp_w(tape.param(store.at("mlp.w"))),
        mlp_b(tape.param(store.at("mlp.b"))),
        out_w(tape.param(store.at("out.w"))),
        out_b(tape.param(store.at("out.b"))) {}

  // Width-3 convolution + relu + max-over-time. The sequence is padded with
  // filter_width-1 trailing PADs and all-PAD windows are dropped, which
  // makes the pooled features invariant to trailing PAD in the input.
  Var features(const Utterance& seq) {
    const std::size_t w = cfg.filter_width;
    Utterance padded = seq;
    padded.insert(padded.end(), w - 1, Vocabulary::kPad);
    std::vector<int> window_ids;
    std::size_t n_windows = 0;
    for (std::size_t i = 0; i + w <= padded.size(); ++i) {
      bool all_pad = true;
      for (std::size_t k = 0; k < w; ++k) {
        if (padded[i + k] != Vocabulary::kPad) all_pad = false;
      }
      if (all_pad) continue;
      for (std::size_t k = 0; k < w; ++k) window_ids.push_back(padded[i + k]);
      ++n_windows;
    }
    if (n_windows == 0) {
      throw std::invalid_argument("cnn matcher: sequence is all PAD");
    }
    const Var rows = t.embedding_rows(emb, window_ids);
    const Var windows =
        t.reshape(rows, n_windows, w * cfg.embedding_size);
    const Var conv = t.relu_(t.add_row(t.matmul(windows, conv_w), conv_b));
    return t.max_over_rows(conv);
  }

  Var score(Var fx, Var fy) {
    const Var hidden = t.relu_(
        t.add(t.matmul(t.concat_cols(fx, fy), mlp_w), mlp_b));
    return t.sigmoid_(t.add(t.matmul(hidden, out_w), out_b));
  }
};

}  // namespace

std::string to_string(MatcherArch a) {
  return a == MatcherArch::kDualRnn ? "dual_rnn" : "cnn";
}

MatcherArch matcher_arch_from_string(const std::string& s) {
  if (s == "dual_rnn") return MatcherArch::kDualRnn;
  if (s == "cnn") return MatcherArch::kCnn;
  throw std::invalid_argument("unknown matcher architecture: " + s);
}

MatcherModel init_matcher(const MatcherConfig& config) {
  if (config.embedding_size < 1 || config.hidden_size < 1 ||
      config.filter_count < 1 || config.filter_width < 1 ||
      config.vocab_size < Vocabulary::kReserved + 1) {
    throw std::invalid_argument("init_matcher: bad config");
  }
  MatcherModel m;
  m.config = config;
  Rng rng(config.seed ^ 0x3A7C);
  const std::size_t e = config.embedding_size;
  const std::size_t h = config.hidden_size;
  init_uniform(m.params.create("emb", config.vocab_size, e).value, rng,
               config.init_scale);
  if (config.arch == MatcherArch::kDualRnn) {
    GruCell::create(m.params, "xenc", e, h, rng, config.init_scale);
    GruCell::create(m.params, "yenc", e, h, rng, config.init_scale);
    m.params.create("bilinear.w", h, h);  // zero
    m.params.create("bilinear.b", 1, 1);
  } else {
    const std::size_t f = config.filter_count;
    init_uniform(
        m.params.create("conv.w", config.filter_width * e, f).value, rng,
        config.init_scale);
    m.params.create("conv.b", 1, f);
    init_uniform(m.params.create("mlp.w", 2 * f, h).value, rng,
                 config.init_scale);
    m.params.create("mlp.b", 1, h);
    m.params.create("out.w", h, 1);  // zero: fresh model scores 0.5
    m.params.create("out.b", 1, 1);
  }
  m.params.meta["kind"] = "matcher";
  m.params.meta["arch"] = to_string(config.arch);
  m.params.meta["embedding_size"] = std::to_string(e);
  m.params.meta["hidden_size"] = std::to_string(h);
  m.params.meta["filter_count"] = std::to_string(config.filter_count);
  m.params.meta["filter_width"] = std::to_string(config.filter_width);
  m.params.meta["vocab_size"] = std::to_string(config.vocab_size);
  return m;
}

void MatcherModel::save(const std::string& path) const { params.save(path); }

MatcherModel MatcherModel::load(const std::string& path) {
  MatcherModel m;
  m.params = ParameterStore::load(path);
  if (m.params.meta.count("kind") == 0 || m.params.meta["kind"] != "matcher") {
    throw std::runtime_error("not a matcher model: " + path);
  }
  m.config.arch = matcher_arch_from_string(m.params.meta.at("arch"));
  m.config.embedding_size = std::stoul(m.params.meta.at("embedding_size"));
  m.config.hidden_size = std::stoul(m.params.meta.at("hidden_size"));
  m.config.filter_count = std::stoul(m.params.meta.at("filter_count"));
  m.config.filter_width = std::stoul(m.params.meta.at("filter_width"));
  m.config.vocab_size = std::stoul(m.params.meta.at("vocab_size"));
  return m;
}

std::vector<Var> matcher_forward_set(
    Tape& tape, MatcherModel& model, const Utterance& x,
    const std::vector<const Utterance*>& candidates) {
  if (x.empty()) throw std::invalid_argument("matcher: empty input");
  std::vector<Var> scores;
  scores.reserve(candidates.size());
  if (model.config.arch == MatcherArch::kDualRnn) {
    DualRnnGraph g(tape, model.params, model.config.hidden_size);
    const Var hx = g.encode(g.xenc, x);
    for (const Utterance* y : candidates) {
      check_nonempty(x, *y);
      scores.push_back(g.score(hx, g.encode(g.yenc, *y)));
    }
  } else {
    CnnGraph g(tape, model.params, model.config);
    const Var fx = g.features(x);
    for (const Utterance* y : candidates) {
      check_nonempty(x, *y);
      scores.push_back(g.score(fx, g.features(*y)));
    }
  }
  return scores;
}

Var matcher_forward(Tape& tape, MatcherModel& model, const Utterance& x,
                    const Utterance& y) {
  return matcher_forward_set(tape, model, x, {&y})[0];
}

double matcher_score(const MatcherModel& model, const Utterance& x,
                     const Utterance& y) {
  Tape tape;
  auto& m = const_cast<MatcherModel&>(model);
  return tape.scalar(matcher_forward(tape, m, x, y));
}

}  // namespace wsm
