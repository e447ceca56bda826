#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <doctest.h>

#include "wsm/corpus.hpp"

using namespace wsm;

namespace {
std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("tokenize lowercases, splits, and strips edge punctuation") {
  CHECK(tokenize("Hello, World!") ==
        std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("  a   b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("vocabulary reserves pad/unk/bos/eos and ranks by frequency") {
  std::vector<RawExchange> corpus(1);
  corpus[0].context = {"b a b"};
  corpus[0].response = "a b c a";
  const Vocabulary v = build_vocabulary(corpus, 8);
  CHECK(v.id("<pad>") == Vocabulary::kPad);
  CHECK(v.id("<unk>") == Vocabulary::kUnk);
  CHECK(v.id("<bos>") == Vocabulary::kBos);
  CHECK(v.id("<eos>") == Vocabulary::kEos);
  // a appears 3x, b 3x (tie broken by first occurrence: b first), c once.
  CHECK(v.id("b") == Vocabulary::kReserved);
  CHECK(v.id("a") == Vocabulary::kReserved + 1);
  CHECK(v.id("c") == Vocabulary::kReserved + 2);
  CHECK(v.id("zzz") == Vocabulary::kUnk);
  CHECK(v.token(v.id("a")) == "a");
}

TEST_CASE("vocabulary max_size truncates after the most frequent tokens") {
  std::vector<RawExchange> corpus(1);
  corpus[0].context = {"x x x y y z"};
  corpus[0].response = "";
  const Vocabulary v = build_vocabulary(corpus, 6);  // 4 reserved + 2 slots
  CHECK(v.size() == 6);
  CHECK(v.id("x") != Vocabulary::kUnk);
  CHECK(v.id("y") != Vocabulary::kUnk);
  CHECK(v.id("z") == Vocabulary::kUnk);
}

TEST_CASE("max_size below the reserved count is rejected") {
  CHECK_THROWS(build_vocabulary({}, 4));
}

TEST_CASE("vocabulary save/load round-trip") {
  std::vector<RawExchange> corpus(1);
  corpus[0].context = {"alpha beta"};
  corpus[0].response = "gamma";
  const Vocabulary v = build_vocabulary(corpus, 100);
  const std::string path = tmp_path("wsm_vocab_test.json");
  v.save(path);
  const Vocabulary w = Vocabulary::load(path);
  std::filesystem::remove(path);
  CHECK(w.size() == v.size());
  CHECK(w.id("beta") == v.id("beta"));
  CHECK(w.token(5) == v.token(5));
}

TEST_CASE("flatten_context joins utterances with the separator") {
  Exchange e;
  e.context = {{10, 11}, {12}, {13, 14}};
  CHECK(flatten_context(e, 3) == Utterance{10, 11, 3, 12, 3, 13, 14});
  Exchange single;
  single.context = {{10, 11}};
  CHECK(flatten_context(single, 3) == Utterance{10, 11});
  Exchange empty;
  CHECK_THROWS(flatten_context(empty, 3));
}

TEST_CASE("corpus JSONL round-trip preserves fields") {
  std::vector<RawExchange> corpus(2);
  corpus[0].id = "q1";
  corpus[0].context = {"how are you", "fine thanks"};
  corpus[0].response = "glad to hear";
  corpus[1].id = "q2";
  corpus[1].context = {"hello"};
  corpus[1].response = "hi";
  corpus[1].label = 1;
  corpus[1].topic_id = 3;
  const std::string path = tmp_path("wsm_corpus_test.jsonl");
  save_corpus(corpus, path);
  const auto loaded = load_corpus(path);
  std::filesystem::remove(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "q1");
  CHECK(loaded[0].context == corpus[0].context);
  CHECK(loaded[0].response == "glad to hear");
  CHECK_FALSE(loaded[0].label.has_value());
  CHECK(loaded[1].label == 1);
  CHECK(loaded[1].topic_id == 3);
}

TEST_CASE("malformed corpus lines abort with the line number") {
  const std::string path = tmp_path("wsm_corpus_bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id":"a","context":["x"],"response":"y"})" << "\n";
    out << "this is not json\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_corpus(path)),
                       doctest::Contains(":2:"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("blank-response records are skipped, not fatal") {
  const std::string path = tmp_path("wsm_corpus_blank.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id":"a","context":["x"],"response":""})" << "\n";
    out << R"({"id":"b","context":["x"],"response":"ok"})" << "\n";
  }
  const auto loaded = load_corpus(path);
  std::filesystem::remove(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == "b");
}

TEST_CASE("synthetic generation is a pure function of the seed") {
  SyntheticConfig cfg;
  cfg.topic_count = 2;
  cfg.exchanges_per_topic = 20;
  cfg.noise_rate = 0.25;
  cfg.seed = 99;
  const SyntheticData a = generate_synthetic(cfg);
  const SyntheticData b = generate_synthetic(cfg);
  REQUIRE(a.exchanges.size() == b.exchanges.size());
  REQUIRE(a.exchanges.size() == 40);
  for (std::size_t i = 0; i < a.exchanges.size(); ++i) {
    CHECK(a.exchanges[i].id == b.exchanges[i].id);
    CHECK(a.exchanges[i].context == b.exchanges[i].context);
    CHECK(a.exchanges[i].response == b.exchanges[i].response);
    CHECK(a.exchanges[i].topic_id == b.exchanges[i].topic_id);
  }
  cfg.seed = 100;
  const SyntheticData c = generate_synthetic(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.exchanges.size() && !any_diff; ++i) {
    any_diff = a.exchanges[i].context != c.exchanges[i].context;
  }
  CHECK(any_diff);
}

TEST_CASE("synthetic responses respect the keyword mapping (noise-free)") {
  SyntheticConfig cfg;
  cfg.topic_count = 2;
  cfg.exchanges_per_topic = 30;
  cfg.noise_rate = 0.0;
  cfg.seed = 7;
  const SyntheticData data = generate_synthetic(cfg);
  for (const RawExchange& e : data.exchanges) {
    REQUIRE(e.topic_id.has_value());
    const auto& map = data.oracle.topic_map(*e.topic_id);
    const auto input = tokenize(e.context.at(0));
    const auto response = tokenize(e.response);
    // every input keyword of this topic must map into the response
    std::set<std::string> expected;
    for (const auto& tok : input) {
      const auto it = map.find(tok);
      if (it != map.end()) expected.insert(it->second);
    }
    CHECK(expected.size() == response.size());
    for (const auto& r : response) CHECK(expected.count(r) == 1);
    // and the oracle agrees the gold response is relevant
    CHECK(data.oracle.relevant(e, response));
  }
}

TEST_CASE("oracle relevance: at least half of the mapped keywords") {
  // identity-style map of one topic with 4 keywords
  std::map<std::string, std::string> m = {{"k0", "r0"},
                                          {"k1", "r1"},
                                          {"k2", "r2"},
                                          {"k3", "r3"}};
  const SyntheticOracle oracle({m});
  const std::vector<std::string> input = {"k0", "k1", "k2", "k3", "the"};
  CHECK(oracle.relevant(0, input, {"r0", "r1", "r2", "r3"}));
  CHECK(oracle.relevant(0, input, {"r0", "r1"}));        // exactly half
  CHECK_FALSE(oracle.relevant(0, input, {"r0"}));        // below half
  CHECK_FALSE(oracle.relevant(0, input, {"the", "is"}));
  // duplicated hits do not double-count
  CHECK_FALSE(oracle.relevant(0, input, {"r0", "r0", "r0", "r0"}));
}

TEST_CASE("oracle save/load round-trip") {
  SyntheticConfig cfg;
  cfg.topic_count = 3;
  cfg.exchanges_per_topic = 5;
  const SyntheticData data = generate_synthetic(cfg);
  const std::string path = tmp_path("wsm_oracle_test.json");
  data.oracle.save(path);
  const SyntheticOracle loaded = SyntheticOracle::load(path);
  std::filesystem::remove(path);
  REQUIRE(loaded.topic_count() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(loaded.topic_map(t) == data.oracle.topic_map(t));
  }
}

TEST_CASE("encode_corpus maps unseen tokens to <unk>") {
  std::vector<RawExchange> corpus(1);
  corpus[0].context = {"alpha beta"};
  corpus[0].response = "alpha";
  const Vocabulary v = build_vocabulary(corpus, 100);
  std::vector<RawExchange> other(1);
  other[0].id = "x";
  other[0].context = {"alpha mystery"};
  other[0].response = "beta";
  const auto encoded = encode_corpus(other, v);
  REQUIRE(encoded.size() == 1);
  REQUIRE(encoded[0].context.size() == 1);
  CHECK(encoded[0].context[0] ==
        Utterance{v.id("alpha"), Vocabulary::kUnk});
  CHECK(encoded[0].response == Utterance{v.id("beta")});
}
