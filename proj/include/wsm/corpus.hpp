#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wsm {

// Token ids into a Vocabulary.
using Utterance = std::vector<int>;

// One conversational exchange as it appears on disk, before encoding.
struct RawExchange {
  std::string id;
  std::vector<std::string> context;  // utterance texts, oldest first
  std::string response;
  std::optional<int> label;     // binary relevance, test data only
  std::optional<int> topic_id;  // synthetic corpora only
};

// Id-encoded exchange.
struct Exchange {
  std::string id;
  std::vector<Utterance> context;
  Utterance response;
  std::optional<int> label;
  std::optional<int> topic_id;
};

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  // Adds a token if absent; returns its id. Respects no size limit (used by
  // the builder, which enforces max_size before insertion).
  int add(const std::string& token);

  int id(const std::string& token) const;  // kUnk for out-of-vocabulary
  const std::string& token(int id) const;
  std::size_t size() const { return id_to_token_.size(); }

  Utterance encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const Utterance& u) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Lowercase, split on whitespace, strip punctuation from token edges.
std::vector<std::string> tokenize(const std::string& text);

// Frequency-ranked vocabulary, ties broken by first occurrence. max_size
// counts the 4 reserved tokens; max_size < 5 is a configuration error.
Vocabulary build_vocabulary(const std::vector<RawExchange>& corpus,
                            std::size_t max_size);

std::vector<Exchange> encode_corpus(const std::vector<RawExchange>& corpus,
                                    const Vocabulary& vocab);

// Joins context utterances with `separator` between consecutive ones.
Utterance flatten_context(const Exchange& e, int separator);

// JSONL, one exchange per line. Blank-response records are skipped with a
// line-numbered warning; malformed lines abort with the line number.
std::vector<RawExchange> load_corpus(const std::string& path);
void save_corpus(const std::vector<RawExchange>& corpus,
                 const std::string& path);

struct SyntheticConfig {
  int topic_count = 4;
  int keywords_per_topic = 80;
  int exchanges_per_topic = 500;
  int input_length_min = 8;
  int input_length_max = 10;
  // Equal-length responses keep summed log-likelihood scores comparable
  // across candidates (see default_pipeline_config).
  int response_length_min = 8;
  int response_length_max = 8;
  double noise_rate = 0.0;
  // When > 0, each topic pre-draws this many recurring keyword sets and
  // every input samples one of them instead of a fresh keyword combination.
  // Real chat logs repeat common queries, so a retrieval index frequently
  // returns a near-duplicate of an input's own gold response; 0 keeps every
  // input's keyword set independent.
  int keyword_sets_per_topic = 0;
  std::uint64_t seed = 7;
  std::string id_prefix = "synth";

  void validate() const;
};

// Ground-truth relevance for synthetic corpora: (x, y) is relevant iff y
// contains at least half of the response tokens mapped from x's keywords.
class SyntheticOracle {
 public:
  SyntheticOracle() = default;
  explicit SyntheticOracle(
      std::vector<std::map<std::string, std::string>> topic_maps)
      : topic_maps_(std::move(topic_maps)) {}

  bool relevant(int topic_id, const std::vector<std::string>& input_tokens,
                const std::vector<std::string>& response_tokens) const;
  bool relevant(const RawExchange& x,
                const std::vector<std::string>& response_tokens) const;

  int topic_count() const { return static_cast<int>(topic_maps_.size()); }
  const std::map<std::string, std::string>& topic_map(int t) const {
    return topic_maps_.at(t);
  }

  void save(const std::string& path) const;
  static SyntheticOracle load(const std::string& path);

 private:
  std::vector<std::map<std::string, std::string>> topic_maps_;
};

struct SyntheticData {
  std::vector<RawExchange> exchanges;
  SyntheticOracle oracle;
};

// Pure function of config.seed.
SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace wsm
