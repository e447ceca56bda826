#include "wsm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "wsm/log.hpp"
#include "wsm/rng.hpp"

namespace wsm {

namespace {

const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<bos>",
                                                  "<eos>"};

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

// Multi-byte whitespace we bother to recognize: NBSP, the U+2000 block,
// LINE/PARA separators, ideographic space.
std::size_t utf8_space_len(const std::string& s, std::size_t i) {
  const auto b = [&](std::size_t k) {
    return static_cast<unsigned char>(s[i + k]);
  };
  if (i + 1 < s.size() && b(0) == 0xC2 && b(1) == 0xA0) return 2;
  if (i + 2 < s.size() && b(0) == 0xE2 && b(1) == 0x80 &&
      (b(2) <= 0x8A || b(2) == 0xA8 || b(2) == 0xA9 || b(2) == 0xAF)) {
    return 3;
  }
  if (i + 2 < s.size() && b(0) == 0xE3 && b(1) == 0x80 && b(2) == 0x80) {
    return 3;
  }
  return 0;
}

bool is_edge_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    // strip punctuation from the edges
    std::size_t b = 0, e = cur.size();
    while (b < e && is_edge_punct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && is_edge_punct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (is_space_byte(c)) {
        flush();
      } else {
        cur.push_back(static_cast<char>(std::tolower(c)));
      }
      ++i;
      continue;
    }
    if (const std::size_t n = utf8_space_len(text, i); n > 0) {
      flush();
      i += n;
    } else {
      cur.push_back(text[i]);
      ++i;
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() {
  for (const std::string& t : kReservedTokens) {
    token_to_id_[t] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(t);
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = static_cast<int>(id_to_token_.size());
  token_to_id_[token] = id;
  id_to_token_.push_back(token);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::invalid_argument("Vocabulary: id out of range: " +
                                std::to_string(id));
  }
  return id_to_token_[id];
}

Utterance Vocabulary::encode(const std::vector<std::string>& tokens) const {
  Utterance u;
  u.reserve(tokens.size());
  for (const std::string& t : tokens) u.push_back(id(t));
  return u;
}

std::vector<std::string> Vocabulary::decode(const Utterance& u) const {
  std::vector<std::string> out;
  out.reserve(u.size());
  for (int id : u) out.push_back(token(id));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["tokens"] = std::vector<std::string>(id_to_token_.begin() + kReserved,
                                         id_to_token_.end());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump() << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json j;
  is >> j;
  Vocabulary v;
  for (const auto& t : j.at("tokens")) v.add(t.get<std::string>());
  return v;
}

Vocabulary build_vocabulary(const std::vector<RawExchange>& corpus,
                            std::size_t max_size) {
  if (corpus.empty()) {
    throw std::invalid_argument("build_vocabulary: empty corpus");
  }
  if (max_size < 5) {
    throw std::invalid_argument(
        "build_vocabulary: max_size must be at least 5 (4 reserved tokens + "
        "1), got " +
        std::to_string(max_size));
  }
  std::unordered_map<std::string, std::size_t> freq;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::size_t order = 0;
  const auto count = [&](const std::string& text) {
    for (const std::string& t : tokenize(text)) {
      if (freq[t]++ == 0) first_seen[t] = order++;
    }
  };
  for (const RawExchange& e : corpus) {
    for (const std::string& u : e.context) count(u);
    count(e.response);
  }
  std::vector<std::string> tokens;
  tokens.reserve(freq.size());
  for (const auto& [t, f] : freq) tokens.push_back(t);
  std::sort(tokens.begin(), tokens.end(),
            [&](const std::string& a, const std::string& b) {
              if (freq[a] != freq[b]) return freq[a] > freq[b];
              return first_seen[a] < first_seen[b];
            });
  if (tokens.size() > max_size - Vocabulary::kReserved) {
    tokens.resize(max_size - Vocabulary::kReserved);
  }
  Vocabulary v;
  for (const std::string& t : tokens) v.add(t);
  return v;
}

std::vector<Exchange> encode_corpus(const std::vector<RawExchange>& corpus,
                                    const Vocabulary& vocab) {
  std::vector<Exchange> out;
  out.reserve(corpus.size());
  for (const RawExchange& r : corpus) {
    Exchange e;
    e.id = r.id;
    for (const std::string& u : r.context) {
      e.context.push_back(vocab.encode(tokenize(u)));
    }
    e.response = vocab.encode(tokenize(r.response));
    e.label = r.label;
    e.topic_id = r.topic_id;
    out.push_back(std::move(e));
  }
  return out;
}

Utterance flatten_context(const Exchange& e, int separator) {
  if (e.context.empty()) {
    throw std::invalid_argument("flatten_context: empty context in " + e.id);
  }
  Utterance out;
  for (std::size_t i = 0; i < e.context.size(); ++i) {
    if (i > 0) out.push_back(separator);
    out.insert(out.end(), e.context[i].begin(), e.context[i].end());
  }
  return out;
}

std::vector<RawExchange> load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open corpus: " + path);
  std::vector<RawExchange> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      RawExchange e;
      e.id = j.at("id").get<std::string>();
      for (const auto& u : j.at("context")) {
        e.context.push_back(u.get<std::string>());
      }
      e.response = j.at("response").get<std::string>();
      if (j.contains("label")) e.label = j["label"].get<int>();
      if (j.contains("topic_id")) e.topic_id = j["topic_id"].get<int>();
      if (e.context.empty()) {
        throw std::runtime_error("empty context");
      }
      if (e.label && *e.label != 0 && *e.label != 1) {
        throw std::runtime_error("label must be 0 or 1");
      }
      if (tokenize(e.response).empty()) {
        log_warn(path + ":" + std::to_string(line_no) +
                 ": blank response, record skipped (id=" + e.id + ")");
        continue;
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record: " + ex.what());
    } catch (const std::runtime_error& ex) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record: " + ex.what());
    }
  }
  return out;
}

void save_corpus(const std::vector<RawExchange>& corpus,
                 const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const RawExchange& e : corpus) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["context"] = e.context;
    j["response"] = e.response;
    if (e.label) j["label"] = *e.label;
    if (e.topic_id) j["topic_id"] = *e.topic_id;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void SyntheticConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) {
      throw std::invalid_argument(std::string("SyntheticConfig: ") + name +
                                  " must be >= 1");
    }
  };
  positive(topic_count, "topic_count");
  positive(keywords_per_topic, "keywords_per_topic");
  positive(exchanges_per_topic, "exchanges_per_topic");
  positive(input_length_min, "input_length_min");
  positive(response_length_min, "response_length_min");
  if (input_length_max < input_length_min ||
      response_length_max < response_length_min) {
    throw std::invalid_argument("SyntheticConfig: bad length range");
  }
  if (noise_rate < 0.0 || noise_rate > 1.0) {
    throw std::invalid_argument("SyntheticConfig: noise_rate outside [0,1]");
  }
  if (keyword_sets_per_topic < 0) {
    throw std::invalid_argument(
        "SyntheticConfig: keyword_sets_per_topic must be >= 0");
  }
}

bool SyntheticOracle::relevant(
    int topic_id, const std::vector<std::string>& input_tokens,
    const std::vector<std::string>& response_tokens) const {
  if (topic_id < 0 || topic_id >= topic_count()) {
    throw std::invalid_argument("SyntheticOracle: unknown topic " +
                                std::to_string(topic_id));
  }
  const auto& rho = topic_maps_[topic_id];
  // Mapped targets of the input's distinct keywords.
  std::vector<std::string> mapped;
  for (const std::string& t : input_tokens) {
    auto it = rho.find(t);
    if (it == rho.end()) continue;
    if (std::find(mapped.begin(), mapped.end(), it->second) == mapped.end()) {
      mapped.push_back(it->second);
    }
  }
  if (mapped.empty()) return false;
  std::size_t hits = 0;
  for (const std::string& m : mapped) {
    if (std::find(response_tokens.begin(), response_tokens.end(), m) !=
        response_tokens.end()) {
      ++hits;
    }
  }
  return 2 * hits >= mapped.size();
}

bool SyntheticOracle::relevant(
    const RawExchange& x, const std::vector<std::string>& response_tokens) const {
  if (!x.topic_id) {
    throw std::invalid_argument("SyntheticOracle: exchange " + x.id +
                                " has no topic_id");
  }
  std::vector<std::string> input_tokens;
  for (const std::string& u : x.context) {
    for (std::string& t : tokenize(u)) input_tokens.push_back(std::move(t));
  }
  return relevant(*x.topic_id, input_tokens, response_tokens);
}

void SyntheticOracle::save(const std::string& path) const {
  nlohmann::ordered_json topics = nlohmann::ordered_json::array();
  for (const auto& m : topic_maps_) {
    nlohmann::ordered_json jm;
    for (const auto& [k, v] : m) jm[k] = v;
    topics.push_back(jm);
  }
  nlohmann::ordered_json j;
  j["topic_maps"] = topics;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump() << "\n";
}

SyntheticOracle SyntheticOracle::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json j;
  is >> j;
  std::vector<std::map<std::string, std::string>> maps;
  for (const auto& jm : j.at("topic_maps")) {
    std::map<std::string, std::string> m;
    for (auto it = jm.begin(); it != jm.end(); ++it) {
      m[it.key()] = it.value().get<std::string>();
    }
    maps.push_back(std::move(m));
  }
  return SyntheticOracle(std::move(maps));
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  static const std::vector<std::string> kFunctionWords = {
      "the", "a",   "is",  "it",  "so", "well", "oh",    "and",
      "to",  "do",  "you", "me",  "now", "then", "right"};
  Rng rng(config.seed);

  std::vector<std::map<std::string, std::string>> topic_maps(
      config.topic_count);
  std::vector<std::vector<std::string>> keywords(config.topic_count);
  std::vector<std::vector<std::string>> responses(config.topic_count);
  for (int t = 0; t < config.topic_count; ++t) {
    for (int i = 0; i < config.keywords_per_topic; ++i) {
      const std::string k =
          "k" + std::to_string(t) + "w" + std::to_string(i);
      // The response mapping is the identity bijection on each topic's
      // keyword set. Responses therefore share terms with their inputs,
      // which is what makes TF-IDF retrieval of hard negatives possible.
      keywords[t].push_back(k);
      responses[t].push_back(k);
      topic_maps[t][k] = k;
    }
  }

  SyntheticData data;
  int serial = 0;
  for (int t = 0; t < config.topic_count; ++t) {
    // Recurring keyword sets (see SyntheticConfig::keyword_sets_per_topic):
    // exchanges that draw the same set get near-duplicate gold responses,
    // differing only in noise and token order.
    std::vector<std::vector<std::string>> recurring;
    for (int s = 0; s < config.keyword_sets_per_topic; ++s) {
      int kw_count =
          rng.range(config.response_length_min, config.response_length_max);
      kw_count = std::min(kw_count, config.keywords_per_topic);
      std::vector<std::string> pool = keywords[t];
      rng.shuffle(pool);
      recurring.emplace_back(pool.begin(), pool.begin() + kw_count);
    }
    for (int e = 0; e < config.exchanges_per_topic; ++e) {
      std::vector<std::string> input_tokens;
      if (!recurring.empty()) {
        input_tokens = recurring[rng.index(recurring.size())];
      } else {
        int kw_count =
            rng.range(config.response_length_min, config.response_length_max);
        kw_count = std::min(kw_count, config.keywords_per_topic);
        // Distinct keywords for this input.
        std::vector<std::string> pool = keywords[t];
        rng.shuffle(pool);
        input_tokens.assign(pool.begin(), pool.begin() + kw_count);
      }
      const int kw_count = static_cast<int>(input_tokens.size());
      int input_len =
          rng.range(config.input_length_min, config.input_length_max);
      input_len = std::max(input_len, kw_count);
      for (int i = kw_count; i < input_len; ++i) {
        input_tokens.push_back(kFunctionWords[rng.index(kFunctionWords.size())]);
      }
      rng.shuffle(input_tokens);

      std::vector<std::string> response_tokens;
      for (const std::string& tok : input_tokens) {
        auto it = topic_maps[t].find(tok);
        if (it == topic_maps[t].end()) continue;
        if (rng.uniform() < config.noise_rate) {
          response_tokens.push_back(responses[t][rng.index(responses[t].size())]);
        } else {
          response_tokens.push_back(it->second);
        }
      }
      // Responses are bags of mapped keywords, not echoes: shuffling the
      // order leaves irreducible ordering entropy in p(y|x), as in natural
      // dialogue, instead of a memorizable token sequence.
      rng.shuffle(response_tokens);

      RawExchange ex;
      ex.id = config.id_prefix + "-" + std::to_string(serial++);
      std::string input_text;
      for (std::size_t i = 0; i < input_tokens.size(); ++i) {
        if (i > 0) input_text += " ";
        input_text += input_tokens[i];
      }
      std::string response_text;
      for (std::size_t i = 0; i < response_tokens.size(); ++i) {
        if (i > 0) response_text += " ";
        response_text += response_tokens[i];
      }
      ex.context = {input_text};
      ex.response = response_text;
      ex.topic_id = t;
      data.exchanges.push_back(std::move(ex));
    }
  }
  data.oracle = SyntheticOracle(std::move(topic_maps));
  return data;
}

}  // namespace wsm
