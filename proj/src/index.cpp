#include "wsm/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "wsm/log.hpp"
#include "wsm/rng.hpp"

namespace wsm {

namespace {
constexpr char kMagic[] = "WSIDX1";
}

std::string to_string(CandidateSource s) {
  switch (s) {
    case CandidateSource::kHuman:
      return "human";
    case CandidateSource::kRetrieved:
      return "retrieved";
    case CandidateSource::kRandom:
      return "random";
  }
  return "?";
}

CandidateSource candidate_source_from_string(const std::string& s) {
  if (s == "human") return CandidateSource::kHuman;
  if (s == "retrieved") return CandidateSource::kRetrieved;
  if (s == "random") return CandidateSource::kRandom;
  throw std::invalid_argument("unknown candidate source: " + s);
}

InvertedIndex InvertedIndex::build(const std::vector<Exchange>& corpus) {
  if (corpus.empty()) {
    throw std::invalid_argument("InvertedIndex: empty corpus");
  }
  InvertedIndex idx;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const Utterance& resp = corpus[d].response;
    std::unordered_map<int, std::int32_t> tf;
    for (int t : resp) ++tf[t];
    for (const auto& [t, f] : tf) {
      idx.postings_[t].push_back(
          {static_cast<std::int32_t>(d), f});
      ++idx.doc_freq_[t];
    }
    idx.doc_tokens_.push_back(resp);
    idx.doc_owners_.push_back(corpus[d].id);
  }
  for (auto& [t, list] : idx.postings_) {
    std::sort(list.begin(), list.end(),
              [](const Posting& a, const Posting& b) {
                return a.doc_id < b.doc_id;
              });
  }
  idx.doc_norms_.resize(corpus.size(), 0.0);
  const double n_docs = static_cast<double>(corpus.size());
  for (const auto& [t, list] : idx.postings_) {
    const double w_idf = std::log(n_docs / idx.doc_freq_[t]);
    for (const Posting& p : list) {
      const double w = p.tf * w_idf;
      idx.doc_norms_[p.doc_id] += w * w;
    }
  }
  for (double& n : idx.doc_norms_) n = std::sqrt(n);
  return idx;
}

double InvertedIndex::idf(int term) const {
  auto it = doc_freq_.find(term);
  if (it == doc_freq_.end()) return 0.0;
  return std::log(static_cast<double>(doc_count()) / it->second);
}

std::unordered_map<int, double> InvertedIndex::tfidf_vector(
    const Utterance& u) const {
  std::unordered_map<int, std::int32_t> tf;
  for (int t : u) ++tf[t];
  std::unordered_map<int, double> v;
  for (const auto& [t, f] : tf) {
    const double w = f * idf(t);
    if (w != 0.0) v[t] = w;
  }
  return v;
}

double InvertedIndex::tfidf_cosine(const Utterance& a,
                                   const Utterance& b) const {
  const auto va = tfidf_vector(a);
  const auto vb = tfidf_vector(b);
  if (va.empty() || vb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : va) {
    na += w * w;
    auto it = vb.find(t);
    if (it != vb.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : vb) nb += w * w;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<int, double>> InvertedIndex::retrieve(
    const Utterance& query, std::size_t k,
    const std::vector<int>& exclude) const {
  if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
  const auto qv = tfidf_vector(query);
  double qnorm = 0.0;
  for (const auto& [t, w] : qv) qnorm += w * w;
  qnorm = std::sqrt(qnorm);
  // Accumulate dot products over postings of the query's nonzero-idf terms.
  std::unordered_map<int, double> dot;
  for (const auto& [t, qw] : qv) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    const double w_idf = idf(t);
    for (const Posting& p : it->second) {
      dot[p.doc_id] += qw * (p.tf * w_idf);
    }
  }
  std::vector<std::pair<int, double>> scored;
  scored.reserve(dot.size());
  for (const auto& [d, dp] : dot) {
    if (dp <= 0.0) continue;
    if (std::find(exclude.begin(), exclude.end(), d) != exclude.end()) continue;
    scored.emplace_back(d, dp / (qnorm * doc_norms_[d]));
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kMagic, 6);
  const auto write_u64 = [&](std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) {
      buf[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(buf), 8);
  };
  write_u64(doc_tokens_.size());
  for (std::size_t d = 0; d < doc_tokens_.size(); ++d) {
    write_u64(doc_owners_[d].size());
    os.write(doc_owners_[d].data(),
             static_cast<std::streamsize>(doc_owners_[d].size()));
    write_u64(doc_tokens_[d].size());
    for (int t : doc_tokens_[d]) write_u64(static_cast<std::uint64_t>(t));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kMagic, 6) != 0) {
    throw std::runtime_error("not a WSIDX1 file: " + path);
  }
  const auto read_u64 = [&]() {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    return v;
  };
  std::vector<Exchange> docs(read_u64());
  for (Exchange& e : docs) {
    e.id.resize(read_u64());
    is.read(e.id.data(), static_cast<std::streamsize>(e.id.size()));
    e.response.resize(read_u64());
    for (int& t : e.response) t = static_cast<int>(read_u64());
    e.context.push_back({});  // placeholder; only responses are indexed
  }
  if (!is) throw std::runtime_error("truncated WSIDX1 file: " + path);
  return build(docs);
}

std::vector<CandidateSet> construct_training_set(
    const std::vector<Exchange>& corpus, const InvertedIndex& index,
    std::size_t n, int separator, std::uint64_t pad_seed) {
  if (n < 2) {
    throw std::invalid_argument("construct_training_set: n must be >= 2");
  }
  Rng pad_rng(pad_seed ^ 0x77u);
  std::vector<CandidateSet> sets;
  sets.reserve(corpus.size());
  std::size_t padded_sets = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Exchange& e = corpus[i];
    CandidateSet cs;
    cs.input_id = e.id;
    cs.input = flatten_context(e, separator);

    Candidate human;
    human.response = e.response;
    human.source = CandidateSource::kHuman;
    cs.candidates.push_back(std::move(human));

    const auto hits =
        index.retrieve(cs.input, n - 1, {static_cast<int>(i)});
    for (const auto& [doc, score] : hits) {
      Candidate c;
      c.response = index.doc_tokens(doc);
      c.source = CandidateSource::kRetrieved;
      c.doc_id = doc;
      c.duplicate_of_human = (c.response == e.response);
      cs.candidates.push_back(std::move(c));
    }
    if (cs.candidates.size() < n) ++padded_sets;
    while (cs.candidates.size() < n) {
      const std::size_t d = pad_rng.index(corpus.size());
      if (d == i && corpus.size() > 1) continue;
      Candidate c;
      c.response = corpus[d].response;
      c.source = CandidateSource::kRandom;
      c.doc_id = static_cast<int>(d);
      c.duplicate_of_human = (c.response == e.response);
      cs.candidates.push_back(std::move(c));
    }
    sets.push_back(std::move(cs));
  }
  if (padded_sets > 0) {
    log_warn("construct_training_set: index too small for n=" +
             std::to_string(n) + ", random-padded " +
             std::to_string(padded_sets) + " of " +
             std::to_string(sets.size()) + " sets");
  }
  return sets;
}

void save_candidate_sets(const std::vector<CandidateSet>& sets,
                         const Vocabulary& vocab, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const CandidateSet& cs : sets) {
    nlohmann::ordered_json j;
    j["input_id"] = cs.input_id;
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const Candidate& c : cs.candidates) {
      nlohmann::ordered_json jc;
      std::string text;
      for (const std::string& t : vocab.decode(c.response)) {
        if (!text.empty()) text += " ";
        text += t;
      }
      jc["text"] = text;
      jc["source"] = to_string(c.source);
      if (c.s_filled) {
        jc["s"] = c.s;
      } else {
        jc["s"] = nullptr;
      }
      if (c.s_prime_filled) {
        jc["s_prime"] = c.s_prime;
      } else {
        jc["s_prime"] = nullptr;
      }
      cands.push_back(std::move(jc));
    }
    j["candidates"] = std::move(cands);
    std::string input_text;
    for (const std::string& t : vocab.decode(cs.input)) {
      if (!input_text.empty()) input_text += " ";
      input_text += t;
    }
    j["input"] = input_text;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<CandidateSet> load_candidate_sets(const std::string& path,
                                              const Vocabulary& vocab) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::vector<CandidateSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CandidateSet cs;
      cs.input_id = j.at("input_id").get<std::string>();
      cs.input = vocab.encode(tokenize(j.at("input").get<std::string>()));
      for (const auto& jc : j.at("candidates")) {
        Candidate c;
        c.response = vocab.encode(tokenize(jc.at("text").get<std::string>()));
        c.source = candidate_source_from_string(jc.at("source"));
        if (jc.contains("s") && !jc["s"].is_null()) {
          c.s = jc["s"].get<double>();
          c.s_filled = true;
        }
        if (jc.contains("s_prime") && !jc["s_prime"].is_null()) {
          c.s_prime = jc["s_prime"].get<double>();
          c.s_prime_filled = true;
        }
        cs.candidates.push_back(std::move(c));
      }
      if (cs.candidates.empty() ||
          cs.candidates[0].source != CandidateSource::kHuman) {
        throw std::runtime_error("candidates[0] must be the human response");
      }
      sets.push_back(std::move(cs));
    } catch (const std::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed candidate set: " + ex.what());
    }
  }
  return sets;
}

}  // namespace wsm
