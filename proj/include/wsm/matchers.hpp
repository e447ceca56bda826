#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsm/corpus.hpp"
#include "wsm/params.hpp"
#include "wsm/tape.hpp"

namespace wsm {

enum class MatcherArch { kDualRnn, kCnn };

std::string to_string(MatcherArch a);
MatcherArch matcher_arch_from_string(const std::string& s);

struct MatcherConfig {
  MatcherArch arch = MatcherArch::kDualRnn;
  std::size_t embedding_size = 32;
  std::size_t hidden_size = 32;
  std::size_t filter_count = 16;  // cnn only
  std::size_t filter_width = 3;   // cnn only
  std::size_t vocab_size = 0;
  double init_scale = 0.1;
  std::uint64_t seed = 7;
};

// A matching model M(x, y) -> (0, 1). The bilinear form / final layer start
// at zero, so a fresh model scores 0.5 for every pair.
struct MatcherModel {
  MatcherConfig config;
  ParameterStore params;

  void save(const std::string& path) const;
  static MatcherModel load(const std::string& path);
};

MatcherModel init_matcher(const MatcherConfig& config);

// Tape-level forward producing a scalar in (0,1); used by the training
// losses so gradients flow.
Var matcher_forward(Tape& tape, MatcherModel& model, const Utterance& x,
                    const Utterance& y);

// Scores every candidate against one input with the input-side encoding
// shared across the set.
std::vector<Var> matcher_forward_set(
    Tape& tape, MatcherModel& model, const Utterance& x,
    const std::vector<const Utterance*>& candidates);

// Forward-only convenience.
double matcher_score(const MatcherModel& model, const Utterance& x,
                     const Utterance& y);

}  // namespace wsm
