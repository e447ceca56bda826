#pragma once

#include <string>

#include "wsm/params.hpp"
#include "wsm/rng.hpp"
#include "wsm/tape.hpp"

namespace wsm {

// Single-layer GRU cell parameters under a name prefix in a ParameterStore.
struct GruCell {
  static void create(ParameterStore& store, const std::string& prefix,
                     std::size_t in_dim, std::size_t hidden, Rng& rng,
                     double scale);

  // Leaf vars bound to one tape; bind once per tape and reuse across steps.
  struct Bound {
    Var wz, uz, bz;
    Var wr, ur, br;
    Var wh, uh, bh;
  };
  static Bound bind(Tape& tape, ParameterStore& store,
                    const std::string& prefix);

  // x: 1 x in_dim, h: 1 x hidden -> new hidden 1 x hidden.
  static Var step(Tape& tape, const Bound& c, Var x, Var h);
};

void init_uniform(Tensor& t, Rng& rng, double scale);

}  // namespace wsm
