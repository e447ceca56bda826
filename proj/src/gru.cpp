#include "wsm/gru.hpp"

namespace wsm {

void init_uniform(Tensor& t, Rng& rng, double scale) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-scale, scale);
  }
}

void GruCell::create(ParameterStore& store, const std::string& prefix,
                     std::size_t in_dim, std::size_t hidden, Rng& rng,
                     double scale) {
  const auto mk = [&](const std::string& name, std::size_t r, std::size_t c) {
    init_uniform(store.create(prefix + "." + name, r, c).value, rng, scale);
  };
  mk("wz", in_dim, hidden);
  mk("uz", hidden, hidden);
  store.create(prefix + ".bz", 1, hidden);
  mk("wr", in_dim, hidden);
  mk("ur", hidden, hidden);
  store.create(prefix + ".br", 1, hidden);
  mk("wh", in_dim, hidden);
  mk("uh", hidden, hidden);
  store.create(prefix + ".bh", 1, hidden);
}

GruCell::Bound GruCell::bind(Tape& tape, ParameterStore& store,
                             const std::string& prefix) {
  const auto p = [&](const std::string& name) {
    return tape.param(store.at(prefix + "." + name));
  };
  Bound b;
  b.wz = p("wz");
  b.uz = p("uz");
  b.bz = p("bz");
  b.wr = p("wr");
  b.ur = p("ur");
  b.br = p("br");
  b.wh = p("wh");
  b.uh = p("uh");
  b.bh = p("bh");
  return b;
}

Var GruCell::step(Tape& t, const Bound& c, Var x, Var h) {
  const Var z = t.sigmoid_(
      t.add(t.add(t.matmul(x, c.wz), t.matmul(h, c.uz)), c.bz));
  const Var r = t.sigmoid_(
      t.add(t.add(t.matmul(x, c.wr), t.matmul(h, c.ur)), c.br));
  const Var h_cand = t.tanh_(
      t.add(t.add(t.matmul(x, c.wh), t.matmul(t.mul(r, h), c.uh)), c.bh));
  // h' = (1 - z) * h + z * h_cand
  return t.add(t.sub(h, t.mul(z, h)), t.mul(z, h_cand));
}

}  // namespace wsm
