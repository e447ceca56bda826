#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "wsm/gru.hpp"
#include "wsm/params.hpp"
#include "wsm/rng.hpp"
#include "wsm/tape.hpp"

using namespace wsm;

namespace {
std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("d(w^2)/dw at w=3 is 6") {
  ParameterStore store;
  Param& w = store.create("w", 1, 1);
  w.value.at(0, 0) = 3.0;
  Tape tape;
  const Var wv = tape.param(w);
  const Var loss = tape.mul(wv, wv);
  CHECK(tape.scalar(loss) == doctest::Approx(9.0));
  store.zero_grads();
  tape.backward(loss);
  CHECK(w.grad.at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("sigmoid at 0: value 0.5, gradient 0.25") {
  ParameterStore store;
  Param& w = store.create("w", 1, 1);
  Tape tape;
  const Var s = tape.sigmoid_(tape.param(w));
  CHECK(tape.scalar(s) == doctest::Approx(0.5));
  store.zero_grads();
  tape.backward(s);
  CHECK(w.grad.at(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("relu subgradient at the kink is 0") {
  ParameterStore store;
  Param& w = store.create("w", 1, 1);  // exactly 0
  Tape tape;
  const Var r = tape.relu_(tape.param(w));
  store.zero_grads();
  tape.backward(r);
  CHECK(w.grad.at(0, 0) == 0.0);
}

TEST_CASE("max_over_rows routes gradient to the first argmax on ties") {
  ParameterStore store;
  Param& w = store.create("w", 3, 1);
  w.value.at(0, 0) = 2.0;
  w.value.at(1, 0) = 2.0;
  w.value.at(2, 0) = 1.0;
  Tape tape;
  const Var m = tape.max_over_rows(tape.param(w));
  CHECK(tape.scalar(m) == doctest::Approx(2.0));
  store.zero_grads();
  tape.backward(m);
  CHECK(w.grad.at(0, 0) == 1.0);
  CHECK(w.grad.at(1, 0) == 0.0);
  CHECK(w.grad.at(2, 0) == 0.0);
}

TEST_CASE("softmax rows sum to 1; log_softmax of equal logits is ln(1/C)") {
  Tape tape;
  Tensor logits(2, 4);
  logits.at(0, 0) = 5.0;
  logits.at(0, 1) = -2.0;
  const Var sm = tape.softmax_rows(tape.input(logits));
  for (std::size_t r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) sum += tape.value(sm).at(r, c);
    CHECK(sum == doctest::Approx(1.0));
  }
  // second row is all zeros -> uniform
  const Var lsm = tape.log_softmax_rows(tape.input(Tensor(1, 4)));
  CHECK(tape.value(lsm).at(0, 2) == doctest::Approx(std::log(0.25)));
}

TEST_CASE("gradient check: small MLP with every major op in the path") {
  ParameterStore store;
  Rng rng(11);
  auto& w1 = store.create("w1", 3, 5);
  auto& b1 = store.create("b1", 1, 5);
  auto& w2 = store.create("w2", 5, 1);
  init_uniform(w1.value, rng, 0.5);
  init_uniform(b1.value, rng, 0.5);
  init_uniform(w2.value, rng, 0.5);

  Tensor x(1, 3);
  x.at(0, 0) = 0.3;
  x.at(0, 1) = -0.7;
  x.at(0, 2) = 1.1;

  const auto build = [&](bool want_grads) {
    Tape tape;
    const Var h = tape.tanh_(tape.add(
        tape.matmul(tape.input(x), tape.param(store.at("w1"))),
        tape.param(store.at("b1"))));
    const Var out =
        tape.sigmoid_(tape.matmul(h, tape.param(store.at("w2"))));
    const Var loss = tape.mul(out, out);
    if (want_grads) tape.backward(loss);
    return tape.scalar(loss);
  };
  CHECK(gradient_check(store, build) < 1e-4);
}

TEST_CASE("gradient check: GRU step composed over two timesteps") {
  ParameterStore store;
  Rng rng(23);
  GruCell::create(store, "g", 3, 4, rng, 0.5);
  Tensor x1(1, 3), x2(1, 3);
  init_uniform(x1, rng, 1.0);
  init_uniform(x2, rng, 1.0);

  const auto build = [&](bool want_grads) {
    Tape tape;
    const auto cell = GruCell::bind(tape, store, "g");
    Var h = tape.input(Tensor(1, 4));
    h = GruCell::step(tape, cell, tape.input(x1), h);
    h = GruCell::step(tape, cell, tape.input(x2), h);
    const Var loss = tape.reduce_sum(tape.mul(h, h));
    if (want_grads) tape.backward(loss);
    return tape.scalar(loss);
  };
  CHECK(gradient_check(store, build) < 1e-4);
}

TEST_CASE("gradient check: embedding lookup with a repeated id") {
  ParameterStore store;
  Rng rng(31);
  auto& emb = store.create("emb", 6, 3);
  init_uniform(emb.value, rng, 0.5);
  const std::vector<int> ids = {2, 4, 2};  // repeat exercises scatter-add

  const auto build = [&](bool want_grads) {
    Tape tape;
    const Var rows = tape.embedding_rows(tape.param(store.at("emb")), ids);
    const Var loss = tape.reduce_sum(tape.mul(rows, rows));
    if (want_grads) tape.backward(loss);
    return tape.scalar(loss);
  };
  CHECK(gradient_check(store, build) < 1e-4);
}

TEST_CASE("sgd_step updates trainable parameters and skips frozen ones") {
  ParameterStore store;
  auto& a = store.create("a", 1, 1);
  auto& b = store.create("b", 1, 1, /*trainable=*/false);
  a.value.at(0, 0) = 1.0;
  a.grad.at(0, 0) = 0.5;
  b.value.at(0, 0) = 1.0;
  b.grad.at(0, 0) = 0.5;
  sgd_step(store, 0.1);
  CHECK(a.value.at(0, 0) == doctest::Approx(0.95));
  CHECK(b.value.at(0, 0) == 1.0);
}

TEST_CASE("parameter store round-trips bit-exactly with metadata") {
  ParameterStore store;
  Rng rng(5);
  auto& w = store.create("layer/w", 4, 7);
  init_uniform(w.value, rng, 3.0);
  store.create("layer/frozen", 2, 2, false).value.at(1, 1) = 0.1 + 0.2;
  store.meta["arch"] = "dual_rnn";
  store.meta["note"] = "round trip";

  const std::string path = tmp_path("wsm_store_test.bin");
  store.save(path);
  ParameterStore loaded = ParameterStore::load(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.contains("layer/w"));
  REQUIRE(loaded.contains("layer/frozen"));
  CHECK(loaded.meta == store.meta);
  CHECK_FALSE(loaded.at("layer/frozen").trainable);
  const auto& got = loaded.at("layer/w").value;
  REQUIRE(got.rows() == 4);
  REQUIRE(got.cols() == 7);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == w.value[i]);  // exact, not approximate
  }
  CHECK(loaded.at("layer/frozen").value.at(1, 1) == 0.1 + 0.2);
}

TEST_CASE("loading a corrupt parameter file fails") {
  const std::string path = tmp_path("wsm_store_bad.bin");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("NOTPAR", f);
  std::fclose(f);
  CHECK_THROWS(ParameterStore::load(path));
  std::filesystem::remove(path);
}
