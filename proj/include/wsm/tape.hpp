#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wsm/params.hpp"
#include "wsm/tensor.hpp"

namespace wsm {

// Reverse-mode autodiff over a define-by-run tape. Nodes are appended in
// forward order; backward() sweeps them in reverse and accumulates leaf
// gradients into the owning ParameterStore.
//
// Subgradient convention at relu / max kinks: the boundary point belongs to
// the flat side (gradient 0); max routes its gradient to the first argmax.
class Tape {
 public:
  struct Var {
    std::int32_t id = -1;
  };

  Var input(Tensor v);
  Var scalar_const(double v);
  // Leaf tied to a store parameter. Gradients reach p.grad on backward().
  Var param(Param& p);

  Var matmul(Var a, Var b);
  // a * b^T (used by attention scores against a stacked state matrix).
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // Broadcast a 1 x C bias over every row of a.
  Var add_row(Var a, Var bias);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var tanh_(Var a);
  Var sigmoid_(Var a);
  Var relu_(Var a);
  Var log_(Var a);
  // Clamp into [lo, hi]; gradient 0 outside the interval.
  Var clamp_(Var a, double lo, double hi);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  Var concat_cols(Var a, Var b);
  Var concat_rows(const std::vector<Var>& rows);
  Var slice_rows(Var a, std::size_t r0, std::size_t r1);
  // Row-major relabeling of extents; element count must match.
  Var reshape(Var a, std::size_t rows, std::size_t cols);
  // Gathers rows of an embedding matrix; backward scatter-adds.
  Var embedding_rows(Var emb, const std::vector<int>& ids);
  Var reduce_sum(Var a);
  // Column-wise max over rows -> 1 x C (max-over-time pooling).
  Var max_over_rows(Var a);
  Var pick(Var a, std::size_t r, std::size_t c);

  const Tensor& value(Var v) const { return nodes_[v.id].val; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Zeroes node gradients, seeds d(loss)/d(loss) = 1, sweeps in reverse.
  // Parameter gradients accumulate into their store (zero_grads() first if
  // a fresh gradient is wanted).
  void backward(Var loss);

  void reset();

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Tape&, Node&)> back;
  };

  Var push(Tensor val, std::function<void(Tape&, Node&)> back);
  Node& node(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace wsm
