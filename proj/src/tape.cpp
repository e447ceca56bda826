#include "wsm/tape.hpp"

#include <algorithm>
#include <cmath>

#include "wsm/kernels.hpp"

namespace wsm {

Var Tape::push(Tensor val, std::function<void(Tape&, Node&)> back) {
  Node n;
  n.val = std::move(val);
  n.grad = Tensor(n.val.rows(), n.val.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::input(Tensor v) { return push(std::move(v), nullptr); }

Var Tape::scalar_const(double v) {
  Tensor t(1, 1);
  t[0] = v;
  return push(std::move(t), nullptr);
}

Var Tape::param(Param& p) {
  Param* sink = &p;
  return push(p.value, [sink](Tape&, Node& n) {
    kernels::axpy(1.0, n.grad, sink->grad);
  });
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + av.shape_str() +
                                " * " + bv.shape_str());
  }
  Tensor out(av.rows(), bv.cols());
  kernels::matmul(av, bv, out);
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    kernels::matmul_nt(n.grad, t.node(b).val, t.node(a).grad);
    kernels::matmul_tn(t.node(a).val, n.grad, t.node(b).grad);
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.cols()) {
    throw std::invalid_argument("matmul_nt: shape mismatch " + av.shape_str() +
                                " * " + bv.shape_str() + "^T");
  }
  Tensor out(av.rows(), bv.rows());
  kernels::matmul_nt(av, bv, out);
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    kernels::matmul(n.grad, t.node(b).val, t.node(a).grad);
    kernels::matmul_tn(n.grad, t.node(a).val, t.node(b).grad);
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  check_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    kernels::axpy(1.0, n.grad, t.node(a).grad);
    kernels::axpy(1.0, n.grad, t.node(b).grad);
  });
}

Var Tape::add_row(Var a, Var bias) {
  const Tensor& av = value(a);
  const Tensor& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw std::invalid_argument("add_row: bias " + bv.shape_str() +
                                " does not broadcast over " + av.shape_str());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += bv[c];
  }
  return push(std::move(out), [a, bias](Tape& t, Node& n) {
    kernels::axpy(1.0, n.grad, t.node(a).grad);
    Tensor& bg = t.node(bias).grad;
    for (std::size_t r = 0; r < n.grad.rows(); ++r) {
      for (std::size_t c = 0; c < n.grad.cols(); ++c) {
        bg[c] += n.grad.at(r, c);
      }
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  check_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    kernels::axpy(1.0, n.grad, t.node(a).grad);
    kernels::axpy(-1.0, n.grad, t.node(b).grad);
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  check_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    Tensor& gb = t.node(b).grad;
    const Tensor& av2 = t.node(a).val;
    const Tensor& bv2 = t.node(b).val;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i] * bv2[i];
      gb[i] += n.grad[i] * av2[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return push(std::move(out), [a, c](Tape& t, Node& n) {
    kernels::axpy(c, n.grad, t.node(a).grad);
  });
}

Var Tape::add_const(Var a, double c) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  return push(std::move(out), [a](Tape& t, Node& n) {
    kernels::axpy(1.0, n.grad, t.node(a).grad);
  });
}

Var Tape::tanh_(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
    }
  });
}

Var Tape::sigmoid_(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  }
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
    }
  });
}

Var Tape::relu_(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    const Tensor& av = t.node(a).val;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (av[i] > 0.0) ga[i] += n.grad[i];
    }
  });
}

Var Tape::log_(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    const Tensor& av = t.node(a).val;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i] / av[i];
    }
  });
}

Var Tape::clamp_(Var a, double lo, double hi) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(hi, std::max(lo, out[i]));
  }
  return push(std::move(out), [a, lo, hi](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    const Tensor& av = t.node(a).val;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (av[i] > lo && av[i] < hi) ga[i] += n.grad[i];
    }
  });
}

Var Tape::softmax_rows(Var a) {
  Tensor out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.data() + r * out.cols();
    double mx = row[0];
    for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] /= sum;
  }
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t r = 0; r < n.val.rows(); ++r) {
      const double* p = n.val.data() + r * n.val.cols();
      const double* g = n.grad.data() + r * n.grad.cols();
      double dot = 0.0;
      for (std::size_t c = 0; c < n.val.cols(); ++c) dot += p[c] * g[c];
      double* out_g = ga.data() + r * ga.cols();
      for (std::size_t c = 0; c < n.val.cols(); ++c) {
        out_g[c] += p[c] * (g[c] - dot);
      }
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  Tensor out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.data() + r * out.cols();
    double mx = row[0];
    for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) sum += std::exp(row[c] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] -= lse;
  }
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t r = 0; r < n.val.rows(); ++r) {
      const double* lp = n.val.data() + r * n.val.cols();
      const double* g = n.grad.data() + r * n.grad.cols();
      double gsum = 0.0;
      for (std::size_t c = 0; c < n.val.cols(); ++c) gsum += g[c];
      double* out_g = ga.data() + r * ga.cols();
      for (std::size_t c = 0; c < n.val.cols(); ++c) {
        out_g[c] += g[c] - std::exp(lp[c]) * gsum;
      }
    }
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rows() != bv.rows()) {
    throw std::invalid_argument("concat_cols: row mismatch " + av.shape_str() +
                                " vs " + bv.shape_str());
  }
  Tensor out(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out.at(r, c) = av.at(r, c);
    for (std::size_t c = 0; c < bv.cols(); ++c) {
      out.at(r, av.cols() + c) = bv.at(r, c);
    }
  }
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    Tensor& gb = t.node(b).grad;
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      for (std::size_t c = 0; c < ga.cols(); ++c) {
        ga.at(r, c) += n.grad.at(r, c);
      }
      for (std::size_t c = 0; c < gb.cols(); ++c) {
        gb.at(r, c) += n.grad.at(r, ga.cols() + c);
      }
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("concat_rows: empty input");
  std::size_t total = 0;
  const std::size_t cols = value(rows[0]).cols();
  for (Var v : rows) {
    if (value(v).cols() != cols) {
      throw std::invalid_argument("concat_rows: column mismatch");
    }
    total += value(v).rows();
  }
  Tensor out(total, cols);
  std::size_t r0 = 0;
  for (Var v : rows) {
    const Tensor& tv = value(v);
    std::copy(tv.data(), tv.data() + tv.size(), out.data() + r0 * cols);
    r0 += tv.rows();
  }
  return push(std::move(out), [rows](Tape& t, Node& n) {
    std::size_t r = 0;
    for (Var v : rows) {
      Tensor& g = t.node(v).grad;
      const double* src = n.grad.data() + r * n.grad.cols();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
      r += g.rows();
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t r0, std::size_t r1) {
  const Tensor& av = value(a);
  if (r0 >= r1 || r1 > av.rows()) {
    throw std::invalid_argument("slice_rows: bad range");
  }
  Tensor out(r1 - r0, av.cols());
  std::copy(av.data() + r0 * av.cols(), av.data() + r1 * av.cols(),
            out.data());
  return push(std::move(out), [a, r0](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    double* dst = ga.data() + r0 * ga.cols();
    for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
  });
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = value(a);
  if (rows * cols != av.size()) {
    throw std::invalid_argument("reshape: element count mismatch " +
                                av.shape_str() + " -> " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  Tensor out(rows, cols);
  std::copy(av.data(), av.data() + av.size(), out.data());
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
  });
}

Var Tape::embedding_rows(Var emb, const std::vector<int>& ids) {
  const Tensor& ev = value(emb);
  Tensor out(ids.size(), ev.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= ev.rows()) {
      throw std::invalid_argument("embedding_rows: id out of range: " +
                                  std::to_string(id));
    }
    std::copy(ev.data() + id * ev.cols(), ev.data() + (id + 1) * ev.cols(),
              out.data() + i * out.cols());
  }
  return push(std::move(out), [emb, ids](Tape& t, Node& n) {
    Tensor& ge = t.node(emb).grad;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = ge.data() + ids[i] * ge.cols();
      const double* src = n.grad.data() + i * n.grad.cols();
      for (std::size_t c = 0; c < n.grad.cols(); ++c) dst[c] += src[c];
    }
  });
}

Var Tape::reduce_sum(Var a) {
  const Tensor& av = value(a);
  Tensor out(1, 1);
  for (std::size_t i = 0; i < av.size(); ++i) out[0] += av[i];
  return push(std::move(out), [a](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[0];
  });
}

Var Tape::max_over_rows(Var a) {
  const Tensor& av = value(a);
  Tensor out(1, av.cols());
  std::vector<std::size_t> argmax(av.cols(), 0);
  for (std::size_t c = 0; c < av.cols(); ++c) {
    double best = av.at(0, c);
    for (std::size_t r = 1; r < av.rows(); ++r) {
      if (av.at(r, c) > best) {
        best = av.at(r, c);
        argmax[c] = r;
      }
    }
    out[c] = best;
  }
  return push(std::move(out), [a, argmax](Tape& t, Node& n) {
    Tensor& ga = t.node(a).grad;
    for (std::size_t c = 0; c < n.grad.cols(); ++c) {
      ga.at(argmax[c], c) += n.grad[c];
    }
  });
}

Var Tape::pick(Var a, std::size_t r, std::size_t c) {
  const Tensor& av = value(a);
  if (r >= av.rows() || c >= av.cols()) {
    throw std::invalid_argument("pick: index out of range");
  }
  Tensor out(1, 1);
  out[0] = av.at(r, c);
  return push(std::move(out), [a, r, c](Tape& t, Node& n) {
    t.node(a).grad.at(r, c) += n.grad[0];
  });
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) {
    throw std::invalid_argument("scalar: node is " + t.shape_str() +
                                ", expected 1x1");
  }
  return t[0];
}

void Tape::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                lv.shape_str());
  }
  for (Node& n : nodes_) n.grad.fill(0.0);
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this, n);
  }
}

void Tape::reset() { nodes_.clear(); }

}  // namespace wsm
