#pragma once

#include <functional>
#include <map>
#include <string>

#include "wsm/tensor.hpp"

namespace wsm {

struct Param {
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

// Named parameter set with per-parameter gradient buffers. Serialized as a
// versioned binary file (magic "WSPAR1"); round-trips are bit-exact.
class ParameterStore {
 public:
  Param& create(const std::string& name, std::size_t rows, std::size_t cols,
                bool trainable = true);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const {
    return params_.count(name) != 0;
  }

  void zero_grads();

  std::map<std::string, Param>& params() { return params_; }
  const std::map<std::string, Param>& params() const { return params_; }

  // Free-form header entries (architecture tag, hyperparameters).
  std::map<std::string, std::string> meta;

  void save(const std::string& path) const;
  static ParameterStore load(const std::string& path);

 private:
  std::map<std::string, Param> params_;
};

// theta <- theta - lr * grad for trainable parameters; frozen ones untouched.
void sgd_step(ParameterStore& store, double learning_rate);

// Compares analytic gradients against central finite differences on every
// coordinate of every trainable parameter. build_loss must be deterministic:
// it evaluates the loss at the store's current values, filling gradients only
// when requested. Returns the worst relative error seen.
double gradient_check(ParameterStore& store,
                      const std::function<double(bool want_grads)>& build_loss,
                      double eps = 1e-5);

}  // namespace wsm
