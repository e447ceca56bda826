#include "wsm/params.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace wsm {

namespace {

constexpr char kMagic[] = "WSPAR1";

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
  std::string s(read_u64(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace

Param& ParameterStore::create(const std::string& name, std::size_t rows,
                              std::size_t cols, bool trainable) {
  if (params_.count(name)) {
    throw std::invalid_argument("ParameterStore: duplicate name " + name);
  }
  Param& p = params_[name];
  p.value = Tensor(rows, cols);
  p.grad = Tensor(rows, cols);
  p.trainable = trainable;
  return p;
}

Param& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::invalid_argument("ParameterStore: unknown parameter " + name);
  }
  return it->second;
}

const Param& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::invalid_argument("ParameterStore: unknown parameter " + name);
  }
  return it->second;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

void ParameterStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kMagic, 6);
  write_u64(os, meta.size());
  for (const auto& [k, v] : meta) {
    write_str(os, k);
    write_str(os, v);
  }
  write_u64(os, params_.size());
  for (const auto& [name, p] : params_) {
    write_str(os, name);
    write_u64(os, p.value.rows());
    write_u64(os, p.value.cols());
    write_u64(os, p.trainable ? 1 : 0);
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

ParameterStore ParameterStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kMagic, 6) != 0) {
    throw std::runtime_error("not a WSPAR1 file: " + path);
  }
  ParameterStore store;
  const std::uint64_t n_meta = read_u64(is);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = read_str(is);
    store.meta[k] = read_str(is);
  }
  const std::uint64_t n_params = read_u64(is);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = read_str(is);
    const std::size_t rows = read_u64(is);
    const std::size_t cols = read_u64(is);
    const bool trainable = read_u64(is) != 0;
    std::vector<double> data(rows * cols);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    Param& p = store.params_[name];
    p.value = Tensor::from_data(rows, cols, std::move(data));
    p.grad = Tensor(rows, cols);
    p.trainable = trainable;
  }
  if (!is) throw std::runtime_error("truncated WSPAR1 file: " + path);
  return store;
}

void sgd_step(ParameterStore& store, double learning_rate) {
  for (auto& [name, p] : store.params()) {
    if (!p.trainable) continue;
    check_same_shape(p.value, p.grad, "sgd_step");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] -= learning_rate * p.grad[i];
    }
  }
}

double gradient_check(ParameterStore& store,
                      const std::function<double(bool)>& build_loss,
                      double eps) {
  store.zero_grads();
  build_loss(true);
  // Snapshot analytic gradients before the perturbation passes overwrite them.
  std::map<std::string, Tensor> analytic;
  for (auto& [name, p] : store.params()) {
    if (p.trainable) analytic[name] = p.grad;
  }
  double worst = 0.0;
  for (auto& [name, p] : store.params()) {
    if (!p.trainable) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double f_plus = build_loss(false);
      p.value[i] = saved - eps;
      const double f_minus = build_loss(false);
      p.value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[name][i];
      const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-6);
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace wsm
