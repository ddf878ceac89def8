#include "rawcycle/params.hpp"

#include "rawcycle/errors.hpp"
#include "rawcycle/hash.hpp"

namespace rawcycle {

Rng ParamStore::init_rng(const std::string& name) const {
  return Rng(init_seed_ ^ fnv1a64(name));
}

Tensor& ParamStore::get_or_create(const std::string& name,
                                  const std::function<Tensor()>& make) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    it = tensors_.emplace(name, make()).first;
    grads_.emplace(name, Tensor::zeros_like(it->second));
  }
  return it->second;
}

Tensor& ParamStore::tensor(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("unknown parameter \"" + name + "\"");
  return it->second;
}

const Tensor& ParamStore::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("unknown parameter \"" + name + "\"");
  return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ConfigError("unknown parameter \"" + name + "\"");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, t] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParamStore::count_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

std::size_t ParamStore::count_scalars(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_)
    if (name.compare(0, prefix.size(), prefix) == 0) n += t.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads_) g.fill(0.0);
}

}  // namespace rawcycle
