#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rawcycle/rng.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Named learnable parameter collection for one model. Entries are created
// lazily on first use; each name gets its own init stream derived from the
// store seed, so initialization does not depend on creation order. The map
// is sorted by name, which fixes iteration order for the optimizer and for
// serialization.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

  std::uint64_t init_seed() const { return init_seed_; }

  // Random source tied to this parameter name alone.
  Rng init_rng(const std::string& name) const;

  // Returns the entry, running `make` to create it if absent.
  Tensor& get_or_create(const std::string& name, const std::function<Tensor()>& make);

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  Tensor& tensor(const std::string& name);
  const Tensor& tensor(const std::string& name) const;
  Tensor& grad(const std::string& name);

  const std::map<std::string, Tensor>& entries() const { return tensors_; }
  std::vector<std::string> names() const;
  std::size_t count_scalars() const;
  // Counts only entries whose name starts with `prefix` (one network branch,
  // one block, one layer).
  std::size_t count_scalars(const std::string& prefix) const;
  void zero_grads();

 private:
  std::uint64_t init_seed_;
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, Tensor> grads_;
};

}  // namespace rawcycle
