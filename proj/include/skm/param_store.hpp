#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "skm/tensor.hpp"

namespace skm {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named learnable tensors with per-parameter Adam state. Iteration order is
// insertion order, which keeps checkpoints and updates deterministic.
template <typename Scalar>
class ParamStore {
 public:
  using T = Tensor<Scalar>;
  using Array = typename T::Array;

  T& add(const std::string& name, const Shape& shape, Array init);
  // Uniform in [-bound, bound].
  T& add_uniform(const std::string& name, const Shape& shape, double bound, std::mt19937_64& rng);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  T& get(const std::string& name);
  const T& get(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  T& at(std::size_t i) { return entries_[i].tensor; }
  const T& at(std::size_t i) const { return entries_[i].tensor; }
  Index num_scalars() const;

  void zero_grad();
  void adam_step(const AdamConfig& config);
  long step_count(std::size_t i) const { return entries_[i].step; }

  // Little-endian: "SKMCKPT1", u32 version, u32 count, then per parameter
  // u32 name length, name bytes, u32 rank, u64 dims; afterwards all values
  // as float32 in the same order, each tensor row-major.
  std::string serialize() const;
  // Loads values for every stored name; shapes must match.
  void deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  void load(const std::string& path);

  // Same names and values in another scalar type, fresh optimizer state.
  template <typename To>
  ParamStore<To> cast(bool requires_grad = true) const {
    ParamStore<To> out;
    for (const auto& e : entries_) {
      out.add(e.name, e.tensor.shape(), e.tensor.value().template cast<To>());
      out.get(e.name).node()->requires_grad = requires_grad;
    }
    return out;
  }

 private:
  struct Entry {
    std::string name;
    T tensor;
    Array m;
    Array v;
    long step = 0;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skm
