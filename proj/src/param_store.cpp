#include "skm/param_store.hpp"

#include <cmath>
#include <cstring>

#include "skm/io.hpp"

namespace skm {

namespace {

constexpr char kMagic[8] = {'S', 'K', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t k = 0; k < sizeof(U); ++k) {
    buf[k] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xff);
  }
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename S>
Tensor<S>& ParamStore<S>::add(const std::string& name, const Shape& shape, Array init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  Entry e{name, T(shape, std::move(init), true), Array::Zero(shape_size(shape)),
          Array::Zero(shape_size(shape)), 0};
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back().tensor;
}

template <typename S>
Tensor<S>& ParamStore<S>::add_uniform(const std::string& name, const Shape& shape, double bound,
                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Array init(shape_size(shape));
  for (Index k = 0; k < init.size(); ++k) init[k] = static_cast<S>(u(rng));
  return add(name, shape, std::move(init));
}

template <typename S>
Tensor<S>& ParamStore<S>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return entries_[it->second].tensor;
}

template <typename S>
const Tensor<S>& ParamStore<S>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return entries_[it->second].tensor;
}

template <typename S>
Index ParamStore<S>::num_scalars() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

template <typename S>
void ParamStore<S>::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

template <typename S>
void ParamStore<S>::adam_step(const AdamConfig& c) {
  for (auto& e : entries_) {
    if (!e.tensor.has_grad()) continue;
    const Array& g = e.tensor.grad();
    ++e.step;
    e.m = static_cast<S>(c.beta1) * e.m + static_cast<S>(1 - c.beta1) * g;
    e.v = static_cast<S>(c.beta2) * e.v + static_cast<S>(1 - c.beta2) * g.square();
    const double bc1 = 1 - std::pow(c.beta1, static_cast<double>(e.step));
    const double bc2 = 1 - std::pow(c.beta2, static_cast<double>(e.step));
    Array& w = e.tensor.mutable_value();
    w -= static_cast<S>(c.lr) * (e.m / static_cast<S>(bc1)) /
         ((e.v / static_cast<S>(bc2)).sqrt() + static_cast<S>(c.eps));
    e.tensor.zero_grad();
  }
}

template <typename S>
std::string ParamStore<S>::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (Index d : e.tensor.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  }
  for (const auto& e : entries_) {
    for (Index k = 0; k < e.tensor.size(); ++k) {
      const float f = static_cast<float>(e.tensor.value()[k]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      put<std::uint32_t>(out, bits);
    }
  }
  return out;
}

template <typename S>
void ParamStore<S>::deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<std::pair<std::string, Shape>> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.take(r.get<std::uint32_t>());
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = static_cast<Index>(r.get<std::uint64_t>());
    table.emplace_back(std::move(name), std::move(shape));
  }
  std::vector<Array> values;
  for (const auto& [name, shape] : table) {
    Array v(shape_size(shape));
    for (Index k = 0; k < v.size(); ++k) {
      const std::uint32_t bits = r.get<std::uint32_t>();
      float f;
      std::memcpy(&f, &bits, sizeof f);
      v[k] = static_cast<S>(f);
    }
    values.push_back(std::move(v));
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  std::map<std::string, std::size_t> found;
  for (std::size_t i = 0; i < table.size(); ++i) found[table[i].first] = i;
  for (auto& e : entries_) {
    auto it = found.find(e.name);
    if (it == found.end()) throw CheckpointError("checkpoint lacks parameter " + e.name);
    if (table[it->second].second != e.tensor.shape()) {
      throw CheckpointError("parameter " + e.name + " has shape " +
                            shape_str(table[it->second].second) + " in checkpoint, expected " +
                            shape_str(e.tensor.shape()));
    }
    e.tensor.mutable_value() = values[it->second];
  }
}

template <typename S>
void ParamStore<S>::save(const std::string& path) const {
  write_file_atomic(path, serialize());
}

template <typename S>
void ParamStore<S>::load(const std::string& path) {
  deserialize(read_file(path));
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace skm
