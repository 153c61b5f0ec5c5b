#include "skm/networks.hpp"

#include <cmath>
#include <cstdio>

namespace skm {

namespace {

template <typename S>
Tensor<S> lrelu(const Tensor<S>& x) {
  return leaky_relu(x, S(0.2));
}

SkeletalConvSpec conv_spec(const SkeletonTopology& topology, int d, int in, int out,
                           int static_channels, int kernel, int stride) {
  SkeletalConvSpec s;
  s.neighbours = armature_neighbourhoods(topology, d);
  s.in_channels.assign(num_slots(topology), in);
  s.out_channels.assign(num_slots(topology), out);
  s.static_channels = static_channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

SkeletalConvSpec root_wide(SkeletalConvSpec s, bool input, bool output) {
  const int r = static_cast<int>(s.neighbours.size()) - 1;
  if (input) s.in_channels[r] = kRootChannels;
  if (output) s.out_channels[r] = kRootChannels;
  return s;
}

template <typename S>
void check_frames(const Tensor<S>& dynamics, const SkeletonTopology& topology) {
  if (dynamics.rank() != 3 || dynamics.dim(1) != num_slots(topology) ||
      dynamics.dim(2) != kRootChannels) {
    throw ShapeError("model: dynamics " + shape_str(dynamics.shape()) + " do not match " +
                     std::to_string(num_slots(topology)) + " slots x 7 channels");
  }
  if (dynamics.dim(0) % 4 != 0) {
    throw ShapeError("model: frame count " + std::to_string(dynamics.dim(0)) +
                     " is not divisible by 4");
  }
}

}  // namespace

ConventionalDims conventional_table_preset() { return {144, 112, 144}; }

template <typename S>
Tensor<S> static_input(const Offsets& offsets, double height) {
  const Index J = offsets.rows();
  typename Tensor<S>::Array v = Tensor<S>::Array::Zero((J + 1) * 3);
  for (Index e = 0; e < J; ++e) {
    for (int c = 0; c < 3; ++c) v[e * 3 + c] = static_cast<S>(offsets(e, c) / height);
  }
  return Tensor<S>({J + 1, 3}, std::move(v));
}

template <typename S>
Tensor<S> pack_dynamics(const Tensor<S>& rotations, const Tensor<S>& root) {
  const Index T = rotations.dim(0), J = rotations.dim(1);
  const Tensor<S> edges =
      concat<S>({rotations, Tensor<S>::zeros({T, J, kRootChannels - kEdgeChannels})}, 2);
  return concat<S>({edges, root.reshape({T, 1, kRootChannels})}, 1);
}

template <typename S>
DecodedMotion<S> unpack_dynamics(const Tensor<S>& raw) {
  const Index T = raw.dim(0), J = raw.dim(1) - 1;
  DecodedMotion<S> out;
  out.rotations = normalize(slice(slice(raw, 1, 0, J), 2, 0, kEdgeChannels), 4);
  const Tensor<S> root = slice(raw, 1, J, J + 1).reshape({T, kRootChannels});
  out.root = concat<S>({slice(root, 1, 0, 3), normalize(slice(root, 1, 3, 7), 4)}, 1);
  return out;
}

template <typename S>
DomainModel<S>::DomainModel(const SkeletonTopology& topology, const NetworkConfig& config,
                            ParamStore<S>& generator, ParamStore<S>* discriminator,
                            const std::string& name, std::mt19937_64& rng)
    : topology_(topology),
      config_(config),
      plan_(build_pooling_plan(topology, config.p)),
      stages_(network_pool_stages(plan_, 2)),
      level_topologies_(network_level_topologies(plan_, 2)),
      has_discriminator_(discriminator != nullptr) {
  const auto& l0 = level_topologies_[0];
  const auto& l1 = level_topologies_[1];
  const int k = config.kernel, d = config.d, c1 = config.block1_channels,
            c2 = config.latent_channels, cs = config.static_channels;
  static_enc_ = SkeletalConv<S>(conv_spec(l0, d, 3, cs, 0, 1, 1), generator, name + ".static", rng);
  enc1_ = SkeletalConv<S>(root_wide(conv_spec(l0, d, kEdgeChannels, c1, 3, k, 2), true, false),
                          generator, name + ".enc1", rng);
  enc2_ = SkeletalConv<S>(conv_spec(l1, d, c1, c2, cs, k, 2), generator, name + ".enc2", rng);
  dec1_ = SkeletalConv<S>(conv_spec(l1, d, c2, c1, cs, k, 1), generator, name + ".dec1", rng);
  dec2_ = SkeletalConv<S>(root_wide(conv_spec(l0, d, c1, kEdgeChannels, 3, k, 1), false, true),
                          generator, name + ".dec2", rng);
  if (discriminator) {
    disc1_ = SkeletalConv<S>(root_wide(conv_spec(l0, d, kEdgeChannels, c1, 3, k, 2), true, false),
                             *discriminator, name + ".disc1", rng);
    disc2_ = SkeletalConv<S>(conv_spec(l1, d, c1, c2, cs, k, 2), *discriminator, name + ".disc2",
                             rng);
  }
}

template <typename S>
std::vector<int> DomainModel<S>::slot_counts() const {
  std::vector<int> out;
  for (const auto& t : level_topologies_) out.push_back(num_slots(t));
  return out;
}

template <typename S>
StaticPyramid<S> DomainModel<S>::encode_static(const Tensor<S>& s0) const {
  if (s0.rank() != 2 || s0.dim(0) != num_slots(topology_) || s0.dim(1) != 3) {
    throw ShapeError("encode_static: offsets " + shape_str(s0.shape()) + " vs " +
                     std::to_string(num_slots(topology_)) + " slots");
  }
  const Tensor<S> h = lrelu(static_conv(static_enc_, s0));
  const Tensor<S> pooled =
      skeletal_pool(h.reshape({1, h.dim(0), h.dim(1)}), stages_[0], config_.pool);
  return {s0, pooled.reshape({pooled.dim(1), pooled.dim(2)})};
}

template <typename S>
Tensor<S> DomainModel<S>::encode(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const {
  check_frames(dynamics, topology_);
  Tensor<S> x = lrelu(enc1_.forward(dynamics, statics[0]));
  x = skeletal_pool(x, stages_[0], config_.pool);
  x = lrelu(enc2_.forward(x, statics[1]));
  return skeletal_pool(x, stages_[1], config_.pool);
}

template <typename S>
Tensor<S> DomainModel<S>::decode_raw(const Tensor<S>& latent,
                                     const StaticPyramid<S>& statics) const {
  if (latent.rank() != 3 || latent.dim(1) != stages_[1].out_slots() ||
      latent.dim(2) != config_.latent_channels) {
    throw ShapeError("decode: latent " + shape_str(latent.shape()) + " does not match the primal level");
  }
  Tensor<S> x = linear_upsample(skeletal_unpool(latent, stages_[1]), 0, 2);
  x = lrelu(dec1_.forward(x, statics[1]));
  x = linear_upsample(skeletal_unpool(x, stages_[0]), 0, 2);
  return dec2_.forward(x, statics[0]);
}

template <typename S>
Tensor<S> DomainModel<S>::discriminate(const Tensor<S>& dynamics,
                                       const StaticPyramid<S>& statics) const {
  if (!has_discriminator_) throw std::logic_error("model has no discriminator");
  check_frames(dynamics, topology_);
  Tensor<S> x = lrelu(disc1_.forward(dynamics, statics[0]));
  x = skeletal_pool(x, stages_[0], config_.pool);
  x = sigmoid(disc2_.forward(x, statics[1]));
  return skeletal_pool(x, stages_[1], config_.pool);
}

template <typename S>
ConventionalModel<S>::ConventionalModel(const SkeletonTopology& topology,
                                        const NetworkConfig& config, ConventionalDims dims,
                                        ParamStore<S>& store, const std::string& name,
                                        std::mt19937_64& rng)
    : topology_(topology), config_(config), dims_(dims), store_(&store), name_(name) {
  const PoolingPlan plan = build_pooling_plan(topology, config.p);
  const auto levels = network_level_topologies(plan, 2);
  if (dims_.hidden <= 0) dims_.hidden = config.block1_channels * num_slots(levels[1]);
  if (dims_.latent <= 0) dims_.latent = config.latent_channels * num_slots(levels[2]);
  if (dims_.static_hidden <= 0) dims_.static_hidden = config.static_channels * num_slots(levels[1]);

  const int J = topology.num_edges();
  const Index flat = static_cast<Index>(J + 1) * kRootChannels;
  for (int s = 0; s <= J; ++s) {
    const int width = s == J ? kRootChannels : kEdgeChannels;
    for (int c = 0; c < width; ++c) valid_.push_back(s * kRootChannels + c);
  }
  scatter_.assign(flat, static_cast<Index>(valid_.size()));
  for (std::size_t k = 0; k < valid_.size(); ++k) scatter_[valid_[k]] = static_cast<Index>(k);

  const Index cin = static_cast<Index>(valid_.size());
  const Index s0 = 3 * static_cast<Index>(J + 1);
  const Index k = config.kernel;
  auto add = [&](const std::string& layer, Index rows, Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    store.add_uniform(name + "." + layer + ".w", {rows, cols}, bound, rng);
    store.add_uniform(name + "." + layer + ".b", {cols}, bound, rng);
  };
  add("static", s0, dims_.static_hidden);
  add("enc1", k * (cin + s0), dims_.hidden);
  add("enc2", k * (dims_.hidden + dims_.static_hidden), dims_.latent);
  add("dec1", k * (dims_.latent + dims_.static_hidden), dims_.hidden);
  add("dec2", k * (dims_.hidden + s0), cin);
}

template <typename S>
Tensor<S> ConventionalModel<S>::conv(const std::string& layer, const Tensor<S>& x,
                                     int stride) const {
  return conv1d(x, store_->get(name_ + "." + layer + ".w"), store_->get(name_ + "." + layer + ".b"),
                config_.kernel, stride);
}

template <typename S>
StaticPyramid<S> ConventionalModel<S>::encode_static(const Tensor<S>& s0) const {
  const Tensor<S> flat = s0.reshape({1, s0.size()});
  const Tensor<S>& b = store_->get(name_ + ".static.b");
  const Tensor<S> h = matmul(flat, store_->get(name_ + ".static.w")) + b.reshape({1, b.size()});
  return {flat, lrelu(h)};
}

template <typename S>
Tensor<S> ConventionalModel<S>::encode(const Tensor<S>& dynamics,
                                       const StaticPyramid<S>& statics) const {
  check_frames(dynamics, topology_);
  const Index T = dynamics.dim(0);
  const Tensor<S> x0 = index_select(dynamics.reshape({T, dynamics.size() / T}), 1, valid_);
  Tensor<S> x = lrelu(conv("enc1", concat<S>({x0, tile(statics[0], 0, T)}, 1), 2));
  x = concat<S>({x, tile(statics[1], 0, x.dim(0))}, 1);
  return lrelu(conv("enc2", x, 2));
}

template <typename S>
Tensor<S> ConventionalModel<S>::decode_raw(const Tensor<S>& latent,
                                           const StaticPyramid<S>& statics) const {
  Tensor<S> x = linear_upsample(latent, 0, 2);
  x = lrelu(conv("dec1", concat<S>({x, tile(statics[1], 0, x.dim(0))}, 1), 1));
  x = linear_upsample(x, 0, 2);
  const Index T = x.dim(0);
  x = conv("dec2", concat<S>({x, tile(statics[0], 0, T)}, 1), 1);
  x = index_select(concat<S>({x, Tensor<S>::zeros({T, 1})}, 1), 1, scatter_);
  return x.reshape({T, topology_.num_edges() + 1, kRootChannels});
}

template <typename S>
DecodedMotion<S> retarget(const DomainModel<S>& source, const DomainModel<S>& target,
                          const Tensor<S>& dynamics, const StaticPyramid<S>& source_statics,
                          const StaticPyramid<S>& target_statics) {
  if (&source != &target && !check_homeomorphic(source.topology(), target.topology()).homeomorphic) {
    throw std::invalid_argument("retarget: source and target skeletons are not homeomorphic");
  }
  return target.decode(source.encode(dynamics, source_statics), target_statics);
}

std::string topology_hash(const SkeletonTopology& topology) {
  std::uint64_t h = 1469598103934665603ull;
  for (int p : topology.parents()) {
    for (int b = 0; b < 4; ++b) {
      h ^= static_cast<std::uint8_t>((static_cast<std::uint32_t>(p) >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

#define SKM_INSTANTIATE(S)                                                                     \
  template Tensor<S> static_input(const Offsets&, double);                                     \
  template Tensor<S> pack_dynamics(const Tensor<S>&, const Tensor<S>&);                        \
  template DecodedMotion<S> unpack_dynamics(const Tensor<S>&);                                 \
  template class DomainModel<S>;                                                               \
  template class ConventionalModel<S>;                                                         \
  template DecodedMotion<S> retarget(const DomainModel<S>&, const DomainModel<S>&,             \
                                     const Tensor<S>&, const StaticPyramid<S>&,                \
                                     const StaticPyramid<S>&);

SKM_INSTANTIATE(float)
SKM_INSTANTIATE(double)

#undef SKM_INSTANTIATE

}  // namespace skm
