#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "skm/motion.hpp"
#include "skm/param_store.hpp"
#include "skm/skeletal_ops.hpp"

namespace skm {

NLOHMANN_JSON_SERIALIZE_ENUM(PoolMode, {{PoolMode::Average, "average"}, {PoolMode::Max, "max"}})

struct NetworkConfig {
  int kernel = 15;
  int d = 1;
  int p = 2;
  int block1_channels = 8;
  int latent_channels = 16;
  int static_channels = 8;
  PoolMode pool = PoolMode::Average;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetworkConfig, kernel, d, p, block1_channels,
                                                latent_channels, static_channels, pool)

// Dense (skeleton-unaware) widths. Zero means "derive from the skeleton-aware
// slot counts": hidden = block1 * level-1 slots, latent = latent * primal slots.
struct ConventionalDims {
  int hidden = 0;
  int latent = 0;
  int static_hidden = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ConventionalDims, hidden, latent, static_hidden)

// Widths from the reference layer table for a 28-edge character.
ConventionalDims conventional_table_preset();

constexpr int kRootChannels = 7;
constexpr int kEdgeChannels = 4;

// Static pyramid: level 0 is the raw (height-normalised) offsets per slot,
// level 1 the encoded static features the second block concatenates.
template <typename S>
using StaticPyramid = std::vector<Tensor<S>>;

template <typename S>
struct DecodedMotion {
  Tensor<S> rotations;  // (T, J, 4), unit
  Tensor<S> root;       // (T, 7), unit orientation
};

// (J + 1, 3): offsets / height, zero for the root slot.
template <typename S>
Tensor<S> static_input(const Offsets& offsets, double height);
// (T, J + 1, 7): edges use channels 0..3, the root slot all seven.
template <typename S>
Tensor<S> pack_dynamics(const Tensor<S>& rotations, const Tensor<S>& root);
// Split a raw (T, J + 1, 7) decoder output and normalise its quaternions.
template <typename S>
DecodedMotion<S> unpack_dynamics(const Tensor<S>& raw);

template <typename S>
class Autoencoder {
 public:
  virtual ~Autoencoder() = default;
  virtual const SkeletonTopology& topology() const = 0;
  virtual StaticPyramid<S> encode_static(const Tensor<S>& s0) const = 0;
  // dynamics (T, J + 1, 7) with T divisible by 4
  virtual Tensor<S> encode(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const = 0;
  virtual Tensor<S> decode_raw(const Tensor<S>& latent, const StaticPyramid<S>& statics) const = 0;

  DecodedMotion<S> decode(const Tensor<S>& latent, const StaticPyramid<S>& statics) const {
    return unpack_dynamics(decode_raw(latent, statics));
  }
  DecodedMotion<S> reconstruct(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const {
    return decode(encode(dynamics, statics), statics);
  }
};

// Skeleton-aware encoder / decoder / patch discriminator for one domain.
template <typename S>
class DomainModel : public Autoencoder<S> {
 public:
  // Generator weights go to `generator`, discriminator weights to
  // `discriminator` when given. Parameter names start with `name`.
  DomainModel(const SkeletonTopology& topology, const NetworkConfig& config,
              ParamStore<S>& generator, ParamStore<S>* discriminator, const std::string& name,
              std::mt19937_64& rng);

  const SkeletonTopology& topology() const override { return topology_; }
  const PoolingPlan& plan() const { return plan_; }
  const NetworkConfig& config() const { return config_; }
  const std::vector<PoolStage>& stages() const { return stages_; }
  // Slot counts at the input of each block and at the latent.
  std::vector<int> slot_counts() const;
  bool has_discriminator() const { return has_discriminator_; }

  StaticPyramid<S> encode_static(const Tensor<S>& s0) const override;
  Tensor<S> encode(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const override;
  Tensor<S> decode_raw(const Tensor<S>& latent, const StaticPyramid<S>& statics) const override;
  // Patch scores in (0, 1), shaped like the latent.
  Tensor<S> discriminate(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const;

 private:
  SkeletonTopology topology_;
  NetworkConfig config_;
  PoolingPlan plan_;
  std::vector<PoolStage> stages_;
  std::vector<SkeletonTopology> level_topologies_;
  bool has_discriminator_ = false;
  SkeletalConv<S> static_enc_, enc1_, enc2_, dec1_, dec2_, disc1_, disc2_;
};

// Temporal convolutions over flattened joint channels, no skeletal pooling.
template <typename S>
class ConventionalModel : public Autoencoder<S> {
 public:
  ConventionalModel(const SkeletonTopology& topology, const NetworkConfig& config,
                    ConventionalDims dims, ParamStore<S>& store, const std::string& name,
                    std::mt19937_64& rng);

  const SkeletonTopology& topology() const override { return topology_; }
  const ConventionalDims& dims() const { return dims_; }
  int input_channels() const { return static_cast<int>(valid_.size()); }

  StaticPyramid<S> encode_static(const Tensor<S>& s0) const override;
  Tensor<S> encode(const Tensor<S>& dynamics, const StaticPyramid<S>& statics) const override;
  Tensor<S> decode_raw(const Tensor<S>& latent, const StaticPyramid<S>& statics) const override;

 private:
  Tensor<S> conv(const std::string& layer, const Tensor<S>& x, int stride) const;

  SkeletonTopology topology_;
  NetworkConfig config_;
  ConventionalDims dims_;
  ParamStore<S>* store_;
  std::string name_;
  std::vector<Index> valid_;    // used columns of the flattened (J + 1) * 7 layout
  std::vector<Index> scatter_;  // flattened column -> used column, or the zero column
};

// Decoder of `target` fed with the dynamic latent of `source` and the
// target skeleton's static pyramid.
template <typename S>
DecodedMotion<S> retarget(const DomainModel<S>& source, const DomainModel<S>& target,
                          const Tensor<S>& dynamics, const StaticPyramid<S>& source_statics,
                          const StaticPyramid<S>& target_statics);

// Manifest describing a trained model for later loading.
struct ModelManifest {
  std::string kind;  // "skeletal" or "conventional"
  std::string name;
  std::vector<int> parents;
  std::string topology_hash;
  NetworkConfig network;
  ConventionalDims conventional;
  std::string checkpoint;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelManifest, kind, name, parents, topology_hash, network,
                                                conventional, checkpoint)

std::string topology_hash(const SkeletonTopology& topology);

}  // namespace skm
