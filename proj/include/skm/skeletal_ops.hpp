#pragma once

#include <random>
#include <string>
#include <vector>

#include "skm/param_store.hpp"
#include "skm/skeleton_graph.hpp"
#include "skm/tensor.hpp"

namespace skm {

// Feature slots of a level: the topology's edges, then one root slot that
// carries the global root track.
inline int num_slots(const SkeletonTopology& topology) { return topology.num_edges() + 1; }
inline int root_slot(const SkeletonTopology& topology) { return topology.num_edges(); }

// Per-slot neighbourhoods. Edge i sees N_i^d plus the root slot when i lies
// within distance d of the root node; the root slot sees itself plus
// root_support(d).
std::vector<std::vector<int>> armature_neighbourhoods(const SkeletonTopology& topology, int d);

// Merge of input slots into output slots: output slot r averages (or maxes)
// the input slots in regions[r].
struct PoolStage {
  int in_slots = 0;
  std::vector<std::vector<int>> regions;

  int out_slots() const { return static_cast<int>(regions.size()); }
  std::vector<int> assignment() const;  // input slot -> output slot
  static PoolStage identity(int slots);
};

// Slot-level pooling for one plan level (root slot maps to the root slot).
PoolStage pool_stage_for_level(const PoolingPlan& plan, std::size_t level);
PoolStage compose(const PoolStage& first, const PoolStage& second);

// The network pools exactly `blocks` times: block b < blocks - 1 applies plan
// level b; the last block applies every remaining level at once. Missing
// levels become identity stages.
std::vector<PoolStage> network_pool_stages(const PoolingPlan& plan, int blocks = 2);
// Topology seen at the input of block b (b = blocks gives the primal skeleton).
std::vector<SkeletonTopology> network_level_topologies(const PoolingPlan& plan, int blocks = 2);

enum class PoolMode { Average, Max };

// x: (T, slots, C) -> (T, regions, C).
template <typename S>
Tensor<S> skeletal_pool(const Tensor<S>& x, const PoolStage& stage, PoolMode mode);
// x: (T, regions, C) -> (T, slots, C), copying each region's features.
template <typename S>
Tensor<S> skeletal_unpool(const Tensor<S>& x, const PoolStage& stage);

struct SkeletalConvSpec {
  std::vector<std::vector<int>> neighbours;  // per output slot
  std::vector<int> in_channels;              // dynamic channels per slot
  std::vector<int> out_channels;             // per slot
  int static_channels = 0;                   // tiled over time, same for all slots
  int kernel = 1;
  int stride = 1;

  int num_slots() const { return static_cast<int>(neighbours.size()); }
  int max_in() const;
  int max_out() const;
  // Rows of slot i's stacked weight bank: sum over neighbours of kernel * (c_j + static).
  Index weight_rows(int i) const;
};

// Skeleto-temporal convolution: for slot i,
//   y_i = (1 / |N_i|) * sum_{j in N_i} (m_j * W_ij + b_ij)
// where m_j is slot j's dynamic features with the static features tiled over
// time. Slot i's banks are stored stacked as "<prefix>.w<i>" of shape
// (weight_rows(i), out_i), neighbour blocks in neighbours[i] order with rows
// tap * (c_j + static) + channel, and "<prefix>.b<i>" of shape (|N_i|, out_i).
template <typename S>
class SkeletalConv {
 public:
  SkeletalConv() = default;
  // Registers parameters in `store` (fan-in scaled uniform init).
  SkeletalConv(SkeletalConvSpec spec, ParamStore<S>& store, const std::string& prefix,
               std::mt19937_64& rng);

  const SkeletalConvSpec& spec() const { return spec_; }

  // dynamic: (T, slots, >= max_in) zero padded; statics: (slots, static_channels)
  // or undefined when static_channels == 0. Returns (T', slots, max_out).
  Tensor<S> forward(const Tensor<S>& dynamic, const Tensor<S>& statics) const;

  const Tensor<S>& weight(int i) const { return weights_[i]; }
  const Tensor<S>& bias(int i) const { return biases_[i]; }

 private:
  SkeletalConvSpec spec_;
  std::vector<Tensor<S>> weights_;
  std::vector<Tensor<S>> biases_;
};

// Static branch convolution: the dynamic operator with T = 1 and k = 1.
// statics: (slots, C) -> (slots, C').
template <typename S>
Tensor<S> static_conv(const SkeletalConv<S>& layer, const Tensor<S>& statics);

}  // namespace skm
