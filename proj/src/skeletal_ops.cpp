#include "skm/skeletal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "skm/detail/im2col.hpp"

namespace skm {

std::vector<std::vector<int>> armature_neighbourhoods(const SkeletonTopology& topology, int d) {
  const AdjacencyLists adj = build_adjacency(topology, d);
  const int root = root_slot(topology);
  std::vector<std::vector<int>> out(num_slots(topology));
  std::set<int> near_root;
  for (int e : topology.root_edges()) {
    if (d < 1) break;
    const auto dist = edge_distances(topology, e);
    for (int j = 0; j < topology.num_edges(); ++j) {
      if (dist[j] + 1 <= d) near_root.insert(j);
    }
  }
  for (int i = 0; i < topology.num_edges(); ++i) {
    out[i] = adj.lists[i];
    if (near_root.count(i)) out[i].push_back(root);
  }
  out[root] = root_support(topology, d);
  out[root].push_back(root);
  return out;
}

std::vector<int> PoolStage::assignment() const {
  std::vector<int> a(in_slots, -1);
  for (int r = 0; r < out_slots(); ++r) {
    for (int s : regions[r]) a[s] = r;
  }
  return a;
}

PoolStage PoolStage::identity(int slots) {
  PoolStage s;
  s.in_slots = slots;
  for (int i = 0; i < slots; ++i) s.regions.push_back({i});
  return s;
}

PoolStage pool_stage_for_level(const PoolingPlan& plan, std::size_t level) {
  const SkeletonTopology& topo = plan.topology_at(level);
  PoolStage s;
  s.in_slots = num_slots(topo);
  s.regions = plan.levels.at(level).regions;
  s.regions.push_back({root_slot(topo)});
  return s;
}

PoolStage compose(const PoolStage& first, const PoolStage& second) {
  if (second.in_slots != first.out_slots()) {
    throw std::invalid_argument("compose: stage sizes do not chain");
  }
  PoolStage s;
  s.in_slots = first.in_slots;
  for (const auto& r2 : second.regions) {
    std::vector<int> merged;
    for (int r1 : r2) merged.insert(merged.end(), first.regions[r1].begin(), first.regions[r1].end());
    std::sort(merged.begin(), merged.end());
    s.regions.push_back(std::move(merged));
  }
  return s;
}

std::vector<PoolStage> network_pool_stages(const PoolingPlan& plan, int blocks) {
  const std::size_t levels = plan.levels.size();
  std::vector<PoolStage> stages;
  for (int b = 0; b < blocks - 1; ++b) {
    if (static_cast<std::size_t>(b) < levels) {
      stages.push_back(pool_stage_for_level(plan, b));
    } else {
      stages.push_back(PoolStage::identity(num_slots(plan.primal())));
    }
  }
  const std::size_t first = static_cast<std::size_t>(blocks - 1);
  if (first < levels) {
    PoolStage last = pool_stage_for_level(plan, first);
    for (std::size_t l = first + 1; l < levels; ++l) last = compose(last, pool_stage_for_level(plan, l));
    stages.push_back(std::move(last));
  } else {
    stages.push_back(PoolStage::identity(num_slots(plan.primal())));
  }
  return stages;
}

std::vector<SkeletonTopology> network_level_topologies(const PoolingPlan& plan, int blocks) {
  std::vector<SkeletonTopology> out;
  for (int b = 0; b < blocks; ++b) {
    out.push_back(plan.topology_at(std::min<std::size_t>(b, plan.levels.size())));
  }
  out.push_back(plan.primal());
  return out;
}

template <typename S>
Tensor<S> skeletal_pool(const Tensor<S>& x, const PoolStage& stage, PoolMode mode) {
  if (x.rank() != 3 || x.dim(1) != stage.in_slots) {
    throw ShapeError("skeletal_pool: features " + shape_str(x.shape()) + " vs stage with " +
                     std::to_string(stage.in_slots) + " slots");
  }
  const Index T = x.dim(0), J = x.dim(1), C = x.dim(2), R = stage.out_slots();
  typename Tensor<S>::Array out = Tensor<S>::Array::Zero(T * R * C);
  const auto& v = x.value();
  if (mode == PoolMode::Average) {
    for (Index t = 0; t < T; ++t) {
      for (Index r = 0; r < R; ++r) {
        const auto& reg = stage.regions[r];
        auto dst = out.segment((t * R + r) * C, C);
        for (int s : reg) dst += v.segment((t * J + s) * C, C);
        dst /= static_cast<S>(reg.size());
      }
    }
    return Tensor<S>::record("skeletal_pool_avg", {T, R, C}, std::move(out), {x},
                             [stage, T, J, C, R](auto& self) {
                               auto& g = self.inputs[0]->grad_buffer();
                               for (Index t = 0; t < T; ++t) {
                                 for (Index r = 0; r < R; ++r) {
                                   const auto& reg = stage.regions[r];
                                   const auto src = self.grad.segment((t * R + r) * C, C) /
                                                    static_cast<S>(reg.size());
                                   for (int s : reg) g.segment((t * J + s) * C, C) += src;
                                 }
                               }
                             });
  }
  auto arg = std::make_shared<std::vector<int>>(T * R * C);
  for (Index t = 0; t < T; ++t) {
    for (Index r = 0; r < R; ++r) {
      for (Index c = 0; c < C; ++c) {
        int best = stage.regions[r][0];
        for (int s : stage.regions[r]) {
          if (v[(t * J + s) * C + c] > v[(t * J + best) * C + c]) best = s;
        }
        (*arg)[(t * R + r) * C + c] = best;
        out[(t * R + r) * C + c] = v[(t * J + best) * C + c];
      }
    }
  }
  return Tensor<S>::record("skeletal_pool_max", {T, R, C}, std::move(out), {x},
                           [arg, T, J, C, R](auto& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (Index t = 0; t < T; ++t) {
                               for (Index r = 0; r < R; ++r) {
                                 for (Index c = 0; c < C; ++c) {
                                   const Index k = (t * R + r) * C + c;
                                   g[(t * J + (*arg)[k]) * C + c] += self.grad[k];
                                 }
                               }
                             }
                           });
}

template <typename S>
Tensor<S> skeletal_unpool(const Tensor<S>& x, const PoolStage& stage) {
  if (x.rank() != 3 || x.dim(1) != stage.out_slots()) {
    throw ShapeError("skeletal_unpool: features " + shape_str(x.shape()) + " vs stage with " +
                     std::to_string(stage.out_slots()) + " regions");
  }
  const auto a = stage.assignment();
  return index_select(x, 1, std::vector<Index>(a.begin(), a.end()));
}

int SkeletalConvSpec::max_in() const {
  return in_channels.empty() ? 0 : *std::max_element(in_channels.begin(), in_channels.end());
}

int SkeletalConvSpec::max_out() const {
  return out_channels.empty() ? 0 : *std::max_element(out_channels.begin(), out_channels.end());
}

Index SkeletalConvSpec::weight_rows(int i) const {
  Index rows = 0;
  for (int j : neighbours[i]) rows += kernel * (in_channels[j] + static_channels);
  return rows;
}

template <typename S>
SkeletalConv<S>::SkeletalConv(SkeletalConvSpec spec, ParamStore<S>& store,
                              const std::string& prefix, std::mt19937_64& rng)
    : spec_(std::move(spec)) {
  const int J = spec_.num_slots();
  if (static_cast<int>(spec_.in_channels.size()) != J ||
      static_cast<int>(spec_.out_channels.size()) != J) {
    throw ShapeError("SkeletalConv: channel lists do not match slot count");
  }
  if (spec_.kernel % 2 == 0) throw ShapeError("SkeletalConv: kernel width must be odd");
  for (int i = 0; i < J; ++i) {
    const Index rows = spec_.weight_rows(i);
    const Index out = spec_.out_channels[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    weights_.push_back(store.add_uniform(prefix + ".w" + std::to_string(i), {rows, out}, bound, rng));
    biases_.push_back(store.add_uniform(
        prefix + ".b" + std::to_string(i),
        {static_cast<Index>(spec_.neighbours[i].size()), out}, bound, rng));
  }
}

template <typename S>
Tensor<S> SkeletalConv<S>::forward(const Tensor<S>& dynamic, const Tensor<S>& statics) const {
  using M = detail::RowMatrix<S>;
  const SkeletalConvSpec& sp = spec_;
  const int J = sp.num_slots();
  const int Cs = sp.static_channels;
  if (dynamic.rank() != 3 || dynamic.dim(1) != J || dynamic.dim(2) < sp.max_in()) {
    throw ShapeError("skeletal_conv: dynamic features " + shape_str(dynamic.shape()) +
                     " vs layer with " + std::to_string(J) + " slots and " +
                     std::to_string(sp.max_in()) + " input channels");
  }
  if (Cs > 0 && (!statics.defined() || statics.rank() != 2 || statics.dim(0) != J ||
                 statics.dim(1) != Cs)) {
    throw ShapeError("skeletal_conv: static features " +
                     (statics.defined() ? shape_str(statics.shape()) : std::string("(none)")) +
                     " vs expected (" + std::to_string(J) + ", " + std::to_string(Cs) + ")");
  }
  const Index T = dynamic.dim(0), Cd = dynamic.dim(2);
  const Index T_out = detail::conv_output_length(T, sp.kernel, sp.stride);
  const Index Co = sp.max_out();
  const auto& dv = dynamic.value();

  auto cols = std::make_shared<std::vector<M>>(J);
  typename Tensor<S>::Array out = Tensor<S>::Array::Zero(T_out * J * Co);
  for (int i = 0; i < J; ++i) {
    M& X = (*cols)[i];
    X.resize(T_out, sp.weight_rows(i));
    for (Index o = 0; o < T_out; ++o) {
      S* row = X.row(o).data();
      for (int j : sp.neighbours[i]) {
        const int cj = sp.in_channels[j];
        for (int m = 0; m < sp.kernel; ++m) {
          const Index src = detail::conv_source(o, m, sp.kernel, sp.stride, T);
          const S* d = dv.data() + (src * J + j) * Cd;
          row = std::copy(d, d + cj, row);
          if (Cs > 0) row = std::copy(statics.value().data() + j * Cs, statics.value().data() + (j + 1) * Cs, row);
        }
      }
    }
    const Index oi = sp.out_channels[i];
    const S inv = S(1) / static_cast<S>(sp.neighbours[i].size());
    M y = X * Eigen::Map<const M>(weights_[i].value().data(), X.cols(), oi);
    const Eigen::Matrix<S, 1, Eigen::Dynamic> b =
        Eigen::Map<const M>(biases_[i].value().data(), sp.neighbours[i].size(), oi).colwise().sum();
    for (Index o = 0; o < T_out; ++o) {
      for (Index c = 0; c < oi; ++c) out[(o * J + i) * Co + c] = (y(o, c) + b(c)) * inv;
    }
  }

  std::vector<Tensor<S>> inputs{dynamic};
  inputs.push_back(Cs > 0 ? statics : Tensor<S>::zeros({0}));
  inputs.insert(inputs.end(), weights_.begin(), weights_.end());
  inputs.insert(inputs.end(), biases_.begin(), biases_.end());
  return Tensor<S>::record(
      "skeletal_conv", {T_out, J, Co}, std::move(out), inputs,
      [sp, cols, T, T_out, J, Cd, Co, Cs](auto& self) {
        auto& din = *self.inputs[0];
        auto& sin = *self.inputs[1];
        for (int i = 0; i < J; ++i) {
          auto& wn = *self.inputs[2 + i];
          auto& bn = *self.inputs[2 + J + i];
          const Index oi = sp.out_channels[i];
          const Index n = static_cast<Index>(sp.neighbours[i].size());
          const S inv = S(1) / static_cast<S>(n);
          M g(T_out, oi);
          for (Index o = 0; o < T_out; ++o) {
            for (Index c = 0; c < oi; ++c) g(o, c) = self.grad[(o * J + i) * Co + c] * inv;
          }
          const M& X = (*cols)[i];
          if (wn.requires_grad) {
            Eigen::Map<M>(wn.grad_buffer().data(), X.cols(), oi).noalias() += X.transpose() * g;
          }
          if (bn.requires_grad) {
            const Eigen::Matrix<S, 1, Eigen::Dynamic> gs = g.colwise().sum();
            Eigen::Map<M> gb(bn.grad_buffer().data(), n, oi);
            gb.rowwise() += gs;
          }
          if (!din.requires_grad && !sin.requires_grad) continue;
          const M dX = g * Eigen::Map<const M>(wn.value.data(), X.cols(), oi).transpose();
          for (Index o = 0; o < T_out; ++o) {
            const S* row = dX.row(o).data();
            for (int j : sp.neighbours[i]) {
              const int cj = sp.in_channels[j];
              for (int m = 0; m < sp.kernel; ++m) {
                const Index src = detail::conv_source(o, m, sp.kernel, sp.stride, T);
                if (din.requires_grad) {
                  S* gd = din.grad_buffer().data() + (src * J + j) * Cd;
                  for (int c = 0; c < cj; ++c) gd[c] += row[c];
                }
                if (Cs > 0 && sin.requires_grad) {
                  S* gs = sin.grad_buffer().data() + j * Cs;
                  for (int c = 0; c < Cs; ++c) gs[c] += row[cj + c];
                }
                row += cj + Cs;
              }
            }
          }
        }
      });
}

template <typename S>
Tensor<S> static_conv(const SkeletalConv<S>& layer, const Tensor<S>& statics) {
  if (layer.spec().kernel != 1 || layer.spec().static_channels != 0) {
    throw ShapeError("static_conv: layer must have kernel 1 and no static input");
  }
  if (statics.rank() != 2) throw ShapeError("static_conv: statics must be (slots, C)");
  const Tensor<S> x = statics.reshape({1, statics.dim(0), statics.dim(1)});
  const Tensor<S> y = layer.forward(x, Tensor<S>());
  return y.reshape({y.dim(1), y.dim(2)});
}

#define SKM_INSTANTIATE(S)                                                          \
  template Tensor<S> skeletal_pool(const Tensor<S>&, const PoolStage&, PoolMode); \
  template Tensor<S> skeletal_unpool(const Tensor<S>&, const PoolStage&);         \
  template class SkeletalConv<S>;                                                 \
  template Tensor<S> static_conv(const SkeletalConv<S>&, const Tensor<S>&);

SKM_INSTANTIATE(float)
SKM_INSTANTIATE(double)

#undef SKM_INSTANTIATE

}  // namespace skm
