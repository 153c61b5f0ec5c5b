#include "skm/kinematics.hpp"

#include <memory>

namespace skm {

namespace {

template <typename S>
using M3 = Eigen::Matrix<S, 3, 3>;
template <typename S>
using V3 = Eigen::Matrix<S, 3, 1>;

// Gradient of sum(G .* R(q)) with respect to (w, x, y, z).
template <typename S>
Eigen::Matrix<S, 4, 1> quat_matrix_vjp(const M3<S>& g, S w, S x, S y, S z) {
  Eigen::Matrix<S, 4, 1> d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
              z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
              w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
              y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return d;
}

}  // namespace

template <typename S>
Tensor<S> fk_positions(const SkeletonTopology& topology, const Offsets& offsets,
                       const Tensor<S>& rotations, const Tensor<S>& root) {
  const int J = topology.num_edges();
  if (rotations.rank() != 3 || rotations.dim(1) != J || rotations.dim(2) != 4) {
    throw ShapeError("fk_positions: rotations " + shape_str(rotations.shape()) + " vs " +
                     std::to_string(J) + " edges");
  }
  const Index T = rotations.dim(0);
  if (root.rank() != 2 || root.dim(0) != T || root.dim(1) != 7) {
    throw ShapeError("fk_positions: root track " + shape_str(root.shape()) + " vs rotations " +
                     shape_str(rotations.shape()));
  }
  if (offsets.rows() != J) throw ShapeError("fk_positions: offsets do not match topology");
  const int N = J + 1;
  const Eigen::Matrix<S, Eigen::Dynamic, 3, Eigen::RowMajor> off = offsets.cast<S>();

  // Cached per frame: global frame of every node and local rotation of every edge.
  auto global = std::make_shared<std::vector<M3<S>>>(T * N);
  auto local = std::make_shared<std::vector<M3<S>>>(T * (J + 1));
  typename Tensor<S>::Array out(T * N * 3);
  const auto& q = rotations.value();
  const auto& r = root.value();
  for (Index t = 0; t < T; ++t) {
    const S* rt = r.data() + t * 7;
    M3<S>& g0 = (*global)[t * N];
    g0 = quat_matrix<S>(rt[3], rt[4], rt[5], rt[6]);
    (*local)[t * (J + 1) + J] = g0;
    Eigen::Map<V3<S>>(out.data() + t * N * 3) = Eigen::Map<const V3<S>>(rt);
    for (int e = 0; e < J; ++e) {
      const int p = topology.parent_node(e), c = e + 1;
      const S* qe = q.data() + (t * J + e) * 4;
      M3<S>& re = (*local)[t * (J + 1) + e];
      re = quat_matrix<S>(qe[0], qe[1], qe[2], qe[3]);
      const M3<S>& gp = (*global)[t * N + p];
      Eigen::Map<V3<S>>(out.data() + (t * N + c) * 3) =
          Eigen::Map<const V3<S>>(out.data() + (t * N + p) * 3) + gp * off.row(e).transpose();
      (*global)[t * N + c] = gp * re;
    }
  }
  return Tensor<S>::record(
      "fk_positions", {T, N, 3}, std::move(out), {rotations, root},
      [topology, off, global, local, T, J, N](auto& self) {
        auto& rot_in = *self.inputs[0];
        auto& root_in = *self.inputs[1];
        std::vector<V3<S>> dpos(N);
        std::vector<M3<S>> dglob(N);
        for (Index t = 0; t < T; ++t) {
          for (int n = 0; n < N; ++n) {
            dpos[n] = Eigen::Map<const V3<S>>(self.grad.data() + (t * N + n) * 3);
            dglob[n].setZero();
          }
          for (int e = J - 1; e >= 0; --e) {
            const int p = topology.parent_node(e), c = e + 1;
            const M3<S>& gp = (*global)[t * N + p];
            const M3<S>& re = (*local)[t * (J + 1) + e];
            dpos[p] += dpos[c];
            dglob[p].noalias() += dpos[c] * off.row(e);
            dglob[p].noalias() += dglob[c] * re.transpose();
            if (rot_in.requires_grad) {
              const M3<S> dr = gp.transpose() * dglob[c];
              const S* qe = rot_in.value.data() + (t * J + e) * 4;
              rot_in.grad_buffer().template segment<4>((t * J + e) * 4) +=
                  quat_matrix_vjp<S>(dr, qe[0], qe[1], qe[2], qe[3]).array();
            }
          }
          if (root_in.requires_grad) {
            auto& g = root_in.grad_buffer();
            g.template segment<3>(t * 7) += dpos[0].array();
            const S* rt = root_in.value.data() + t * 7;
            g.template segment<4>(t * 7 + 3) +=
                quat_matrix_vjp<S>(dglob[0], rt[3], rt[4], rt[5], rt[6]).array();
          }
        }
      });
}

template <typename S>
ClipTensors<S> clip_to_tensors(const MotionClip& clip, double height) {
  const int T = clip.num_frames(), J = clip.num_edges();
  ClipTensors<S> out;
  out.origin = Eigen::Vector3d(clip.root_translation[0].x(), 0.0, clip.root_translation[0].z());
  typename Tensor<S>::Array rot(T * J * 4), root(T * 7);
  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < J; ++e) {
      const auto& q = clip.rotation(t, e);
      rot.template segment<4>((t * J + e) * 4) << q.w(), q.x(), q.y(), q.z();
    }
    const Eigen::Vector3d tr = (clip.root_translation[t] - out.origin) / height;
    const auto& o = clip.root_orientation[t];
    root.template segment<7>(t * 7) << tr.x(), tr.y(), tr.z(), o.w(), o.x(), o.y(), o.z();
  }
  out.rotations = Tensor<S>({T, J, 4}, rot.template cast<S>());
  out.root = Tensor<S>({T, 7}, root.template cast<S>());
  return out;
}

template <typename S>
MotionClip tensors_to_clip(const Tensor<S>& rotations, const Tensor<S>& root,
                           const Offsets& statics, double height, const Eigen::Vector3d& origin,
                           double frame_time) {
  const Index T = rotations.dim(0), J = rotations.dim(1);
  MotionClip clip;
  clip.statics = statics;
  clip.frame_time = frame_time;
  clip.rotations.resize(T * J);
  const auto& q = rotations.value();
  const auto& r = root.value();
  auto quat = [](const S* p) {
    Eigen::Quaterniond v(p[0], p[1], p[2], p[3]);
    const double n = v.norm();
    return n > 0 ? Eigen::Quaterniond(v.coeffs() / n) : Eigen::Quaterniond::Identity();
  };
  for (Index t = 0; t < T; ++t) {
    for (Index e = 0; e < J; ++e) clip.rotations[t * J + e] = quat(q.data() + (t * J + e) * 4);
    const S* rt = r.data() + t * 7;
    clip.root_translation.push_back(
        Eigen::Vector3d(static_cast<double>(rt[0]), static_cast<double>(rt[1]),
                        static_cast<double>(rt[2])) * height + origin);
    clip.root_orientation.push_back(quat(rt + 3));
  }
  return clip;
}

#define SKM_INSTANTIATE(S)                                                                        \
  template Tensor<S> fk_positions(const SkeletonTopology&, const Offsets&, const Tensor<S>&,      \
                                  const Tensor<S>&);                                              \
  template ClipTensors<S> clip_to_tensors(const MotionClip&, double);                             \
  template MotionClip tensors_to_clip(const Tensor<S>&, const Tensor<S>&, const Offsets&, double, \
                                      const Eigen::Vector3d&, double);

SKM_INSTANTIATE(float)
SKM_INSTANTIATE(double)

#undef SKM_INSTANTIATE

}  // namespace skm
