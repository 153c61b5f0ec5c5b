#pragma once

#include <Eigen/Core>

#include "skm/motion.hpp"
#include "skm/tensor.hpp"

namespace skm {

// Rotation matrix of a (not necessarily unit) quaternion (w, x, y, z).
template <typename S>
Eigen::Matrix<S, 3, 3> quat_matrix(S w, S x, S y, S z) {
  Eigen::Matrix<S, 3, 3> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Differentiable forward kinematics.
//   rotations: (T, J, 4) quaternions, the local rotation of each edge's child node
//   root:      (T, 7) translation then orientation quaternion
//   offsets:   J x 3 constant rest offsets
// Returns node positions (T, J + 1, 3).
template <typename S>
Tensor<S> fk_positions(const SkeletonTopology& topology, const Offsets& offsets,
                       const Tensor<S>& rotations, const Tensor<S>& root);

// Network-facing view of a clip: lengths divided by `height` and the root
// track expressed relative to frame 0's horizontal position.
template <typename S>
struct ClipTensors {
  Tensor<S> rotations;  // (T, J, 4)
  Tensor<S> root;       // (T, 7)
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
};

template <typename S>
ClipTensors<S> clip_to_tensors(const MotionClip& clip, double height);

// Inverse of clip_to_tensors; quaternions are renormalised.
template <typename S>
MotionClip tensors_to_clip(const Tensor<S>& rotations, const Tensor<S>& root,
                           const Offsets& statics, double height, const Eigen::Vector3d& origin,
                           double frame_time);

}  // namespace skm
