#pragma once

#include <vector>

#include <json.hpp>

#include "skm/motion.hpp"
#include "skm/tensor.hpp"

namespace skm {

struct LossWeights {
  double ltc = 1.0;
  double adv = 0.25;
  double ee = 2.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossWeights, ltc, adv, ee)

// Squared error on rotations (edges and root track) plus squared error on
// FK node positions. Offsets and root translations are in height units, so
// positions are too.
template <typename S>
Tensor<S> loss_reconstruction(const SkeletonTopology& topology, const Offsets& offsets,
                              const Tensor<S>& pred_rotations, const Tensor<S>& pred_root,
                              const Tensor<S>& true_rotations, const Tensor<S>& true_root,
                              double rotation_weight = 1.0, double position_weight = 1.0);

// Mean absolute difference.
template <typename S>
Tensor<S> loss_latent_consistency(const Tensor<S>& latent, const Tensor<S>& reference);

// Least-squares GAN terms over mean-reduced patch scores.
template <typename S>
Tensor<S> loss_adversarial_generator(const Tensor<S>& fake_scores);
template <typename S>
Tensor<S> loss_adversarial_discriminator(const Tensor<S>& fake_scores,
                                         const Tensor<S>& real_scores);

// One side of the end-effector term: node positions (T, N, 3), the end-effector
// nodes in correspondence order and their chain lengths (same length units).
struct EndEffectorSide {
  std::vector<Index> nodes;
  std::vector<double> chain_lengths;
};

// Per frame, sum over corresponding end-effectors of the squared difference
// of speed / chain length; averaged over the T - 1 velocity frames.
template <typename S>
Tensor<S> loss_end_effectors(const Tensor<S>& positions_a, const EndEffectorSide& a,
                             const Tensor<S>& positions_b, const EndEffectorSide& b,
                             double frame_time);

// Per-frame normalised end-effector speeds, (T - 1, E).
template <typename S>
Tensor<S> normalized_speeds(const Tensor<S>& positions, const EndEffectorSide& side,
                            double frame_time);

template <typename S>
Tensor<S> total_loss(const Tensor<S>& rec, const Tensor<S>& ltc, const Tensor<S>& adv,
                     const Tensor<S>& ee, const LossWeights& w) {
  return rec + scale(ltc, static_cast<S>(w.ltc)) + scale(adv, static_cast<S>(w.adv)) +
         scale(ee, static_cast<S>(w.ee));
}

inline double total_loss(double rec, double ltc, double adv, double ee, const LossWeights& w) {
  return rec + w.ltc * ltc + w.adv * adv + w.ee * ee;
}

}  // namespace skm
