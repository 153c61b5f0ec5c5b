#include "skm/losses.hpp"

#include "skm/kinematics.hpp"

namespace skm {

namespace {

template <typename S>
Tensor<S> one_minus(const Tensor<S>& x) {
  return add_scalar(scale(x, S(-1)), S(1));
}

}  // namespace

template <typename S>
Tensor<S> loss_reconstruction(const SkeletonTopology& topology, const Offsets& offsets,
                              const Tensor<S>& pred_rotations, const Tensor<S>& pred_root,
                              const Tensor<S>& true_rotations, const Tensor<S>& true_root,
                              double rotation_weight, double position_weight) {
  Tensor<S> loss = Tensor<S>::scalar(0);
  if (rotation_weight != 0.0) {
    const Tensor<S> rot = mean(square(pred_rotations - true_rotations)) +
                          mean(square(pred_root - true_root));
    loss = loss + scale(rot, static_cast<S>(rotation_weight));
  }
  if (position_weight != 0.0) {
    const Tensor<S> p = fk_positions(topology, offsets, pred_rotations, pred_root);
    const Tensor<S> q = fk_positions(topology, offsets, true_rotations, true_root);
    loss = loss + scale(mean(square(p - q)), static_cast<S>(position_weight));
  }
  return loss;
}

template <typename S>
Tensor<S> loss_latent_consistency(const Tensor<S>& latent, const Tensor<S>& reference) {
  if (latent.shape() != reference.shape()) {
    throw std::logic_error("latent consistency: shapes " + shape_str(latent.shape()) + " and " +
                           shape_str(reference.shape()) + " differ");
  }
  return mean(abs(latent - reference));
}

template <typename S>
Tensor<S> loss_adversarial_generator(const Tensor<S>& fake_scores) {
  return mean(square(one_minus(fake_scores)));
}

template <typename S>
Tensor<S> loss_adversarial_discriminator(const Tensor<S>& fake_scores,
                                         const Tensor<S>& real_scores) {
  return mean(square(fake_scores)) + mean(square(one_minus(real_scores)));
}

template <typename S>
Tensor<S> normalized_speeds(const Tensor<S>& positions, const EndEffectorSide& side,
                            double frame_time) {
  const Index T = positions.dim(0);
  const Index E = static_cast<Index>(side.nodes.size());
  if (T < 2) throw std::invalid_argument("end-effector speeds need at least two frames");
  for (double h : side.chain_lengths) {
    if (!(h > 0)) throw std::invalid_argument("end-effector chain length must be positive");
  }
  const Tensor<S> ee = index_select(positions, 1, side.nodes);
  const Tensor<S> diff = slice(ee, 0, 1, T) - slice(ee, 0, 0, T - 1);
  const Tensor<S> sq = matmul(square(diff).reshape({(T - 1) * E, 3}), Tensor<S>::full({3, 1}, S(1)));
  typename Tensor<S>::Array inv((T - 1) * E);
  for (Index t = 0; t < T - 1; ++t) {
    for (Index e = 0; e < E; ++e) inv[t * E + e] = static_cast<S>(1.0 / (frame_time * side.chain_lengths[e]));
  }
  return mul(sqrt(sq.reshape({T - 1, E}), S(1e-20)), Tensor<S>({T - 1, E}, std::move(inv)));
}

template <typename S>
Tensor<S> loss_end_effectors(const Tensor<S>& positions_a, const EndEffectorSide& a,
                             const Tensor<S>& positions_b, const EndEffectorSide& b,
                             double frame_time) {
  if (a.nodes.size() != b.nodes.size() || positions_a.dim(0) != positions_b.dim(0)) {
    throw std::invalid_argument("end-effector loss: sides do not correspond");
  }
  const Tensor<S> d = normalized_speeds(positions_a, a, frame_time) -
                      normalized_speeds(positions_b, b, frame_time);
  return scale(sum(square(d)), S(1) / static_cast<S>(positions_a.dim(0) - 1));
}

#define SKM_INSTANTIATE(S)                                                                       \
  template Tensor<S> loss_reconstruction(const SkeletonTopology&, const Offsets&,                \
                                         const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,   \
                                         const Tensor<S>&, double, double);                      \
  template Tensor<S> loss_latent_consistency(const Tensor<S>&, const Tensor<S>&);                \
  template Tensor<S> loss_adversarial_generator(const Tensor<S>&);                               \
  template Tensor<S> loss_adversarial_discriminator(const Tensor<S>&, const Tensor<S>&);         \
  template Tensor<S> normalized_speeds(const Tensor<S>&, const EndEffectorSide&, double);        \
  template Tensor<S> loss_end_effectors(const Tensor<S>&, const EndEffectorSide&,                \
                                        const Tensor<S>&, const EndEffectorSide&, double);

SKM_INSTANTIATE(float)
SKM_INSTANTIATE(double)

#undef SKM_INSTANTIATE

}  // namespace skm
