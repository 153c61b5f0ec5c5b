#include <doctest.h>

#include <random>

#include "skm/kinematics.hpp"
#include "skm/losses.hpp"
#include "skm/synth.hpp"

using namespace skm;
using Td = Tensor<double>;

namespace {

Td filled(const Shape& shape, double v) { return Td::full(shape, v); }

Td positions_from(const std::vector<std::vector<Eigen::Vector3d>>& frames) {
  const Index T = static_cast<Index>(frames.size()), N = static_cast<Index>(frames[0].size());
  Td::Array v(T * N * 3);
  for (Index t = 0; t < T; ++t) {
    for (Index n = 0; n < N; ++n) v.segment((t * N + n) * 3, 3) = frames[t][n].array();
  }
  return Td({T, N, 3}, v);
}

}  // namespace

TEST_CASE("reconstruction loss is zero on identical motion and grows below a perturbed joint") {
  const Skeleton s = toy_humanoid();
  const double h = character_height(s);
  MotionParams p;
  p.frames = 8;
  const MotionClip clip = synth_motion(s, p);
  const auto t = clip_to_tensors<double>(clip, h);
  const Offsets offsets = s.offsets / h;
  CHECK(loss_reconstruction(s.topology, offsets, t.rotations, t.root, t.rotations, t.root).item() ==
        doctest::Approx(0.0));

  // Rotate LeftUpLeg: positions of its descendants move, the rest do not.
  MotionClip bent = clip;
  const int up_leg = 0;
  REQUIRE(s.node_names[up_leg + 1] == "LeftUpLeg");
  for (int f = 0; f < 8; ++f) {
    bent.rotation(f, up_leg) = Eigen::Quaterniond(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX())) *
                               clip.rotation(f, up_leg);
  }
  const auto b = clip_to_tensors<double>(bent, h);
  const double only_pos =
      loss_reconstruction(s.topology, offsets, b.rotations, b.root, t.rotations, t.root, 0.0, 1.0).item();
  CHECK(only_pos > 0);
  const Td pa = fk_positions(s.topology, offsets, t.rotations, t.root);
  const Td pb = fk_positions(s.topology, offsets, b.rotations, b.root);
  const Index N = s.topology.num_nodes();
  for (int n = 0; n < N; ++n) {
    const double d = (pa.value().segment(n * 3, 3) - pb.value().segment(n * 3, 3)).matrix().norm();
    const bool below = n >= 2 && n <= 4;  // LeftLeg, LeftFoot, LeftFoot_End
    if (below) {
      CHECK(d > 1e-3);
    } else {
      CHECK(d < 1e-12);
    }
  }
}

TEST_CASE("latent consistency is the mean absolute difference") {
  const Td a = filled({2, 3, 4}, 1.0);
  CHECK(loss_latent_consistency(a, a).item() == doctest::Approx(0.0));
  CHECK(loss_latent_consistency(a, filled({2, 3, 4}, 1.75)).item() == doctest::Approx(0.75));
}

TEST_CASE("least-squares adversarial terms") {
  const Td half = filled({4, 2, 3}, 0.5);
  CHECK(loss_adversarial_generator(half).item() == doctest::Approx(0.25));
  CHECK(loss_adversarial_discriminator(half, half).item() == doctest::Approx(0.5));
  CHECK(loss_adversarial_discriminator(filled({4, 2, 3}, 0.0), filled({4, 2, 3}, 1.0)).item() ==
        doctest::Approx(0.0));
  CHECK(loss_adversarial_generator(filled({4, 2, 3}, 1.0)).item() == doctest::Approx(0.0));
}

TEST_CASE("end-effector loss zero cases and scale invariance") {
  const Skeleton s = toy_humanoid();
  const double h = character_height(s);
  const auto& ee = s.topology.end_effector_edges();
  const EndEffectorSide side = end_effector_side(s, h, ee);
  MotionParams p;
  p.frames = 12;
  const auto t = clip_to_tensors<double>(synth_motion(s, p), h);
  const Td pos = fk_positions(s.topology, Offsets(s.offsets / h), t.rotations, t.root);
  CHECK(loss_end_effectors(pos, side, pos, side, 1.0 / 30).item() == doctest::Approx(0.0));

  // Same skeleton scaled by 1.7: positions and chain lengths scale together.
  EndEffectorSide big = side;
  for (double& l : big.chain_lengths) l *= 1.7;
  const Td scaled = scale(pos, 1.7);
  CHECK(loss_end_effectors(pos, side, scaled, big, 1.0 / 30).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("end-effector loss against a sliding foot is proportional to the slide speed squared") {
  EndEffectorSide side;
  side.nodes = {1};
  side.chain_lengths = {2.0};
  const Eigen::Vector3d o = Eigen::Vector3d::Zero();
  const Td still = positions_from({{o, Eigen::Vector3d(0, 0, 0)}, {o, Eigen::Vector3d(0, 0, 0)}});
  auto slide = [&](double v) { return positions_from({{o, Eigen::Vector3d(0, 0, 0)}, {o, Eigen::Vector3d(v, 0, 0)}}); };
  const double l1 = loss_end_effectors(still, side, slide(0.1), side, 1.0).item();
  const double l2 = loss_end_effectors(still, side, slide(0.2), side, 1.0).item();
  CHECK(l1 == doctest::Approx(0.0025));
  CHECK(l2 == doctest::Approx(4 * l1));
  side.chain_lengths = {0.0};
  CHECK_THROWS(loss_end_effectors(still, side, slide(0.1), side, 1.0));
}

TEST_CASE("total loss weights") {
  const LossWeights w;
  CHECK(total_loss(0, 0, 0, 0, w) == 0.0);
  CHECK(total_loss(0, 0, 0, 1, w) == 2.0);
  CHECK(total_loss(0, 0, 1, 0, w) == 0.25);
  CHECK(total_loss(0, 1, 0, 0, w) == 1.0);
  const Td one = Td::scalar(1.0), zero = Td::scalar(0.0);
  CHECK(total_loss(zero, zero, zero, one, w).item() == 2.0);
  CHECK(total_loss(zero, zero, one, zero, w).item() == 0.25);
  CHECK(total_loss(one, one, one, one, w).item() == 4.25);
}
