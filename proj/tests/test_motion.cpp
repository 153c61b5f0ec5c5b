#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "skm/bvh.hpp"
#include "skm/motion.hpp"
#include "skm/quaternion.hpp"
#include "skm/synth.hpp"

using namespace skm;

namespace {

const char* kTwoJoint = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0.0 0.0 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Chest
  {
    OFFSET 0.0 1.5 0.0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0.0 0.5 0.0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.033333
0 0 0 0 0 0 0 0 0
1 2 3 90 0 0 0 0 0
)";

Skeleton chain_skeleton(const Offsets& offsets) {
  Skeleton s;
  std::vector<int> parents;
  for (int e = 0; e < offsets.rows(); ++e) parents.push_back(e - 1);
  s.topology = SkeletonTopology(parents);
  s.offsets = offsets;
  return s;
}

}  // namespace

TEST_CASE("parse a minimal BVH") {
  const BvhDocument doc = parse_bvh_string(kTwoJoint);
  CHECK(doc.skeleton.num_edges() == 2);
  CHECK(doc.skeleton.node_names[2] == "Chest_End");
  CHECK(doc.skeleton.offsets(0, 1) == doctest::Approx(1.5));
  CHECK(doc.skeleton.offsets(1, 1) == doctest::Approx(0.5));
  REQUIRE(doc.clip.num_frames() == 2);
  const auto& q0 = doc.clip.root_orientation[0];
  CHECK(q0.w() == doctest::Approx(1.0));
  const auto& q1 = doc.clip.root_orientation[1];
  CHECK(q1.w() == doctest::Approx(std::sqrt(0.5)));
  CHECK(q1.z() == doctest::Approx(std::sqrt(0.5)));
  CHECK(q1.x() == doctest::Approx(0.0));
  CHECK(doc.clip.root_translation[1].x() == doctest::Approx(1.0));
  CHECK(doc.clip.frame_time == doctest::Approx(0.033333));
}

TEST_CASE("BVH errors carry line and column") {
  std::string bad = kTwoJoint;
  bad.replace(bad.find("OFFSET 0.0 1.5"), 6, "OFSET ");
  try {
    parse_bvh_string(bad);
    FAIL("expected a parse error");
  } catch (const BvhError& e) {
    CHECK(e.line() == 8);
  }
  std::string short_frames = kTwoJoint;
  short_frames.replace(short_frames.find("Frames: 2"), 9, "Frames: 3");
  CHECK_THROWS_AS(parse_bvh_string(short_frames), BvhError);
}

TEST_CASE("BVH write and parse round trip") {
  std::mt19937_64 rng(4);
  Skeleton sk = toy_humanoid();
  std::uniform_int_distribution<int> pick(0, 5);
  const char* orders[] = {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"};
  for (auto& o : sk.rotation_orders) o = parse_euler_order(orders[pick(rng)]);
  const MotionClip clip = synth_motion(sk, random_motion(rng, 12));
  const BvhDocument a = parse_bvh_string(write_bvh_string(sk, clip));
  const BvhDocument b = parse_bvh_string(write_bvh_string(a.skeleton, a.clip));
  CHECK(write_bvh_string(a.skeleton, a.clip) == write_bvh_string(b.skeleton, b.clip));
  for (int t = 0; t < clip.num_frames(); ++t) {
    for (int e = 0; e < clip.num_edges(); ++e) {
      CHECK(angular_distance(clip.rotation(t, e), a.clip.rotation(t, e)) < 1e-6);
    }
  }
}

TEST_CASE("identity clip writes zero channels") {
  const Skeleton sk = toy_humanoid();
  const std::string text = write_bvh_string(sk, MotionClip::rest(sk.offsets, 1));
  const auto motion = text.substr(text.find("Frame Time"));
  std::istringstream in(motion.substr(motion.find('\n') + 1));
  double v;
  int count = 0;
  while (in >> v) {
    if (count >= 3) CHECK(std::abs(v) < 1e-4);
    ++count;
  }
  CHECK(count == 3 + 3 * 14);
  CHECK(text.find("Frame Time: 0.033333") != std::string::npos);
}

TEST_CASE("euler conversions agree on rotation matrices") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-170, 170);
  for (const char* name : {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"}) {
    const EulerOrder order = parse_euler_order(name);
    for (int k = 0; k < 50; ++k) {
      const Eigen::Vector3d deg(u(rng), u(rng) / 2, u(rng));
      const Eigen::Quaterniond q = euler_to_quaternion(deg, order);
      const Eigen::Quaterniond back = euler_to_quaternion(quaternion_to_euler(q, order), order);
      CHECK((q.toRotationMatrix() - back.toRotationMatrix()).norm() < 1e-6);
    }
  }
}

TEST_CASE("forward kinematics on analytic chains") {
  Offsets off(2, 3);
  off << 0, 1, 0, 0, 1, 0;
  const Skeleton sk = chain_skeleton(off);
  MotionClip clip = MotionClip::rest(off, 1);
  clip.rotation(0, 0) = Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()));
  clip.root_translation[0] = Eigen::Vector3d(0.5, 0, -2);
  const auto p = forward_kinematics(sk.topology, clip);
  CHECK((p.at(0, 1) - Eigen::Vector3d(0.5, 1, -2)).norm() < 1e-12);
  CHECK((p.at(0, 2) - Eigen::Vector3d(-0.5, 1, -2)).norm() < 1e-6);

  Offsets off3(3, 3);
  off3 << 1, 0, 0, 1, 0, 0, 0, 2, 0;
  const Skeleton sk3 = chain_skeleton(off3);
  MotionClip c3 = MotionClip::rest(off3, 1);
  c3.rotation(0, 0) = Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitY()));
  c3.rotation(0, 1) = Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitX()));
  const auto p3 = forward_kinematics(sk3.topology, c3);
  // node 2 = (1,0,0) + Ry(90)(1,0,0) = (1,0,-1); node 3 adds Ry(90)Rx(90)(0,2,0) = (2,0,0)
  CHECK((p3.at(0, 2) - Eigen::Vector3d(1, 0, -1)).norm() < 1e-6);
  CHECK((p3.at(0, 3) - Eigen::Vector3d(3, 0, -1)).norm() < 1e-6);
}

TEST_CASE("identity FK reproduces cumulative offsets") {
  const Skeleton sk = toy_humanoid({"x", 1.3, 1.1, 0.9, 1.2});
  const auto p = forward_kinematics(sk.topology, MotionClip::rest(sk.offsets, 2));
  const auto rest = rest_positions(sk.topology, sk.offsets);
  for (int n = 0; n < sk.topology.num_nodes(); ++n) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    if (n > 0) {
      for (int e : sk.topology.chain_to(n - 1)) sum += sk.offsets.row(e).transpose();
    }
    CHECK((p.at(1, n) - sum).norm() == 0.0);
    CHECK((rest[n] - sum).norm() == 0.0);
  }
}

TEST_CASE("FK is equivariant to root motion") {
  std::mt19937_64 rng(2);
  const Skeleton sk = toy_humanoid();
  MotionClip clip = synth_motion(sk, random_motion(rng, 4));
  const auto base = forward_kinematics(sk.topology, clip);
  const Eigen::Quaterniond R(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()));
  const Eigen::Vector3d shift(0.3, -1, 2);
  MotionClip moved = clip;
  for (int t = 0; t < clip.num_frames(); ++t) {
    moved.root_orientation[t] = R * clip.root_orientation[t];
    moved.root_translation[t] = clip.root_translation[t] + shift;
  }
  const auto p = forward_kinematics(sk.topology, moved);
  for (int t = 0; t < clip.num_frames(); ++t) {
    for (int n = 0; n < p.nodes; ++n) {
      const Eigen::Vector3d expect = clip.root_translation[t] + shift +
                                     R * (base.at(t, n) - clip.root_translation[t]);
      CHECK((p.at(t, n) - expect).norm() < 1e-9);
    }
  }
}

TEST_CASE("FK rejects non-unit quaternions") {
  const Skeleton sk = toy_humanoid();
  MotionClip clip = MotionClip::rest(sk.offsets, 1);
  clip.rotation(0, 3) = Eigen::Quaterniond(2, 0, 0, 0);
  CHECK_THROWS(forward_kinematics(sk.topology, clip));
}

TEST_CASE("character height") {
  Offsets off(3, 3);
  off << 0, 1, 0, 0, 1, 0, 0, 1, 0;
  Skeleton sk = chain_skeleton(off);
  CHECK(character_height(sk.topology, off, 3, {0}) == doctest::Approx(3.0));
  CHECK(character_height(sk.topology, off * 2.5, 3, {0}) == doctest::Approx(7.5));
  const Skeleton h = toy_humanoid();
  Skeleton lopsided = h;
  lopsided.offsets.row(2) *= 1.2;  // left shin
  const auto rest = rest_positions(lopsided.topology, lopsided.offsets);
  CHECK(character_height(lopsided) == doctest::Approx(rest[lopsided.head_node].y() - rest[4].y()));
  CHECK_THROWS(character_height(sk.topology, off, -1, {}));
}

TEST_CASE("end-effector velocities") {
  const Skeleton sk = toy_humanoid();
  MotionClip still = MotionClip::rest(sk.offsets, 3);
  const auto ee = sk.topology.end_effector_edges();
  for (const auto& v : end_effector_velocities(forward_kinematics(sk.topology, still), sk.topology, ee, 0.1)) {
    CHECK(v.size() == 2);
    for (double s : v) CHECK(s == 0.0);
  }
  MotionClip moving = still;
  for (int t = 0; t < 3; ++t) moving.root_translation[t] = Eigen::Vector3d(0.2 * t, 0, 0);
  for (const auto& v : end_effector_velocities(forward_kinematics(sk.topology, moving), sk.topology, ee, 0.1)) {
    for (double s : v) CHECK(s == doctest::Approx(2.0));
  }
  // circular swing: radius r, angular rate w
  Offsets off(1, 3);
  off << 1.5, 0, 0;
  const Skeleton arm = chain_skeleton(off);
  const double w = 2.0, dt = 0.001;
  MotionClip swing = MotionClip::rest(off, 50, dt);
  for (int t = 0; t < 50; ++t) {
    swing.root_orientation[t] = Eigen::Quaterniond(Eigen::AngleAxisd(w * t * dt, Eigen::Vector3d::UnitZ()));
  }
  const auto v = end_effector_velocities(forward_kinematics(arm.topology, swing), arm.topology, {0}, dt);
  for (double s : v[0]) CHECK(s == doctest::Approx(w * 1.5).epsilon(1e-3));
  CHECK_THROWS(end_effector_velocities(forward_kinematics(sk.topology, MotionClip::rest(sk.offsets, 1)),
                                       sk.topology, ee, 0.1));
}

TEST_CASE("hemisphere continuity") {
  const Skeleton sk = toy_humanoid();
  MotionClip clip = MotionClip::rest(sk.offsets, 3);
  const Eigen::Quaterniond q(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()));
  clip.rotation(0, 1) = Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
  clip.rotation(1, 1) = q;
  clip.rotation(2, 1) = Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
  clip.enforce_hemisphere_continuity();
  CHECK(clip.rotation(0, 1).w() >= 0);
  CHECK(clip.rotation(1, 1).coeffs().dot(clip.rotation(0, 1).coeffs()) > 0);
  CHECK(clip.rotation(2, 1).coeffs().dot(clip.rotation(1, 1).coeffs()) > 0);
}
