#include "skm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <stdexcept>

#include "skm/bvh.hpp"

namespace skm {

namespace {

struct JointSpec {
  std::string name;
  std::string parent;
  Eigen::Vector3d offset;
};

Skeleton build_skeleton(const std::vector<JointSpec>& joints) {
  // joints[0] is the root; every parent precedes its children.
  std::map<std::string, int> index{{joints[0].name, 0}};
  std::vector<int> parents;
  Skeleton s;
  s.node_names.push_back(joints[0].name);
  s.offsets.resize(static_cast<Eigen::Index>(joints.size()) - 1, 3);
  for (std::size_t n = 1; n < joints.size(); ++n) {
    const auto it = index.find(joints[n].parent);
    if (it == index.end()) throw std::logic_error("joint parent must precede the joint: " + joints[n].name);
    parents.push_back(it->second == 0 ? -1 : it->second - 1);
    s.offsets.row(static_cast<Eigen::Index>(n) - 1) = joints[n].offset.transpose();
    s.node_names.push_back(joints[n].name);
    index[joints[n].name] = static_cast<int>(n);
  }
  s.topology = SkeletonTopology(parents);
  s.is_end_site.assign(joints.size(), false);
  s.rotation_orders.assign(joints.size(), parse_euler_order("ZXY"));
  for (std::size_t n = 1; n < joints.size(); ++n) {
    if (s.topology.is_end_effector(static_cast<int>(n) - 1)) s.is_end_site[n] = true;
  }
  s.infer_tags();
  return s;
}

std::vector<JointSpec> joints_of(const Skeleton& s) {
  std::vector<JointSpec> out{{s.node_names[0], "", Eigen::Vector3d::Zero()}};
  for (int e = 0; e < s.num_edges(); ++e) {
    out.push_back({s.node_names[e + 1], s.node_names[s.topology.parent_node(e)],
                   s.offsets.row(e).transpose()});
  }
  return out;
}

Eigen::Quaterniond axis_angle(double angle, const Eigen::Vector3d& axis) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Eigen::Quaterniond joint_rotation(const std::string& name, double tau, const MotionParams& p) {
  const Eigen::Vector3d X = Eigen::Vector3d::UnitX(), Y = Eigen::Vector3d::UnitY(),
                        Z = Eigen::Vector3d::UnitZ();
  const double s = std::sin(tau);
  const double lift_left = s > 0 ? s * s : 0.0;
  const double lift_right = s < 0 ? s * s : 0.0;
  for (const auto& [side, lift, sign] : {std::tuple{std::string("Left"), lift_left, 1.0},
                                         std::tuple{std::string("Right"), lift_right, -1.0}}) {
    if (name == side + "UpLeg") return axis_angle(-p.hip * lift, X);
    if (name == side + "Leg") return axis_angle(p.knee * lift, X);
    if (name == side + "Foot") return axis_angle(-0.3 * p.knee * lift, X);
    if (name == side + "Arm") {
      return axis_angle(-sign * 1.0, Z) * axis_angle(sign * p.shoulder * std::sin(tau + 0.3), Y);
    }
    if (name == side + "ForeArm") {
      return axis_angle(-sign * p.elbow * (0.6 + 0.4 * std::sin(tau + 0.8)), Y);
    }
  }
  if (name == "Spine") return axis_angle(p.bend * std::sin(tau), X);
  if (name == "Spine1") {
    return axis_angle(0.8 * p.bend * std::sin(tau + 1.0), Z) * axis_angle(0.5 * p.bend + 0.5 * p.bend * std::cos(tau), X);
  }
  if (name == "Head") return axis_angle(p.nod * std::sin(2.0 * tau), X);
  return Eigen::Quaterniond::Identity();
}

}  // namespace

Skeleton toy_humanoid(const BodyProportions& b) {
  const double s = b.scale;
  std::vector<JointSpec> joints{{"Hips", "", Eigen::Vector3d::Zero()}};
  for (const auto& [side, x] : {std::pair{std::string("Left"), 1.0}, std::pair{std::string("Right"), -1.0}}) {
    joints.push_back({side + "UpLeg", "Hips", s * Eigen::Vector3d(0.09 * x, -0.04, 0)});
    joints.push_back({side + "Leg", side + "UpLeg", s * Eigen::Vector3d(0, -0.42 * b.leg, 0)});
    joints.push_back({side + "Foot", side + "Leg", s * Eigen::Vector3d(0, -0.40 * b.leg, 0)});
    joints.push_back({side + "Foot_End", side + "Foot", s * Eigen::Vector3d(0, -0.07, 0.13)});
  }
  joints.push_back({"Spine", "Hips", s * Eigen::Vector3d(0, 0.11 * b.spine, 0)});
  joints.push_back({"Spine1", "Spine", s * Eigen::Vector3d(0, 0.26 * b.spine, 0)});
  joints.push_back({"Head", "Spine1", s * Eigen::Vector3d(0, 0.16, 0)});
  joints.push_back({"Head_End", "Head", s * Eigen::Vector3d(0, 0.18, 0)});
  for (const auto& [side, x] : {std::pair{std::string("Left"), 1.0}, std::pair{std::string("Right"), -1.0}}) {
    joints.push_back({side + "Arm", "Spine1", s * Eigen::Vector3d(0.17 * x, 0.10, 0)});
    joints.push_back({side + "ForeArm", side + "Arm", s * Eigen::Vector3d(0.27 * b.arm * x, 0, 0)});
    joints.push_back({side + "ForeArm_End", side + "ForeArm", s * Eigen::Vector3d(0.25 * b.arm * x, 0, 0)});
  }
  return build_skeleton(joints);
}

Skeleton subdivide_named(const Skeleton& skeleton, const std::vector<std::string>& names) {
  std::vector<JointSpec> joints;
  for (const auto& j : joints_of(skeleton)) {
    if (std::find(names.begin(), names.end(), j.name) != names.end()) {
      if (j.parent.empty()) throw std::invalid_argument("cannot subdivide the root");
      joints.push_back({j.name + "Mid", j.parent, 0.5 * j.offset});
      joints.push_back({j.name, j.name + "Mid", 0.5 * j.offset});
    } else {
      joints.push_back(j);
    }
  }
  for (const auto& n : names) {
    if (std::find(skeleton.node_names.begin(), skeleton.node_names.end(), n) == skeleton.node_names.end()) {
      throw std::invalid_argument("no joint named " + n);
    }
  }
  return build_skeleton(joints);
}

MotionParams random_motion(std::mt19937_64& rng, int frames) {
  auto u = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  MotionParams p;
  p.frames = frames;
  p.period = u(20.0, 40.0);
  p.phase = u(0.0, 2.0 * std::numbers::pi);
  p.hip = u(0.3, 0.7);
  p.knee = u(0.5, 1.0);
  p.shoulder = u(0.2, 0.7);
  p.elbow = u(0.6, 1.4);
  p.bend = u(0.1, 0.4);
  p.nod = u(0.05, 0.3);
  p.yaw = u(-0.5, 0.5);
  return p;
}

MotionClip synth_motion(const Skeleton& skeleton, const MotionParams& p) {
  if (p.frames < 1) throw std::invalid_argument("motion needs at least one frame");
  MotionClip clip = MotionClip::rest(skeleton.offsets, p.frames, p.frame_time);
  const auto rest = rest_positions(skeleton.topology, skeleton.offsets);
  double ground = 0;
  for (int f : skeleton.foot_nodes) ground = std::min(ground, rest[f].y());
  const auto& names = skeleton.node_names;
  for (int t = 0; t < p.frames; ++t) {
    const double tau = 2.0 * std::numbers::pi * t / p.period + p.phase;
    for (int e = 0; e < skeleton.num_edges(); ++e) {
      const std::string& name = names[e + 1];
      const int parent = skeleton.topology.parent_node(e);
      Eigen::Quaterniond q;
      if (ends_with(name, "Mid")) {
        q = Eigen::Quaterniond::Identity().slerp(0.5, joint_rotation(name.substr(0, name.size() - 3), tau, p));
      } else if (parent > 0 && names[parent] == name + "Mid") {
        q = Eigen::Quaterniond::Identity().slerp(0.5, joint_rotation(name, tau, p));
      } else {
        q = joint_rotation(name, tau, p);
      }
      clip.rotation(t, e) = q.normalized();
    }
    clip.root_translation[t] = Eigen::Vector3d(0, -ground, 0);
    clip.root_orientation[t] = axis_angle(p.yaw, Eigen::Vector3d::UnitY());
  }
  clip.enforce_hemisphere_continuity();
  return clip;
}

std::vector<std::vector<bool>> stationary_frames(const JointPositions& positions,
                                                 const std::vector<int>& foot_nodes, double eps) {
  if (positions.frames < 2) throw std::invalid_argument("need at least two frames");
  std::vector<std::vector<bool>> out;
  for (int f : foot_nodes) {
    std::vector<bool> label(positions.frames);
    for (int t = 0; t < positions.frames; ++t) {
      const int a = t == 0 ? 0 : t - 1, b = t == 0 ? 1 : t;
      label[t] = (positions.at(b, f) - positions.at(a, f)).norm() < eps;
    }
    out.push_back(std::move(label));
  }
  return out;
}

SynthData make_synth_data(const SynthSpec& spec) {
  if (spec.domain_a.empty() || spec.domain_b.empty()) throw std::invalid_argument("both domains need characters");
  if (spec.frames < 2 || spec.clips_per_character < 1) throw std::invalid_argument("invalid clip settings");
  SynthData data;
  std::mt19937_64 rng(spec.seed);
  auto fill = [&](SynthDomain& dom, const std::vector<BodyProportions>& bodies, bool subdivided) {
    for (const auto& body : bodies) {
      Skeleton sk = toy_humanoid(body);
      if (subdivided) sk = subdivide_named(sk, spec.subdivide);
      CharacterMotions cm{sk, character_height(sk), {}};
      for (int c = 0; c < spec.clips_per_character; ++c) cm.clips.push_back(synth_motion(sk, random_motion(rng, spec.frames)));
      dom.characters.push_back(sk);
      dom.names.push_back(body.name);
      dom.corpus.push_back(std::move(cm));
    }
  };
  fill(data.a, spec.domain_a, false);
  fill(data.b, spec.domain_b, true);
  for (int c = 0; c < spec.test_clips; ++c) data.test_motions.push_back(random_motion(rng, spec.frames));
  return data;
}

void write_synth_corpus(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  char buf[32];
  for (const auto& [tag, dom] : {std::pair{std::string("a"), &data.a}, std::pair{std::string("b"), &data.b}}) {
    for (std::size_t c = 0; c < dom->characters.size(); ++c) {
      const fs::path cdir = fs::path(dir) / tag / dom->names[c];
      fs::create_directories(cdir);
      const auto& cm = dom->corpus[c];
      for (std::size_t k = 0; k < cm.clips.size(); ++k) {
        std::snprintf(buf, sizeof buf, "clip%02zu.bvh", k);
        save_bvh((cdir / buf).string(), cm.skeleton, cm.clips[k]);
      }
      const fs::path tdir = fs::path(dir) / "test" / tag;
      fs::create_directories(tdir);
      for (std::size_t k = 0; k < data.test_motions.size(); ++k) {
        std::snprintf(buf, sizeof buf, "__test%02zu.bvh", k);
        save_bvh((tdir / (dom->names[c] + buf)).string(), cm.skeleton,
                 synth_motion(cm.skeleton, data.test_motions[k]));
      }
    }
  }
}

}  // namespace skm
