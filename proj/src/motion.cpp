#include "skm/motion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace skm {

namespace {

bool contains_ci(const std::string& haystack, const std::string& needle) {
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != haystack.end();
}

}  // namespace

void Skeleton::infer_tags() {
  head_node = -1;
  foot_nodes.clear();
  const auto rest = rest_positions(topology, offsets);
  for (int e : topology.end_effector_edges()) {
    const int node = topology.child_node(e);
    const int parent = topology.parent_node(e);
    const std::string& name = node_names[node];
    const std::string& pname = node_names[parent];
    if (contains_ci(name, "head") || contains_ci(pname, "head")) {
      if (head_node < 0 || rest[node].y() > rest[head_node].y()) head_node = node;
    } else if (contains_ci(name, "foot") || contains_ci(name, "toe") ||
               contains_ci(pname, "foot") || contains_ci(pname, "toe")) {
      foot_nodes.push_back(node);
    }
  }
}

MotionClip MotionClip::rest(const Offsets& statics, int frames, double frame_time) {
  MotionClip clip;
  clip.statics = statics;
  clip.rotations.assign(static_cast<std::size_t>(frames) * statics.rows(),
                        Eigen::Quaterniond::Identity());
  clip.root_translation.assign(frames, Eigen::Vector3d::Zero());
  clip.root_orientation.assign(frames, Eigen::Quaterniond::Identity());
  clip.frame_time = frame_time;
  return clip;
}

MotionClip MotionClip::window(int begin, int count) const {
  if (begin < 0 || count < 1 || begin + count > num_frames()) {
    throw std::out_of_range("motion window outside clip");
  }
  MotionClip w;
  w.statics = statics;
  w.frame_time = frame_time;
  const int j = num_edges();
  w.rotations.assign(rotations.begin() + begin * j, rotations.begin() + (begin + count) * j);
  w.root_translation.assign(root_translation.begin() + begin,
                            root_translation.begin() + begin + count);
  w.root_orientation.assign(root_orientation.begin() + begin,
                            root_orientation.begin() + begin + count);
  return w;
}

void MotionClip::enforce_hemisphere_continuity() {
  const int t_count = num_frames();
  const int j = num_edges();
  if (t_count == 0) return;
  auto fix = [](Eigen::Quaterniond& cur, const Eigen::Quaterniond& prev) {
    if (cur.dot(prev) < 0.0) cur.coeffs() = -cur.coeffs();
  };
  root_orientation[0] = canonical(root_orientation[0]);
  for (int e = 0; e < j; ++e) rotation(0, e) = canonical(rotation(0, e));
  for (int t = 1; t < t_count; ++t) {
    fix(root_orientation[t], root_orientation[t - 1]);
    for (int e = 0; e < j; ++e) fix(rotation(t, e), rotation(t - 1, e));
  }
}

void MotionClip::check_unit(double tol) const {
  auto check = [tol](const Eigen::Quaterniond& q, int t, int e) {
    if (std::abs(q.norm() - 1.0) > tol) {
      throw std::domain_error("non-unit quaternion at frame " + std::to_string(t) + ", edge " +
                              std::to_string(e) + " (norm " + std::to_string(q.norm()) + ")");
    }
  };
  const int j = num_edges();
  for (int t = 0; t < num_frames(); ++t) {
    check(root_orientation[t], t, -1);
    for (int e = 0; e < j; ++e) check(rotation(t, e), t, e);
  }
}

MotionClip MotionClip::sanitized() const {
  MotionClip out = *this;
  auto fix = [](Eigen::Quaterniond& q) {
    const double n = q.norm();
    if (n < 1e-12) {
      q = Eigen::Quaterniond::Identity();
    } else {
      q.coeffs() /= n;
    }
  };
  for (auto& q : out.rotations) fix(q);
  for (auto& q : out.root_orientation) fix(q);
  return out;
}

JointPositions forward_kinematics(const SkeletonTopology& topology, const MotionClip& clip,
                                  double unit_tol) {
  if (clip.num_edges() != topology.num_edges()) {
    throw std::invalid_argument("forward_kinematics: clip has " +
                                std::to_string(clip.num_edges()) + " edges, topology has " +
                                std::to_string(topology.num_edges()));
  }
  clip.check_unit(unit_tol);
  JointPositions out;
  out.frames = clip.num_frames();
  out.nodes = topology.num_nodes();
  out.data.resize(static_cast<std::size_t>(out.frames) * out.nodes);
  std::vector<Eigen::Quaterniond> global(out.nodes);
  for (int t = 0; t < out.frames; ++t) {
    global[0] = clip.root_orientation[t];
    out.at(t, 0) = clip.root_translation[t];
    for (int e = 0; e < topology.num_edges(); ++e) {
      const int pn = topology.parent_node(e);
      const int cn = topology.child_node(e);
      const Eigen::Vector3d off = clip.statics.row(e).transpose();
      out.at(t, cn) = out.at(t, pn) + global[pn] * off;
      global[cn] = global[pn] * clip.rotation(t, e);
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> rest_positions(const SkeletonTopology& topology,
                                            const Offsets& offsets) {
  std::vector<Eigen::Vector3d> pos(topology.num_nodes(), Eigen::Vector3d::Zero());
  for (int e = 0; e < topology.num_edges(); ++e) {
    pos[topology.child_node(e)] = pos[topology.parent_node(e)] + offsets.row(e).transpose();
  }
  return pos;
}

double character_height(const SkeletonTopology& topology, const Offsets& offsets, int head_node,
                        const std::vector<int>& foot_nodes) {
  if (head_node < 0 || foot_nodes.empty()) {
    throw std::invalid_argument("character_height: skeleton has no head/foot tags");
  }
  const auto pos = rest_positions(topology, offsets);
  double lowest = std::numeric_limits<double>::infinity();
  for (int f : foot_nodes) lowest = std::min(lowest, pos[f].y());
  return std::abs(pos[head_node].y() - lowest);
}

double character_height(const Skeleton& skeleton) {
  return character_height(skeleton.topology, skeleton.offsets, skeleton.head_node,
                          skeleton.foot_nodes);
}

std::vector<double> chain_lengths(const SkeletonTopology& topology, const Offsets& offsets) {
  std::vector<double> lengths;
  for (int e : topology.end_effector_edges()) {
    double len = 0.0;
    for (int c : topology.chain_to(e)) len += offsets.row(c).norm();
    lengths.push_back(len);
  }
  return lengths;
}

SkeletonGeometry SkeletonGeometry::of(const Skeleton& skeleton) {
  SkeletonGeometry g;
  g.topology = skeleton.topology;
  g.offsets = skeleton.offsets;
  g.height = character_height(skeleton);
  g.chain_lengths = skm::chain_lengths(skeleton.topology, skeleton.offsets);
  return g;
}

std::vector<std::vector<double>> end_effector_velocities(const JointPositions& positions,
                                                         const SkeletonTopology& topology,
                                                         const std::vector<int>& ee_edges,
                                                         double frame_time) {
  if (positions.frames < 2) {
    throw std::invalid_argument("end_effector_velocities needs at least two frames");
  }
  std::vector<std::vector<double>> speeds;
  for (int e : ee_edges) {
    const int node = topology.child_node(e);
    std::vector<double> v(positions.frames - 1);
    for (int t = 0; t + 1 < positions.frames; ++t) {
      v[t] = (positions.at(t + 1, node) - positions.at(t, node)).norm() / frame_time;
    }
    speeds.push_back(std::move(v));
  }
  return speeds;
}

void write_positions_csv(std::ostream& out, const JointPositions& positions) {
  out << "frame,node,x,y,z\n";
  out << std::setprecision(9);
  for (int t = 0; t < positions.frames; ++t) {
    for (int n = 0; n < positions.nodes; ++n) {
      const auto& p = positions.at(t, n);
      out << t << ',' << n << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
  }
}

}  // namespace skm
