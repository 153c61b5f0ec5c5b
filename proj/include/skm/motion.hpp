#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "skm/quaternion.hpp"
#include "skm/skeleton_graph.hpp"

namespace skm {

using Offsets = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// A character: topology, rest offsets, names and end-effector tags.
struct Skeleton {
  SkeletonTopology topology;
  Offsets offsets;                       // per edge, J x 3
  Eigen::Vector3d root_offset = Eigen::Vector3d::Zero();
  std::vector<std::string> node_names;   // J + 1, node 0 = root
  std::vector<bool> is_end_site;         // per node; end sites carry no channels
  std::vector<EulerOrder> rotation_orders;  // per node
  int head_node = -1;
  std::vector<int> foot_nodes;

  int num_edges() const { return topology.num_edges(); }
  // Tag head/foot nodes from node names: "head" → head, "foot"/"toe" → foot.
  // Only leaf nodes are tagged; the highest head leaf wins.
  void infer_tags();
};

// Static/dynamic representation of a clip. Quaternions are (w, x, y, z),
// one per edge per frame: the local rotation of the edge's child node.
struct MotionClip {
  Offsets statics;                                // J x 3
  std::vector<Eigen::Quaterniond> rotations;      // T * J, frame-major
  std::vector<Eigen::Vector3d> root_translation;  // T
  std::vector<Eigen::Quaterniond> root_orientation;  // T
  double frame_time = 1.0 / 30.0;

  int num_frames() const { return static_cast<int>(root_translation.size()); }
  int num_edges() const { return static_cast<int>(statics.rows()); }

  Eigen::Quaterniond& rotation(int t, int e) { return rotations[t * num_edges() + e]; }
  const Eigen::Quaterniond& rotation(int t, int e) const { return rotations[t * num_edges() + e]; }

  static MotionClip rest(const Offsets& statics, int frames, double frame_time = 1.0 / 30.0);

  // Frames [begin, begin + count).
  MotionClip window(int begin, int count) const;

  // Canonical w >= 0 on the first frame, then sign flips for temporal continuity.
  void enforce_hemisphere_continuity();
  // Throws if any stored quaternion is off the unit sphere by more than tol.
  void check_unit(double tol = 1e-6) const;
  // Normalise every quaternion; zero quaternions become identity.
  MotionClip sanitized() const;
};

struct JointPositions {
  int frames = 0;
  int nodes = 0;
  std::vector<Eigen::Vector3d> data;  // frames * nodes

  Eigen::Vector3d& at(int t, int n) { return data[t * nodes + n]; }
  const Eigen::Vector3d& at(int t, int n) const { return data[t * nodes + n]; }
};

JointPositions forward_kinematics(const SkeletonTopology& topology, const MotionClip& clip,
                                  double unit_tol = 1e-6);

// Node positions for identity rotations at the origin.
std::vector<Eigen::Vector3d> rest_positions(const SkeletonTopology& topology,
                                            const Offsets& offsets);

// Vertical (y) distance between the head node and the lowest foot node in the rest pose.
double character_height(const SkeletonTopology& topology, const Offsets& offsets, int head_node,
                        const std::vector<int>& foot_nodes);
double character_height(const Skeleton& skeleton);

// Root-to-end-effector chain length for every end-effector edge (same order
// as topology.end_effector_edges()).
std::vector<double> chain_lengths(const SkeletonTopology& topology, const Offsets& offsets);

struct SkeletonGeometry {
  SkeletonTopology topology;
  Offsets offsets;
  double height = 0.0;
  std::vector<double> chain_lengths;

  static SkeletonGeometry of(const Skeleton& skeleton);
};

// Per end-effector, T - 1 forward-difference speeds (units per second).
std::vector<std::vector<double>> end_effector_velocities(const JointPositions& positions,
                                                         const SkeletonTopology& topology,
                                                         const std::vector<int>& ee_edges,
                                                         double frame_time);

// frame,node,x,y,z
void write_positions_csv(std::ostream& out, const JointPositions& positions);

}  // namespace skm
