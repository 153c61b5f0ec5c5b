#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "skm/motion.hpp"

namespace skm {

struct ContactConfig {
  double speed_threshold = 0.006;  // per frame, in units of character height
  int min_interval = 3;            // frames
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ContactConfig, speed_threshold, min_interval)

struct ContactInterval {
  int foot = 0;   // index into ContactTrack::feet
  int start = 0;  // first frame
  int end = 0;    // one past the last frame
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
};

struct ContactTrack {
  std::vector<int> feet;                 // node ids
  std::vector<std::vector<bool>> labels;  // [foot][frame]
  std::vector<ContactInterval> intervals;

  int frames() const { return labels.empty() ? 0 : static_cast<int>(labels[0].size()); }
  // Recompute anchors as the mean foot position of `positions` over each interval.
  void set_anchors(const JointPositions& positions);
};

// Per-frame foot speed is the displacement from the previous frame (frame 0
// uses the next one). Frames below threshold * height are contacts; runs
// shorter than min_interval are dropped.
ContactTrack detect_contacts(const JointPositions& positions, const std::vector<int>& foot_nodes,
                             double height, const ContactConfig& config = {});

// Carry contact labels detected on a source clip over to a target: feet are
// renamed to `target_feet` (same order) and anchors are taken from `target_positions`.
ContactTrack transfer_contacts(const ContactTrack& source, const std::vector<int>& target_feet,
                               const JointPositions& target_positions);

// Target foot nodes matching each source foot node through the end-effector
// correspondence of the two topologies.
std::vector<int> corresponding_feet(const Skeleton& source, const Skeleton& target);

// foot,frame,label
void write_contacts_csv(std::ostream& out, const ContactTrack& track);

struct IkConfig {
  double tolerance = 1e-3;  // foot-to-anchor distance, units of height
  double w_reg = 1.0;
  double w_sm = 0.5;
  int max_iterations = 100;
  bool move_root = true;
  int blend_window = 5;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IkConfig, tolerance, w_reg, w_sm, max_iterations,
                                                move_root, blend_window)

struct IkReport {
  int frames_solved = 0;
  int frames_converged = 0;
  int unreachable = 0;         // frames where an anchor lies beyond the leg's reach
  double max_residual = 0.0;   // worst final foot-to-anchor distance / height
  std::vector<std::vector<double>> traces;  // per solved frame: max anchor error per iteration
  bool warning() const { return unreachable > 0; }
};

// Edges whose rotation moves `foot_node` below the first branching node above it.
std::vector<int> leg_chain(const SkeletonTopology& topology, int foot_node);

// Pin feet to their interval anchors on every contact frame by guarded
// damped least-squares descent on the leg-chain rotations (and optionally
// the root translation); blend into untouched frames over blend_window frames.
MotionClip ik_cleanup(const Skeleton& skeleton, double height, const MotionClip& clip,
                      const ContactTrack& contacts, const IkConfig& config = {},
                      IkReport* report = nullptr);

}  // namespace skm
