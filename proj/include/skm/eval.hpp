#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "skm/motion.hpp"

namespace skm {

// Mean Euclidean node distance divided by height, times 1e3.
double position_error(const JointPositions& predicted, const JointPositions& truth, double height);

// One retargeted motion on target character `target`. `nodes` selects the
// compared nodes (the same ids in both position sets); empty means all.
struct RetargetSample {
  std::string target;
  JointPositions predicted;
  JointPositions truth;
  double height = 1.0;
  std::vector<int> nodes;
};

struct RetargetErrors {
  std::map<std::string, double> per_target;  // E^k
  double mean = 0.0;                         // average over targets
};

// E^k averages ||P~ - P|| / h_k over every sample, frame and compared node
// of target k; the reported number is the mean over targets.
RetargetErrors retargeting_error(const std::vector<RetargetSample>& samples);

// Mean node distance / height of a single sample (no 1e3 factor).
double sample_error(const RetargetSample& sample);

// correspondence[target edge] = source edge, or -1 for identity.
MotionClip copy_rotations_baseline(const MotionClip& source, double source_height,
                                   const Skeleton& target, double target_height,
                                   const std::vector<int>& correspondence);

// Match target edges to source edges through their child node names.
std::vector<int> correspondence_by_names(const Skeleton& source, const Skeleton& target);

// Node pairs (target node, source node) sharing a name.
std::vector<std::pair<int, int>> common_nodes(const Skeleton& a, const Skeleton& b);

// target,error rows followed by a mean row.
void write_retarget_report_csv(std::ostream& out, const RetargetErrors& errors);
// Aligned two-column table.
void write_retarget_table(std::ostream& out, const RetargetErrors& errors);

}  // namespace skm
