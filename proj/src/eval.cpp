#include "skm/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <stdexcept>

namespace skm {

namespace {

void check_shapes(const JointPositions& a, const JointPositions& b) {
  if (a.frames != b.frames || a.nodes != b.nodes) {
    throw std::invalid_argument("position sets differ in shape: " + std::to_string(a.frames) + "x" +
                                std::to_string(a.nodes) + " vs " + std::to_string(b.frames) + "x" +
                                std::to_string(b.nodes));
  }
}

}  // namespace

double position_error(const JointPositions& predicted, const JointPositions& truth, double height) {
  check_shapes(predicted, truth);
  if (!(height > 0)) throw std::invalid_argument("height must be positive");
  if (predicted.data.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < predicted.data.size(); ++i) total += (predicted.data[i] - truth.data[i]).norm();
  return total / static_cast<double>(predicted.data.size()) / height * 1e3;
}

double sample_error(const RetargetSample& s) {
  check_shapes(s.predicted, s.truth);
  if (!(s.height > 0)) throw std::invalid_argument("height must be positive");
  std::vector<int> nodes = s.nodes;
  if (nodes.empty()) {
    for (int n = 0; n < s.truth.nodes; ++n) nodes.push_back(n);
  }
  double total = 0;
  for (int t = 0; t < s.truth.frames; ++t) {
    for (int n : nodes) total += (s.predicted.at(t, n) - s.truth.at(t, n)).norm();
  }
  return total / (static_cast<double>(s.truth.frames) * nodes.size() * s.height);
}

RetargetErrors retargeting_error(const std::vector<RetargetSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no retargeting samples");
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : samples) {
    auto& [sum, count] = acc[s.target];
    sum += sample_error(s);
    ++count;
  }
  RetargetErrors out;
  for (const auto& [name, sc] : acc) {
    out.per_target[name] = sc.first / sc.second;
    out.mean += sc.first / sc.second;
  }
  out.mean /= static_cast<double>(acc.size());
  return out;
}

MotionClip copy_rotations_baseline(const MotionClip& source, double source_height,
                                   const Skeleton& target, double target_height,
                                   const std::vector<int>& correspondence) {
  const int J = target.num_edges();
  if (static_cast<int>(correspondence.size()) != J) {
    throw std::invalid_argument("correspondence must list every target edge");
  }
  for (int e : correspondence) {
    if (e < -1 || e >= source.num_edges()) throw std::invalid_argument("correspondence names a missing source edge");
  }
  if (!(source_height > 0) || !(target_height > 0)) throw std::invalid_argument("height must be positive");
  const int T = source.num_frames();
  MotionClip out = MotionClip::rest(target.offsets, T, source.frame_time);
  const double ratio = target_height / source_height;
  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < J; ++e) {
      if (correspondence[e] >= 0) out.rotation(t, e) = source.rotation(t, correspondence[e]);
    }
    out.root_translation[t] = source.root_translation[t] * ratio;
    out.root_orientation[t] = source.root_orientation[t];
  }
  return out;
}

std::vector<int> correspondence_by_names(const Skeleton& source, const Skeleton& target) {
  std::vector<int> map(target.num_edges(), -1);
  for (int e = 0; e < target.num_edges(); ++e) {
    const auto& name = target.node_names[e + 1];
    const auto it = std::find(source.node_names.begin() + 1, source.node_names.end(), name);
    if (it != source.node_names.end()) map[e] = static_cast<int>(it - source.node_names.begin()) - 1;
  }
  return map;
}

std::vector<std::pair<int, int>> common_nodes(const Skeleton& a, const Skeleton& b) {
  std::vector<std::pair<int, int>> out;
  for (int n = 0; n < static_cast<int>(a.node_names.size()); ++n) {
    const auto it = std::find(b.node_names.begin(), b.node_names.end(), a.node_names[n]);
    if (it != b.node_names.end()) out.emplace_back(n, static_cast<int>(it - b.node_names.begin()));
  }
  return out;
}

void write_retarget_report_csv(std::ostream& out, const RetargetErrors& errors) {
  out << "target,error\n" << std::setprecision(9);
  for (const auto& [name, e] : errors.per_target) out << name << ',' << e << '\n';
  out << "mean," << errors.mean << '\n';
}

void write_retarget_table(std::ostream& out, const RetargetErrors& errors) {
  std::size_t width = 6;
  for (const auto& [name, e] : errors.per_target) width = std::max(width, name.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "target" << "E^k\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, e] : errors.per_target) {
    out << std::setw(static_cast<int>(width) + 2) << name << e << '\n';
  }
  out << std::setw(static_cast<int>(width) + 2) << "mean" << errors.mean << '\n';
  out.unsetf(std::ios::fixed | std::ios::left);
}

}  // namespace skm
