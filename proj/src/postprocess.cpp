#include "skm/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "skm/kinematics.hpp"

namespace skm {

void ContactTrack::set_anchors(const JointPositions& positions) {
  for (auto& iv : intervals) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int t = iv.start; t < iv.end; ++t) sum += positions.at(t, feet[iv.foot]);
    iv.anchor = sum / (iv.end - iv.start);
  }
}

ContactTrack detect_contacts(const JointPositions& positions, const std::vector<int>& foot_nodes,
                             double height, const ContactConfig& config) {
  if (positions.frames < 2) throw std::invalid_argument("contact detection needs at least two frames");
  const int T = positions.frames;
  const double threshold = config.speed_threshold * height;
  ContactTrack track;
  track.feet = foot_nodes;
  for (std::size_t f = 0; f < foot_nodes.size(); ++f) {
    const int node = foot_nodes[f];
    std::vector<bool> label(T);
    for (int t = 0; t < T; ++t) {
      const int a = t == 0 ? 0 : t - 1;
      const int b = t == 0 ? 1 : t;
      label[t] = (positions.at(b, node) - positions.at(a, node)).norm() < threshold;
    }
    for (int t = 0; t < T;) {
      if (!label[t]) {
        ++t;
        continue;
      }
      int end = t;
      while (end < T && label[end]) ++end;
      if (end - t < config.min_interval) {
        for (int k = t; k < end; ++k) label[k] = false;
      } else {
        track.intervals.push_back({static_cast<int>(f), t, end, Eigen::Vector3d::Zero()});
      }
      t = end;
    }
    track.labels.push_back(std::move(label));
  }
  track.set_anchors(positions);
  return track;
}

void write_contacts_csv(std::ostream& out, const ContactTrack& track) {
  out << "foot,frame,label\n";
  for (std::size_t f = 0; f < track.feet.size(); ++f) {
    for (int t = 0; t < track.frames(); ++t) {
      out << track.feet[f] << ',' << t << ',' << (track.labels[f][t] ? 1 : 0) << '\n';
    }
  }
}

ContactTrack transfer_contacts(const ContactTrack& source, const std::vector<int>& target_feet,
                               const JointPositions& target_positions) {
  if (target_feet.size() != source.feet.size()) throw std::invalid_argument("foot lists differ in size");
  if (target_positions.frames != source.frames()) throw std::invalid_argument("contact track length does not match the positions");
  ContactTrack out = source;
  out.feet = target_feet;
  out.set_anchors(target_positions);
  return out;
}

std::vector<int> corresponding_feet(const Skeleton& source, const Skeleton& target) {
  const auto pairs = end_effector_correspondence(source.topology, target.topology);
  if (pairs.empty()) throw std::invalid_argument("skeletons are not homeomorphic");
  std::vector<int> out;
  for (int f : source.foot_nodes) {
    const auto it = std::find_if(pairs.begin(), pairs.end(),
                                 [&](const auto& p) { return p.first == source.topology.edge_of_node(f); });
    if (it == pairs.end()) throw std::invalid_argument("foot node is not an end-effector");
    out.push_back(target.topology.child_node(it->second));
  }
  return out;
}

std::vector<int> leg_chain(const SkeletonTopology& topology, int foot_node) {
  std::vector<int> chain;
  int e = topology.parent_of_edge(topology.edge_of_node(foot_node));
  while (e >= 0) {
    chain.push_back(e);
    const int above = topology.parent_node(e);
    if (above == topology.root_node() || topology.node_degree(above) != 2) break;
    e = topology.parent_of_edge(e);
  }
  return chain;
}

namespace {

using Td = Tensor<double>;

struct FrameProblem {
  const SkeletonTopology* topology;
  Offsets offsets;  // height units
  std::vector<int> edges;
  std::vector<int> feet;
  std::vector<Eigen::Vector3d> anchors;  // height units
  double tolerance;
  double w_reg, w_sm;
  bool move_root;
  Eigen::VectorXd x0;                      // initial variables
  std::optional<Eigen::VectorXd> previous; // solved variables of the previous frame
  Eigen::VectorXd rot_all;                 // (J * 4) frame rotations
  Eigen::VectorXd root_all;                // 7

  int n() const { return static_cast<int>(edges.size()) * 4 + (move_root ? 3 : 0); }

  void scatter(const Eigen::VectorXd& x, Eigen::VectorXd& rot, Eigen::VectorXd& root) const {
    rot = rot_all;
    root = root_all;
    for (std::size_t k = 0; k < edges.size(); ++k) rot.segment<4>(edges[k] * 4) = x.segment<4>(k * 4);
    if (move_root) root.head<3>() = x.tail<3>();
  }

  // Foot positions and, when wanted, their Jacobian with respect to x.
  std::vector<Eigen::Vector3d> feet_at(const Eigen::VectorXd& x, Eigen::MatrixXd* jac) const {
    Eigen::VectorXd rot, root;
    scatter(x, rot, root);
    const int J = topology->num_edges();
    Td r({1, J, 4}, rot.array(), jac != nullptr);
    Td t({1, 7}, root.array(), jac != nullptr);
    const Td pos = fk_positions(*topology, offsets, normalize(r, 4), t);
    std::vector<Eigen::Vector3d> out;
    for (int f : feet) out.push_back(Eigen::Map<const Eigen::Vector3d>(pos.value().data() + f * 3));
    if (jac) {
      jac->resize(3 * feet.size(), n());
      for (std::size_t f = 0; f < feet.size(); ++f) {
        for (int c = 0; c < 3; ++c) {
          r.zero_grad();
          t.zero_grad();
          Td::Array sel = Td::Array::Zero(pos.size());
          sel[feet[f] * 3 + c] = 1;
          sum(mul(pos, Td(pos.shape(), sel))).backward();
          const int row = static_cast<int>(f) * 3 + c;
          for (std::size_t k = 0; k < edges.size(); ++k) {
            for (int q = 0; q < 4; ++q) {
              (*jac)(row, k * 4 + q) = r.has_grad() ? r.grad()[edges[k] * 4 + q] : 0.0;
            }
          }
          if (move_root) {
            for (int q = 0; q < 3; ++q) (*jac)(row, n() - 3 + q) = t.has_grad() ? t.grad()[q] : 0.0;
          }
        }
      }
    }
    return out;
  }

  double anchor_error(const std::vector<Eigen::Vector3d>& p) const {
    double e = 0;
    for (std::size_t f = 0; f < feet.size(); ++f) e = std::max(e, (p[f] - anchors[f]).norm());
    return e;
  }

  // Stacked residual vector and its Jacobian (regularisers are linear).
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const std::vector<Eigen::Vector3d>& p,
                           const Eigen::MatrixXd* foot_jac, Eigen::MatrixXd* jac) const {
    const int nf = static_cast<int>(feet.size()) * 3;
    const int m = nf + n() + (previous ? n() : 0);
    Eigen::VectorXd r(m);
    for (std::size_t f = 0; f < feet.size(); ++f) r.segment<3>(f * 3) = (p[f] - anchors[f]) / tolerance;
    r.segment(nf, n()) = std::sqrt(w_reg) * (x - x0);
    if (previous) r.segment(nf + n(), n()) = std::sqrt(w_sm) * (x - *previous);
    if (jac) {
      jac->setZero(m, n());
      jac->topRows(nf) = *foot_jac / tolerance;
      jac->block(nf, 0, n(), n()).diagonal().setConstant(std::sqrt(w_reg));
      if (previous) jac->block(nf + n(), 0, n(), n()).diagonal().setConstant(std::sqrt(w_sm));
    }
    return r;
  }
};

Eigen::VectorXd normalized_quats(Eigen::VectorXd x, int quats) {
  for (int k = 0; k < quats; ++k) x.segment<4>(k * 4).normalize();
  return x;
}

}  // namespace

MotionClip ik_cleanup(const Skeleton& skeleton, double height, const MotionClip& clip,
                      const ContactTrack& contacts, const IkConfig& config, IkReport* report) {
  const SkeletonTopology& topo = skeleton.topology;
  const int T = clip.num_frames(), J = clip.num_edges();
  if (contacts.frames() != 0 && contacts.frames() != T) {
    throw std::invalid_argument("contact track length does not match the clip");
  }
  IkReport local;
  IkReport& rep = report ? *report : local;
  rep = IkReport{};

  std::vector<std::vector<int>> chains;
  std::vector<int> bases;
  std::vector<double> reach;
  for (int foot : contacts.feet) {
    chains.push_back(leg_chain(topo, foot));
    const int base = chains.back().empty() ? topo.parent_node(topo.edge_of_node(foot))
                                           : topo.parent_node(chains.back().back());
    double len = 0;
    for (int e = topo.edge_of_node(foot); e >= 0 && topo.child_node(e) != base; e = topo.parent_of_edge(e)) {
      len += skeleton.offsets.row(e).norm();
    }
    bases.push_back(base);
    reach.push_back(len / height);
  }

  // anchor per foot per frame (height units), when in contact
  std::vector<std::map<int, Eigen::Vector3d>> anchor_at(contacts.feet.size());
  for (const auto& iv : contacts.intervals) {
    for (int t = iv.start; t < iv.end; ++t) anchor_at[iv.foot][t] = iv.anchor / height;
  }

  MotionClip out = clip;
  const Offsets offsets = skeleton.offsets / height;
  std::vector<std::set<int>> modified(T);  // edges changed per frame
  std::vector<bool> root_modified(T, false);
  std::optional<Eigen::VectorXd> prev;
  std::vector<int> prev_edges;
  int prev_t = -2;

  for (int t = 0; t < T; ++t) {
    FrameProblem pb{&topo, offsets, {}, {}, {}, config.tolerance, config.w_reg, config.w_sm,
                    config.move_root, {}, std::nullopt, Eigen::VectorXd(J * 4), Eigen::VectorXd(7)};
    std::set<int> edge_set;
    for (std::size_t f = 0; f < contacts.feet.size(); ++f) {
      auto it = anchor_at[f].find(t);
      if (it == anchor_at[f].end()) continue;
      pb.feet.push_back(contacts.feet[f]);
      pb.anchors.push_back(it->second);
      edge_set.insert(chains[f].begin(), chains[f].end());
    }
    if (pb.feet.empty()) continue;
    pb.edges.assign(edge_set.begin(), edge_set.end());
    for (int e = 0; e < J; ++e) {
      const auto& q = clip.rotation(t, e);
      pb.rot_all.segment<4>(e * 4) << q.w(), q.x(), q.y(), q.z();
    }
    const Eigen::Vector3d root_t = clip.root_translation[t] / height;
    const auto& ro = clip.root_orientation[t];
    pb.root_all << root_t.x(), root_t.y(), root_t.z(), ro.w(), ro.x(), ro.y(), ro.z();
    Eigen::VectorXd x(pb.n());
    for (std::size_t k = 0; k < pb.edges.size(); ++k) x.segment<4>(k * 4) = pb.rot_all.segment<4>(pb.edges[k] * 4);
    if (config.move_root) x.tail<3>() = root_t;
    pb.x0 = x;
    if (prev && prev_t == t - 1 && prev_edges == pb.edges) pb.previous = prev;

    {
      Eigen::VectorXd rot, root;
      pb.scatter(x, rot, root);
      MotionClip probe = MotionClip::rest(offsets, 1);
      for (int e = 0; e < J; ++e) {
        probe.rotations[e] =
            Eigen::Quaterniond(rot[e * 4], rot[e * 4 + 1], rot[e * 4 + 2], rot[e * 4 + 3]).normalized();
      }
      probe.root_translation[0] = root.head<3>();
      probe.root_orientation[0] = Eigen::Quaterniond(root[3], root[4], root[5], root[6]).normalized();
      const auto pos = forward_kinematics(topo, probe, 1e-3);
      for (std::size_t f = 0; f < pb.feet.size(); ++f) {
        const std::size_t fi = std::find(contacts.feet.begin(), contacts.feet.end(), pb.feet[f]) -
                               contacts.feet.begin();
        if ((pos.at(0, bases[fi]) - pb.anchors[f]).norm() > reach[fi] + config.tolerance) {
          ++rep.unreachable;
        }
      }
    }

    Eigen::MatrixXd fj, jac;
    auto feet = pb.feet_at(x, &fj);
    double err = pb.anchor_error(feet);
    Eigen::VectorXd r = pb.residual(x, feet, &fj, &jac);
    double energy = r.squaredNorm();
    std::vector<double> trace{err};
    double lambda = 1e-3;
    for (int it = 0; it < config.max_iterations && err >= config.tolerance; ++it) {
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd g = jac.transpose() * r;
      bool accepted = false;
      while (lambda < 1e10) {
        Eigen::MatrixXd a = jtj;
        a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
        const Eigen::VectorXd step = a.ldlt().solve(-g);
        const Eigen::VectorXd cand = normalized_quats(x + step, static_cast<int>(pb.edges.size()));
        const auto cfeet = pb.feet_at(cand, nullptr);
        const double cerr = pb.anchor_error(cfeet);
        const double cenergy = pb.residual(cand, cfeet, nullptr, nullptr).squaredNorm();
        if (cenergy < energy && cerr <= err) {
          x = cand;
          lambda = std::max(lambda / 3.0, 1e-9);
          accepted = true;
          break;
        }
        lambda *= 10.0;
      }
      if (!accepted) break;
      feet = pb.feet_at(x, &fj);
      err = pb.anchor_error(feet);
      r = pb.residual(x, feet, &fj, &jac);
      energy = r.squaredNorm();
      trace.push_back(err);
    }
    ++rep.frames_solved;
    if (err < config.tolerance) ++rep.frames_converged;
    rep.max_residual = std::max(rep.max_residual, err);
    rep.traces.push_back(std::move(trace));

    for (std::size_t k = 0; k < pb.edges.size(); ++k) {
      const Eigen::Vector4d q = x.segment<4>(k * 4);
      out.rotation(t, pb.edges[k]) = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
      modified[t].insert(pb.edges[k]);
    }
    if (config.move_root) {
      out.root_translation[t] = x.tail<3>() * height;
      root_modified[t] = true;
    }
    prev = x;
    prev_edges = pb.edges;
    prev_t = t;
  }

  // Blend the corrections into nearby untouched frames.
  const int W = config.blend_window;
  const MotionClip solved = out;
  for (int t = 0; t < T; ++t) {
    std::set<int> candidates;
    for (int s = std::max(0, t - W); s <= std::min(T - 1, t + W); ++s) {
      candidates.insert(modified[s].begin(), modified[s].end());
    }
    for (int e : candidates) {
      if (modified[t].count(e)) continue;
      int best = -1;
      for (int k = 1; k <= W && best < 0; ++k) {
        if (t - k >= 0 && modified[t - k].count(e)) best = t - k;
        else if (t + k < T && modified[t + k].count(e)) best = t + k;
      }
      if (best < 0) continue;
      const double w = 1.0 - static_cast<double>(std::abs(t - best)) / (W + 1);
      const Eigen::Quaterniond delta = solved.rotation(best, e) * clip.rotation(best, e).conjugate();
      out.rotation(t, e) =
          (Eigen::Quaterniond::Identity().slerp(w, delta) * clip.rotation(t, e)).normalized();
    }
    if (!root_modified[t]) {
      int best = -1;
      for (int k = 1; k <= W && best < 0; ++k) {
        if (t - k >= 0 && root_modified[t - k]) best = t - k;
        else if (t + k < T && root_modified[t + k]) best = t + k;
      }
      if (best >= 0) {
        const double w = 1.0 - static_cast<double>(std::abs(t - best)) / (W + 1);
        out.root_translation[t] =
            clip.root_translation[t] + w * (solved.root_translation[best] - clip.root_translation[best]);
      }
    }
  }
  out.enforce_hemisphere_continuity();
  return out;
}

}  // namespace skm
