#pragma once

#include <array>
#include <string>

#include <Eigen/Geometry>

namespace skm {

// Tait-Bryan axis order as written in a BVH CHANNELS line, e.g. {2, 0, 1} for
// "Zrotation Xrotation Yrotation". The rotation is R = R_a0 * R_a1 * R_a2.
struct EulerOrder {
  std::array<int, 3> axes{2, 0, 1};

  std::string name() const;  // e.g. "ZXY"
  bool operator==(const EulerOrder&) const = default;
};

EulerOrder parse_euler_order(const std::string& name);

// Angles in degrees, listed in the order's axis sequence.
Eigen::Quaterniond euler_to_quaternion(const Eigen::Vector3d& degrees, const EulerOrder& order);
Eigen::Vector3d quaternion_to_euler(const Eigen::Quaterniond& q, const EulerOrder& order);

// w >= 0 representative.
Eigen::Quaterniond canonical(const Eigen::Quaterniond& q);

// Rotation angle between two unit quaternions, radians, in [0, pi].
double angular_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace skm
