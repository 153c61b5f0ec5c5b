#include "skm/quaternion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Vector3d unit_axis(int a) { return Eigen::Vector3d::Unit(a); }

bool even_permutation(const std::array<int, 3>& a) {
  return (a[0] == 0 && a[1] == 1) || (a[0] == 1 && a[1] == 2) || (a[0] == 2 && a[1] == 0);
}

}  // namespace

std::string EulerOrder::name() const {
  std::string s;
  for (int a : axes) s += static_cast<char>('X' + a);
  return s;
}

EulerOrder parse_euler_order(const std::string& name) {
  if (name.size() != 3) throw std::invalid_argument("euler order must have three axes: " + name);
  EulerOrder order;
  for (int k = 0; k < 3; ++k) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[k])));
    if (c < 'X' || c > 'Z') throw std::invalid_argument("bad euler axis in " + name);
    order.axes[k] = c - 'X';
  }
  if (order.axes[0] == order.axes[1] || order.axes[1] == order.axes[2] ||
      order.axes[0] == order.axes[2]) {
    throw std::invalid_argument("only Tait-Bryan orders are supported: " + name);
  }
  return order;
}

Eigen::Quaterniond euler_to_quaternion(const Eigen::Vector3d& degrees, const EulerOrder& order) {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  for (int k = 0; k < 3; ++k) {
    q = q * Eigen::Quaterniond(Eigen::AngleAxisd(degrees[k] * kDeg, unit_axis(order.axes[k])));
  }
  return q.normalized();
}

Eigen::Vector3d quaternion_to_euler(const Eigen::Quaterniond& q, const EulerOrder& order) {
  // R = R_i(a) R_j(b) R_k(c) with (i, j, k) distinct.
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const int i = order.axes[0], j = order.axes[1], k = order.axes[2];
  const double s = even_permutation(order.axes) ? 1.0 : -1.0;
  const double sb = std::clamp(s * r(i, k), -1.0, 1.0);
  double a, b, c;
  b = std::asin(sb);
  if (std::abs(sb) < 1.0 - 1e-12) {
    a = std::atan2(-s * r(j, k), r(k, k));
    c = std::atan2(-s * r(i, j), r(i, i));
  } else {
    // Gimbal lock: fold everything into the first angle.
    c = 0.0;
    a = std::atan2(s * r(k, j), r(j, j));
  }
  return Eigen::Vector3d(a, b, c) / kDeg;
}

Eigen::Quaterniond canonical(const Eigen::Quaterniond& q) {
  return q.w() < 0.0 ? Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z()) : q;
}

double angular_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double d = std::min(1.0, std::abs(a.dot(b)));
  return 2.0 * std::acos(d);
}

}  // namespace skm
