#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace skm::detail {

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index length) {
  if (i < 0) return -i;
  if (i >= length) return 2 * (length - 1) - i;
  return i;
}

inline Eigen::Index conv_output_length(Eigen::Index length, int kernel, int stride) {
  const int pad = kernel / 2;
  if (pad >= length && length > 1) {
    throw std::invalid_argument("reflect padding " + std::to_string(pad) +
                                " needs at least " + std::to_string(pad + 1) + " frames, got " +
                                std::to_string(length));
  }
  return (length + 2 * pad - kernel) / stride + 1;
}

// Source frame for output frame o and tap m.
inline Eigen::Index conv_source(Eigen::Index o, int m, int kernel, int stride,
                                Eigen::Index length) {
  if (length == 1) return 0;
  return reflect_index(o * stride + m - kernel / 2, length);
}

}  // namespace skm::detail
