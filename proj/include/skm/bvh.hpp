#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "skm/motion.hpp"

namespace skm {

class BvhError : public std::runtime_error {
 public:
  BvhError(const std::string& what, int line, int column)
      : std::runtime_error("bvh:" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                           what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct BvhDocument {
  Skeleton skeleton;
  MotionClip clip;
};

// BVH 1.0. End Site blocks become end-effector edges named "<parent>_End".
// The root needs 3 rotation channels and optionally 3 position channels;
// other joints carry 0 or 3 rotation channels.
BvhDocument parse_bvh(std::istream& in);
BvhDocument parse_bvh_string(const std::string& text);
BvhDocument load_bvh(const std::string& path);

// Root writes Xposition Yposition Zposition then its rotation order; every
// non-end-site joint writes its three rotation channels. Frame Time has six decimals.
void write_bvh(std::ostream& out, const Skeleton& skeleton, const MotionClip& clip);
std::string write_bvh_string(const Skeleton& skeleton, const MotionClip& clip);
void save_bvh(const std::string& path, const Skeleton& skeleton, const MotionClip& clip);

}  // namespace skm
