#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "skm/motion.hpp"
#include "skm/training.hpp"

namespace skm {

struct BodyProportions {
  std::string name = "toy";
  double scale = 1.0;  // overall size
  double leg = 1.0;    // relative leg length
  double arm = 1.0;
  double spine = 1.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BodyProportions, name, scale, leg, arm, spine)

// 18-edge humanoid: two 4-edge legs, a 2-edge spine, a 2-edge head chain and
// two 3-edge arms. Node names follow the usual mocap convention.
Skeleton toy_humanoid(const BodyProportions& body = {});

// Split the edges ending at the named nodes into two equal halves. The new
// middle node is called "<name>Mid".
Skeleton subdivide_named(const Skeleton& skeleton, const std::vector<std::string>& names);

struct MotionParams {
  int frames = 64;
  double frame_time = 1.0 / 30.0;
  double period = 32.0;  // frames per stepping cycle
  double phase = 0.0;    // radians
  double hip = 0.5;      // radians of swing-leg hip flexion
  double knee = 0.8;
  double shoulder = 0.5;
  double elbow = 0.6;
  double bend = 0.15;    // torso
  double nod = 0.2;
  double yaw = 0.0;      // constant facing
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MotionParams, frames, frame_time, period, phase,
                                                hip, knee, shoulder, elbow, bend, nod, yaw)

MotionParams random_motion(std::mt19937_64& rng, int frames);

// In-place stepping motion: the legs lift alternately while the stance leg
// stays at rest, so stance feet are exactly stationary. Rotations are looked
// up by node name; a "<name>Mid" node and its child "<name>" share the
// rotation of "<name>" half and half.
MotionClip synth_motion(const Skeleton& skeleton, const MotionParams& params);

// Frames where a foot node moves less than `eps` (absolute units) from the
// previous frame; frame 0 compares with frame 1.
std::vector<std::vector<bool>> stationary_frames(const JointPositions& positions,
                                                 const std::vector<int>& foot_nodes,
                                                 double eps = 1e-9);

struct SynthSpec {
  std::uint64_t seed = 1;
  int frames = 64;
  int clips_per_character = 4;
  int test_clips = 2;
  std::vector<std::string> subdivide{"Spine1", "LeftForeArm", "RightForeArm"};
  std::vector<BodyProportions> domain_a{{"A0", 1.0, 1.0, 1.0, 1.0}, {"A1", 1.2, 1.1, 0.9, 1.0}};
  std::vector<BodyProportions> domain_b{{"B0", 0.9, 0.95, 1.1, 1.1}, {"B1", 1.1, 1.05, 1.0, 0.9}};
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthSpec, seed, frames, clips_per_character,
                                                test_clips, subdivide, domain_a, domain_b)

struct SynthDomain {
  std::vector<Skeleton> characters;
  std::vector<std::string> names;
  Corpus corpus;  // training clips per character
};

struct SynthData {
  SynthDomain a;
  SynthDomain b;
  std::vector<MotionParams> test_motions;  // applied to every character of both domains
};

// Domain B is domain A's body plan with the spec's edges subdivided. Training
// clips draw independent random motions per domain.
SynthData make_synth_data(const SynthSpec& spec);

// Layout: a/<char>/clipNN.bvh, b/<char>/clipNN.bvh,
// test/a/<char>__testNN.bvh, test/b/<char>__testNN.bvh.
void write_synth_corpus(const SynthData& data, const std::string& dir);

}  // namespace skm
