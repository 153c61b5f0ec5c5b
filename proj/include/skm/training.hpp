#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "skm/losses.hpp"
#include "skm/motion.hpp"
#include "skm/networks.hpp"
#include "skm/param_store.hpp"

namespace skm {

struct NoiseSpec {
  enum class Kind { None, Gaussian, Zeros };
  Kind kind = Kind::None;
  double sigma = 0.01;  // gaussian standard deviation per quaternion component
  double rate = 0.05;   // fraction of (edge, frame) pairs zeroed

  std::string str() const;
};

// "none", "gaussian:<sigma>" or "zeros:<rate>".
NoiseSpec parse_noise(const std::string& text);

// Gaussian: perturb every edge quaternion and renormalise. Zeros: overwrite
// the selected (edge, frame) quaternions with the zero vector.
MotionClip inject_noise(const MotionClip& clip, const NoiseSpec& spec, std::mt19937_64& rng);

// All clips of one character.
struct CharacterMotions {
  Skeleton skeleton;
  double height = 1.0;
  std::vector<MotionClip> clips;
};
using Corpus = std::vector<CharacterMotions>;

// Throws std::invalid_argument unless all characters share one topology.
void check_corpus(const Corpus& corpus);

// One character per subdirectory of `dir`; every *.bvh inside is a clip.
// Loose *.bvh files in `dir` itself are grouped by the stem before "__".
Corpus load_corpus(const std::string& dir);

struct TrainConfig {
  int window = 64;
  int batch_size = 4;
  int epochs = 100;
  int steps_per_epoch = 0;  // retargeting; 0 = one pass over the larger corpus
  AdamConfig adam;
  AdamConfig discriminator_adam;
  double final_lr_fraction = 1.0;  // cosine decay of both learning rates to this fraction
  NoiseSpec noise;  // applied to denoiser inputs during training
  std::uint64_t seed = 1;
  LossWeights weights;
  double rotation_weight = 1.0;
  double position_weight = 1.0;
  double denoise_rotation_weight = 0.0;
  NetworkConfig network;
  std::string model = "skeletal";  // or "conventional"
  ConventionalDims conventional;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
TrainConfig load_train_config(const std::string& path);

// Learning-rate multiplier at `epoch`: cosine from 1 to config.final_lr_fraction.
double lr_multiplier(const TrainConfig& config, int epoch);

using EpochTerms = std::map<std::string, double>;
using EpochCallback = std::function<void(int epoch, const EpochTerms& terms)>;

// An autoencoder plus the store that owns its weights.
struct AutoencoderBundle {
  std::unique_ptr<ParamStore<float>> store;
  std::unique_ptr<Autoencoder<float>> model;
  ModelManifest manifest;
};

AutoencoderBundle make_autoencoder(const SkeletonTopology& topology, const TrainConfig& config);
void save_autoencoder(const AutoencoderBundle& bundle, const std::string& checkpoint_path);
AutoencoderBundle load_autoencoder(const std::string& checkpoint_path);

// Position-space reconstruction training on clean (or config.noise) inputs.
// Returns the mean loss of every epoch.
std::vector<double> train_denoiser(AutoencoderBundle& bundle, const Corpus& corpus,
                                   const TrainConfig& config, const EpochCallback& on_epoch = {});

// Run the autoencoder over a whole clip (reflect-padded to a multiple of 4).
MotionClip reconstruct_clip(const Autoencoder<float>& model, const Skeleton& skeleton,
                            double height, const MotionClip& clip);

// Pad by mirroring trailing frames so the length is a multiple of `multiple`
// and at least `min_frames`.
MotionClip reflect_pad(const MotionClip& clip, int multiple, int min_frames);

struct RetargetSystem {
  NetworkConfig network;
  std::unique_ptr<ParamStore<float>> generator;
  std::unique_ptr<ParamStore<float>> discriminator;
  std::unique_ptr<DomainModel<float>> a;
  std::unique_ptr<DomainModel<float>> b;

  static RetargetSystem create(const SkeletonTopology& a, const SkeletonTopology& b,
                               const NetworkConfig& network, std::uint64_t seed);
  // models.json + generator.ckpt + discriminator.ckpt
  void save(const std::string& dir) const;
  static RetargetSystem load(const std::string& dir);
  // The domain model whose topology equals `topology`, or nullptr.
  const DomainModel<float>* domain_of(const SkeletonTopology& topology) const;
};

// Alternating discriminator / generator steps on the weighted total loss,
// symmetric in the two domains. Returns per-epoch term means.
std::vector<EpochTerms> train_retargeter(RetargetSystem& system, const Corpus& a, const Corpus& b,
                                         const TrainConfig& config,
                                         const EpochCallback& on_epoch = {});

// Encode with `source`, decode with `target` (the same model gives the
// reconstruction path).
MotionClip retarget_clip(const DomainModel<float>& source, const DomainModel<float>& target,
                         const Skeleton& source_skeleton, double source_height,
                         const MotionClip& clip, const Skeleton& target_skeleton,
                         double target_height);

// Retarget a clip of `source_skeleton` onto `target_skeleton`; `a_to_b`
// picks the direction through the system.
MotionClip retarget_clip(const RetargetSystem& system, bool a_to_b, const Skeleton& source_skeleton,
                         double source_height, const MotionClip& clip,
                         const Skeleton& target_skeleton, double target_height);

// End-effector nodes and chain lengths (height units) of a character, in the
// order given by `edges`.
EndEffectorSide end_effector_side(const Skeleton& skeleton, double height,
                                  const std::vector<int>& edges);

// Appends one CSV row per epoch; the header is taken from the first row's keys.
class MetricsLog {
 public:
  explicit MetricsLog(std::string path) : path_(std::move(path)) {}
  void append(int epoch, const EpochTerms& terms);

 private:
  std::string path_;
  std::vector<std::string> columns_;
  std::string contents_;
};

}  // namespace skm
