#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "skm/synth.hpp"
#include "skm/training.hpp"

using namespace skm;

namespace {

MotionClip walk(const Skeleton& s, int frames = 32) {
  MotionParams p;
  p.frames = frames;
  return synth_motion(s, p);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.window = 16;
  c.batch_size = 1;
  c.epochs = 2;
  c.steps_per_epoch = 2;
  c.network.kernel = 3;
  c.network.block1_channels = 4;
  c.network.latent_channels = 4;
  c.network.static_channels = 2;
  return c;
}

Corpus small_corpus(const Skeleton& s, int clips, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CharacterMotions cm{s, character_height(s), {}};
  for (int k = 0; k < clips; ++k) cm.clips.push_back(synth_motion(s, random_motion(rng, 32)));
  return {cm};
}

}  // namespace

TEST_CASE("noise specs parse and print") {
  CHECK(parse_noise("none").kind == NoiseSpec::Kind::None);
  const auto g = parse_noise("gaussian:0.02");
  CHECK(g.kind == NoiseSpec::Kind::Gaussian);
  CHECK(g.sigma == doctest::Approx(0.02));
  const auto z = parse_noise("zeros:0.1");
  CHECK(z.kind == NoiseSpec::Kind::Zeros);
  CHECK(z.rate == doctest::Approx(0.1));
  CHECK(parse_noise(z.str()).rate == doctest::Approx(0.1));
  CHECK_THROWS(parse_noise("salt:0.1"));
  CHECK_THROWS(parse_noise("zeros:1.5"));
}

TEST_CASE("zero-sigma gaussian noise leaves the clip unchanged") {
  const Skeleton s = toy_humanoid();
  const MotionClip clip = walk(s);
  std::mt19937_64 rng(1);
  const MotionClip noisy = inject_noise(clip, parse_noise("gaussian:0"), rng);
  for (std::size_t i = 0; i < clip.rotations.size(); ++i) {
    CHECK(noisy.rotations[i].coeffs().isApprox(clip.rotations[i].coeffs(), 1e-15));
  }
}

TEST_CASE("zero noise at rate one clears every edge rotation") {
  const Skeleton s = toy_humanoid();
  const MotionClip clip = walk(s);
  std::mt19937_64 rng(1);
  const MotionClip noisy = inject_noise(clip, parse_noise("zeros:1"), rng);
  for (const auto& q : noisy.rotations) CHECK(q.coeffs().norm() == 0.0);
}

TEST_CASE("zero noise hits about the configured fraction") {
  const Skeleton s = toy_humanoid();
  const MotionClip clip = walk(s, 200);
  std::mt19937_64 rng(2);
  const MotionClip noisy = inject_noise(clip, parse_noise("zeros:0.05"), rng);
  const auto zeros = std::count_if(noisy.rotations.begin(), noisy.rotations.end(),
                                   [](const Eigen::Quaterniond& q) { return q.coeffs().norm() == 0.0; });
  const double frac = static_cast<double>(zeros) / static_cast<double>(noisy.rotations.size());
  CHECK(frac == doctest::Approx(0.05).epsilon(0.25));
}

// Angle between the quaternions as unit 4-vectors (half the rotation angle).
TEST_CASE("gaussian noise at 0.01 stays under two degrees at the 99th percentile") {
  const Skeleton s = toy_humanoid();
  MotionClip clip = walk(s, 2);
  std::mt19937_64 rng(3);
  std::vector<double> angles;
  while (angles.size() < 100000) {
    const MotionClip noisy = inject_noise(clip, parse_noise("gaussian:0.01"), rng);
    for (std::size_t i = 0; i < clip.rotations.size(); ++i) {
      const double c = std::abs(noisy.rotations[i].coeffs().dot(clip.rotations[i].coeffs()));
      angles.push_back(std::acos(std::min(1.0, c)));
    }
  }
  std::nth_element(angles.begin(), angles.begin() + 99000, angles.end());
  CHECK(angles[99000] < 2.0 * std::numbers::pi / 180.0);
}

TEST_CASE("train config JSON round trip and validation") {
  TrainConfig c = tiny_config();
  c.adam.lr = 1e-3;
  c.final_lr_fraction = 0.1;
  c.noise = parse_noise("zeros:0.05");
  c.model = "conventional";
  const nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  CHECK(back.window == 16);
  CHECK(back.adam.lr == doctest::Approx(1e-3));
  CHECK(back.final_lr_fraction == doctest::Approx(0.1));
  CHECK(back.noise.kind == NoiseSpec::Kind::Zeros);
  CHECK(back.model == "conventional");
  nlohmann::json bad = j;
  bad["window"] = 30;
  CHECK_THROWS(bad.get<TrainConfig>());
  bad = j;
  bad["model"] = "transformer";
  CHECK_THROWS(bad.get<TrainConfig>());
}

TEST_CASE("learning-rate schedule runs from one to the final fraction") {
  TrainConfig c;
  c.epochs = 11;
  CHECK(lr_multiplier(c, 0) == 1.0);
  CHECK(lr_multiplier(c, 10) == 1.0);
  c.final_lr_fraction = 0.1;
  CHECK(lr_multiplier(c, 0) == doctest::Approx(1.0));
  CHECK(lr_multiplier(c, 5) == doctest::Approx(0.55));
  CHECK(lr_multiplier(c, 10) == doctest::Approx(0.1));
}

TEST_CASE("denoiser training is deterministic and reduces the loss") {
  const Skeleton s = toy_humanoid();
  const Corpus corpus = small_corpus(s, 2, 4);
  TrainConfig c = tiny_config();
  c.epochs = 30;
  c.adam.lr = 1e-3;
  c.adam.beta1 = 0.9;
  auto run = [&] {
    auto bundle = make_autoencoder(s.topology, c);
    auto history = train_denoiser(bundle, corpus, c);
    return std::pair{history, bundle.store->serialize()};
  };
  const auto [h1, w1] = run();
  const auto [h2, w2] = run();
  CHECK(h1 == h2);
  CHECK(w1 == w2);
  CHECK(h1.back() < h1.front());
}

TEST_CASE("the denoiser rejects a corpus of another topology") {
  const Skeleton s = toy_humanoid();
  const Skeleton other = subdivide_named(s, {"Spine1"});
  TrainConfig c = tiny_config();
  auto bundle = make_autoencoder(s.topology, c);
  CHECK_THROWS_AS(train_denoiser(bundle, small_corpus(other, 1, 1), c), std::invalid_argument);
}

TEST_CASE("without the adversarial term the discriminator never changes") {
  const Skeleton a = toy_humanoid();
  const Skeleton b = subdivide_named(a, {"Spine1"});
  TrainConfig c = tiny_config();
  c.weights.adv = 0.0;
  auto system = RetargetSystem::create(a.topology, b.topology, c.network, 3);
  const std::string before = system.discriminator->serialize();
  const std::string gen_before = system.generator->serialize();
  train_retargeter(system, small_corpus(a, 2, 1), small_corpus(b, 2, 2), c);
  CHECK(system.discriminator->serialize() == before);
  CHECK(system.generator->serialize() != gen_before);
}

TEST_CASE("retargeting output follows the target structure") {
  const Skeleton a = toy_humanoid();
  const Skeleton b = subdivide_named(a, {"Spine1", "LeftForeArm"});
  TrainConfig c = tiny_config();
  auto system = RetargetSystem::create(a.topology, b.topology, c.network, 3);
  const MotionClip out = retarget_clip(system, true, a, character_height(a), walk(a, 30), b,
                                       character_height(b));
  CHECK(out.num_edges() == b.num_edges());
  CHECK(out.num_frames() == 30);
  CHECK(system.domain_of(b.topology) == system.b.get());
  CHECK(system.domain_of(subdivide_named(a, {"Head"}).topology) == nullptr);
}
