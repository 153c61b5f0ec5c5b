#include "skm/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "skm/io.hpp"
#include "skm/kinematics.hpp"

namespace skm {

namespace {

using Tf = Tensor<float>;

struct Prepared {
  Offsets offsets;  // height units
  Tf s0;
  double height = 1.0;
};

Prepared prepare(const CharacterMotions& c) {
  return {c.skeleton.offsets / c.height, static_input<float>(c.skeleton.offsets, c.height),
          c.height};
}

StaticPyramid<float> detached(const StaticPyramid<float>& p) {
  StaticPyramid<float> out;
  for (const auto& t : p) out.push_back(t.detach());
  return out;
}

MotionClip random_window(const MotionClip& clip, int window, std::mt19937_64& rng) {
  if (clip.num_frames() < window) {
    throw std::invalid_argument("clip has " + std::to_string(clip.num_frames()) +
                                " frames, shorter than the training window of " +
                                std::to_string(window));
  }
  std::uniform_int_distribution<int> pick(0, clip.num_frames() - window);
  return clip.window(pick(rng), window);
}

void check_window(int window) {
  if (window <= 0 || window % 4 != 0) {
    throw std::invalid_argument("training window must be a positive multiple of 4, got " +
                                std::to_string(window));
  }
}

AdamConfig adam_from_json(const nlohmann::json& j, AdamConfig a) {
  a.lr = j.value("lr", a.lr);
  a.beta1 = j.value("beta1", a.beta1);
  a.beta2 = j.value("beta2", a.beta2);
  a.eps = j.value("eps", a.eps);
  return a;
}

nlohmann::json adam_to_json(const AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

}  // namespace

std::string NoiseSpec::str() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Gaussian: s << "gaussian:" << sigma; break;
    case Kind::Zeros: s << "zeros:" << rate; break;
  }
  return s.str();
}

NoiseSpec parse_noise(const std::string& text) {
  NoiseSpec spec;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  double value = -1;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      value = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad noise value in '" + text + "'");
    }
    if (value < 0) throw std::invalid_argument("noise value must be non-negative in '" + text + "'");
  }
  if (kind == "none") {
    spec.kind = NoiseSpec::Kind::None;
  } else if (kind == "gaussian") {
    spec.kind = NoiseSpec::Kind::Gaussian;
    if (value >= 0) spec.sigma = value;
  } else if (kind == "zeros") {
    spec.kind = NoiseSpec::Kind::Zeros;
    if (value >= 0) spec.rate = value;
    if (spec.rate > 1) throw std::invalid_argument("zero-noise rate must be at most 1");
  } else {
    throw std::invalid_argument("unknown noise kind '" + kind +
                                "' (expected none, gaussian:<sigma> or zeros:<rate>)");
  }
  return spec;
}

MotionClip inject_noise(const MotionClip& clip, const NoiseSpec& spec, std::mt19937_64& rng) {
  MotionClip out = clip;
  if (spec.kind == NoiseSpec::Kind::Gaussian && spec.sigma > 0) {
    std::normal_distribution<double> n(0.0, spec.sigma);
    for (auto& q : out.rotations) {
      Eigen::Vector4d c = q.coeffs();
      for (int k = 0; k < 4; ++k) c[k] += n(rng);
      q.coeffs() = c / c.norm();
    }
  } else if (spec.kind == NoiseSpec::Kind::Zeros && spec.rate > 0) {
    std::bernoulli_distribution hit(spec.rate);
    for (auto& q : out.rotations) {
      if (hit(rng)) q.coeffs().setZero();
    }
  }
  return out;
}

void check_corpus(const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  for (const auto& c : corpus) {
    if (!(c.skeleton.topology == corpus[0].skeleton.topology)) {
      throw std::invalid_argument("corpus mixes skeleton topologies");
    }
    if (c.clips.empty()) throw std::invalid_argument("corpus character without clips");
    if (!(c.height > 0)) throw std::invalid_argument("corpus character with non-positive height");
    for (const auto& clip : c.clips) {
      if (clip.num_edges() != c.skeleton.num_edges()) {
        throw std::invalid_argument("clip edge count does not match its skeleton");
      }
    }
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"window", c.window},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"steps_per_epoch", c.steps_per_epoch},
       {"adam", adam_to_json(c.adam)},
       {"discriminator_adam", adam_to_json(c.discriminator_adam)},
       {"final_lr_fraction", c.final_lr_fraction},
       {"noise", c.noise.str()},
       {"seed", c.seed},
       {"weights", c.weights},
       {"rotation_weight", c.rotation_weight},
       {"position_weight", c.position_weight},
       {"denoise_rotation_weight", c.denoise_rotation_weight},
       {"network", c.network},
       {"model", c.model},
       {"conventional", c.conventional}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.window = j.value("window", d.window);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.steps_per_epoch = j.value("steps_per_epoch", d.steps_per_epoch);
  c.adam = adam_from_json(j.value("adam", nlohmann::json::object()), d.adam);
  c.discriminator_adam =
      adam_from_json(j.value("discriminator_adam", nlohmann::json::object()), d.discriminator_adam);
  c.final_lr_fraction = j.value("final_lr_fraction", d.final_lr_fraction);
  c.noise = parse_noise(j.value("noise", std::string("none")));
  c.seed = j.value("seed", d.seed);
  c.weights = j.value("weights", d.weights);
  c.rotation_weight = j.value("rotation_weight", d.rotation_weight);
  c.position_weight = j.value("position_weight", d.position_weight);
  c.denoise_rotation_weight = j.value("denoise_rotation_weight", d.denoise_rotation_weight);
  c.network = j.value("network", d.network);
  c.model = j.value("model", d.model);
  c.conventional = j.value("conventional", d.conventional);
  if (c.model != "skeletal" && c.model != "conventional") {
    throw std::invalid_argument("model must be 'skeletal' or 'conventional'");
  }
  if (c.batch_size < 1 || c.epochs < 0) throw std::invalid_argument("bad batch size or epochs");
  if (!(c.final_lr_fraction > 0 && c.final_lr_fraction <= 1)) {
    throw std::invalid_argument("final_lr_fraction must be in (0, 1]");
  }
  check_window(c.window);
}

double lr_multiplier(const TrainConfig& config, int epoch) {
  if (config.epochs <= 1) return 1.0;
  const double progress = std::clamp(static_cast<double>(epoch) / (config.epochs - 1), 0.0, 1.0);
  const double f = config.final_lr_fraction;
  return f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainConfig load_train_config(const std::string& path) {
  return nlohmann::json::parse(read_file(path)).get<TrainConfig>();
}

AutoencoderBundle make_autoencoder(const SkeletonTopology& topology, const TrainConfig& config) {
  AutoencoderBundle b;
  b.store = std::make_unique<ParamStore<float>>();
  std::mt19937_64 rng(config.seed);
  b.manifest.name = "ae";
  b.manifest.parents = topology.parents();
  b.manifest.topology_hash = topology_hash(topology);
  b.manifest.network = config.network;
  if (config.model == "conventional") {
    auto m = std::make_unique<ConventionalModel<float>>(topology, config.network, config.conventional,
                                                        *b.store, "ae", rng);
    b.manifest.kind = "conventional";
    b.manifest.conventional = m->dims();
    b.model = std::move(m);
  } else {
    b.manifest.kind = "skeletal";
    b.model = std::make_unique<DomainModel<float>>(topology, config.network, *b.store, nullptr, "ae",
                                                   rng);
  }
  return b;
}

void save_autoencoder(const AutoencoderBundle& bundle, const std::string& checkpoint_path) {
  bundle.store->save(checkpoint_path);
  ModelManifest m = bundle.manifest;
  m.checkpoint = checkpoint_path.substr(checkpoint_path.find_last_of('/') + 1);
  write_file_atomic(checkpoint_path + ".json", nlohmann::json(m).dump(2) + "\n");
}

AutoencoderBundle load_autoencoder(const std::string& checkpoint_path) {
  const ModelManifest m =
      nlohmann::json::parse(read_file(checkpoint_path + ".json")).get<ModelManifest>();
  TrainConfig c;
  c.network = m.network;
  c.model = m.kind;
  c.conventional = m.conventional;
  const SkeletonTopology topology(m.parents);
  if (topology_hash(topology) != m.topology_hash) {
    throw CheckpointError("model manifest topology hash mismatch");
  }
  AutoencoderBundle b = make_autoencoder(topology, c);
  b.store->load(checkpoint_path);
  return b;
}

std::vector<double> train_denoiser(AutoencoderBundle& bundle, const Corpus& corpus,
                                   const TrainConfig& config, const EpochCallback& on_epoch) {
  check_corpus(corpus);
  check_window(config.window);
  const SkeletonTopology& topology = bundle.model->topology();
  if (!(corpus[0].skeleton.topology == topology)) {
    throw std::invalid_argument("corpus topology does not match the model");
  }
  std::vector<Prepared> chars;
  for (const auto& c : corpus) chars.push_back(prepare(c));
  std::vector<std::pair<int, int>> samples;
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    for (std::size_t k = 0; k < corpus[c].clips.size(); ++k) samples.emplace_back(c, k);
  }
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::vector<double> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    AdamConfig adam = config.adam;
    adam.lr *= lr_multiplier(config, epoch);
    std::shuffle(samples.begin(), samples.end(), rng);
    double epoch_loss = 0;
    int steps = 0;
    for (std::size_t begin = 0; begin < samples.size(); begin += config.batch_size) {
      const std::size_t end = std::min(samples.size(), begin + config.batch_size);
      bundle.store->zero_grad();
      Tf total = Tf::scalar(0);
      for (std::size_t s = begin; s < end; ++s) {
        const auto [c, k] = samples[s];
        const Prepared& p = chars[c];
        const MotionClip win = random_window(corpus[c].clips[k], config.window, rng);
        const auto target = clip_to_tensors<float>(win, p.height);
        const auto input = config.noise.kind == NoiseSpec::Kind::None
                               ? target
                               : clip_to_tensors<float>(inject_noise(win, config.noise, rng), p.height);
        const auto pyramid = bundle.model->encode_static(p.s0);
        const auto pred = bundle.model->reconstruct(pack_dynamics(input.rotations, input.root), pyramid);
        total = total + loss_reconstruction(topology, p.offsets, pred.rotations, pred.root,
                                            target.rotations, target.root,
                                            config.denoise_rotation_weight, config.position_weight);
      }
      total = scale(total, 1.0f / static_cast<float>(end - begin));
      if (!std::isfinite(total.item())) throw std::domain_error("non-finite training loss");
      total.backward();
      bundle.store->adam_step(adam);
      epoch_loss += total.item();
      ++steps;
    }
    history.push_back(epoch_loss / std::max(1, steps));
    if (on_epoch) on_epoch(epoch, {{"rec", history.back()}});
  }
  return history;
}

MotionClip reflect_pad(const MotionClip& clip, int multiple, int min_frames) {
  const int T = clip.num_frames();
  int target = std::max(T, min_frames);
  target = (target + multiple - 1) / multiple * multiple;
  if (target == T) return clip;
  MotionClip out = clip;
  const int J = clip.num_edges();
  for (int i = T; i < target; ++i) {
    int src = i;
    while (src < 0 || src >= T) {
      if (T == 1) {
        src = 0;
        break;
      }
      src = src >= T ? 2 * (T - 1) - src : -src;
    }
    for (int e = 0; e < J; ++e) out.rotations.push_back(clip.rotation(src, e));
    out.root_translation.push_back(clip.root_translation[src]);
    out.root_orientation.push_back(clip.root_orientation[src]);
  }
  return out;
}

MotionClip reconstruct_clip(const Autoencoder<float>& model, const Skeleton& skeleton,
                            double height, const MotionClip& clip) {
  const MotionClip padded = reflect_pad(clip, 4, 16);
  const auto ct = clip_to_tensors<float>(padded, height);
  const auto pyramid = model.encode_static(static_input<float>(skeleton.offsets, height));
  const auto pred = model.reconstruct(pack_dynamics(ct.rotations, ct.root), pyramid);
  MotionClip out = tensors_to_clip(pred.rotations, pred.root, skeleton.offsets, height, ct.origin,
                                   clip.frame_time);
  return out.window(0, clip.num_frames());
}

RetargetSystem RetargetSystem::create(const SkeletonTopology& a, const SkeletonTopology& b,
                                      const NetworkConfig& network, std::uint64_t seed) {
  if (!check_homeomorphic(a, b).homeomorphic) {
    throw std::invalid_argument("domains are not homeomorphic");
  }
  RetargetSystem s;
  s.network = network;
  s.generator = std::make_unique<ParamStore<float>>();
  s.discriminator = std::make_unique<ParamStore<float>>();
  std::mt19937_64 rng(seed);
  s.a = std::make_unique<DomainModel<float>>(a, network, *s.generator, s.discriminator.get(), "A", rng);
  s.b = std::make_unique<DomainModel<float>>(b, network, *s.generator, s.discriminator.get(), "B", rng);
  return s;
}

void RetargetSystem::save(const std::string& dir) const {
  generator->save(dir + "/generator.ckpt");
  discriminator->save(dir + "/discriminator.ckpt");
  nlohmann::json j = {
      {"network", network},
      {"a", {{"parents", a->topology().parents()}, {"topology_hash", topology_hash(a->topology())}}},
      {"b", {{"parents", b->topology().parents()}, {"topology_hash", topology_hash(b->topology())}}},
      {"generator", "generator.ckpt"},
      {"discriminator", "discriminator.ckpt"}};
  write_file_atomic(dir + "/models.json", j.dump(2) + "\n");
}

RetargetSystem RetargetSystem::load(const std::string& dir) {
  const auto j = nlohmann::json::parse(read_file(dir + "/models.json"));
  const SkeletonTopology a(j.at("a").at("parents").get<std::vector<int>>());
  const SkeletonTopology b(j.at("b").at("parents").get<std::vector<int>>());
  RetargetSystem s = create(a, b, j.at("network").get<NetworkConfig>(), 0);
  s.generator->load(dir + "/" + j.value("generator", std::string("generator.ckpt")));
  s.discriminator->load(dir + "/" + j.value("discriminator", std::string("discriminator.ckpt")));
  return s;
}

EndEffectorSide end_effector_side(const Skeleton& skeleton, double height,
                                  const std::vector<int>& edges) {
  const auto& all = skeleton.topology.end_effector_edges();
  const auto lengths = chain_lengths(skeleton.topology, skeleton.offsets);
  EndEffectorSide side;
  for (int e : edges) {
    const auto it = std::find(all.begin(), all.end(), e);
    if (it == all.end()) throw std::invalid_argument("edge is not an end-effector");
    side.nodes.push_back(e + 1);
    side.chain_lengths.push_back(lengths[it - all.begin()] / height);
  }
  return side;
}

std::vector<EpochTerms> train_retargeter(RetargetSystem& system, const Corpus& corpus_a,
                                         const Corpus& corpus_b, const TrainConfig& config,
                                         const EpochCallback& on_epoch) {
  check_corpus(corpus_a);
  check_corpus(corpus_b);
  check_window(config.window);
  const DomainModel<float>& A = *system.a;
  const DomainModel<float>& B = *system.b;
  if (!(corpus_a[0].skeleton.topology == A.topology()) ||
      !(corpus_b[0].skeleton.topology == B.topology())) {
    throw std::invalid_argument("corpus topologies do not match the retargeting system");
  }
  const auto pairs = end_effector_correspondence(A.topology(), B.topology());
  std::vector<int> ee_a, ee_b;
  for (const auto& [ea, eb] : pairs) {
    ee_a.push_back(ea);
    ee_b.push_back(eb);
  }
  struct Side {
    Prepared prep;
    EndEffectorSide ee;
  };
  std::vector<Side> side_a, side_b;
  for (const auto& c : corpus_a) side_a.push_back({prepare(c), end_effector_side(c.skeleton, c.height, ee_a)});
  for (const auto& c : corpus_b) side_b.push_back({prepare(c), end_effector_side(c.skeleton, c.height, ee_b)});

  auto count = [](const Corpus& c) {
    std::size_t n = 0;
    for (const auto& ch : c) n += ch.clips.size();
    return n;
  };
  const int steps = config.steps_per_epoch > 0
                        ? config.steps_per_epoch
                        : static_cast<int>((std::max(count(corpus_a), count(corpus_b)) +
                                            config.batch_size - 1) / config.batch_size);
  const bool adversarial = config.weights.adv != 0.0;
  std::mt19937_64 rng(config.seed ^ 0x7e7a26e7ULL);
  const double frame_time = corpus_a[0].clips[0].frame_time;

  struct Draw {
    int character;
    ClipTensors<float> clip;
    Tf dynamics;
  };
  auto draw = [&](const Corpus& corpus, const std::vector<Side>& sides) {
    std::uniform_int_distribution<int> pc(0, static_cast<int>(corpus.size()) - 1);
    const int c = pc(rng);
    std::uniform_int_distribution<int> pk(0, static_cast<int>(corpus[c].clips.size()) - 1);
    const MotionClip win = random_window(corpus[c].clips[pk(rng)], config.window, rng);
    auto ct = clip_to_tensors<float>(win, sides[c].prep.height);
    Tf dyn = pack_dynamics(ct.rotations, ct.root);
    return Draw{c, std::move(ct), std::move(dyn)};
  };

  std::vector<EpochTerms> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochTerms sums{{"rec", 0}, {"ltc", 0}, {"adv_g", 0}, {"adv_d", 0}, {"ee", 0}, {"total", 0}};
    const double decay = lr_multiplier(config, epoch);
    AdamConfig adam_g = config.adam, adam_d = config.discriminator_adam;
    adam_g.lr *= decay;
    adam_d.lr *= decay;
    for (int step = 0; step < steps; ++step) {
      struct Pass {
        Draw xa, xb;
        StaticPyramid<float> pa, pb;
        Tf za, zb;
        DecodedMotion<float> rec_a, rec_b, fake_b, fake_a;
        Tf packed_fake_b, packed_fake_a;
      };
      std::vector<Pass> batch;
      for (int s = 0; s < config.batch_size; ++s) {
        Pass p{draw(corpus_a, side_a), draw(corpus_b, side_b), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
        p.pa = A.encode_static(side_a[p.xa.character].prep.s0);
        p.pb = B.encode_static(side_b[p.xb.character].prep.s0);
        p.za = A.encode(p.xa.dynamics, p.pa);
        p.zb = B.encode(p.xb.dynamics, p.pb);
        p.rec_a = A.decode(p.za, p.pa);
        p.rec_b = B.decode(p.zb, p.pb);
        p.fake_b = B.decode(p.za, p.pb);
        p.fake_a = A.decode(p.zb, p.pa);
        p.packed_fake_b = pack_dynamics(p.fake_b.rotations, p.fake_b.root);
        p.packed_fake_a = pack_dynamics(p.fake_a.rotations, p.fake_a.root);
        batch.push_back(std::move(p));
      }
      const float inv = 1.0f / static_cast<float>(batch.size());

      if (adversarial) {
        system.discriminator->zero_grad();
        Tf loss_d = Tf::scalar(0);
        for (const auto& p : batch) {
          const auto pb = detached(p.pb), pa = detached(p.pa);
          loss_d = loss_d + loss_adversarial_discriminator(B.discriminate(p.packed_fake_b.detach(), pb),
                                                           B.discriminate(p.xb.dynamics, pb));
          loss_d = loss_d + loss_adversarial_discriminator(A.discriminate(p.packed_fake_a.detach(), pa),
                                                           A.discriminate(p.xa.dynamics, pa));
        }
        loss_d = scale(loss_d, inv);
        loss_d.backward();
        system.discriminator->adam_step(adam_d);
        sums["adv_d"] += loss_d.item();
      }

      system.generator->zero_grad();
      Tf rec = Tf::scalar(0), ltc = Tf::scalar(0), adv = Tf::scalar(0), ee = Tf::scalar(0);
      for (const auto& p : batch) {
        const Side& sa = side_a[p.xa.character];
        const Side& sb = side_b[p.xb.character];
        rec = rec + loss_reconstruction(A.topology(), sa.prep.offsets, p.rec_a.rotations,
                                        p.rec_a.root, p.xa.clip.rotations, p.xa.clip.root,
                                        config.rotation_weight, config.position_weight);
        rec = rec + loss_reconstruction(B.topology(), sb.prep.offsets, p.rec_b.rotations,
                                        p.rec_b.root, p.xb.clip.rotations, p.xb.clip.root,
                                        config.rotation_weight, config.position_weight);
        if (config.weights.ltc != 0.0) {
          ltc = ltc + loss_latent_consistency(B.encode(p.packed_fake_b, p.pb), p.za);
          ltc = ltc + loss_latent_consistency(A.encode(p.packed_fake_a, p.pa), p.zb);
        }
        if (adversarial) {
          adv = adv + loss_adversarial_generator(B.discriminate(p.packed_fake_b, p.pb));
          adv = adv + loss_adversarial_generator(A.discriminate(p.packed_fake_a, p.pa));
        }
        if (config.weights.ee != 0.0) {
          const Tf pos_a = fk_positions(A.topology(), sa.prep.offsets, p.xa.clip.rotations, p.xa.clip.root);
          const Tf pos_b = fk_positions(B.topology(), sb.prep.offsets, p.xb.clip.rotations, p.xb.clip.root);
          const Tf fake_b = fk_positions(B.topology(), sb.prep.offsets, p.fake_b.rotations, p.fake_b.root);
          const Tf fake_a = fk_positions(A.topology(), sa.prep.offsets, p.fake_a.rotations, p.fake_a.root);
          ee = ee + loss_end_effectors(pos_a, sa.ee, fake_b, sb.ee, frame_time);
          ee = ee + loss_end_effectors(pos_b, sb.ee, fake_a, sa.ee, frame_time);
        }
      }
      rec = scale(rec, inv);
      ltc = scale(ltc, inv);
      adv = scale(adv, inv);
      ee = scale(ee, inv);
      const Tf total = total_loss(rec, ltc, adv, ee, config.weights);
      if (!std::isfinite(total.item())) throw std::domain_error("non-finite training loss");
      total.backward();
      system.generator->adam_step(adam_g);
      sums["rec"] += rec.item();
      sums["ltc"] += ltc.item();
      sums["adv_g"] += adv.item();
      sums["ee"] += ee.item();
      sums["total"] += total.item();
    }
    for (auto& [k, v] : sums) v /= steps;
    history.push_back(sums);
    if (on_epoch) on_epoch(epoch, sums);
  }
  system.discriminator->zero_grad();
  return history;
}

MotionClip retarget_clip(const DomainModel<float>& src, const DomainModel<float>& tgt,
                         const Skeleton& source_skeleton, double source_height,
                         const MotionClip& clip, const Skeleton& target_skeleton,
                         double target_height) {
  if (!(source_skeleton.topology == src.topology()) || !(target_skeleton.topology == tgt.topology())) {
    throw std::invalid_argument("skeletons do not match the retargeting system's domains");
  }
  const MotionClip padded = reflect_pad(clip, 4, 16);
  const auto ct = clip_to_tensors<float>(padded, source_height);
  const auto ps = src.encode_static(static_input<float>(source_skeleton.offsets, source_height));
  const auto pt = tgt.encode_static(static_input<float>(target_skeleton.offsets, target_height));
  const auto out = retarget(src, tgt, pack_dynamics(ct.rotations, ct.root), ps, pt);
  MotionClip result = tensors_to_clip(out.rotations, out.root, target_skeleton.offsets,
                                      target_height, ct.origin, clip.frame_time);
  return result.window(0, clip.num_frames());
}

MotionClip retarget_clip(const RetargetSystem& system, bool a_to_b, const Skeleton& source_skeleton,
                         double source_height, const MotionClip& clip,
                         const Skeleton& target_skeleton, double target_height) {
  return retarget_clip(a_to_b ? *system.a : *system.b, a_to_b ? *system.b : *system.a,
                       source_skeleton, source_height, clip, target_skeleton, target_height);
}

const DomainModel<float>* RetargetSystem::domain_of(const SkeletonTopology& topology) const {
  if (a && a->topology() == topology) return a.get();
  if (b && b->topology() == topology) return b.get();
  return nullptr;
}

void MetricsLog::append(int epoch, const EpochTerms& terms) {
  if (columns_.empty()) {
    contents_ = "epoch";
    for (const auto& [k, v] : terms) {
      columns_.push_back(k);
      contents_ += "," + k;
    }
    contents_ += "\n";
  }
  std::ostringstream row;
  row << epoch << std::setprecision(9);
  for (const auto& k : columns_) {
    auto it = terms.find(k);
    row << ',';
    if (it != terms.end()) row << it->second;
  }
  contents_ += row.str() + "\n";
  write_file_atomic(path_, contents_);
}

}  // namespace skm
