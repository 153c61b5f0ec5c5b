#include "skm/gradcheck_suites.hpp"

#include <functional>

#include "skm/kinematics.hpp"
#include "skm/losses.hpp"
#include "skm/networks.hpp"
#include "skm/skeletal_ops.hpp"

namespace skm {

namespace {

using Td = Tensor<double>;
using Inputs = std::vector<Td>;
using Fn = std::function<Td(const Inputs&)>;

Td random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Index n = 1;
  for (Index d : shape) n *= d;
  std::uniform_real_distribution<double> u(lo, hi);
  Td::Array a(n);
  for (Index i = 0; i < n; ++i) a[i] = u(rng);
  return Td(shape, a);
}

Td unit_quats(Index frames, Index count, std::mt19937_64& rng) {
  return normalize(random_tensor({frames, count, 4}, rng), 4).detach();
}

Td root_track(Index frames, std::mt19937_64& rng) {
  const Td q = normalize(random_tensor({frames, 4}, rng), 4).detach();
  return concat<double>({random_tensor({frames, 3}, rng, -0.2, 0.2), q}, 1).detach();
}

Offsets random_offsets(int edges, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Offsets o(edges, 3);
  for (int e = 0; e < edges; ++e) o.row(e) << u(rng), u(rng) - 0.3, u(rng);
  return o;
}

struct Runner {
  std::vector<GradcheckCase>* out;
  std::string suite;
  void operator()(const std::string& name, const Fn& f, const Inputs& inputs, int max_probes = 0) {
    GradcheckOptions opt;
    opt.max_probes = max_probes;
    out->push_back({suite, name, gradcheck(f, inputs, opt)});
  }
};

SkeletalConvSpec conv_spec(const SkeletonTopology& topo, int cin, int cin_root, int cout, int cstatic,
                           int kernel, int stride) {
  SkeletalConvSpec sp;
  sp.neighbours = armature_neighbourhoods(topo, 1);
  const int slots = num_slots(topo);
  sp.in_channels.assign(slots, cin);
  sp.in_channels[root_slot(topo)] = cin_root;
  sp.out_channels.assign(slots, cout);
  sp.static_channels = cstatic;
  sp.kernel = kernel;
  sp.stride = stride;
  return sp;
}

void ops_suite(Runner run, std::mt19937_64& rng) {
  const Td a = random_tensor({4, 5}, rng), b = random_tensor({4, 5}, rng);
  const Td wa = random_tensor(a.shape(), rng);
  auto reduce = [wa](const Td& y) { return sum(mul(y, wa)); };
  run("add", [&](const Inputs& x) { return reduce(x[0] + x[1]); }, {a, b});
  run("sub", [&](const Inputs& x) { return reduce(x[0] - x[1]); }, {a, b});
  run("mul", [&](const Inputs& x) { return reduce(x[0] * x[1]); }, {a, b});
  run("scale", [&](const Inputs& x) { return reduce(scale(x[0], 1.7)); }, {a});
  run("add_scalar", [&](const Inputs& x) { return reduce(square(add_scalar(x[0], 0.3))); }, {a});
  const Td m = random_tensor({5, 3}, rng), wm = random_tensor({4, 3}, rng);
  run("matmul", [&](const Inputs& x) { return sum(mul(matmul(x[0], x[1]), wm)); }, {a, m});
  const Td c = random_tensor({4, 2}, rng), wc = random_tensor({4, 7}, rng);
  run("concat", [&](const Inputs& x) { return sum(mul(concat<double>({x[0], x[1]}, 1), wc)); }, {a, c});
  const Td ws = random_tensor({4, 2}, rng);
  run("slice", [&](const Inputs& x) { return sum(mul(slice(x[0], 1, 1, 3), ws)); }, {a});
  const Td wi = random_tensor({4, 4}, rng);
  run("index_select", [&](const Inputs& x) { return sum(mul(index_select(x[0], 1, {4, 0, 0, 2}), wi)); }, {a});
  const Td wt = random_tensor({12, 5}, rng);
  run("tile", [&](const Inputs& x) { return sum(mul(tile(x[0], 0, 3), wt)); }, {a});
  const Td seq = random_tensor({8, 3}, rng), wconv = random_tensor({9, 2}, rng), bconv = random_tensor({2}, rng);
  const Td wc1 = random_tensor({8, 2}, rng), wc2 = random_tensor({4, 2}, rng);
  run("conv1d", [&](const Inputs& x) { return sum(mul(conv1d(x[0], x[1], x[2], 3, 1), wc1)); },
      {seq, wconv, bconv});
  run("conv1d_stride2", [&](const Inputs& x) { return sum(mul(conv1d(x[0], x[1], x[2], 3, 2), wc2)); },
      {seq, wconv, bconv});
  const Td wu = random_tensor({16, 3}, rng);
  run("linear_upsample", [&](const Inputs& x) { return sum(mul(linear_upsample(x[0], 0, 2), wu)); }, {seq});
  run("sum", [&](const Inputs& x) { return sum(square(x[0])); }, {a});
  run("mean", [&](const Inputs& x) { return mean(square(x[0])); }, {a});
  run("leaky_relu", [&](const Inputs& x) { return reduce(leaky_relu(x[0])); }, {a});
  run("sigmoid", [&](const Inputs& x) { return reduce(sigmoid(x[0])); }, {a});
  const Td q = random_tensor({3, 4}, rng), wq = random_tensor({3, 4}, rng);
  run("normalize", [&](const Inputs& x) { return sum(mul(normalize(x[0], 4), wq)); }, {q});
  run("square", [&](const Inputs& x) { return reduce(square(x[0])); }, {a});
  const Td pos = random_tensor({4, 5}, rng, 0.2, 1.0);
  run("sqrt", [&](const Inputs& x) { return reduce(sqrt(x[0], 1e-10)); }, {pos});
  run("abs", [&](const Inputs& x) { return reduce(abs(x[0])); }, {a});

  // Skeletal operators on random trees.
  for (int edges : {3, 5, 7}) {
    const SkeletonTopology topo = random_topology(edges, rng);
    const int slots = num_slots(topo);
    const std::string tag = "_" + std::to_string(edges) + "e";
    for (int stride : {1, 2}) {
      ParamStore<double> store;
      const SkeletalConv<double> conv(conv_spec(topo, 4, 7, 3, 2, 3, stride), store, "conv", rng);
      Inputs in{random_tensor({8, slots, 7}, rng), random_tensor({slots, 2}, rng)};
      for (std::size_t i = 0; i < store.size(); ++i) in.push_back(store.at(i));
      const Td w = random_tensor({8 / stride, slots, 3}, rng);
      run("skeletal_conv_s" + std::to_string(stride) + tag,
          [&](const Inputs& x) { return sum(mul(conv.forward(x[0], x[1]), w)); }, in);
    }
    {
      ParamStore<double> store;
      const SkeletalConv<double> conv(conv_spec(topo, 3, 3, 4, 0, 1, 1), store, "static", rng);
      Inputs in{random_tensor({slots, 3}, rng)};
      for (std::size_t i = 0; i < store.size(); ++i) in.push_back(store.at(i));
      const Td w = random_tensor({slots, 4}, rng);
      run("static_conv" + tag, [&](const Inputs& x) { return sum(mul(static_conv(conv, x[0]), w)); }, in);
    }
    const PoolingPlan plan = build_pooling_plan(topo, 2);
    const PoolStage stage = network_pool_stages(plan, 2)[0];
    const Td feat = random_tensor({8, slots, 3}, rng);
    const Td wp = random_tensor({8, stage.out_slots(), 3}, rng);
    run("pool_average" + tag,
        [&](const Inputs& x) { return sum(mul(skeletal_pool(x[0], stage, PoolMode::Average), wp)); }, {feat});
    run("pool_max" + tag,
        [&](const Inputs& x) { return sum(mul(skeletal_pool(x[0], stage, PoolMode::Max), wp)); }, {feat});
    const Td coarse = random_tensor({8, stage.out_slots(), 3}, rng);
    const Td wun = random_tensor({8, slots, 3}, rng);
    run("unpool" + tag, [&](const Inputs& x) { return sum(mul(skeletal_unpool(x[0], stage), wun)); }, {coarse});
    const Offsets off = random_offsets(edges, rng);
    const Td wfk = random_tensor({8, edges + 1, 3}, rng);
    run("fk_positions" + tag,
        [&](const Inputs& x) { return sum(mul(fk_positions(topo, off, x[0], x[1]), wfk)); },
        {unit_quats(8, edges, rng), root_track(8, rng)});
  }
}

NetworkConfig tiny_network() {
  NetworkConfig c;
  c.kernel = 3;
  c.block1_channels = 4;
  c.latent_channels = 6;
  c.static_channels = 3;
  return c;
}

void blocks_suite(Runner run, std::mt19937_64& rng) {
  for (int edges : {3, 7}) {
    const SkeletonTopology topo = random_topology(edges, rng);
    const std::string tag = "_" + std::to_string(edges) + "e";
    for (PoolMode mode : {PoolMode::Average, PoolMode::Max}) {
      NetworkConfig cfg = tiny_network();
      cfg.pool = mode;
      const std::string mtag = tag + (mode == PoolMode::Max ? "_max" : "_avg");
      ParamStore<double> gen, disc;
      const DomainModel<double> model(topo, cfg, gen, &disc, "M", rng);
      const Offsets off = random_offsets(edges, rng);
      const Td s0 = static_input<double>(off, 1.0);
      const Td dyn = pack_dynamics(unit_quats(8, edges, rng), root_track(8, rng)).detach();

      Inputs st{s0};
      for (std::size_t i = 0; i < gen.size(); ++i) {
        if (gen.name(i).find("static") != std::string::npos) st.push_back(gen.at(i));
      }
      const auto pyr = model.encode_static(s0);
      const Td wst = random_tensor(pyr.back().shape(), rng);
      run("static_encoder" + mtag,
          [&](const Inputs& x) { return sum(mul(model.encode_static(x[0]).back(), wst)); }, st, 12);

      Inputs enc{dyn};
      for (std::size_t i = 0; i < gen.size(); ++i) {
        if (gen.name(i).find(".enc") != std::string::npos) enc.push_back(gen.at(i));
      }
      const Td latent = model.encode(dyn, pyr);
      const Td wl = random_tensor(latent.shape(), rng);
      run("encoder" + mtag, [&](const Inputs& x) { return sum(mul(model.encode(x[0], pyr), wl)); }, enc, 12);

      Inputs dec{latent.detach()};
      for (std::size_t i = 0; i < gen.size(); ++i) {
        if (gen.name(i).find(".dec") != std::string::npos) dec.push_back(gen.at(i));
      }
      const Td raw = model.decode_raw(latent, pyr);
      const Td wr = random_tensor(raw.shape(), rng);
      run("decoder" + mtag, [&](const Inputs& x) { return sum(mul(model.decode_raw(x[0], pyr), wr)); }, dec, 12);
      const Td wq = random_tensor({8, edges, 4}, rng);
      run("decoder_unit" + mtag,
          [&](const Inputs& x) { return sum(mul(model.decode(x[0], pyr).rotations, wq)); }, {latent.detach()});

      Inputs dis{dyn};
      for (std::size_t i = 0; i < disc.size(); ++i) dis.push_back(disc.at(i));
      const Td score = model.discriminate(dyn, pyr);
      const Td wd = random_tensor(score.shape(), rng);
      run("discriminator" + mtag,
          [&](const Inputs& x) { return sum(mul(model.discriminate(x[0], pyr), wd)); }, dis, 12);
    }
    {
      ParamStore<double> store;
      const ConventionalModel<double> model(topo, tiny_network(), ConventionalDims{10, 8, 6}, store, "C", rng);
      const Offsets off = random_offsets(edges, rng);
      const auto pyr = model.encode_static(static_input<double>(off, 1.0));
      const Td dyn = pack_dynamics(unit_quats(8, edges, rng), root_track(8, rng)).detach();
      Inputs in{dyn};
      for (std::size_t i = 0; i < store.size(); ++i) in.push_back(store.at(i));
      const Td raw = model.decode_raw(model.encode(dyn, pyr), pyr);
      const Td w = random_tensor(raw.shape(), rng);
      run("conventional_autoencoder" + tag,
          [&](const Inputs& x) {
            const auto p = model.encode_static(static_input<double>(off, 1.0));
            return sum(mul(model.decode_raw(model.encode(x[0], p), p), w));
          },
          in, 12);
    }
  }
}

void losses_suite(Runner run, std::mt19937_64& rng) {
  const SkeletonTopology topo = random_topology(5, rng);
  const Offsets off = random_offsets(5, rng);
  run("reconstruction",
      [&](const Inputs& x) { return loss_reconstruction(topo, off, x[0], x[1], x[2], x[3], 1.0, 1.0); },
      {unit_quats(8, 5, rng), root_track(8, rng), unit_quats(8, 5, rng), root_track(8, rng)});
  run("latent_consistency", [&](const Inputs& x) { return loss_latent_consistency(x[0], x[1]); },
      {random_tensor({2, 4, 6}, rng), random_tensor({2, 4, 6}, rng)});
  run("adversarial_generator", [&](const Inputs& x) { return loss_adversarial_generator(x[0]); },
      {random_tensor({2, 4, 1}, rng, 0.05, 0.95)});
  run("adversarial_discriminator",
      [&](const Inputs& x) { return loss_adversarial_discriminator(x[0], x[1]); },
      {random_tensor({2, 4, 1}, rng, 0.05, 0.95), random_tensor({2, 4, 1}, rng, 0.05, 0.95)});
  const EndEffectorSide sa{{2, 4}, {0.8, 1.1}}, sb{{3, 5}, {0.9, 1.3}};
  run("normalized_speeds",
      [&](const Inputs& x) { return sum(mul(normalized_speeds(x[0], sa, 1.0 / 30), Td::full({7, 2}, 0.3))); },
      {random_tensor({8, 6, 3}, rng)});
  run("end_effectors",
      [&](const Inputs& x) { return loss_end_effectors(x[0], sa, x[1], sb, 1.0 / 30); },
      {random_tensor({8, 6, 3}, rng), random_tensor({8, 6, 3}, rng)});
  run("total_weighted", [&](const Inputs& x) { return total_loss(x[0], x[1], x[2], x[3], LossWeights{}); },
      {random_tensor({}, rng), random_tensor({}, rng), random_tensor({}, rng), random_tensor({}, rng)});

  // Whole generator objective on a miniature 3-edge pair of domains.
  const SkeletonTopology ta({-1, 0, 0});
  const SkeletonTopology tb({-1, 0, 1, 0});
  const NetworkConfig cfg = tiny_network();
  ParamStore<double> gen, disc;
  const DomainModel<double> A(ta, cfg, gen, &disc, "A", rng);
  const DomainModel<double> B(tb, cfg, gen, &disc, "B", rng);
  const Offsets oa = random_offsets(3, rng), ob = random_offsets(4, rng);
  const Td rot = unit_quats(8, 3, rng), root = root_track(8, rng);
  const auto pairs = end_effector_correspondence(ta, tb);
  EndEffectorSide ea, eb;
  for (const auto& [x, y] : pairs) {
    ea.nodes.push_back(x + 1);
    ea.chain_lengths.push_back(0.7);
    eb.nodes.push_back(y + 1);
    eb.chain_lengths.push_back(0.9);
  }
  const Fn objective = [&](const Inputs&) {
    const auto pa = A.encode_static(static_input<double>(oa, 1.0));
    const auto pb = B.encode_static(static_input<double>(ob, 1.0));
    const Td latent = A.encode(pack_dynamics(rot, root), pa);
    const auto recon = A.decode(latent, pa);
    const Td rec = loss_reconstruction(ta, oa, recon.rotations, recon.root, rot, root, 1.0, 1.0);
    const auto fake = B.decode(latent, pb);
    const Td packed = pack_dynamics(fake.rotations, fake.root);
    const Td ltc = loss_latent_consistency(B.encode(packed, pb), latent);
    const Td adv = loss_adversarial_generator(B.discriminate(packed, pb));
    const Td ee = loss_end_effectors(fk_positions(ta, oa, rot, root), ea,
                                     fk_positions(tb, ob, fake.rotations, fake.root), eb, 1.0);
    return total_loss(rec, ltc, adv, ee, LossWeights{});
  };
  Inputs params;
  for (std::size_t i = 0; i < gen.size(); ++i) params.push_back(gen.at(i));
  run("total_generator_3e", objective, params, 6);
}

}  // namespace

SkeletonTopology random_topology(int edges, std::mt19937_64& rng) {
  std::vector<int> parents(edges);
  for (int e = 0; e < edges; ++e) {
    parents[e] = std::uniform_int_distribution<int>(-1, e - 1)(rng);
  }
  return SkeletonTopology(parents);
}

std::vector<GradcheckCase> run_gradcheck_suites(const std::string& module, std::uint64_t seed) {
  if (module != "all" && module != "ops" && module != "blocks" && module != "losses") {
    throw std::invalid_argument("unknown gradcheck module: " + module);
  }
  std::vector<GradcheckCase> out;
  std::mt19937_64 rng(seed);
  if (module == "all" || module == "ops") ops_suite(Runner{&out, "ops"}, rng);
  if (module == "all" || module == "blocks") blocks_suite(Runner{&out, "blocks"}, rng);
  if (module == "all" || module == "losses") losses_suite(Runner{&out, "losses"}, rng);
  return out;
}

}  // namespace skm
