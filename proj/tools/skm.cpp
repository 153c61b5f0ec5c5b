#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "skm/bvh.hpp"
#include "skm/eval.hpp"
#include "skm/gradcheck_suites.hpp"
#include "skm/io.hpp"
#include "skm/param_store.hpp"
#include "skm/postprocess.hpp"
#include "skm/skeletal_ops.hpp"
#include "skm/synth.hpp"
#include "skm/training.hpp"

namespace fs = std::filesystem;
using namespace skm;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3, kConvergence = 4 };

struct Failure : std::runtime_error {
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

const char* code_name(int code) {
  switch (code) {
    case kUsage: return "E_USAGE";
    case kData: return "E_DATA";
    case kNumeric: return "E_NUMERIC";
    case kConvergence: return "W_CONVERGENCE";
    default: return "E_INTERNAL";
  }
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

TrainConfig config_from(const std::string& path, std::uint64_t seed, bool seed_given) {
  TrainConfig c = path.empty() ? TrainConfig{} : load_train_config(path);
  if (seed_given) c.seed = seed;
  return c;
}

int cmd_inspect(const std::string& path, int d, int p) {
  const BvhDocument doc = load_bvh(path);
  const Skeleton& sk = doc.skeleton;
  const SkeletonTopology& topo = sk.topology;
  std::cout << "edges " << topo.num_edges() << "\n";
  for (int e = 0; e < topo.num_edges(); ++e) {
    std::cout << "  " << e << " " << sk.node_names[topo.parent_node(e)] << " -> "
              << sk.node_names[topo.child_node(e)] << (topo.is_end_effector(e) ? " (end-effector)" : "")
              << "\n";
  }
  const AdjacencyLists adj = build_adjacency(topo, d);
  std::cout << "adjacency d=" << d << "\n";
  for (int e = 0; e < topo.num_edges(); ++e) std::cout << "  " << e << ": " << join(adj.lists[e]) << "\n";
  std::cout << "root support: " << join(root_support(topo, d)) << "\n";
  const PoolingPlan plan = build_pooling_plan(topo, p);
  std::cout << "pooling p=" << p << " edges " << topo.num_edges();
  for (const auto& level : plan.levels) std::cout << " -> " << level.pooled.num_edges();
  std::cout << "\nslots " << num_slots(topo);
  for (const auto& level : plan.levels) std::cout << " -> " << num_slots(level.pooled);
  std::cout << "\n";
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    std::cout << "  level " << l << ":";
    for (const auto& r : plan.levels[l].regions) std::cout << " [" << join(r) << "]";
    std::cout << "\n";
  }
  std::cout << "primal parents: " << join(plan.primal().parents()) << "\n";
  const SkeletonGeometry geo = SkeletonGeometry::of(sk);
  std::cout << "height " << geo.height << "\n";
  std::cout << "chain lengths:";
  for (std::size_t i = 0; i < geo.chain_lengths.size(); ++i) {
    std::cout << " " << sk.node_names[topo.child_node(topo.end_effector_edges()[i])] << "="
              << geo.chain_lengths[i];
  }
  std::cout << "\n";
  return kOk;
}

int cmd_train_denoiser(const TrainConfig& config, const std::string& corpus_dir, const std::string& out,
                       int checkpoint_every) {
  const Corpus corpus = load_corpus(corpus_dir);
  AutoencoderBundle bundle = make_autoencoder(corpus[0].skeleton.topology, config);
  MetricsLog log(out + ".metrics.csv");
  train_denoiser(bundle, corpus, config, [&](int epoch, const EpochTerms& terms) {
    log.append(epoch, terms);
    if (checkpoint_every > 0 && (epoch + 1) % checkpoint_every == 0) save_autoencoder(bundle, out);
    std::cout << "epoch " << epoch << " rec " << terms.at("rec") << "\n";
  });
  save_autoencoder(bundle, out);
  return kOk;
}

int cmd_denoise(const std::string& ckpt, const std::string& in, const std::string& out,
                const std::string& noise, std::uint64_t seed) {
  const AutoencoderBundle bundle = load_autoencoder(ckpt);
  const BvhDocument doc = load_bvh(in);
  if (!(doc.skeleton.topology == bundle.model->topology())) {
    throw Failure(kData, "input skeleton does not match the model");
  }
  std::mt19937_64 rng(seed);
  const MotionClip noisy = inject_noise(doc.clip, parse_noise(noise), rng);
  const MotionClip result = reconstruct_clip(*bundle.model, doc.skeleton, character_height(doc.skeleton), noisy);
  save_bvh(out, doc.skeleton, result);
  return kOk;
}

int cmd_train_retarget(const TrainConfig& config, const std::string& dir_a, const std::string& dir_b,
                       const std::string& out) {
  const Corpus a = load_corpus(dir_a);
  const Corpus b = load_corpus(dir_b);
  RetargetSystem system = RetargetSystem::create(a[0].skeleton.topology, b[0].skeleton.topology,
                                                 config.network, config.seed);
  fs::create_directories(out);
  MetricsLog log((fs::path(out) / "metrics.csv").string());
  train_retargeter(system, a, b, config, [&](int epoch, const EpochTerms& terms) {
    log.append(epoch, terms);
    std::cout << "epoch " << epoch << " total " << terms.at("total") << "\n";
  });
  system.save(out);
  return kOk;
}

int cmd_retarget(const std::string& models, const std::string& in, const std::string& target_path,
                 const std::string& out, bool no_ik, const std::string& contacts_csv) {
  const RetargetSystem system = RetargetSystem::load(models);
  const BvhDocument src = load_bvh(in);
  const BvhDocument tgt = load_bvh(target_path);
  const DomainModel<float>* ms = system.domain_of(src.skeleton.topology);
  const DomainModel<float>* mt = system.domain_of(tgt.skeleton.topology);
  if (!ms) throw Failure(kData, "input skeleton belongs to neither trained domain");
  if (!mt) throw Failure(kData, "target skeleton belongs to neither trained domain");
  const double hs = character_height(src.skeleton), ht = character_height(tgt.skeleton);
  MotionClip result = retarget_clip(*ms, *mt, src.skeleton, hs, src.clip, tgt.skeleton, ht);
  int code = kOk;
  if (!no_ik && !src.skeleton.foot_nodes.empty()) {
    const ContactTrack source_contacts =
        detect_contacts(forward_kinematics(src.skeleton.topology, src.clip), src.skeleton.foot_nodes, hs);
    const ContactTrack contacts =
        transfer_contacts(source_contacts, corresponding_feet(src.skeleton, tgt.skeleton),
                          forward_kinematics(tgt.skeleton.topology, result));
    IkReport report;
    result = ik_cleanup(tgt.skeleton, ht, result, contacts, IkConfig{}, &report);
    if (!contacts_csv.empty()) {
      std::ostringstream csv;
      write_contacts_csv(csv, contacts);
      write_file_atomic(contacts_csv, csv.str());
    }
    std::cout << "ik frames " << report.frames_solved << " converged " << report.frames_converged
              << " max residual " << report.max_residual << "\n";
    if (report.warning()) {
      std::cerr << code_name(kConvergence) << ": " << report.unreachable
                << " contact frames have anchors beyond leg reach\n";
      code = kConvergence;
    }
  }
  save_bvh(out, tgt.skeleton, result);
  return code;
}

int cmd_eval_retarget(const std::string& results, const std::string& truth, const std::string& report) {
  std::vector<RetargetSample> samples;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(results)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bvh") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Failure(kData, "no .bvh results in " + results);
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const auto first = stem.find("__"), last = stem.rfind("__");
    if (first == std::string::npos) throw Failure(kData, "result name must be <target>__<motion>.bvh: " + stem);
    const std::string target = stem.substr(0, first);
    const fs::path truth_path = fs::path(truth) / (target + "__" + stem.substr(last + 2) + ".bvh");
    if (!fs::exists(truth_path)) throw Failure(kData, "missing ground truth " + truth_path.string());
    const BvhDocument pred = load_bvh(f.string());
    const BvhDocument gt = load_bvh(truth_path.string());
    RetargetSample s;
    s.target = target;
    s.height = character_height(gt.skeleton);
    s.truth = forward_kinematics(gt.skeleton.topology, gt.clip);
    const auto pairs = common_nodes(gt.skeleton, pred.skeleton);
    const auto pp = forward_kinematics(pred.skeleton.topology, pred.clip);
    if (pp.frames != s.truth.frames) throw Failure(kData, "frame count differs for " + stem);
    s.predicted = s.truth;
    for (int t = 0; t < pp.frames; ++t) {
      for (const auto& [n_truth, n_pred] : pairs) s.predicted.at(t, n_truth) = pp.at(t, n_pred);
    }
    for (const auto& pr : pairs) s.nodes.push_back(pr.first);
    samples.push_back(std::move(s));
  }
  const RetargetErrors errors = retargeting_error(samples);
  write_retarget_table(std::cout, errors);
  std::ostringstream csv;
  write_retarget_report_csv(csv, errors);
  write_file_atomic(report, csv.str());
  return kOk;
}

int cmd_gradcheck(const std::string& module, std::uint64_t seed) {
  int failed = 0;
  for (const auto& c : run_gradcheck_suites(module, seed)) {
    const bool ok = c.result.passed(1e-3);
    failed += ok ? 0 : 1;
    std::printf("%-5s %-7s %-36s %.3e\n", ok ? "ok" : "FAIL", c.suite.c_str(), c.name.c_str(),
                c.result.max_rel_error);
  }
  if (failed > 0) throw Failure(kNumeric, std::to_string(failed) + " gradient checks failed");
  return kOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::uint64_t seed, bool seed_given) {
  SynthSpec spec;
  if (!spec_path.empty()) spec = nlohmann::json::parse(read_file(spec_path)).get<SynthSpec>();
  if (seed_given) spec.seed = seed;
  write_synth_corpus(make_synth_data(spec), out);
  return kOk;
}

int report(int code, const std::string& message) {
  std::cerr << code_name(code) << ": " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton-aware motion processing: representation, training, retargeting and cleanup"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides config files)");

  auto* inspect = app.add_subcommand("inspect", "Describe a BVH skeleton");
  std::string inspect_path;
  int inspect_d = 1, inspect_p = 2;
  inspect->add_option("skeleton", inspect_path, "BVH file")->required();
  inspect->add_option("--d", inspect_d, "Neighbourhood radius");
  inspect->add_option("--p", inspect_p, "Pooling region size");

  auto* train_den = app.add_subcommand("train-denoiser", "Train a denoising autoencoder");
  std::string td_config, td_corpus, td_out;
  int td_every = 10;
  train_den->add_option("--config", td_config, "Training config (JSON)");
  train_den->add_option("--corpus", td_corpus, "Corpus directory")->required();
  train_den->add_option("--out", td_out, "Checkpoint path")->required();
  train_den->add_option("--checkpoint-every", td_every, "Save every N epochs (0: only at the end)");

  auto* denoise = app.add_subcommand("denoise", "Optionally corrupt a clip, then reconstruct it");
  std::string dn_ckpt, dn_in, dn_out, dn_noise = "none";
  denoise->add_option("--ckpt", dn_ckpt, "Checkpoint")->required();
  denoise->add_option("--in", dn_in, "Input BVH")->required();
  denoise->add_option("--out", dn_out, "Output BVH")->required();
  denoise->add_option("--noise", dn_noise, "none | gaussian:<sigma> | zeros:<rate>");

  auto* train_rt = app.add_subcommand("train-retarget", "Train unpaired retargeting between two domains");
  std::string tr_config, tr_a, tr_b, tr_out;
  train_rt->add_option("--config", tr_config, "Training config (JSON)");
  train_rt->add_option("--corpus-a", tr_a, "Domain A corpus")->required();
  train_rt->add_option("--corpus-b", tr_b, "Domain B corpus")->required();
  train_rt->add_option("--out", tr_out, "Model directory")->required();

  auto* retarget = app.add_subcommand("retarget", "Retarget a clip onto a target skeleton");
  std::string rt_models, rt_in, rt_target, rt_out, rt_contacts;
  bool rt_no_ik = false;
  retarget->add_option("--models", rt_models, "Model directory")->required();
  retarget->add_option("--in", rt_in, "Source BVH")->required();
  retarget->add_option("--target-skeleton", rt_target, "BVH providing the target skeleton")->required();
  retarget->add_option("--out", rt_out, "Output BVH")->required();
  retarget->add_flag("--no-ik", rt_no_ik, "Skip foot-contact cleanup");
  retarget->add_option("--contacts", rt_contacts, "Write the contact labels as CSV");

  auto* eval = app.add_subcommand("eval-retarget", "Retargeting error against ground truth");
  std::string ev_results, ev_truth, ev_report;
  eval->add_option("--results", ev_results, "Directory of <target>__<motion>.bvh results")->required();
  eval->add_option("--truth", ev_truth, "Directory of ground-truth clips with the same names")->required();
  eval->add_option("--report", ev_report, "CSV report path")->required();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  std::string gc_module = "all";
  grad->add_option("--module", gc_module, "all | ops | blocks | losses")
      ->check(CLI::IsMember({"all", "ops", "blocks", "losses"}));

  auto* synth = app.add_subcommand("synth-corpus", "Generate the synthetic toy corpus");
  std::string sy_spec, sy_out;
  synth->add_option("--spec", sy_spec, "Corpus spec (JSON)");
  synth->add_option("--out", sy_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kUsage, e.what());
  }

  const bool seed_given = seed_opt->count() > 0;
  try {
    if (*inspect) return cmd_inspect(inspect_path, inspect_d, inspect_p);
    if (*train_den) return cmd_train_denoiser(config_from(td_config, seed, seed_given), td_corpus, td_out, td_every);
    if (*denoise) return cmd_denoise(dn_ckpt, dn_in, dn_out, dn_noise, seed);
    if (*train_rt) return cmd_train_retarget(config_from(tr_config, seed, seed_given), tr_a, tr_b, tr_out);
    if (*retarget) return cmd_retarget(rt_models, rt_in, rt_target, rt_out, rt_no_ik, rt_contacts);
    if (*eval) return cmd_eval_retarget(ev_results, ev_truth, ev_report);
    if (*grad) return cmd_gradcheck(gc_module, seed);
    if (*synth) return cmd_synth(sy_spec, sy_out, seed, seed_given);
  } catch (const Failure& e) {
    return report(e.code, e.what());
  } catch (const std::domain_error& e) {
    return report(kNumeric, e.what());
  } catch (const std::exception& e) {
    return report(kData, e.what());
  }
  return kUsage;
}
