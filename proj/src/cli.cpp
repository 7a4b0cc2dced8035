#include "vbreg/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vbreg/bench_suite.hpp"
#include "vbreg/config.hpp"
#include "vbreg/corr_io.hpp"
#include "vbreg/diagnostics.hpp"
#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"
#include "vbreg/estimation.hpp"
#include "vbreg/pipeline.hpp"
#include "vbreg/seeding.hpp"
#include "vbreg/synth.hpp"
#include "vbreg/theory.hpp"
#include "vbreg/training.hpp"

namespace fs = std::filesystem;

namespace vbreg {

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key=value config file");
  app->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  app->add_option("--eps", c.eps, "inlier threshold (overrides file and config)");
  app->add_option("--out", c.out, "output path");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (c.eps) {
    if (!(*c.eps > 0.0)) throw UsageError("--eps must be > 0");
    cfg.set_epsilon(*c.eps);
  }
  cfg.validate();
  return cfg;
}

// Writes to the --out path, or to `fallback` when none was given.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw DataError("write failed: " + path);
}

std::string transform_json(const RigidTransform& t) {
  nlohmann::ordered_json j;
  std::vector<double> rot;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
  j["rotation"] = rot;
  j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  return j.dump() + "\n";
}

RigidTransform read_transform_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  try {
    const auto j = nlohmann::json::parse(is);
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto tr = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) throw DataError(path + ": expected 9 rotation and 3 translation values");
    RigidTransform t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[3 * r + c];
    t.translation = {tr[0], tr[1], tr[2]};
    if (!t.is_valid(1e-6)) throw DataError(path + ": rotation is not in SO(3)");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<CorrespondenceSet> load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".corr") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .corr files in " + dir);
  std::vector<CorrespondenceSet> out;
  for (const auto& f : files) out.push_back(read_correspondences(f));
  return out;
}

int cmd_synth(const Common& c, std::optional<std::size_t> n, std::optional<double> ratio,
              const std::string& gt_out, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (n) cfg.synth.n = *n;
  if (ratio) cfg.synth.inlier_ratio = *ratio;
  if (c.out.empty()) throw UsageError("synth: --out is required");
  const Scene scene = generate_scene(cfg.synth);
  write_correspondences(c.out, scene.set);
  if (!gt_out.empty()) emit(gt_out, transform_json(scene.ground_truth), out);
  return kExitOk;
}

int cmd_train(const Common& c, const std::string& data_dir, std::string curve_path,
              std::ostream& out) {
  const RunConfig cfg = resolve(c);
  if (c.out.empty()) throw UsageError("train: --out <checkpoint> is required");
  std::vector<CorrespondenceSet> train_sets;
  std::vector<CorrespondenceSet> val_sets;
  if (!data_dir.empty()) {
    train_sets = load_dataset(data_dir);
    for (auto& s : train_sets) {
      if (!s.has_epsilon()) {
        if (!cfg.epsilon) throw UsageError("train: epsilon missing from data and config");
        s.set_epsilon(*cfg.epsilon);
      }
    }
  } else {
    for (std::size_t i = 0; i < cfg.train_scenes + cfg.val_scenes; ++i) {
      SynthConfig sc = cfg.synth;
      sc.seed = derive_seed(cfg.seed, 0x7e, i);
      auto scene = generate_scene(sc);
      (i < cfg.train_scenes ? train_sets : val_sets).push_back(std::move(scene.set));
    }
  }
  VBNetConfig net = cfg.net;
  if (train_sets.front().descriptor_dim() > 0) {
    net.input_mode = InputMode::coords_descriptor;
    net.descriptor_dim = train_sets.front().descriptor_dim();
  }
  const TrainResult result = train(train_sets, val_sets, net, cfg.train);
  save_checkpoint(c.out, result.params);
  if (curve_path.empty()) curve_path = c.out + ".curve.csv";
  std::ostringstream csv;
  write_training_curve(csv, result.curve);
  emit(curve_path, csv.str(), out);
  return kExitOk;
}

int cmd_register(const Common& c, const std::string& corr, const std::string& checkpoint,
                 const std::string& method, const std::string& gt_path, bool timings,
                 std::ostream& out) {
  const RunConfig cfg = resolve(c);
  CorrespondenceSet set = read_correspondences(corr);
  if (c.eps) {
    set.set_epsilon(*c.eps);
  } else if (!set.has_epsilon()) {
    if (!cfg.epsilon) throw UsageError("register: no epsilon in file, config or --eps");
    set.set_epsilon(*cfg.epsilon);
  }
  const double eps = set.epsilon();
  RegistrationReport rep;
  if (method == "vbreg") {
    if (!checkpoint.empty()) {
      const ParamStore params = load_checkpoint(checkpoint);
      rep = register_scene(set, infer_vbnet_config(params), params, cfg.pipeline);
    } else {
      rep = register_scene(set, spectral_weights(geometric_compatibility(set)), cfg.pipeline);
    }
  } else if (method == "ransac") {
    RansacOptions ro = cfg.bench.ransac;
    ro.seed = cfg.seed;
    rep = ransac_register(set, eps, ro);
  } else {
    rep = spectral_matching_register(set, geometric_compatibility(set), eps, cfg.bench.sm_top_k);
  }
  if (!gt_path.empty()) attach_errors(rep, read_transform_json(gt_path));
  emit(c.out, report_to_json(rep, timings), out);
  return kExitOk;
}

int cmd_bench(const Common& c, const std::string& checkpoint, bool timings, std::ostream& out) {
  const RunConfig cfg = resolve(c);
  std::optional<ParamStore> params;
  std::optional<VBNetConfig> net;
  BenchModel model;
  if (!checkpoint.empty()) {
    params = load_checkpoint(checkpoint);
    net = infer_vbnet_config(*params);
    model = {&*net, &*params};
  }
  const auto rows = run_bench(cfg.bench, cfg.pipeline, model);
  std::ostringstream csv;
  write_bench_csv(csv, rows, timings);
  emit(c.out, csv.str(), out);
  return kExitOk;
}

int cmd_theorem1(const Common& c, std::optional<std::size_t> trials, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (trials) {
    if (*trials < 1) throw UsageError("--trials must be >= 1");
    cfg.theorem.trials = *trials;
  }
  const auto rows = run_theorem_grid(cfg.theorem);
  std::ostringstream csv;
  write_theorem_csv(csv, rows);
  emit(c.out, csv.str(), out);
  return kExitOk;
}

int cmd_diag(const Common& c, const std::string& corr, const std::string& checkpoint,
             std::ostream& out) {
  const RunConfig cfg = resolve(c);
  if (c.out.empty()) throw UsageError("diag: --out <prefix> is required");
  const CorrespondenceSet set = read_correspondences(corr);
  if (!set.has_labels()) throw DataError("diag: correspondence file has no labels");
  const Matrix beta = geometric_compatibility(set);
  const auto ratio = diag_ambiguity_ratio(set.labels(), beta);
  std::ostringstream amb;
  amb << "metric,value\nambiguity_ratio,";
  if (ratio) amb << format_real(*ratio);
  amb << '\n';
  emit(c.out + ".ambiguity.csv", amb.str(), out);
  if (!checkpoint.empty()) {
    const ParamStore params = load_checkpoint(checkpoint);
    const VBNetState st = vb_forward_prior(set, beta, infer_vbnet_config(params), params, cfg.seed);
    const auto hist = diag_feature_similarity(st, set.labels());
    std::ostringstream h;
    if (hist) {
      write_histogram_csv(h, *hist);
    } else {
      h << "bin_lo,bin_hi,count\n";
    }
    emit(c.out + ".similarity.csv", h.str(), out);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correspondence outlier rejection and rigid registration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vbreg 1.0");

  Common synth_c, train_c, reg_c, bench_c, thm_c, diag_c;
  std::optional<std::size_t> synth_n;
  std::optional<double> synth_ratio;
  std::string synth_gt;
  auto* synth = app.add_subcommand("synth", "generate a synthetic correspondence file");
  add_common(synth, synth_c);
  synth->add_option("--n", synth_n, "number of correspondences");
  synth->add_option("--inlier-ratio", synth_ratio, "inlier probability");
  synth->add_option("--gt", synth_gt, "write the ground-truth transform as JSON");

  std::string data_dir, curve;
  auto* trn = app.add_subcommand("train", "train the network, write checkpoint and curve CSV");
  add_common(trn, train_c);
  trn->add_option("data", data_dir, "directory of labelled .corr files (synthetic if omitted)");
  trn->add_option("--curve", curve, "training curve CSV (default <out>.curve.csv)");

  std::string reg_corr, reg_ckpt, reg_method = "vbreg", reg_gt;
  bool reg_timings = false;
  auto* reg = app.add_subcommand("register", "register one correspondence file");
  add_common(reg, reg_c);
  reg->add_option("corr", reg_corr, "correspondence file")->required();
  reg->add_option("--checkpoint", reg_ckpt, "trained model");
  reg->add_option("--method", reg_method, "vbreg, ransac or sm")
      ->check(CLI::IsMember({"vbreg", "ransac", "sm"}));
  reg->add_option("--gt", reg_gt, "ground-truth transform JSON for RE/TE");
  reg->add_flag("--timings", reg_timings, "include stage timings (not reproducible)");

  std::string bench_ckpt;
  bool bench_timings = false;
  auto* bench = app.add_subcommand("bench", "RR table over seeded synthetic scenes");
  add_common(bench, bench_c);
  bench->add_option("--checkpoint", bench_ckpt, "trained model for the pipeline");
  bench->add_flag("--timings", bench_timings, "fill mean_seconds (not reproducible)");

  std::optional<std::size_t> thm_trials;
  auto* thm = app.add_subcommand("theorem1", "closed forms and Monte-Carlo grid as CSV");
  add_common(thm, thm_c);
  thm->add_option("--trials", thm_trials, "trials per cell");

  std::string diag_corr, diag_ckpt;
  auto* diag = app.add_subcommand("diag", "ambiguity ratio and inlier similarity histogram");
  add_common(diag, diag_c);
  diag->add_option("corr", diag_corr, "labelled correspondence file")->required();
  diag->add_option("--checkpoint", diag_ckpt, "model for the similarity histogram");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_c, synth_n, synth_ratio, synth_gt, out);
    if (*trn) return cmd_train(train_c, data_dir, curve, out);
    if (*reg) return cmd_register(reg_c, reg_corr, reg_ckpt, reg_method, reg_gt, reg_timings, out);
    if (*bench) return cmd_bench(bench_c, bench_ckpt, bench_timings, out);
    if (*thm) return cmd_theorem1(thm_c, thm_trials, out);
    if (*diag) return cmd_diag(diag_c, diag_corr, diag_ckpt, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace vbreg
