// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero on
// any failure. `vbreg_acceptance --only 4` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vbreg/bench_suite.hpp"
#include "vbreg/cli.hpp"
#include "vbreg/corr_io.hpp"
#include "vbreg/diagnostics.hpp"
#include "vbreg/estimation.hpp"
#include "vbreg/gradcheck.hpp"
#include "vbreg/inlier_search.hpp"
#include "vbreg/nonlocal.hpp"
#include "vbreg/params.hpp"
#include "vbreg/pipeline.hpp"
#include "vbreg/seeding.hpp"
#include "vbreg/synth.hpp"
#include "vbreg/theory.hpp"
#include "vbreg/training.hpp"

namespace fs = std::filesystem;
using namespace vbreg;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradBudgetS = 10.0;
constexpr double kKlTol = 1e-10;
constexpr double kWilsonTol = 1e-12;
constexpr double kTheoremSigmas = 3.0;
constexpr std::size_t kTheoremTrials = 100000;
constexpr double kTheoremBudgetS = 120.0;
constexpr std::size_t kProcrustesInstances = 1000;
constexpr double kProcrustesRe = 1e-9;
constexpr double kProcrustesTe = 1e-9;
constexpr double kEquivarianceTol = 1e-6;
constexpr std::size_t kBenchScenes = 100;
constexpr double kBenchBudgetS = 1800.0;
constexpr std::size_t kHeldOutScenes = 20;
constexpr std::size_t kSeedTrials = 100;
constexpr double kReThreshDeg = 15.0;
constexpr double kTeThresh = 0.30;

constexpr std::uint64_t kSeed = 20240607;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Toy model shared by criteria 6-8, trained once on demand.

VBNetConfig toy_net() {
  VBNetConfig c;
  c.iterations = 4;
  c.feature_dim = 16;
  c.latent_dim = 8;
  c.hidden_dim = 16;
  c.label_tile_k = 8;
  return c;
}

std::vector<CorrespondenceSet> toy_scenes(std::size_t count, std::size_t n, std::uint64_t stream,
                                          const std::vector<double>& ratios) {
  std::vector<CorrespondenceSet> out;
  for (std::size_t s = 0; s < count; ++s) {
    SynthConfig c;
    c.n = n;
    c.inlier_ratio = ratios[s % ratios.size()];
    c.noise_std = 0.01;
    c.extent = 1.0;
    c.epsilon = 0.05;
    c.seed = derive_seed(kSeed, stream, s);
    out.push_back(generate_scene(c).set);
  }
  return out;
}

struct ToyModel {
  VBNetConfig net = toy_net();
  ParamStore untrained;
  ParamStore trained;
  double train_seconds = 0.0;
};

const ToyModel& toy_model() {
  static const ToyModel model = [] {
    ToyModel m;
    const auto t0 = Clock::now();
    // Separable training data: inliers are a large rigid cluster.
    const std::vector<double> ratios = {0.3, 0.5};
    const auto train_sets = toy_scenes(20, 100, 1, ratios);
    const auto val_sets = toy_scenes(5, 100, 2, ratios);
    TrainOptions opt;
    opt.epochs = 50;
    opt.adam.lr = 3e-3;
    opt.seed = derive_seed(kSeed, 3);
    m.untrained = init_vbnet_params(m.net, opt.seed);
    auto r = train(train_sets, val_sets, m.net, opt, m.untrained);
    m.trained = std::move(r.params);
    m.train_seconds = seconds_since(t0);
    std::cout << "  toy model: " << opt.epochs << " epochs, val accuracy "
              << r.curve.back().val_accuracy << ", " << m.train_seconds << " s\n";
    return m;
  }();
  return model;
}

bool success(const RigidTransform& est, const RigidTransform& gt) {
  constexpr double kPi = 3.14159265358979323846;
  return rotation_error(est, gt) * 180.0 / kPi < kReThreshDeg &&
         translation_error(est, gt) < kTeThresh;
}

// 1. Gradient of -ELBO on a micro network.
Outcome criterion_gradients() {
  VBNetConfig cfg;
  cfg.iterations = 2;
  cfg.feature_dim = 8;
  cfg.latent_dim = 4;
  cfg.hidden_dim = 6;
  cfg.label_tile_k = 2;
  SynthConfig sc;
  sc.n = 4;
  sc.inlier_ratio = 0.5;
  sc.extent = 0.1;
  sc.seed = derive_seed(kSeed, 10);
  const auto scene = generate_scene(sc);
  const auto params = init_vbnet_params(cfg, derive_seed(kSeed, 11));
  const auto noise = LatentNoise::sample(scene.set.size(), cfg, derive_seed(kSeed, 12));
  const auto beta =
      geometric_compatibility(scene.set);
  const LossBuilder loss = [&](ad::Tape& t, const ParamStore& p) {
    return negative_elbo(t, scene.set, scene.set.labels(), beta, cfg, p, noise);
  };
  const auto t0 = Clock::now();
  double value = 0.0;
  {
    ad::Tape tape(false);
    value = loss(tape, params).scalar();
  }
  // Central differences carry about eps_mach * |loss| / h of rounding error, so
  // components below that over the tolerance cannot be resolved at this step.
  const double floor = std::max(
      1e-6, std::numeric_limits<double>::epsilon() * std::abs(value) / (kGradStep * kGradTol));
  const auto r = grad_check(loss, params, kGradStep, floor);
  const double s = seconds_since(t0);
  const auto raw = grad_check(loss, params, kGradStep, 1e-6);
  Outcome o;
  o.pass = r.scalars_checked == params.scalar_count() && r.max_relative_error < kGradTol &&
           s < kGradBudgetS;
  o.detail = "max rel err " + fmt("%.3e", r.max_relative_error) + " over " +
             std::to_string(r.scalars_checked) + " scalars (floor " + fmt("%.2e", floor) +
             ", " + fmt("%.3e", raw.max_relative_error) + " at floor 1e-6), " + fmt("%.2f", s) +
             " s";
  return o;
}

// 2. Tied posterior collapses every KL term and reproduces the prior pass.
Outcome criterion_elbo_structure() {
  const auto cfg = toy_net();
  bool ok = true;
  double worst_kl = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    SynthConfig sc;
    sc.n = 60;
    sc.inlier_ratio = 0.3;
    sc.seed = derive_seed(kSeed, 20, k);
    const auto scene = generate_scene(sc);
    auto params = init_vbnet_params(cfg, derive_seed(kSeed, 21, k));
    tie_posterior_to_prior(params, cfg);
    const auto noise = LatentNoise::sample(scene.set.size(), cfg, derive_seed(kSeed, 22, k));
    const auto beta =
        geometric_compatibility(scene.set);
    const auto post = vb_forward_posterior(scene.set, scene.set.labels(), beta, cfg, params, noise);
    const auto prior = vb_forward_prior(scene.set, beta, cfg, params, noise);
    for (double kl : post.elbo.kl_terms) {
      worst_kl = std::max(worst_kl, std::abs(kl));
      ok = ok && std::abs(kl) <= kKlTol;
    }
    ok = ok && post.elbo.kl_terms.size() == cfg.iterations;
    ok = ok && post.state.features.size() == prior.features.size();
    for (std::size_t l = 0; ok && l < prior.features.size(); ++l)
      ok = post.state.features[l].data() == prior.features[l].data();
    ok = ok && post.state.label_mean.data() == prior.label_mean.data();
    for (std::size_t l = 0; ok && l < prior.latents.size(); ++l)
      for (std::size_t b = 0; ok && b < 3; ++b)
        ok = post.state.latents[l][b].latent.data() == prior.latents[l][b].latent.data();
  }
  return {ok, "max |KL| " + fmt("%.3e", worst_kl) + ", features bitwise equal: " +
                  (ok ? "yes" : "no")};
}

// 3. Wilson score at p-hat 1 and 0.
Outcome criterion_wilson() {
  double worst = 0.0;
  bool zero_ok = true;
  for (std::size_t n = 1; n <= 12; ++n) {
    const std::vector<std::uint8_t> ones(n, 1), zeros(n, 0);
    const double z2 = kWilsonZ95 * kWilsonZ95;
    const double expect = static_cast<double>(n) / (static_cast<double>(n) + z2);
    worst = std::max(worst, std::abs(wilson_score(ones, n, kWilsonZ95) - expect));
    zero_ok = zero_ok && wilson_score(zeros, n, kWilsonZ95) == 0.0;
  }
  return {worst <= kWilsonTol && zero_ok,
          "max |W(1,n) - n/(n+z^2)| " + fmt("%.3e", worst) + ", W(0,n) == 0: " +
              (zero_ok ? "yes" : "no")};
}

// 4. Sampling bound: closed-form ordering and Monte Carlo agreement.
Outcome criterion_theorem() {
  TheoremGrid grid;
  grid.trials = kTheoremTrials;
  grid.seed = derive_seed(kSeed, 40);
  const auto t0 = Clock::now();
  const auto rows = run_theorem_grid(grid);
  const double s = seconds_since(t0);
  // 3 SE per comparison, held for the whole family: the z whose two-sided tail
  // times the number of comparisons equals the two-sided tail at 3.
  const double comparisons = 2.0 * static_cast<double>(rows.size());
  const double family_tail = std::erfc(kTheoremSigmas / std::sqrt(2.0));
  double lo = kTheoremSigmas, hi = 10.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (comparisons * std::erfc(mid / std::sqrt(2.0)) > family_tail ? lo : hi) = mid;
  }
  const double threshold = hi;
  std::size_t order_fail = 0, mc_fail = 0, over_three = 0;
  double worst_z = 0.0;
  const double trials = static_cast<double>(kTheoremTrials);
  auto zscore = [&](double emp, double p) {
    const double se = std::sqrt(p * (1.0 - p) / trials);
    if (se == 0.0) return emp == p ? 0.0 : INFINITY;
    return std::abs(emp - p) / se;
  };
  for (const auto& r : rows) {
    if (!(r.mc.analytic_ours >= r.mc.analytic_ransac)) ++order_fail;
    const double zo = zscore(r.mc.empirical_ours, r.mc.analytic_ours);
    const double zr = zscore(r.mc.empirical_ransac, r.mc.exact_ransac);
    worst_z = std::max({worst_z, zo, zr});
    if (zo > threshold) ++mc_fail;
    if (zr > threshold) ++mc_fail;
    over_three += (zo > kTheoremSigmas) + (zr > kTheoremSigmas);
  }
  Outcome o;
  o.pass = rows.size() == 48 && order_fail == 0 && mc_fail == 0 && s < kTheoremBudgetS;
  o.detail = std::to_string(rows.size()) + " cells, ordering violations " +
             std::to_string(order_fail) + ", MC outside " + fmt("%.2f", threshold) + " SE " +
             std::to_string(mc_fail) + ", outside 3 SE " + std::to_string(over_three) + " of " +
             fmt("%.0f", comparisons) + " (max " + fmt("%.2f", worst_z) + " SE), " +
             fmt("%.1f", s) + " s";
  return o;
}

// 5. Weighted Procrustes on noiseless data, and equivariance.
Outcome criterion_procrustes() {
  std::mt19937_64 rng(derive_seed(kSeed, 50));
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.1, 2.0);
  std::uniform_int_distribution<std::size_t> count(3, 60);
  double worst_re = 0.0, worst_te = 0.0, worst_eq = 0.0;
  for (std::size_t k = 0; k < kProcrustesInstances; ++k) {
    RigidTransform gt;
    gt.rotation = random_rotation(rng);
    gt.translation = {u(rng), u(rng), u(rng)};
    const std::size_t n = count(rng);
    std::vector<Point3> src(n), dst(n);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      src[i] = {u(rng), u(rng), u(rng)};
      dst[i] = gt.apply(src[i]);
      weights[i] = w(rng);
    }
    const auto est = weighted_procrustes(src, dst, weights);
    worst_re = std::max(worst_re, rotation_error(est, gt));
    worst_te = std::max(worst_te, translation_error(est, gt));

    // Moving the source by g and the target by h gives h o est o g^-1.
    RigidTransform g, h;
    g.rotation = random_rotation(rng);
    g.translation = {u(rng), u(rng), u(rng)};
    h.rotation = random_rotation(rng);
    h.translation = {u(rng), u(rng), u(rng)};
    std::vector<Point3> src2(n), dst2(n);
    for (std::size_t i = 0; i < n; ++i) {
      src2[i] = g.apply(src[i]);
      dst2[i] = h.apply(dst[i] + 0.01 * Point3(u(rng), u(rng), u(rng)));
    }
    std::vector<Point3> dst_noisy(n);
    for (std::size_t i = 0; i < n; ++i) dst_noisy[i] = h.inverse().apply(dst2[i]);
    const auto base = weighted_procrustes(src, dst_noisy, weights);
    const auto moved = weighted_procrustes(src2, dst2, weights);
    const auto expect = h.compose(base).compose(g.inverse());
    worst_eq = std::max({worst_eq, (moved.rotation - expect.rotation).cwiseAbs().maxCoeff(),
                         (moved.translation - expect.translation).cwiseAbs().maxCoeff()});
  }
  return {worst_re < kProcrustesRe && worst_te < kProcrustesTe && worst_eq < kEquivarianceTol,
          "max RE " + fmt("%.3e", worst_re) + " rad, max TE " + fmt("%.3e", worst_te) +
              ", max equivariance gap " + fmt("%.3e", worst_eq)};
}

// 6. Trained toy pipeline against RANSAC on the synthetic grid.
Outcome criterion_pipeline() {
  const auto t0 = Clock::now();
  const auto& model = toy_model();
  BenchConfig bc;
  bc.scenes = kBenchScenes;
  bc.ratios = {0.05, 0.1, 0.3};
  bc.scene.n = 1000;
  bc.scene.noise_std = 0.01;
  bc.scene.extent = 1.0;
  bc.scene.epsilon = 0.05;
  bc.ransac.iterations = 1000;
  bc.ransac.sample_size = 3;
  bc.re_thresh_deg = kReThreshDeg;
  bc.te_thresh = kTeThresh;
  bc.seed = derive_seed(kSeed, 60);
  PipelineConfig pc;
  const BenchModel bm{&model.net, &model.trained};
  const auto rows = run_bench(bc, pc, bm);
  const double s = seconds_since(t0);
  bool ok = s < kBenchBudgetS;
  std::ostringstream detail;
  for (double ratio : bc.ratios) {
    double ours = -1.0, ransac = -1.0;
    for (const auto& r : rows) {
      if (r.inlier_ratio != ratio) continue;
      std::cout << "  ratio " << ratio << " " << r.method << " RR " << r.recall.rr << "\n";
      if (r.method == "vbreg") ours = r.recall.rr;
      if (r.method == "ransac") ransac = r.recall.rr;
    }
    if (ratio <= 0.1) ok = ok && ours >= 0.0 && ours >= ransac;
    detail << "ratio " << ratio << " RR " << ours << " vs " << ransac << "; ";
  }
  detail << fmt("%.0f", s) << " s";
  return {ok, detail.str()};
}

// 7. Inlier features become more alike after training.
Outcome criterion_discriminability() {
  const auto& model = toy_model();
  const auto held_out = toy_scenes(kHeldOutScenes, 200, 70, {0.05, 0.1, 0.2, 0.3, 0.5});
  double before = 0.0, after = 0.0, gap_before = 0.0, gap_after = 0.0;
  for (std::size_t k = 0; k < held_out.size(); ++k) {
    const auto& set = held_out[k];
    const auto beta = geometric_compatibility(set);
    const auto noise = derive_seed(kSeed, 71, k);
    const auto a = vb_forward_prior(set, beta, model.net, model.untrained, noise);
    const auto b = vb_forward_prior(set, beta, model.net, model.trained, noise);
    const double in_a = diag_feature_similarity(a, set.labels()).value().mean;
    const double in_b = diag_feature_similarity(b, set.labels()).value().mean;
    before += in_a;
    after += in_b;
    // Outlier-pair similarity, reported for context only.
    std::vector<std::uint8_t> flipped(set.labels());
    for (auto& f : flipped) f = 1 - f;
    gap_before += in_a - diag_feature_similarity(a, flipped).value().mean;
    gap_after += in_b - diag_feature_similarity(b, flipped).value().mean;
  }
  const double m = static_cast<double>(held_out.size());
  before /= m;
  after /= m;
  return {after > before, "mean inlier cosine untrained " + fmt("%.4f", before) + ", trained " +
                              fmt("%.4f", after) + " (inlier minus outlier: untrained " +
                              fmt("%.4f", gap_before / m) + ", trained " +
                              fmt("%.4f", gap_after / m) + ")"};
}

// 8. Seed lower bar against the plain ratio.
Outcome criterion_seed_bar() {
  const auto& model = toy_model();
  std::size_t with_bar = 0, without_bar = 0;
  for (std::size_t k = 0; k < kSeedTrials; ++k) {
    SynthConfig sc;
    sc.n = 300;
    sc.inlier_ratio = 0.1;
    sc.noise_std = 0.01;
    sc.epsilon = 0.05;
    sc.seed = derive_seed(kSeed, 80, k);
    const auto scene = generate_scene(sc);
    PipelineConfig pc;
    pc.seeds.ratio = 0.1;
    pc.noise_seed = derive_seed(kSeed, 81, k);
    pc.seeds.lower_bar = 200;
    if (success(register_scene(scene.set, model.net, model.trained, pc).transform,
                scene.ground_truth))
      ++with_bar;
    pc.seeds.lower_bar = 0;
    if (success(register_scene(scene.set, model.net, model.trained, pc).transform,
                scene.ground_truth))
      ++without_bar;
  }
  const double n = static_cast<double>(kSeedTrials);
  return {with_bar >= without_bar, "RR n=200 " + fmt("%.2f", with_bar / n) + ", n=0 " +
                                       fmt("%.2f", without_bar / n)};
}

// 9. CLI determinism and file round-trips.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "vbreg_acceptance_cli";
  fs::remove_all(root);
  std::vector<std::string> problems;

  // Each command runs in its own directory twice; outputs are compared byte for byte.
  auto run_twice = [&](const std::string& name,
                       const std::function<std::vector<std::string>(const fs::path&)>& args,
                       const std::vector<std::string>& files) {
    std::string first_out;
    std::vector<std::string> first_files;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (name + std::to_string(rep));
      fs::create_directories(dir);
      const auto r = cli(args(dir));
      if (r.code != kExitOk) {
        problems.push_back(name + " exit " + std::to_string(r.code) + ": " + r.err);
        return;
      }
      std::vector<std::string> contents;
      for (const auto& f : files) contents.push_back(slurp(dir / f));
      if (rep == 0) {
        first_out = r.out;
        first_files = contents;
      } else if (r.out != first_out || contents != first_files) {
        problems.push_back(name + " differs between runs");
      }
    }
  };

  const fs::path shared = root / "shared";
  fs::create_directories(shared);
  const auto corr = (shared / "scene.corr").string();
  const auto gt = (shared / "scene.gt.json").string();
  const auto ckpt = (shared / "toy.ckpt").string();
  const std::vector<std::string> toy_flags = {"--seed", "5"};

  run_twice("synth",
            [&](const fs::path& d) {
              return std::vector<std::string>{"synth", "--n", "150", "--inlier-ratio", "0.2",
                                              "--seed", "5", "--out", (d / "s.corr").string(),
                                              "--gt", (d / "s.gt.json").string()};
            },
            {"s.corr", "s.gt.json"});
  if (cli({"synth", "--n", "150", "--inlier-ratio", "0.2", "--seed", "5", "--out", corr, "--gt",
           gt})
          .code != kExitOk)
    problems.push_back("synth for shared inputs failed");

  const fs::path cfg_path = shared / "toy.cfg";
  {
    std::ofstream c(cfg_path);
    c << "iterations = 2\nfeature_dim = 8\nlatent_dim = 4\nhidden_dim = 8\nlabel_tile_k = 4\n"
         "epochs = 2\ntrain_scenes = 2\nval_scenes = 1\nsynth_n = 60\n"
         "bench_scenes = 2\nbench_n = 120\nransac_iterations = 50\n"
         "theorem_p_in = 0.1, 0.5\ntheorem_kappa = 2\ntheorem_J = 10\ntheorem_seed_inliers = 5\n"
         "theorem_trials = 2000\n";
  }
  const std::string cfg = cfg_path.string();

  run_twice("train",
            [&](const fs::path& d) {
              return std::vector<std::string>{"train", "--config", cfg, "--seed", "5",
                                              "--out", (d / "m.ckpt").string()};
            },
            {"m.ckpt", "m.ckpt.curve.csv"});
  if (cli({"train", "--config", cfg, "--seed", "5", "--out", ckpt}).code != kExitOk)
    problems.push_back("train for shared checkpoint failed");

  for (const std::string method : {"vbreg", "ransac", "sm"}) {
    run_twice("register_" + method,
              [&](const fs::path& d) {
                std::vector<std::string> a{"register", corr, "--method", method, "--config", cfg,
                                           "--seed", "5", "--gt", gt,
                                           "--out", (d / "r.json").string()};
                if (method == "vbreg") {
                  a.push_back("--checkpoint");
                  a.push_back(ckpt);
                }
                return a;
              },
              {"r.json"});
  }
  run_twice("bench",
            [&](const fs::path& d) {
              return std::vector<std::string>{"bench", "--config", cfg, "--seed", "5",
                                              "--checkpoint", ckpt,
                                              "--out", (d / "b.csv").string()};
            },
            {"b.csv"});
  run_twice("theorem1",
            [&](const fs::path& d) {
              return std::vector<std::string>{"theorem1", "--config", cfg, "--seed", "5",
                                              "--out", (d / "t.csv").string()};
            },
            {"t.csv"});
  run_twice("diag",
            [&](const fs::path& d) {
              return std::vector<std::string>{"diag", corr, "--checkpoint", ckpt, "--config", cfg,
                                              "--seed", "5", "--out", (d / "d").string()};
            },
            {"d.ambiguity.csv", "d.similarity.csv"});

  // Correspondence file round-trip.
  {
    SynthConfig sc;
    sc.n = 200;
    sc.seed = derive_seed(kSeed, 90);
    const auto scene = generate_scene(sc);
    const fs::path p = root / "roundtrip.corr";
    write_correspondences(p, scene.set);
    const auto back = read_correspondences(p);
    bool same = back.size() == scene.set.size() && back.has_labels() &&
                back.labels() == scene.set.labels() && back.epsilon() == scene.set.epsilon();
    for (std::size_t i = 0; same && i < back.size(); ++i)
      same = back.source(i) == scene.set.source(i) && back.target(i) == scene.set.target(i);
    if (!same) problems.push_back("correspondence round-trip lost data");
  }
  // Checkpoint round-trip.
  {
    const auto params = init_vbnet_params(toy_net(), derive_seed(kSeed, 91));
    const fs::path p = root / "roundtrip.ckpt";
    save_checkpoint(p, params);
    const auto back = load_checkpoint(p);
    if (!back.same_values(params)) problems.push_back("checkpoint round-trip lost data");
    std::ostringstream a, b;
    write_checkpoint(a, params);
    write_checkpoint(b, back);
    if (a.str() != b.str()) problems.push_back("checkpoint re-serialisation differs");
  }

  fs::remove_all(root);
  std::string detail = problems.empty() ? "7 commands x 2 runs identical, round-trips exact" : "";
  for (const auto& p : problems) detail += p + "; ";
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") only = std::atoi(argv[i + 1]);

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"gradient check", criterion_gradients},
      {"elbo structure", criterion_elbo_structure},
      {"wilson closed forms", criterion_wilson},
      {"sampling bound", criterion_theorem},
      {"procrustes exactness", criterion_procrustes},
      {"pipeline vs ransac", criterion_pipeline},
      {"discriminability", criterion_discriminability},
      {"seed lower bar", criterion_seed_bar},
      {"determinism and io", criterion_determinism},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (k + 1) << " " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
