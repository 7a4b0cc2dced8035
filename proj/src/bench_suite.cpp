#include "vbreg/bench_suite.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"
#include "vbreg/seeding.hpp"

namespace vbreg {

void BenchConfig::validate() const {
  if (scenes < 1) throw UsageError("bench: scenes must be >= 1");
  if (ratios.empty()) throw UsageError("bench: at least one inlier ratio is needed");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw UsageError("bench: inlier ratios must be in (0, 1]");
  }
  scene.validate();
  if (ransac.iterations < 1) throw UsageError("bench: ransac_iterations must be >= 1");
  if (ransac.sample_size < 3) throw UsageError("bench: ransac_sample must be >= 3");
  if (sm_top_k < 3) throw UsageError("bench: sm_top_k must be >= 3");
  if (!(re_thresh_deg > 0.0) || !(te_thresh > 0.0)) throw UsageError("bench: thresholds must be > 0");
}

Scene bench_scene(const BenchConfig& cfg, std::size_t ratio_index, std::size_t scene_index) {
  SynthConfig s = cfg.scene;
  s.inlier_ratio = cfg.ratios.at(ratio_index);
  s.seed = derive_seed(cfg.seed, ratio_index, scene_index);
  return generate_scene(s);
}

namespace {

struct Outcome {
  RegistrationError err;
  double seconds = 0.0;
};

constexpr std::size_t kMethods = 3;
constexpr const char* kMethodNames[kMethods] = {"vbreg", "ransac", "sm"};

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const PipelineConfig& pipeline,
                                const BenchModel& model) {
  cfg.validate();
  pipeline.validate();
  std::vector<BenchRow> rows;
  for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
    std::vector<std::array<Outcome, kMethods>> out(cfg.scenes);
    const auto count = static_cast<std::ptrdiff_t>(cfg.scenes);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < count; ++s) {
      const Scene scene = bench_scene(cfg, r, static_cast<std::size_t>(s));
      const double eps = scene.set.epsilon();
      for (std::size_t m = 0; m < kMethods; ++m) {
        const auto start = std::chrono::steady_clock::now();
        RegistrationReport rep;
        try {
          if (m == 0) {
            PipelineConfig pc = pipeline;
            pc.noise_seed = derive_seed(cfg.seed, 0x9e, static_cast<std::uint64_t>(s));
            if (model.net && model.params) {
              rep = register_scene(scene.set, *model.net, *model.params, pc);
            } else {
              const auto w = spectral_weights(geometric_compatibility(scene.set));
              rep = register_scene(scene.set, w, pc);
            }
          } else if (m == 1) {
            RansacOptions ro = cfg.ransac;
            ro.seed = derive_seed(cfg.seed, 0x7a, static_cast<std::uint64_t>(s));
            rep = ransac_register(scene.set, eps, ro);
          } else {
            rep = spectral_matching_register(scene.set, geometric_compatibility(scene.set), eps,
                                             cfg.sm_top_k);
          }
          out[s][m].err = {rotation_error(rep.transform, scene.ground_truth),
                           translation_error(rep.transform, scene.ground_truth)};
        } catch (const NumericalError&) {
          out[s][m].err = {M_PI, std::numeric_limits<double>::infinity()};
        }
        out[s][m].seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    }
    for (std::size_t m = 0; m < kMethods; ++m) {
      std::vector<RegistrationError> errs;
      double secs = 0.0;
      for (const auto& o : out) {
        errs.push_back(o[m].err);
        secs += o[m].seconds;
      }
      BenchRow row;
      row.method = kMethodNames[m];
      row.inlier_ratio = cfg.ratios[r];
      row.recall = registration_recall(errs, cfg.re_thresh_deg * M_PI / 180.0, cfg.te_thresh);
      row.mean_seconds = secs / static_cast<double>(cfg.scenes);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows, bool include_timings) {
  os << "method,inlier_ratio,rr,successes,total,mean_re_deg,mean_te,mean_seconds\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_real(r.inlier_ratio) << ',' << format_real(r.recall.rr) << ','
       << r.recall.successes << ',' << r.recall.total << ',';
    if (r.recall.mean_re) os << format_real(*r.recall.mean_re * 180.0 / M_PI);
    os << ',';
    if (r.recall.mean_te) os << format_real(*r.recall.mean_te);
    os << ',';
    if (include_timings) os << format_real(r.mean_seconds);
    os << '\n';
  }
}

}  // namespace vbreg
