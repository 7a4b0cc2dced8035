#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbreg/estimation.hpp"
#include "vbreg/geometry.hpp"
#include "vbreg/pipeline.hpp"
#include "vbreg/synth.hpp"

namespace vbreg {

struct BenchConfig {
  std::size_t scenes = 20;                  // per inlier ratio
  std::vector<double> ratios{0.05, 0.1, 0.3};
  SynthConfig scene;                        // n, noise, extent, epsilon; ratio and seed overridden
  RansacOptions ransac;                     // seed overridden per scene
  std::size_t sm_top_k = 40;
  double re_thresh_deg = 15.0;
  double te_thresh = 0.30;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Trained network for the pipeline; without one the pipeline runs on
/// spectral confidences with beta as the only voter.
struct BenchModel {
  const VBNetConfig* net = nullptr;
  const ParamStore* params = nullptr;
};

struct BenchRow {
  std::string method;
  double inlier_ratio = 0.0;
  RecallSummary recall;
  double mean_seconds = 0.0;
};

/// Scene s of ratio index r uses synth seed derive_seed(seed, r, s).
Scene bench_scene(const BenchConfig& cfg, std::size_t ratio_index, std::size_t scene_index);

/// Pipeline, RANSAC and spectral matching over the scene grid. Rows are ordered by
/// ratio, then method.
std::vector<BenchRow> run_bench(const BenchConfig& cfg, const PipelineConfig& pipeline,
                                const BenchModel& model);

/// method,inlier_ratio,rr,successes,total,mean_re_deg,mean_te,mean_seconds.
/// mean_seconds is left empty unless include_timings.
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows, bool include_timings);

}  // namespace vbreg
