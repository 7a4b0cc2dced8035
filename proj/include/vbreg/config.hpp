#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "vbreg/bench_suite.hpp"
#include "vbreg/nonlocal.hpp"
#include "vbreg/pipeline.hpp"
#include "vbreg/synth.hpp"
#include "vbreg/theory.hpp"
#include "vbreg/training.hpp"

namespace vbreg {

/// Every tunable of the tool. Loaded from a flat key=value file; '#' starts a comment.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<double> epsilon;

  VBNetConfig net;
  TrainOptions train;
  std::size_t train_scenes = 8;  // synthetic scenes generated by `train` when no data dir is given
  std::size_t val_scenes = 2;
  PipelineConfig pipeline;
  SynthConfig synth;
  BenchConfig bench;
  TheoremGrid theorem;

  /// Propagate to every module that draws random numbers or needs the threshold.
  void set_seed(std::uint64_t s);
  void set_epsilon(double eps);

  /// Checks every module precondition; throws UsageError naming the key.
  void validate() const;
};

RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::filesystem::path& path);
/// Writes every key with its current value (a complete, loadable file).
void write_run_config(std::ostream& os, const RunConfig& cfg);

}  // namespace vbreg
