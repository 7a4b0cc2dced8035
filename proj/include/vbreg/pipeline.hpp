#pragma once

#include <cstdint>
#include <span>

#include "vbreg/estimation.hpp"
#include "vbreg/inlier_search.hpp"
#include "vbreg/nonlocal.hpp"

namespace vbreg {

struct PipelineConfig {
  SeedOptions seeds;
  std::size_t kappa = 40;
  double sigma = 0.3;
  double z = kWilsonZ95;
  std::size_t refine_iterations = 3;
  std::uint64_t noise_seed = 0;  // latent noise for the prior forward pass

  void validate() const;
};

/// Full pipeline: network confidences and voters, seeds, voting, Wilson fusion,
/// one weighted fit per seed, selection and refinement. kappa is capped at N.
RegistrationReport register_scene(const CorrespondenceSet& set, const VBNetConfig& net,
                                  const ParamStore& params, const PipelineConfig& cfg);

/// Same search driven by external confidences with beta as the only voter.
RegistrationReport register_scene(const CorrespondenceSet& set,
                                  std::span<const double> confidences, const PipelineConfig& cfg);

}  // namespace vbreg
