#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vbreg/autodiff.hpp"
#include "vbreg/distributions.hpp"
#include "vbreg/geometry.hpp"
#include "vbreg/params.hpp"

namespace vbreg {

enum class InputMode { coords, coords_descriptor };

/// Variational non-local network dimensions.
struct VBNetConfig {
  std::size_t iterations = 12;    // L
  std::size_t feature_dim = 128;  // d
  std::size_t latent_dim = 128;   // d~
  std::size_t hidden_dim = 256;   // d'
  InputMode input_mode = InputMode::coords;
  std::size_t descriptor_dim = 0;  // only read in coords_descriptor mode
  std::size_t label_tile_k = 16;

  std::size_t input_width() const;
  void validate() const;
};

/// Query, key and value branches.
enum Branch : std::size_t { kQuery = 0, kKey = 1, kValue = 2 };
inline constexpr std::array<const char*, 3> kBranchNames = {"q", "k", "v"};

/// Standard normal draws for every latent, indexed [iteration 0..L][branch], each N x d~.
struct LatentNoise {
  std::vector<std::array<Matrix, 3>> draws;

  static LatentNoise sample(std::size_t n, const VBNetConfig& cfg, std::uint64_t seed);
  /// Row i of the result is row perm[i] of this.
  LatentNoise permuted(std::span<const std::size_t> perm) const;
};

struct BranchState {
  Matrix hidden;  // N x d'
  Matrix latent;  // N x d~
  DiagGaussian prior;
  std::optional<DiagGaussian> posterior;
};

/// Everything one forward pass produced. latents[0] is the bootstrap step
/// (hidden = 0); latents[l] and features[l] belong to iteration l.
struct VBNetState {
  std::vector<std::array<BranchState, 3>> latents;  // L + 1 entries
  std::vector<Matrix> features;                     // F~0 .. F~L, each N x d
  Matrix label_mean;                                // N x 1
};

struct ElboBreakdown {
  double log_likelihood_term = 0.0;
  std::vector<double> kl_terms;  // one per latent step 0..L-1, summed over branches
  double total = 0.0;

  double kl_total() const;
};

/// Fresh parameters, uniform(+-1/sqrt(fan_in)) from seed.
ParamStore init_vbnet_params(const VBNetConfig& cfg, std::uint64_t seed);
/// Recovers the dimensions from parameter shapes (used when loading checkpoints).
VBNetConfig infer_vbnet_config(const ParamStore& params);
/// Copies each prior encoder into its posterior encoder and zeroes the label inputs,
/// so q == p exactly.
void tie_posterior_to_prior(ParamStore& params, const VBNetConfig& cfg);

/// Per-correspondence input rows [x, y] or [x, y, descriptor].
Matrix correspondence_inputs(const CorrespondenceSet& set, const VBNetConfig& cfg);
/// F~0: linear projection of the inputs, N x d.
Matrix init_features(const CorrespondenceSet& set, const VBNetConfig& cfg, const ParamStore& params);

VBNetState vb_forward_prior(const CorrespondenceSet& set, const Matrix& beta,
                            const VBNetConfig& cfg, const ParamStore& params, std::uint64_t seed);
VBNetState vb_forward_prior(const CorrespondenceSet& set, const Matrix& beta,
                            const VBNetConfig& cfg, const ParamStore& params,
                            const LatentNoise& noise);

struct PosteriorForward {
  VBNetState state;
  ElboBreakdown elbo;
};

PosteriorForward vb_forward_posterior(const CorrespondenceSet& set,
                                      std::span<const std::uint8_t> labels, const Matrix& beta,
                                      const VBNetConfig& cfg, const ParamStore& params,
                                      std::uint64_t seed);
PosteriorForward vb_forward_posterior(const CorrespondenceSet& set,
                                      std::span<const std::uint8_t> labels, const Matrix& beta,
                                      const VBNetConfig& cfg, const ParamStore& params,
                                      const LatentNoise& noise);

/// Differentiable -ELBO on an existing tape, for training and gradient checks.
ad::Var negative_elbo(ad::Tape& tape, const CorrespondenceSet& set,
                      std::span<const std::uint8_t> labels, const Matrix& beta,
                      const VBNetConfig& cfg, const ParamStore& params, const LatentNoise& noise);

/// F~1 .. F~L in iteration order.
std::vector<Matrix> extract_voter_features(const VBNetState& state);
/// logistic(label mean) per correspondence.
std::vector<double> inlier_confidence(const VBNetState& state);

// SCNonlocal baseline: F^{l+1} = F^l + MLP(softmax_j(<Q_i,K_j>/sqrt(d) * beta_ij) V).

struct SCNonlocalConfig {
  std::size_t iterations = 12;
  std::size_t feature_dim = 128;
  InputMode input_mode = InputMode::coords;
  std::size_t descriptor_dim = 0;
};

ParamStore init_sc_nonlocal_params(const SCNonlocalConfig& cfg, std::uint64_t seed);
/// F^0 .. F^L.
std::vector<Matrix> sc_nonlocal_forward(const CorrespondenceSet& set, const Matrix& beta,
                                        const SCNonlocalConfig& cfg, const ParamStore& params);

}  // namespace vbreg
