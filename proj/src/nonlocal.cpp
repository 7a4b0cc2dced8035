#include "vbreg/nonlocal.hpp"

#include <cmath>
#include <random>
#include <string>

#include "vbreg/errors.hpp"
#include "vbreg/nn.hpp"

namespace vbreg {

std::size_t VBNetConfig::input_width() const {
  return 6 + (input_mode == InputMode::coords_descriptor ? descriptor_dim : 0);
}

void VBNetConfig::validate() const {
  if (iterations < 1) throw UsageError("VBNetConfig: iterations (L) must be >= 1");
  if (feature_dim < 1 || latent_dim < 1 || hidden_dim < 1) {
    throw UsageError("VBNetConfig: feature, latent and hidden dims must be >= 1");
  }
  if (label_tile_k < 1) throw UsageError("VBNetConfig: label_tile_k must be >= 1");
  if (input_mode == InputMode::coords_descriptor && descriptor_dim == 0) {
    throw UsageError("VBNetConfig: coords_descriptor mode needs descriptor_dim > 0");
  }
}

double ElboBreakdown::kl_total() const {
  double s = 0.0;
  for (double k : kl_terms) s += k;
  return s;
}

LatentNoise LatentNoise::sample(std::size_t n, const VBNetConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LatentNoise noise;
  noise.draws.resize(cfg.iterations + 1);
  for (auto& step : noise.draws)
    for (auto& m : step) m = standard_normal(n, cfg.latent_dim, rng);
  return noise;
}

LatentNoise LatentNoise::permuted(std::span<const std::size_t> perm) const {
  LatentNoise out = *this;
  for (std::size_t l = 0; l < draws.size(); ++l)
    for (std::size_t b = 0; b < 3; ++b) {
      const Matrix& src = draws[l][b];
      Matrix& dst = out.draws[l][b];
      for (std::size_t i = 0; i < perm.size(); ++i)
        std::copy(src.row(perm[i]).begin(), src.row(perm[i]).end(), dst.row(i).begin());
    }
  return out;
}

namespace {

std::string branch_prefix(const char* kind, std::size_t b) {
  return std::string(kind) + "_" + kBranchNames[b];
}

std::string agg_prefix(std::size_t l) { return "agg" + std::to_string(l); }

}  // namespace

ParamStore init_vbnet_params(const VBNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore p;
  const std::size_t d = cfg.feature_dim;
  const std::size_t dz = cfg.latent_dim;
  const std::size_t dh = cfg.hidden_dim;
  nn::declare_linear(p, "init", cfg.input_width(), d, rng);
  for (std::size_t b = 0; b < 3; ++b) {
    nn::declare_gru(p, branch_prefix("gru", b), dz + d, dh, rng);
    nn::declare_mlp(p, branch_prefix("prior", b), dh, {dh, 2 * dz}, rng);
    nn::declare_mlp(p, branch_prefix("post", b), dh + cfg.label_tile_k, {dh, 2 * dz}, rng);
    nn::declare_mlp(p, branch_prefix("proj", b), dz + dh, {d, d}, rng);
  }
  for (std::size_t l = 1; l <= cfg.iterations; ++l) nn::declare_mlp(p, agg_prefix(l), d, {d, d}, rng);
  nn::declare_mlp(p, "label", d, {d, 1}, rng);
  return p;
}

VBNetConfig infer_vbnet_config(const ParamStore& params) {
  VBNetConfig cfg;
  try {
    const Matrix& init_w = params.value("init/W");
    cfg.feature_dim = init_w.cols();
    const std::size_t width = init_w.rows();
    if (width < 6) throw DataError("checkpoint: init/W has fewer than 6 input rows");
    cfg.input_mode = width == 6 ? InputMode::coords : InputMode::coords_descriptor;
    cfg.descriptor_dim = width - 6;
    cfg.hidden_dim = params.value("gru_q/Uz").rows();
    const std::size_t gru_in = params.value("gru_q/Wz").rows();
    if (gru_in <= cfg.feature_dim) throw DataError("checkpoint: inconsistent GRU input width");
    cfg.latent_dim = gru_in - cfg.feature_dim;
    const std::size_t post_in = params.value("post_q/l0/W").rows();
    if (post_in <= cfg.hidden_dim) throw DataError("checkpoint: inconsistent posterior width");
    cfg.label_tile_k = post_in - cfg.hidden_dim;
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint is not a variational non-local model: ") + e.what());
  }
  std::size_t L = 0;
  while (params.contains(agg_prefix(L + 1) + "/l0/W")) ++L;
  if (L == 0) throw DataError("checkpoint: no aggregation layers");
  cfg.iterations = L;
  cfg.validate();
  return cfg;
}

void tie_posterior_to_prior(ParamStore& params, const VBNetConfig& cfg) {
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string prior = branch_prefix("prior", b);
    const std::string post = branch_prefix("post", b);
    const std::size_t depth = nn::mlp_depth(params, prior);
    for (std::size_t l = 0; l < depth; ++l) {
      const std::string pl = prior + "/l" + std::to_string(l);
      const std::string ql = post + "/l" + std::to_string(l);
      params.at(ql + "/b").value = params.value(pl + "/b");
      if (l == 0) {
        const Matrix& w = params.value(pl + "/W");
        Matrix tied(cfg.hidden_dim + cfg.label_tile_k, w.cols());
        std::copy(w.data().begin(), w.data().end(), tied.data().begin());
        params.at(ql + "/W").value = std::move(tied);
      } else {
        params.at(ql + "/W").value = params.value(pl + "/W");
      }
    }
  }
}

Matrix correspondence_inputs(const CorrespondenceSet& set, const VBNetConfig& cfg) {
  const bool with_desc = cfg.input_mode == InputMode::coords_descriptor;
  if (with_desc && set.descriptor_dim() != cfg.descriptor_dim) {
    throw DataError("descriptor mode needs " + std::to_string(cfg.descriptor_dim) +
                    "-dim descriptors, set has " + std::to_string(set.descriptor_dim()));
  }
  Matrix x(set.size(), cfg.input_width());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto r = x.row(i);
    for (int k = 0; k < 3; ++k) {
      r[k] = set.source(i)[k];
      r[3 + k] = set.target(i)[k];
    }
    if (with_desc) {
      const auto d = set.descriptors().row(i);
      std::copy(d.begin(), d.end(), r.begin() + 6);
    }
  }
  return x;
}

namespace {

struct BranchVars {
  ad::Var hidden;
  ad::Var latent;
  ad::Var prior_mean;
  ad::Var prior_log_std;
  std::optional<ad::Var> post_mean;
  std::optional<ad::Var> post_log_std;
};

struct Graph {
  std::vector<std::array<BranchVars, 3>> latents;
  std::vector<ad::Var> features;
  ad::Var label_mean;
  std::vector<ad::Var> kl;
  std::optional<ad::Var> loglik;
};

std::pair<ad::Var, ad::Var> encode(ad::Tape& tape, const ParamStore& params,
                                   const std::string& prefix, ad::Var input, std::size_t dz) {
  ad::Var out = nn::mlp(tape, params, prefix, input);
  return {ad::slice_cols(out, 0, dz), ad::slice_cols(out, dz, dz)};
}

ad::Var nonlocal_step(ad::Tape& tape, const ParamStore& params, const std::string& mlp_prefix,
                      ad::Var features, ad::Var q, ad::Var k, ad::Var v, ad::Var beta) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  ad::Var scores = ad::mul(ad::affine(ad::matmul_nt(q, k), scale), beta);
  ad::Var message = ad::matmul(ad::softmax_rows(scores), v);
  return ad::add(features, nn::mlp(tape, params, mlp_prefix, message));
}

void check_inputs(const CorrespondenceSet& set, const Matrix& beta, const VBNetConfig& cfg,
                  const LatentNoise& noise) {
  cfg.validate();
  const std::size_t n = set.size();
  if (beta.rows() != n || beta.cols() != n) {
    throw UsageError("compatibility matrix is " + beta.shape_str() + ", expected " +
                     std::to_string(n) + "x" + std::to_string(n));
  }
  if (noise.draws.size() != cfg.iterations + 1) {
    throw UsageError("latent noise has " + std::to_string(noise.draws.size()) +
                     " steps, expected L + 1");
  }
  for (const auto& step : noise.draws)
    for (const auto& m : step)
      if (m.rows() != n || m.cols() != cfg.latent_dim) {
        throw UsageError("latent noise draw is " + m.shape_str());
      }
}

Graph build_graph(ad::Tape& tape, const CorrespondenceSet& set, const Matrix& beta,
                  const VBNetConfig& cfg, const ParamStore& params, const LatentNoise& noise,
                  std::optional<std::span<const std::uint8_t>> labels) {
  check_inputs(set, beta, cfg, noise);
  const std::size_t n = set.size();
  const std::size_t dz = cfg.latent_dim;
  const std::size_t L = cfg.iterations;

  std::optional<ad::Var> label_tile;
  if (labels) {
    if (labels->size() != n) throw DataError("labels length does not match correspondences");
    Matrix tile(n, cfg.label_tile_k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < cfg.label_tile_k; ++k) tile(i, k) = (*labels)[i];
    label_tile = tape.constant(std::move(tile));
  }

  Graph g;
  ad::Var beta_var = tape.constant(beta);
  g.features.push_back(nn::linear(tape, params, "init", tape.constant(correspondence_inputs(set, cfg))));

  // Latent at step l comes from q while l < L in posterior mode; the last step
  // has no KL term in the bound, so it is always drawn from the prior.
  auto draw = [&](std::size_t l, std::size_t b, ad::Var hidden) {
    BranchVars bv;
    bv.hidden = hidden;
    std::tie(bv.prior_mean, bv.prior_log_std) =
        encode(tape, params, branch_prefix("prior", b), hidden, dz);
    if (label_tile && l < L) {
      auto [qm, qs] = encode(tape, params, branch_prefix("post", b),
                             ad::concat_cols(hidden, *label_tile), dz);
      bv.post_mean = qm;
      bv.post_log_std = qs;
      bv.latent = ad::reparam_sample(qm, qs, noise.draws[l][b]);
    } else {
      bv.latent = ad::reparam_sample(bv.prior_mean, bv.prior_log_std, noise.draws[l][b]);
    }
    return bv;
  };

  auto kl_of = [&](const std::array<BranchVars, 3>& step) {
    ad::Var total = ad::kl_diag(*step[0].post_mean, *step[0].post_log_std, step[0].prior_mean,
                                step[0].prior_log_std);
    for (std::size_t b = 1; b < 3; ++b) {
      total = ad::add(total, ad::kl_diag(*step[b].post_mean, *step[b].post_log_std,
                                         step[b].prior_mean, step[b].prior_log_std));
    }
    return total;
  };

  ad::Var h0 = tape.constant(Matrix(n, cfg.hidden_dim));
  std::array<BranchVars, 3> boot;
  for (std::size_t b = 0; b < 3; ++b) boot[b] = draw(0, b, h0);
  if (label_tile) g.kl.push_back(kl_of(boot));
  g.latents.push_back(boot);

  for (std::size_t l = 1; l <= L; ++l) {
    const auto& prev = g.latents[l - 1];
    const ad::Var f_prev = g.features[l - 1];
    std::array<BranchVars, 3> step;
    std::array<ad::Var, 3> proj;
    for (std::size_t b = 0; b < 3; ++b) {
      ad::Var h = nn::gru_cell(tape, params, branch_prefix("gru", b), prev[b].hidden,
                               ad::concat_cols(prev[b].latent, f_prev));
      step[b] = draw(l, b, h);
      proj[b] = nn::mlp(tape, params, branch_prefix("proj", b),
                        ad::concat_cols(step[b].latent, h));
    }
    if (label_tile && l < L) g.kl.push_back(kl_of(step));
    g.latents.push_back(step);
    g.features.push_back(nonlocal_step(tape, params, agg_prefix(l), f_prev, proj[kQuery],
                                       proj[kKey], proj[kValue], beta_var));
  }

  g.label_mean = nn::mlp(tape, params, "label", g.features.back());
  if (labels) {
    Matrix targets(n, 1);
    for (std::size_t i = 0; i < n; ++i) targets(i, 0) = (*labels)[i];
    g.loglik = ad::gaussian_log_likelihood_sum(targets, g.label_mean);
  }
  return g;
}

VBNetState to_state(const Graph& g) {
  VBNetState s;
  for (const auto& step : g.latents) {
    std::array<BranchState, 3> out;
    for (std::size_t b = 0; b < 3; ++b) {
      out[b].hidden = step[b].hidden.value();
      out[b].latent = step[b].latent.value();
      out[b].prior = {step[b].prior_mean.value(), step[b].prior_log_std.value()};
      if (step[b].post_mean) {
        out[b].posterior = DiagGaussian{step[b].post_mean->value(), step[b].post_log_std->value()};
      }
    }
    s.latents.push_back(std::move(out));
  }
  for (const auto& f : g.features) s.features.push_back(f.value());
  s.label_mean = g.label_mean.value();
  return s;
}

void require_finite(const VBNetState& s) {
  for (const auto& f : s.features)
    if (!f.all_finite()) throw NumericalError("non-local features became non-finite");
  if (!s.label_mean.all_finite()) throw NumericalError("label head produced non-finite values");
}

}  // namespace

Matrix init_features(const CorrespondenceSet& set, const VBNetConfig& cfg, const ParamStore& params) {
  ad::Tape tape(false);
  return nn::linear(tape, params, "init", tape.constant(correspondence_inputs(set, cfg))).value();
}

VBNetState vb_forward_prior(const CorrespondenceSet& set, const Matrix& beta,
                            const VBNetConfig& cfg, const ParamStore& params, std::uint64_t seed) {
  return vb_forward_prior(set, beta, cfg, params, LatentNoise::sample(set.size(), cfg, seed));
}

VBNetState vb_forward_prior(const CorrespondenceSet& set, const Matrix& beta,
                            const VBNetConfig& cfg, const ParamStore& params,
                            const LatentNoise& noise) {
  ad::Tape tape(false);
  VBNetState s = to_state(build_graph(tape, set, beta, cfg, params, noise, std::nullopt));
  require_finite(s);
  return s;
}

PosteriorForward vb_forward_posterior(const CorrespondenceSet& set,
                                      std::span<const std::uint8_t> labels, const Matrix& beta,
                                      const VBNetConfig& cfg, const ParamStore& params,
                                      std::uint64_t seed) {
  return vb_forward_posterior(set, labels, beta, cfg, params,
                              LatentNoise::sample(set.size(), cfg, seed));
}

PosteriorForward vb_forward_posterior(const CorrespondenceSet& set,
                                      std::span<const std::uint8_t> labels, const Matrix& beta,
                                      const VBNetConfig& cfg, const ParamStore& params,
                                      const LatentNoise& noise) {
  ad::Tape tape(false);
  Graph g = build_graph(tape, set, beta, cfg, params, noise, labels);
  PosteriorForward out;
  out.state = to_state(g);
  require_finite(out.state);
  out.elbo.log_likelihood_term = g.loglik->scalar();
  for (const auto& k : g.kl) out.elbo.kl_terms.push_back(k.scalar());
  out.elbo.total = out.elbo.log_likelihood_term - out.elbo.kl_total();
  if (!std::isfinite(out.elbo.total)) throw NumericalError("ELBO is not finite");
  return out;
}

ad::Var negative_elbo(ad::Tape& tape, const CorrespondenceSet& set,
                      std::span<const std::uint8_t> labels, const Matrix& beta,
                      const VBNetConfig& cfg, const ParamStore& params, const LatentNoise& noise) {
  Graph g = build_graph(tape, set, beta, cfg, params, noise, labels);
  ad::Var kl = g.kl.front();
  for (std::size_t l = 1; l < g.kl.size(); ++l) kl = ad::add(kl, g.kl[l]);
  return ad::sub(kl, *g.loglik);
}

std::vector<Matrix> extract_voter_features(const VBNetState& state) {
  if (state.features.empty()) return {};
  return {state.features.begin() + 1, state.features.end()};
}

std::vector<double> inlier_confidence(const VBNetState& state) {
  std::vector<double> c(state.label_mean.rows());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 1.0 / (1.0 + std::exp(-state.label_mean(i, 0)));
  return c;
}

ParamStore init_sc_nonlocal_params(const SCNonlocalConfig& cfg, std::uint64_t seed) {
  if (cfg.iterations < 1 || cfg.feature_dim < 1) throw UsageError("SCNonlocal: bad dimensions");
  std::mt19937_64 rng(seed);
  ParamStore p;
  const std::size_t d = cfg.feature_dim;
  const std::size_t width = 6 + (cfg.input_mode == InputMode::coords_descriptor ? cfg.descriptor_dim : 0);
  nn::declare_linear(p, "init", width, d, rng);
  for (std::size_t l = 0; l < cfg.iterations; ++l) {
    const std::string pre = "iter" + std::to_string(l);
    nn::declare_linear(p, pre + "/q", d, d, rng);
    nn::declare_linear(p, pre + "/k", d, d, rng);
    nn::declare_linear(p, pre + "/v", d, d, rng);
    nn::declare_mlp(p, pre + "/mlp", d, {d, d}, rng);
  }
  return p;
}

std::vector<Matrix> sc_nonlocal_forward(const CorrespondenceSet& set, const Matrix& beta,
                                        const SCNonlocalConfig& cfg, const ParamStore& params) {
  const std::size_t n = set.size();
  if (beta.rows() != n || beta.cols() != n) throw UsageError("sc_nonlocal_forward: bad beta shape");
  VBNetConfig input_cfg;
  input_cfg.input_mode = cfg.input_mode;
  input_cfg.descriptor_dim = cfg.descriptor_dim;
  ad::Tape tape(false);
  ad::Var beta_var = tape.constant(beta);
  ad::Var f = nn::linear(tape, params, "init", tape.constant(correspondence_inputs(set, input_cfg)));
  std::vector<Matrix> out{f.value()};
  for (std::size_t l = 0; l < cfg.iterations; ++l) {
    const std::string pre = "iter" + std::to_string(l);
    f = nonlocal_step(tape, params, pre + "/mlp", f, nn::linear(tape, params, pre + "/q", f),
                      nn::linear(tape, params, pre + "/k", f), nn::linear(tape, params, pre + "/v", f),
                      beta_var);
    out.push_back(f.value());
  }
  return out;
}

}  // namespace vbreg
