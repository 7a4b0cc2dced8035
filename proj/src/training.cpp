#include "vbreg/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"
#include "vbreg/seeding.hpp"

namespace vbreg {


double inlier_accuracy(std::span<const CorrespondenceSet> sets, const VBNetConfig& cfg,
                       const ParamStore& params, std::uint64_t seed) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const CorrespondenceSet& set = sets[s];
    const VBNetState st =
        vb_forward_prior(set, geometric_compatibility(set), cfg, params, derive_seed(seed, 0xacc, s));
    const auto& labels = set.labels();
    for (std::size_t i = 0; i < set.size(); ++i) {
      const int predicted = st.label_mean(i, 0) > 0.5 ? 1 : 0;
      correct += predicted == labels[i] ? 1 : 0;
    }
    total += set.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(std::span<const CorrespondenceSet> training,
                  std::span<const CorrespondenceSet> validation, const VBNetConfig& cfg,
                  const TrainOptions& opt) {
  return train(training, validation, cfg, opt, init_vbnet_params(cfg, opt.seed));
}

TrainResult train(std::span<const CorrespondenceSet> training,
                  std::span<const CorrespondenceSet> validation, const VBNetConfig& cfg,
                  const TrainOptions& opt, ParamStore initial) {
  if (training.empty()) throw UsageError("train: empty dataset");
  cfg.validate();
  for (const auto& set : training) {
    if (!set.has_labels()) throw DataError("train: every scene needs labels");
    (void)set.epsilon();
  }
  std::vector<Matrix> betas;
  betas.reserve(training.size());
  for (const auto& set : training) betas.push_back(geometric_compatibility(set));
  const auto scored = validation.empty() ? training : validation;

  TrainResult result{std::move(initial), {}};
  ParamStore& params = result.params;
  std::vector<std::size_t> order(training.size());
  std::mt19937_64 shuffle_rng(derive_seed(opt.seed, 0x5eed, 0));

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t idx : order) {
      const CorrespondenceSet& set = training[idx];
      const LatentNoise noise = LatentNoise::sample(set.size(), cfg, derive_seed(opt.seed, epoch, idx));
      params.zero_grad();
      ad::Tape tape;
      ad::Var loss = negative_elbo(tape, set, set.labels(), betas[idx], cfg, params, noise);
      if (!std::isfinite(loss.scalar())) throw NumericalError("train: loss became non-finite");
      tape.backward(loss);
      tape.collect_param_grads(params);
      adam_step(params, opt.adam);
      stats.elbo += -loss.scalar();
    }
    stats.elbo /= static_cast<double>(training.size());
    // KL and log-likelihood split, measured after the epoch's updates.
    for (std::size_t idx = 0; idx < training.size(); ++idx) {
      const CorrespondenceSet& set = training[idx];
      const auto fwd = vb_forward_posterior(set, set.labels(), betas[idx], cfg, params,
                                            derive_seed(opt.seed, 0xe7a1, idx));
      stats.kl_total += fwd.elbo.kl_total();
      stats.loglik += fwd.elbo.log_likelihood_term;
    }
    stats.kl_total /= static_cast<double>(training.size());
    stats.loglik /= static_cast<double>(training.size());
    stats.val_accuracy = inlier_accuracy(scored, cfg, params, opt.seed);
    result.curve.push_back(stats);
  }
  return result;
}

void write_training_curve(std::ostream& os, std::span<const EpochStats> curve) {
  os << "epoch,elbo,kl_total,loglik,val_accuracy\n";
  for (const auto& s : curve) {
    os << s.epoch << ',' << format_real(s.elbo) << ',' << format_real(s.kl_total) << ','
       << format_real(s.loglik) << ',' << format_real(s.val_accuracy) << '\n';
  }
}

}  // namespace vbreg
