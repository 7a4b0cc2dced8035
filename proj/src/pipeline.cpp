#include "vbreg/pipeline.hpp"

#include <chrono>

#include "vbreg/errors.hpp"

namespace vbreg {

void PipelineConfig::validate() const {
  if (!(seeds.ratio > 0.0 && seeds.ratio <= 1.0)) throw UsageError("seed ratio must be in (0, 1]");
  if (seeds.nms_radius < 0.0) throw UsageError("nms_radius must be >= 0");
  if (kappa < 3) throw UsageError("kappa must be >= 3");
  if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
  if (!(z >= 0.0)) throw UsageError("z must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), last_(Clock::now()) {}
  void mark(const char* stage) {
    const auto now = Clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  Clock::time_point last_;
};

RegistrationReport search_and_fit(const CorrespondenceSet& set, std::span<const double> confidences,
                                  std::span<const Matrix> voters, const Matrix& beta,
                                  const PipelineConfig& cfg, StageClock& clock,
                                  std::vector<StageTiming>& timings) {
  const double eps = set.epsilon();
  const std::size_t kappa = std::min(cfg.kappa, set.size());
  if (kappa < 3) throw DataError("register: need at least 3 correspondences");

  const SeedSet seeds = select_seeds(set, confidences, cfg.seeds);
  clock.mark("seeds");
  VoterCompatibility vc;
  if (voters.empty()) {
    vc.push_back(beta);
  } else {
    vc = voter_compatibility(voters, beta, cfg.sigma);
  }
  clock.mark("compatibility");
  const auto votes = coarse_vote(vc, seeds, kappa);
  clock.mark("coarse_vote");
  const auto fine = fine_cluster(votes, set.size(), kappa, cfg.z);
  clock.mark("fine_cluster");

  const Matrix& last = vc.back();
  std::vector<Hypothesis> all(seeds.size());
  std::vector<std::uint8_t> ok(seeds.size(), 0);
  const auto count = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto& members = fine.inliers.members[s];
    Matrix sub(members.size(), members.size());
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = 0; b < members.size(); ++b) sub(a, b) = last(members[a], members[b]);
    const auto w = spectral_weights(sub);
    try {
      all[s] = {weighted_procrustes(set, members, w), seeds.indices[s], members};
      ok[s] = 1;
    } catch (const NumericalError&) {
    }
  }
  std::vector<Hypothesis> hyps;
  for (std::size_t s = 0; s < all.size(); ++s)
    if (ok[s]) hyps.push_back(std::move(all[s]));
  if (hyps.empty()) throw NumericalError("register: every hypothesis was degenerate");
  clock.mark("estimate");

  const auto choice = select_hypothesis(hyps, set, eps);
  clock.mark("select");
  auto ref = refine(hyps[choice.index].transform, set, eps, cfg.refine_iterations);
  clock.mark("refine");

  RegistrationReport r;
  r.method = "vbreg";
  r.transform = ref.transform;
  r.inlier_mask = std::move(ref.inlier_mask);
  r.refine_degenerate = ref.degenerate;
  r.hypotheses = hyps.size();
  r.score = hypothesis_score(r.transform, set, eps);
  r.timings = std::move(timings);
  return r;
}

}  // namespace

RegistrationReport register_scene(const CorrespondenceSet& set, const VBNetConfig& net,
                                  const ParamStore& params, const PipelineConfig& cfg) {
  cfg.validate();
  set.epsilon();
  std::vector<StageTiming> timings;
  StageClock clock(timings);
  const Matrix beta = geometric_compatibility(set);
  clock.mark("beta");
  const VBNetState state = vb_forward_prior(set, beta, net, params, cfg.noise_seed);
  const auto conf = inlier_confidence(state);
  const auto voters = extract_voter_features(state);
  clock.mark("network");
  return search_and_fit(set, conf, voters, beta, cfg, clock, timings);
}

RegistrationReport register_scene(const CorrespondenceSet& set,
                                  std::span<const double> confidences, const PipelineConfig& cfg) {
  cfg.validate();
  set.epsilon();
  std::vector<StageTiming> timings;
  StageClock clock(timings);
  const Matrix beta = geometric_compatibility(set);
  clock.mark("beta");
  return search_and_fit(set, confidences, {}, beta, cfg, clock, timings);
}

}  // namespace vbreg
