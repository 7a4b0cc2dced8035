#include "vbreg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>
#include <Eigen/SVD>
#include "json.hpp"

#include "vbreg/errors.hpp"

namespace vbreg {

std::vector<double> spectral_weights(const Matrix& m, int max_iterations, double tolerance) {
  if (m.rows() != m.cols()) throw UsageError("spectral_weights: matrix must be square");
  const std::size_t k = m.rows();
  if (k == 0) return {};
  std::vector<double> v(k, 1.0 / std::sqrt(static_cast<double>(k)));
  std::vector<double> next(k);
  bool zero = false;
  for (int it = 0; it < max_iterations; ++it) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      const auto row = m.row(i);
      for (std::size_t j = 0; j < k; ++j) acc += row[j] * v[j];
      next[i] = acc;
      norm2 += acc * acc;
    }
    if (norm2 == 0.0) {
      zero = true;
      break;
    }
    const double norm = std::sqrt(norm2);
    double change2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      next[i] /= norm;
      change2 += (next[i] - v[i]) * (next[i] - v[i]);
    }
    v.swap(next);
    if (std::sqrt(change2) < tolerance) break;
  }
  if (zero) return std::vector<double>(k, 1.0);
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  double peak = 0.0;
  for (double& x : v) {
    x = std::abs(sum < 0.0 ? -x : x);
    peak = std::max(peak, x);
  }
  if (peak == 0.0) return std::vector<double>(k, 1.0);
  for (double& x : v) x /= peak;
  return v;
}

RigidTransform weighted_procrustes(std::span<const Point3> source, std::span<const Point3> target,
                                   std::span<const double> weights) {
  const std::size_t n = source.size();
  if (target.size() != n || weights.size() != n) {
    throw UsageError("weighted_procrustes: length mismatch");
  }
  if (n < 3) throw NumericalError("weighted_procrustes: need at least 3 points");
  double wsum = 0.0;
  Eigen::Vector3d xc = Eigen::Vector3d::Zero();
  Eigen::Vector3d yc = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw UsageError("weighted_procrustes: weights must be finite and >= 0");
    }
    wsum += weights[i];
    xc += weights[i] * source[i];
    yc += weights[i] * target[i];
  }
  if (!(wsum > 0.0)) throw NumericalError("weighted_procrustes: all weights are zero");
  xc /= wsum;
  yc /= wsum;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d dx = source[i] - xc;
    const Eigen::Vector3d dy = target[i] - yc;
    h += weights[i] * dx * dy.transpose();
    spread += weights[i] * (dx.squaredNorm() + dy.squaredNorm());
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  // Rank 2 is enough (coplanar points); rank <= 1 means collinear or coincident.
  if (!(s(1) > 1e-12 * std::max(spread, 1e-300))) {
    throw NumericalError("weighted_procrustes: degenerate (collinear or coincident) points");
  }
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = yc - t.rotation * xc;
  return t;
}

RigidTransform weighted_procrustes(const CorrespondenceSet& set,
                                   std::span<const std::size_t> members,
                                   std::span<const double> weights) {
  if (!weights.empty() && weights.size() != members.size()) {
    throw UsageError("weighted_procrustes: weights length != members length");
  }
  std::vector<Point3> src;
  std::vector<Point3> tgt;
  src.reserve(members.size());
  tgt.reserve(members.size());
  for (std::size_t i : members) {
    if (i >= set.size()) throw UsageError("weighted_procrustes: member index out of range");
    src.push_back(set.source(i));
    tgt.push_back(set.target(i));
  }
  if (weights.empty()) {
    const std::vector<double> ones(members.size(), 1.0);
    return weighted_procrustes(src, tgt, ones);
  }
  return weighted_procrustes(src, tgt, weights);
}

double hypothesis_score(const RigidTransform& t, const CorrespondenceSet& set, double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("hypothesis_score: epsilon must be > 0");
  const double e2 = epsilon * epsilon;
  double score = 0.0;
  for (std::size_t j = 0; j < set.size(); ++j) {
    const double r2 = (t.apply(set.source(j)) - set.target(j)).squaredNorm();
    if (r2 < e2) score += 1.0 - r2 / e2;
  }
  return score;
}

HypothesisChoice select_hypothesis(std::span<const Hypothesis> hypotheses,
                                   const CorrespondenceSet& set, double epsilon) {
  if (hypotheses.empty()) throw UsageError("select_hypothesis: no hypotheses");
  std::vector<double> scores(hypotheses.size());
  const auto count = static_cast<std::ptrdiff_t>(hypotheses.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    scores[i] = hypothesis_score(hypotheses[i].transform, set, epsilon);
  }
  HypothesisChoice best{0, scores[0]};
  for (std::size_t i = 1; i < hypotheses.size(); ++i) {
    if (scores[i] > best.score ||
        (scores[i] == best.score && hypotheses[i].seed < hypotheses[best.index].seed)) {
      best = {i, scores[i]};
    }
  }
  return best;
}

Refinement refine(const RigidTransform& start, const CorrespondenceSet& set, double epsilon,
                  std::size_t iterations) {
  Refinement out;
  out.transform = start;
  out.inlier_mask = inlier_labels(set, start, epsilon);
  for (std::size_t round = 0; round < iterations; ++round) {
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < set.size(); ++j)
      if (out.inlier_mask[j]) members.push_back(j);
    if (members.size() < 3) {
      out.degenerate = true;
      return out;
    }
    RigidTransform next;
    try {
      next = weighted_procrustes(set, members);
    } catch (const NumericalError&) {
      out.degenerate = true;
      return out;
    }
    ++out.rounds;
    auto mask = inlier_labels(set, next, epsilon);
    out.transform = next;
    const bool same = mask == out.inlier_mask;
    out.inlier_mask = std::move(mask);
    if (same) break;
  }
  return out;
}

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k) {
  if (k > n) throw UsageError("sample_without_replacement: k > n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

namespace {

RegistrationReport finish(std::string method, const RigidTransform& best, double score,
                          std::size_t hypotheses, const CorrespondenceSet& set, double epsilon,
                          std::size_t refine_iterations) {
  RegistrationReport r;
  r.method = std::move(method);
  r.hypotheses = hypotheses;
  auto ref = refine(best, set, epsilon, refine_iterations);
  r.transform = ref.transform;
  r.inlier_mask = std::move(ref.inlier_mask);
  r.refine_degenerate = ref.degenerate;
  r.score = ref.degenerate ? score : hypothesis_score(r.transform, set, epsilon);
  return r;
}

}  // namespace

RegistrationReport ransac_register(const CorrespondenceSet& set, double epsilon,
                                   const RansacOptions& opt) {
  if (opt.iterations == 0) throw UsageError("ransac_register: iterations must be >= 1");
  if (opt.sample_size < 3) throw UsageError("ransac_register: sample_size must be >= 3");
  if (opt.sample_size > set.size()) throw UsageError("ransac_register: sample_size > N");
  std::mt19937_64 rng(opt.seed);
  RigidTransform best;
  double best_score = -1.0;
  std::size_t fitted = 0;
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const auto sample = sample_without_replacement(rng, set.size(), opt.sample_size);
    RigidTransform t;
    try {
      t = weighted_procrustes(set, sample);
    } catch (const NumericalError&) {
      continue;
    }
    ++fitted;
    const double s = hypothesis_score(t, set, epsilon);
    if (s > best_score) {
      best_score = s;
      best = t;
    }
  }
  return finish("ransac", best, std::max(best_score, 0.0), fitted, set, epsilon,
                opt.refine_iterations);
}

RegistrationReport spectral_matching_register(const CorrespondenceSet& set, const Matrix& beta,
                                              double epsilon, std::size_t top_k,
                                              std::size_t refine_iterations) {
  if (beta.rows() != set.size() || beta.cols() != set.size()) {
    throw UsageError("spectral_matching_register: beta must be N x N");
  }
  if (top_k < 3) throw UsageError("spectral_matching_register: top_k must be >= 3");
  const auto w = spectral_weights(beta);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(top_k, set.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return w[a] > w[b] || (w[a] == w[b] && a < b); });
  order.resize(k);
  std::vector<double> ww;
  for (std::size_t i : order) ww.push_back(w[i]);
  const RigidTransform t = weighted_procrustes(set, order, ww);
  return finish("sm", t, hypothesis_score(t, set, epsilon), 1, set, epsilon, refine_iterations);
}

void attach_errors(RegistrationReport& report, const RigidTransform& gt) {
  report.re = rotation_error(report.transform, gt);
  report.te = translation_error(report.transform, gt);
}

std::string report_to_json(const RegistrationReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  std::vector<double> rot;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(report.transform.rotation(r, c));
  j["rotation"] = rot;
  j["translation"] = {report.transform.translation.x(), report.transform.translation.y(),
                      report.transform.translation.z()};
  j["score"] = report.score;
  j["hypotheses"] = report.hypotheses;
  j["refine_degenerate"] = report.refine_degenerate;
  std::size_t inliers = 0;
  for (auto b : report.inlier_mask) inliers += b ? 1 : 0;
  j["n"] = report.inlier_mask.size();
  j["inliers"] = inliers;
  // Run lengths of alternating values, starting with a run of zeros (possibly empty).
  std::vector<std::size_t> runs;
  std::uint8_t current = 0;
  std::size_t len = 0;
  for (auto b : report.inlier_mask) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(len);
      current = v;
      len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  j["mask_rle"] = runs;
  if (report.re) j["re_deg"] = *report.re * 180.0 / M_PI;
  if (report.te) j["te"] = *report.te;
  if (include_timings) {
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& s : report.timings) t[s.stage] = s.ms;
    j["timings_ms"] = t;
  }
  return j.dump() + "\n";
}

}  // namespace vbreg
