#include "keyopt/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "keyopt/distances.hpp"
#include "keyopt/errors.hpp"
#include "keyopt/rng.hpp"

namespace keyopt {
namespace {

constexpr double kBound = 0.75;
constexpr int kMaxHalvings = 20;
constexpr double kStopStep = 1e-8;

Vec3 clamped(const Vec3& p) {
  return Vec3(std::clamp(p.x(), -kBound, kBound),
              std::clamp(p.y(), -kBound, kBound),
              std::clamp(p.z(), -kBound, kBound));
}

// Sum over keypoint pairs of exact W1 between scalarized vote channels,
// channel-averaged. Cloud and keypoints share the normalized frame.
double pairwise_w1_sum(const PointCloud& cloud, const KeypointSet& k,
                       VoteScheme scheme, const std::vector<Vec3>& projections) {
  const VoteField field = compute_votes(cloud, k, scheme);
  const ScalarChannels ch = scalar_channels(field, projections);
  double total = 0.0;
  for (std::size_t i = 0; i < k.n_k(); ++i)
    for (std::size_t j = i + 1; j < k.n_k(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < ch.n_channels; ++c)
        acc += wasserstein1_exact(ch.channel(i, c), ch.channel(j, c));
      total += acc / static_cast<double>(ch.n_channels);
    }
  return total;
}

}  // namespace

void OptimizeConfig::validate() const {
  if (!(lr > 0.0)) fail(ErrorKind::ConfigInvalid, "step scale must be positive");
  if (min_separation < 0.0)
    fail(ErrorKind::ConfigInvalid, "minimum separation must be >= 0");
  loss.validate();
  if (loss.similarity != SimilarityKind::ExactW1 &&
      loss.similarity != SimilarityKind::Critic)
    fail(ErrorKind::ConfigInvalid,
         "direct descent needs a differentiable similarity (exact W1 or critic)");
}

SearchResult optimize_keypoints_direct(const KeypointSet& init,
                                       const std::vector<ObjectModel>& objects,
                                       const OptimizeConfig& cfg) {
  cfg.validate();
  init.validate();

  SearchResult result;
  result.keypoints = init;
  double current = combined_loss(init, objects, cfg.loss).total;
  result.evaluated = 1;
  result.trace.push_back(current);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::vector<Vec3> grad =
        loss_gradient(result.keypoints, objects, cfg.loss);

    double scale = cfg.lr;
    bool accepted = false;
    KeypointSet candidate = result.keypoints;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      for (std::size_t j = 0; j < candidate.n_k(); ++j)
        candidate.coords[j] =
            clamped(result.keypoints.coords[j] - scale * grad[j]);
      const double trial = combined_loss(candidate, objects, cfg.loss).total;
      ++result.evaluated;
      if (trial <= current) {
        double moved2 = 0.0;
        for (std::size_t j = 0; j < candidate.n_k(); ++j)
          moved2 +=
              (candidate.coords[j] - result.keypoints.coords[j]).squaredNorm();
        result.keypoints = candidate;
        current = trial;
        accepted = true;
        result.trace.push_back(current);
        if (std::sqrt(moved2) < kStopStep) {
          result.score = current;
          result.separation_ok =
              min_pairwise_distance(result.keypoints.coords) >=
              cfg.min_separation;
          return result;
        }
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) result.trace.push_back(current);  // zero step, keep going
  }

  result.score = current;
  result.separation_ok =
      min_pairwise_distance(result.keypoints.coords) >= cfg.min_separation;
  return result;
}

std::pair<SearchResult, SearchResult> exhaustive_corner_search(
    const ObjectModel& model, std::size_t n, VoteScheme scheme) {
  if (n < 3 || n > 8)
    fail(ErrorKind::InvalidArgument,
         "corner subset size must lie in [3, 8]");
  const ObjectModel normalized = normalize_object(model);
  const std::vector<Vec3> projections = axis_projections();

  SearchResult best, worst;
  bool have = false;

  // lexicographic n-subsets of {0..7}
  std::vector<int> subset(n);
  for (std::size_t i = 0; i < n; ++i) subset[i] = static_cast<int>(i);
  std::size_t evaluated = 0;
  while (true) {
    const KeypointSet k = bbox_corner_keypoints(normalized, subset);
    const double score =
        pairwise_w1_sum(normalized.cloud, k, scheme, projections);
    ++evaluated;
    if (!have || score < best.score) {
      best.keypoints = k;
      best.score = score;
      best.corners = subset;
    }
    if (!have || score > worst.score) {
      worst.keypoints = k;
      worst.score = score;
      worst.corners = subset;
    }
    have = true;
    best.trace.push_back(best.score);
    worst.trace.push_back(worst.score);

    // advance to the next combination
    int pos = static_cast<int>(n) - 1;
    while (pos >= 0 && subset[pos] == 8 - static_cast<int>(n) + pos) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (std::size_t t = pos + 1; t < n; ++t) subset[t] = subset[t - 1] + 1;
  }
  best.evaluated = evaluated;
  worst.evaluated = evaluated;
  return {best, worst};
}

SearchResult score_candidates(const ObjectModel& model,
                              const std::vector<KeypointSet>& candidates,
                              double w_sim, double w_disp, VoteScheme scheme,
                              const std::vector<Vec3>& projections) {
  if (candidates.empty())
    fail(ErrorKind::InvalidArgument, "candidate list must be non-empty");
  const ObjectModel normalized = normalize_object(model);

  SearchResult result;
  bool have = false;
  for (const KeypointSet& k : candidates) {
    const double score =
        w_sim * pairwise_w1_sum(normalized.cloud, k, scheme, projections) -
        w_disp * dispersion_score(k);
    ++result.evaluated;
    if (!have || score < result.score) {
      result.keypoints = k;
      result.score = score;
      have = true;
    }
    result.trace.push_back(result.score);
  }
  return result;
}

SearchResult ransac_keypoint_search(const ObjectModel& model, std::size_t n,
                                    const RansacConfig& cfg) {
  if (cfg.iterations < 1)
    fail(ErrorKind::InvalidArgument, "search needs >= 1 iteration");
  std::vector<KeypointSet> candidates;
  candidates.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it)
    candidates.push_back(random_keypoints(model, cfg.mode, n, cfg.region_radius,
                                          Rng::derive(cfg.seed, it)));
  return score_candidates(model, candidates, cfg.w_sim, cfg.w_disp, cfg.scheme,
                          cfg.projections);
}

}  // namespace keyopt
