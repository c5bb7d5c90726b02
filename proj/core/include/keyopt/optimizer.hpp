#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "keyopt/loss.hpp"
#include "keyopt/sampling.hpp"

namespace keyopt {

struct OptimizeConfig {
  std::size_t steps = 200;
  double lr = 0.05;             // initial step scale for the line search
  double min_separation = 0.0;  // reported via separation_ok, not enforced
  LossConfig loss;

  void validate() const;
};

struct SearchResult {
  KeypointSet keypoints;
  double score = 0.0;
  std::size_t evaluated = 0;   // objective evaluations
  std::vector<double> trace;   // best score per iteration
  bool separation_ok = true;
  std::vector<int> corners;    // corner indices when the search used them
};

// Gradient descent on keypoint coordinates with a backtracking line search
// (step halved until the loss does not increase, at most 20 halvings; an
// exhausted search keeps the iterate). Coordinates are clamped into
// [-0.75, 0.75] after every trial step. The trace is monotone
// non-increasing; descent stops early once an accepted step moves the set
// by less than 1e-8.
SearchResult optimize_keypoints_direct(const KeypointSet& init,
                                       const std::vector<ObjectModel>& objects,
                                       const OptimizeConfig& cfg);

// Scores every n-subset of the 8 bounding-box corners by the sum over
// keypoint pairs of exact W1 between vote channels, enumerated in
// lexicographic subset order. Returns (argmin, argmax); ties keep the
// earlier subset.
std::pair<SearchResult, SearchResult> exhaustive_corner_search(
    const ObjectModel& model, std::size_t n, VoteScheme scheme);

struct RansacConfig {
  std::size_t iterations = 100;
  RandomKeypointMode mode = RandomKeypointMode::Sphere;
  double region_radius = 0.1;
  double w_sim = 1.0;
  double w_disp = 0.1;
  VoteScheme scheme = VoteScheme::Radial;
  std::vector<Vec3> projections = axis_projections();
  std::uint64_t seed = 0;
};

// Draw-and-score selection: per iteration one candidate set from the random
// sampler, scored by w_sim * (pairwise W1 sum) - w_disp * dispersion_score;
// the minimum score wins, ties keep the earlier candidate.
SearchResult ransac_keypoint_search(const ObjectModel& model, std::size_t n,
                                    const RansacConfig& cfg);

// Same scoring over an externally supplied candidate list.
SearchResult score_candidates(const ObjectModel& model,
                              const std::vector<KeypointSet>& candidates,
                              double w_sim, double w_disp, VoteScheme scheme,
                              const std::vector<Vec3>& projections);

}  // namespace keyopt
