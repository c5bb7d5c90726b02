#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "keyopt/geometry.hpp"
#include "keyopt/votes.hpp"

namespace keyopt {

enum class SimilarityKind { ExactW1, Critic, KL, JS, CE };

const char* similarity_name(SimilarityKind kind);

// Decay of the pairwise dispersion term. With this default a keypoint pair
// separated by one diameter (1.0 in the normalized frame) contributes 0.1.
inline constexpr double kDefaultGamma = 2.302585092994045684;  // ln 10

struct LossConfig {
  double alpha = 0.7;
  double beta = 0.3;
  double gamma = kDefaultGamma;
  SimilarityKind similarity = SimilarityKind::ExactW1;
  VoteScheme scheme = VoteScheme::Radial;
  // scalarization directions for Offset/Vector votes
  std::vector<Vec3> projections = axis_projections();
  // histogram resolution for the divergence similarities
  std::size_t bins = 256;
  // critic-based similarity settings
  std::size_t critic_steps = 200;
  double critic_lr = 1e-3;
  double critic_lambda = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Pair values are stored in lexicographic pair order:
// (0,1), (0,2), ..., (0,n-1), (1,2), ...
struct LossReport {
  double total = 0.0;
  std::vector<double> wass_pairs;  // similarity per pair, mean over objects
  std::vector<double> dis_pairs;   // dispersion per pair
  // per object: sum over pairs of the similarity term
  std::vector<double> per_object_similarity;

  double similarity_sum() const;
  double dispersion_sum() const;
};

std::size_t pair_count(std::size_t n_keypoints);
std::pair<std::size_t, std::size_t> pair_from_index(std::size_t n_keypoints,
                                                    std::size_t pair);

// Sum over unordered pairs of exp(-gamma * distance), plus the per-pair
// values. Every pair value lies in (0, 1].
std::pair<double, std::vector<double>> dispersion_loss(const KeypointSet& k,
                                                       double gamma);

// Scheduled objective: alpha * (mean over objects of the pairwise-similarity
// sum) + beta * (pairwise-dispersion sum). Clouds and keypoints must share
// one frame; pass normalized objects.
LossReport combined_loss(const KeypointSet& k,
                         const std::vector<ObjectModel>& objects,
                         const LossConfig& config);

// (alpha, beta) per epoch: (0.7, 0.3) before the swap epoch, (0.3, 0.7) from
// it onward.
std::pair<double, double> weight_schedule(std::size_t epoch,
                                          std::size_t swap_epoch = 50);

// Analytic gradient of combined_loss with respect to each keypoint.
// Supported for the ExactW1 similarity (sorted-pairing subgradient) and the
// Critic similarity (critic held fixed at the evaluation point).
std::vector<Vec3> loss_gradient(const KeypointSet& k,
                                const std::vector<ObjectModel>& objects,
                                const LossConfig& config);

}  // namespace keyopt
