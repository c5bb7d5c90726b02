#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keyopt/geometry.hpp"
#include "keyopt/rng.hpp"
#include "keyopt/votes.hpp"

namespace keyopt {

// Regression-error stand-in applied to exact votes. The standard deviation
// and spread are in the units of the votes they perturb; the experiment
// harness scales its normalized-unit settings by the object diameter for
// Radial/Offset votes.
struct VoteNoiseModel {
  double gaussian_std = 0.0;
  double outlier_rate = 0.0;   // probability a vote is replaced entirely
  double outlier_spread = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Gaussian jitter per scalar component; outliers replace the vote (Radial:
// uniform in [0, spread]; Offset: components uniform in [-spread, spread];
// Vector: random direction). Vector votes are renormalized afterwards.
VoteField perturb_votes(const VoteField& field, const VoteNoiseModel& noise);

// Scene keypoint estimates from a vote field. Radial: linearized
// least-squares trilateration. Offset: mean of p + v. Vector: least-squares
// point closest to all rays. Degenerate geometry (coplanar points, parallel
// rays) raises an error naming the keypoint.
KeypointSet recover_keypoints(const PointCloud& cloud, const VoteField& field);

struct PoseEstimate {
  RigidTransform transform;
  double residual = 0.0;  // mean keypoint alignment error
};

// Closed-form least-squares rigid alignment (cross-covariance SVD with the
// det +1 reflection guard) mapping model keypoints onto scene keypoints.
PoseEstimate horn_align(const KeypointSet& model_kps,
                        const KeypointSet& scene_kps);

// ADD: mean over model points of the displacement between the two poses.
// ADD-S (symmetric = true): mean nearest-neighbor distance instead.
double add_distance(const ObjectModel& model, const RigidTransform& t_est,
                    const RigidTransform& t_gt, bool symmetric);

// Area under accuracy(threshold) for thresholds in [0, max_frac * diameter],
// normalized to [0, 1]; exact step-function integral.
double add_auc(const std::vector<double>& distances, double diameter,
               double max_frac = 0.1);

// Uniformly random rotation (quaternion method) plus a translation uniform
// in [-range, range] per axis.
RigidTransform random_rigid_transform(Rng& rng, double translation_range);

// Rotation difference in degrees.
double rotation_error_deg(const Mat3& a, const Mat3& b);

// One keypoint selection under test. Siso carries one keypoint set per
// object; Mimo carries a single normalized set shared by every object.
struct KeypointMethod {
  std::string name;
  bool shared = false;                  // Mimo when true
  std::vector<KeypointSet> per_object;  // normalized frame
};

struct ExperimentConfig {
  VoteScheme scheme = VoteScheme::Radial;
  std::vector<double> noise_levels = {0.0};  // gaussian std, normalized units
  double outlier_rate = 0.0;
  double outlier_spread = 0.0;               // normalized units
  std::size_t trials = 10;
  double translation_range = 1.0;            // meters
  bool symmetric = false;
  std::uint64_t seed = 0;
};

struct TrialRecord {
  std::string method;
  std::string object;
  double noise_std = 0.0;
  std::size_t trial = 0;
  bool failed = false;  // keypoint recovery degeneracy
  double add = 0.0;
  double add_ratio = 0.0;  // add / object diameter
  double rot_err_deg = 0.0;
  double trans_err = 0.0;
  double keypoint_err = 0.0;  // mean scene keypoint recovery error
};

struct MethodAggregate {
  std::string method;
  double noise_std = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double mean_add = 0.0;       // over successful trials
  double mean_rot_err_deg = 0.0;
  double accuracy = 0.0;       // fraction with add <= 0.1 * diameter
  double auc = 0.0;            // over add/diameter ratios, threshold 0.1
};

struct ExperimentReport {
  std::vector<TrialRecord> records;
  std::vector<MethodAggregate> aggregates;
};

// Per trial: random ground-truth pose, exact votes in the scene frame,
// perturbation, keypoint recovery, alignment, ADD scoring. Deterministic in
// the seed; every trial has its own derived stream.
ExperimentReport run_experiment(const std::vector<ObjectModel>& objects,
                                const std::vector<KeypointMethod>& methods,
                                const ExperimentConfig& cfg);

}  // namespace keyopt
