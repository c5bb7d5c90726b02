#pragma once

#include <cstdint>
#include <vector>

#include "keyopt/geometry.hpp"

namespace keyopt {

// Greedy max-min selection. The first keypoint is the seed point; every next
// one maximizes its minimum distance to the already selected set, ties broken
// by lowest point index.
std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t n,
                                     std::size_t seed_index);
KeypointSet fps_sample(const PointCloud& cloud, std::size_t n, std::size_t seed_index);

// Corners of the normalized-frame bounding box, selected by index in the
// fixed bit-pattern order of Aabb::corner.
KeypointSet bbox_corner_keypoints(const ObjectModel& model,
                                  const std::vector<int>& subset);

enum class RandomKeypointMode { Sphere, BboxRegion };

// Sphere: uniform inside the bounding sphere of the normalized model.
// BboxRegion: uniform in a ball of region_radius around a distinct (cycled)
// bounding-box corner.
KeypointSet random_keypoints(const ObjectModel& model, RandomKeypointMode mode,
                             std::size_t n, double region_radius,
                             std::uint64_t rng_seed);

// Sum of pairwise distances. Accepts arbitrary candidate coordinates,
// including degenerate ones, so searches can score before validating.
double dispersion_score(const std::vector<Vec3>& coords);
inline double dispersion_score(const KeypointSet& kps) {
  return dispersion_score(kps.coords);
}

double min_pairwise_distance(const std::vector<Vec3>& coords);

}  // namespace keyopt
