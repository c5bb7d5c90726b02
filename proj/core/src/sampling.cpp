#include "keyopt/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "keyopt/rng.hpp"

namespace keyopt {

std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t n,
                                     std::size_t seed_index) {
  if (cloud.empty()) fail(ErrorKind::EmptyCloud, "fps on empty cloud");
  if (n < 1 || n > cloud.size())
    fail(ErrorKind::InvalidArgument, "fps: n out of range");
  if (seed_index >= cloud.size())
    fail(ErrorKind::InvalidArgument, "fps: seed index out of range");

  std::vector<std::size_t> selected{seed_index};
  std::vector<double> min_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    min_dist[i] = (cloud.positions[i] - cloud.positions[seed_index]).norm();

  while (selected.size() < n) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (min_dist[i] > best_d) {  // strict '>' keeps the lowest index on ties
        best_d = min_dist[i];
        best = i;
      }
    }
    selected.push_back(best);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      min_dist[i] = std::min(min_dist[i], (cloud.positions[i] - cloud.positions[best]).norm());
  }
  return selected;
}

KeypointSet fps_sample(const PointCloud& cloud, std::size_t n, std::size_t seed_index) {
  KeypointSet kps;
  for (const std::size_t i : fps_indices(cloud, n, seed_index))
    kps.coords.push_back(cloud.positions[i]);
  kps.validate();
  return kps;
}

KeypointSet bbox_corner_keypoints(const ObjectModel& model,
                                  const std::vector<int>& subset) {
  if (subset.size() < 3)
    fail(ErrorKind::InvalidArgument, "fewer than 3 keypoints requested");
  std::set<int> seen;
  for (const int c : subset) {
    if (c < 0 || c > 7)
      fail(ErrorKind::InvalidArgument, "corner index " + std::to_string(c) + " out of 0..7");
    if (!seen.insert(c).second)
      fail(ErrorKind::InvalidArgument, "duplicate corner index " + std::to_string(c));
  }
  const ObjectModel normalized = normalize_object(model);
  const Aabb box = object_stats(normalized.cloud).bounds;
  KeypointSet kps;
  for (const int c : subset) kps.coords.push_back(box.corner(c));
  kps.validate();
  return kps;
}

namespace {

Vec3 uniform_in_ball(Rng& rng, const Vec3& center, double radius) {
  Vec3 dir(rng.normal(), rng.normal(), rng.normal());
  double n = dir.norm();
  while (n < 1e-12) {
    dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    n = dir.norm();
  }
  const double r = radius * std::cbrt(rng.uniform());
  return center + dir / n * r;
}

}  // namespace

KeypointSet random_keypoints(const ObjectModel& model, RandomKeypointMode mode,
                             std::size_t n, double region_radius,
                             std::uint64_t rng_seed) {
  if (n < 3) fail(ErrorKind::InvalidArgument, "fewer than 3 keypoints requested");
  if (mode == RandomKeypointMode::BboxRegion && !(region_radius > 0.0))
    fail(ErrorKind::InvalidArgument, "region_radius must be positive");

  const ObjectModel normalized = normalize_object(model);
  Rng rng(rng_seed);
  KeypointSet kps;
  if (mode == RandomKeypointMode::Sphere) {
    double radius = 0.0;
    for (const auto& p : normalized.cloud.positions)
      radius = std::max(radius, (p - normalized.centroid).norm());
    for (std::size_t i = 0; i < n; ++i)
      kps.coords.push_back(uniform_in_ball(rng, normalized.centroid, radius));
  } else {
    const Aabb box = object_stats(normalized.cloud).bounds;
    for (std::size_t i = 0; i < n; ++i)
      kps.coords.push_back(uniform_in_ball(rng, box.corner(static_cast<int>(i % 8)),
                                           region_radius));
  }
  kps.validate();
  return kps;
}

double dispersion_score(const std::vector<Vec3>& coords) {
  double sum = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j)
      sum += (coords[i] - coords[j]).norm();
  return sum;
}

double min_pairwise_distance(const std::vector<Vec3>& coords) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j)
      best = std::min(best, (coords[i] - coords[j]).norm());
  return best;
}

}  // namespace keyopt
