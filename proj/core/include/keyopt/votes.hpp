#pragma once

#include <vector>

#include "keyopt/geometry.hpp"

namespace keyopt {

// The regression quantity each surface point carries toward a keypoint:
// a scalar distance, a displacement, or a unit direction.
enum class VoteScheme { Radial, Offset, Vector };

const char* vote_scheme_name(VoteScheme scheme);

// Per-keypoint, per-surface-point vote table, laid out keypoint-major.
struct VoteField {
  VoteScheme scheme = VoteScheme::Radial;
  std::size_t n_keypoints = 0;
  std::size_t n_points = 0;
  std::vector<double> scalars;  // Radial, size n_keypoints * n_points
  std::vector<Vec3> vectors;    // Offset/Vector, same layout

  double scalar(std::size_t j, std::size_t i) const {
    return scalars[j * n_points + i];
  }
  const Vec3& vec(std::size_t j, std::size_t i) const {
    return vectors[j * n_points + i];
  }
  double& scalar(std::size_t j, std::size_t i) { return scalars[j * n_points + i]; }
  Vec3& vec(std::size_t j, std::size_t i) { return vectors[j * n_points + i]; }
};

// Binned empirical distribution of scalarized votes.
struct Histogram {
  std::vector<double> bin_edges;   // length B+1, strictly increasing
  std::vector<double> mass;        // length B, sums to 1
  std::vector<long> raw_counts;    // length B

  std::size_t bins() const { return mass.size(); }
};

// Radial: ||k - p||. Offset: k - p. Vector: (k - p) / ||k - p||, which is
// undefined when a surface point coincides with a keypoint.
VoteField compute_votes(const PointCloud& cloud, const KeypointSet& kps,
                        VoteScheme scheme);

// 1-D sample sets feeding the distribution machinery. Radial votes are their
// own single channel; vector-valued votes get one channel per projection
// direction (sample = v . d), and consumers average distances over channels.
struct ScalarChannels {
  std::size_t n_keypoints = 0;
  std::size_t n_channels = 0;
  std::vector<std::vector<double>> data;  // data[j * n_channels + c]

  const std::vector<double>& channel(std::size_t j, std::size_t c) const {
    return data[j * n_channels + c];
  }
};

ScalarChannels scalar_channels(const VoteField& field,
                               const std::vector<Vec3>& projections);

// Default projection set for vector-valued votes: the coordinate axes.
std::vector<Vec3> axis_projections();

// Half-open bins [e_b, e_{b+1}), last bin closed; out-of-range samples are
// clamped into the end bins.
Histogram build_histogram(const std::vector<double>& samples, std::size_t bins,
                          double lo, double hi);

}  // namespace keyopt
