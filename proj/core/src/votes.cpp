#include "keyopt/votes.hpp"

#include <algorithm>
#include <cmath>

namespace keyopt {

const char* vote_scheme_name(VoteScheme scheme) {
  switch (scheme) {
    case VoteScheme::Radial: return "radial";
    case VoteScheme::Offset: return "offset";
    case VoteScheme::Vector: return "vector";
  }
  return "?";
}

VoteField compute_votes(const PointCloud& cloud, const KeypointSet& kps,
                        VoteScheme scheme) {
  if (cloud.empty()) fail(ErrorKind::EmptyCloud, "compute_votes: empty cloud");
  VoteField field;
  field.scheme = scheme;
  field.n_keypoints = kps.n_k();
  field.n_points = cloud.size();
  const std::size_t total = field.n_keypoints * field.n_points;
  if (scheme == VoteScheme::Radial)
    field.scalars.resize(total);
  else
    field.vectors.resize(total);

  for (std::size_t j = 0; j < field.n_keypoints; ++j) {
    const Vec3& k = kps.coords[j];
    for (std::size_t i = 0; i < field.n_points; ++i) {
      const Vec3 diff = k - cloud.positions[i];
      switch (scheme) {
        case VoteScheme::Radial:
          field.scalar(j, i) = diff.norm();
          break;
        case VoteScheme::Offset:
          field.vec(j, i) = diff;
          break;
        case VoteScheme::Vector: {
          const double r = diff.norm();
          if (r < 1e-12)
            fail(ErrorKind::CoincidentPoints,
                 "vector vote undefined: surface point " + std::to_string(i) +
                     " coincides with keypoint " + std::to_string(j));
          field.vec(j, i) = diff / r;
          break;
        }
      }
    }
  }
  return field;
}

std::vector<Vec3> axis_projections() {
  return {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
}

ScalarChannels scalar_channels(const VoteField& field,
                               const std::vector<Vec3>& projections) {
  ScalarChannels out;
  out.n_keypoints = field.n_keypoints;
  if (field.scheme == VoteScheme::Radial) {
    out.n_channels = 1;
    out.data.resize(field.n_keypoints);
    for (std::size_t j = 0; j < field.n_keypoints; ++j) {
      auto& samples = out.data[j];
      samples.resize(field.n_points);
      for (std::size_t i = 0; i < field.n_points; ++i) samples[i] = field.scalar(j, i);
    }
    return out;
  }

  if (projections.empty())
    fail(ErrorKind::InvalidArgument, "vector-valued votes need projections");
  for (const auto& d : projections)
    if (std::abs(d.norm() - 1.0) > 1e-9)
      fail(ErrorKind::InvalidArgument, "projection vector is not unit length");

  out.n_channels = projections.size();
  out.data.resize(out.n_keypoints * out.n_channels);
  for (std::size_t j = 0; j < field.n_keypoints; ++j) {
    for (std::size_t c = 0; c < out.n_channels; ++c) {
      auto& samples = out.data[j * out.n_channels + c];
      samples.resize(field.n_points);
      for (std::size_t i = 0; i < field.n_points; ++i)
        samples[i] = field.vec(j, i).dot(projections[c]);
    }
  }
  return out;
}

Histogram build_histogram(const std::vector<double>& samples, std::size_t bins,
                          double lo, double hi) {
  if (samples.empty()) fail(ErrorKind::InvalidArgument, "histogram of empty sample set");
  if (bins < 1) fail(ErrorKind::InvalidArgument, "histogram needs at least one bin");
  if (!(lo < hi)) fail(ErrorKind::InvalidArgument, "histogram range must satisfy lo < hi");

  Histogram h;
  h.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b)
    h.bin_edges[b] = lo + width * static_cast<double>(b);
  h.bin_edges.back() = hi;  // exact upper edge

  h.raw_counts.assign(bins, 0);
  for (const double x : samples) {
    long b = static_cast<long>(std::floor((x - lo) / width));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++h.raw_counts[static_cast<std::size_t>(b)];
  }
  h.mass.resize(bins);
  const double total = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < bins; ++b)
    h.mass[b] = static_cast<double>(h.raw_counts[b]) / total;
  return h;
}

}  // namespace keyopt
