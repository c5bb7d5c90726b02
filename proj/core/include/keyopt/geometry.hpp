#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "keyopt/errors.hpp"

namespace keyopt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ColoredPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Constant(0.5);  // rgb in [0,1]
};

// Surface samples of one object. Point order is part of the identity: every
// operation that consumes a cloud is deterministic in this order.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;  // same length as positions; mid-gray if the
                             // source format carried no color

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  ColoredPoint point(std::size_t i) const { return {positions[i], colors[i]}; }
  void push_back(const Vec3& p, const Vec3& c = Vec3::Constant(0.5)) {
    positions.push_back(p);
    colors.push_back(c);
  }
};

struct Aabb {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();

  // Corner enumeration is fixed by bit pattern: bit 0 selects x-max,
  // bit 1 y-max, bit 2 z-max.
  Vec3 corner(int index) const {
    return Vec3((index & 1) ? max_corner.x() : min_corner.x(),
                (index & 2) ? max_corner.y() : min_corner.y(),
                (index & 4) ? max_corner.z() : min_corner.z());
  }
  Vec3 extent() const { return max_corner - min_corner; }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  // composition: (*this) after other
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  // R orthonormal and det +1, both within tol per entry
  bool is_valid(double tol = 1e-9) const;
};

// Keypoint coordinates in the normalized object frame (centroid at the
// origin, diameter 1). Declared here because geometry converts them between
// frames; samplers and optimizers produce them.
struct KeypointSet {
  std::vector<Vec3> coords;

  std::size_t n_k() const { return coords.size(); }

  // n_k >= 3, all coordinates finite, no coincident pair. Samplers and
  // optimizers call this on every set they return.
  void validate(double min_pair_dist = 1e-9) const;
};

struct CloudStats {
  Aabb bounds;
  Vec3 centroid = Vec3::Zero();
  double diameter = 0.0;
};

// A point cloud plus the statistics needed to move between the model frame
// and the normalized frame (p_norm = (p - norm_offset) * norm_scale).
struct ObjectModel {
  std::string id;
  PointCloud cloud;
  Vec3 centroid = Vec3::Zero();
  double diameter = 0.0;    // max pairwise extent, meters
  double norm_scale = 0.0;  // 1 / diameter
  Vec3 norm_offset = Vec3::Zero();

  // Computes stats and fills the normalization fields.
  // Throws ZeroDiameter for degenerate clouds.
  static ObjectModel from_cloud(std::string id, PointCloud cloud);
};

enum class CloudFormat { PlyAscii, ObjVertices };

// ascii PLY ("element vertex N", properties x y z [red green blue]) or OBJ
// where only "v" lines are read. Colors default to mid-gray when absent.
PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);

enum class ShapeKind { Box, Ellipsoid, LBracket };

// Surface samples, uniform by area, deterministic per seed.
// Box extents are full side lengths; ellipsoid extents are semi-axes;
// the L-bracket is an a x b x c prism with the x-max/y-max quadrant removed.
ObjectModel make_synthetic_object(ShapeKind kind, const Vec3& extents,
                                  std::size_t n_points, std::uint64_t rng_seed,
                                  std::string id = "");

// Tight bounds, centroid, and max pairwise distance. Exact O(n^2) diameter
// up to 5000 points; beyond that an iterative farthest-pair sweep (see
// README for the guarantee).
CloudStats object_stats(const PointCloud& cloud);

// p -> R p + t for every position; colors and order preserved.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T);

// Centroid to the origin, diameter to 1.
ObjectModel normalize_object(const ObjectModel& model);

// Normalized frame -> model frame (scale by diameter, add centroid), and its
// exact inverse.
KeypointSet denormalize_keypoints(const KeypointSet& kps, const ObjectModel& model);
KeypointSet normalize_keypoints(const KeypointSet& kps, const ObjectModel& model);

}  // namespace keyopt
