#include "keyopt/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "keyopt/rng.hpp"

namespace keyopt {

bool RigidTransform::is_valid(double tol) const {
  const Mat3 gram = rotation.transpose() * rotation;
  if (!((gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol)) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

void KeypointSet::validate(double min_pair_dist) const {
  if (coords.size() < 3)
    fail(ErrorKind::InvalidArgument,
         "fewer than 3 keypoints (" + std::to_string(coords.size()) + ")");
  for (const auto& k : coords)
    if (!k.allFinite())
      fail(ErrorKind::NonFiniteValue, "non-finite keypoint coordinate");
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j)
      if ((coords[i] - coords[j]).norm() <= min_pair_dist)
        fail(ErrorKind::CoincidentPoints,
             "keypoints " + std::to_string(i) + " and " + std::to_string(j) +
                 " coincide");
}

ObjectModel ObjectModel::from_cloud(std::string id, PointCloud cloud) {
  if (cloud.empty()) fail(ErrorKind::EmptyCloud, "empty cloud for object '" + id + "'");
  const CloudStats stats = object_stats(cloud);
  if (!(stats.diameter > 0.0))
    fail(ErrorKind::ZeroDiameter, "zero diameter for object '" + id + "'");
  ObjectModel model;
  model.id = std::move(id);
  model.cloud = std::move(cloud);
  model.centroid = stats.centroid;
  model.diameter = stats.diameter;
  model.norm_scale = 1.0 / stats.diameter;
  model.norm_offset = stats.centroid;
  return model;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::MalformedHeader, context + ": bad number '" + tok + "'");
  }
}

PointCloud load_ply_ascii(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || split_ws(line) != std::vector<std::string>{"ply"})
    fail(ErrorKind::MalformedHeader, name + ": missing 'ply' magic");

  long vertex_count = -1;
  bool in_vertex_element = false;
  bool ascii = false;
  std::vector<std::string> vertex_props;
  std::vector<bool> prop_is_uchar;
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii")
        fail(ErrorKind::MalformedHeader, name + ": only ascii PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail(ErrorKind::MalformedHeader, name + ": bad element line");
      in_vertex_element = (tok[1] == "vertex");
      if (in_vertex_element) vertex_count = std::lround(parse_double(tok[2], name));
    } else if (tok[0] == "property" && in_vertex_element) {
      if (tok.size() < 3) fail(ErrorKind::MalformedHeader, name + ": bad property line");
      if (tok[1] == "list")
        fail(ErrorKind::MalformedHeader, name + ": list property on vertex element");
      vertex_props.push_back(tok.back());
      prop_is_uchar.push_back(tok[1] == "uchar" || tok[1] == "uint8");
    } else if (tok[0] == "end_header") {
      break;
    }
  }
  if (!ascii || vertex_count < 0)
    fail(ErrorKind::MalformedHeader, name + ": incomplete header");
  if (vertex_count == 0) fail(ErrorKind::EmptyCloud, name + ": empty cloud");

  auto prop_index = [&](const char* p) -> int {
    const auto it = std::find(vertex_props.begin(), vertex_props.end(), p);
    return it == vertex_props.end() ? -1 : static_cast<int>(it - vertex_props.begin());
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (ix < 0 || iy < 0 || iz < 0)
    fail(ErrorKind::MalformedHeader, name + ": vertex element lacks x/y/z");
  const int ir = prop_index("red"), ig = prop_index("green"), ib = prop_index("blue");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.positions.reserve(static_cast<std::size_t>(vertex_count));
  for (long v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line))
      fail(ErrorKind::MalformedHeader, name + ": truncated vertex data");
    const auto tok = split_ws(line);
    if (tok.size() < vertex_props.size())
      fail(ErrorKind::MalformedHeader, name + ": short vertex line");
    const Vec3 p(parse_double(tok[ix], name), parse_double(tok[iy], name),
                 parse_double(tok[iz], name));
    Vec3 c = Vec3::Constant(0.5);
    if (has_color) {
      c = Vec3(parse_double(tok[ir], name), parse_double(tok[ig], name),
               parse_double(tok[ib], name));
      if (prop_is_uchar[ir]) c /= 255.0;
    }
    cloud.push_back(p, c);
  }
  return cloud;
}

PointCloud load_obj_vertices(std::istream& in, const std::string& name) {
  PointCloud cloud;
  std::string line;
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] != "v") continue;
    if (tok.size() < 4) fail(ErrorKind::MalformedHeader, name + ": short 'v' line");
    cloud.push_back(Vec3(parse_double(tok[1], name), parse_double(tok[2], name),
                         parse_double(tok[3], name)));
  }
  if (cloud.empty()) fail(ErrorKind::EmptyCloud, name + ": no vertices");
  return cloud;
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::FileUnreadable, "cannot open '" + path.string() + "'");
  switch (format) {
    case CloudFormat::PlyAscii:
      return load_ply_ascii(in, path.filename().string());
    case CloudFormat::ObjVertices:
      return load_obj_vertices(in, path.filename().string());
  }
  fail(ErrorKind::InvalidArgument, "unknown cloud format");
}

namespace {

Vec3 unit_sphere_dir(Rng& rng) {
  // normal deviates give an isotropic direction
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  double n = v.norm();
  while (n < 1e-12) {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
    n = v.norm();
  }
  return v / n;
}

PointCloud sample_box(const Vec3& e, std::size_t n, Rng& rng) {
  // face order: -x,+x,-y,+y,-z,+z; areas weight the pick
  const std::array<double, 6> area = {e.y() * e.z(), e.y() * e.z(), e.x() * e.z(),
                                      e.x() * e.z(), e.x() * e.y(), e.x() * e.y()};
  std::array<double, 6> cum{};
  double total = 0.0;
  for (int f = 0; f < 6; ++f) {
    total += area[f];
    cum[f] = total;
  }
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    int f = 0;
    while (f < 5 && pick > cum[f]) ++f;
    const double u = rng.uniform(), v = rng.uniform();
    const Vec3 h = e / 2.0;
    Vec3 p;
    switch (f) {
      case 0: p = Vec3(-h.x(), (u - 0.5) * e.y(), (v - 0.5) * e.z()); break;
      case 1: p = Vec3(+h.x(), (u - 0.5) * e.y(), (v - 0.5) * e.z()); break;
      case 2: p = Vec3((u - 0.5) * e.x(), -h.y(), (v - 0.5) * e.z()); break;
      case 3: p = Vec3((u - 0.5) * e.x(), +h.y(), (v - 0.5) * e.z()); break;
      case 4: p = Vec3((u - 0.5) * e.x(), (v - 0.5) * e.y(), -h.z()); break;
      default: p = Vec3((u - 0.5) * e.x(), (v - 0.5) * e.y(), +h.z()); break;
    }
    cloud.push_back(p);
  }
  return cloud;
}

PointCloud sample_ellipsoid(const Vec3& semi, std::size_t n, Rng& rng) {
  // area-uniform via rejection against the surface element density
  const double a = semi.x(), b = semi.y(), c = semi.z();
  const double m_max = std::max({a * b, b * c, a * c});
  PointCloud cloud;
  while (cloud.size() < n) {
    const Vec3 u = unit_sphere_dir(rng);
    const double m = std::sqrt(b * b * c * c * u.x() * u.x() +
                               a * a * c * c * u.y() * u.y() +
                               a * a * b * b * u.z() * u.z());
    if (rng.uniform() * m_max <= m)
      cloud.push_back(Vec3(a * u.x(), b * u.y(), c * u.z()));
  }
  return cloud;
}

PointCloud sample_lbracket(const Vec3& e, std::size_t n, Rng& rng) {
  // prism over an L outline: [0,a]x[0,b] minus the x-max/y-max quadrant,
  // extruded to height c, then shifted to straddle the origin
  const double a = e.x(), b = e.y(), c = e.z();
  struct Rect {
    Vec3 origin, du, dv;  // point = origin + u*du + v*dv
    double area;
  };
  std::vector<Rect> faces;
  auto add = [&](const Vec3& o, const Vec3& du, const Vec3& dv) {
    faces.push_back({o, du, dv, du.norm() * dv.norm()});
  };
  // top and bottom L faces as two rectangles each
  for (const double z : {0.0, c}) {
    add(Vec3(0, 0, z), Vec3(a, 0, 0), Vec3(0, b / 2, 0));
    add(Vec3(0, b / 2, z), Vec3(a / 2, 0, 0), Vec3(0, b / 2, 0));
  }
  // outline walls
  add(Vec3(0, 0, 0), Vec3(a, 0, 0), Vec3(0, 0, c));          // y = 0
  add(Vec3(a, 0, 0), Vec3(0, b / 2, 0), Vec3(0, 0, c));      // x = a
  add(Vec3(a / 2, b / 2, 0), Vec3(a / 2, 0, 0), Vec3(0, 0, c));  // inner y = b/2
  add(Vec3(a / 2, b / 2, 0), Vec3(0, b / 2, 0), Vec3(0, 0, c));  // inner x = a/2
  add(Vec3(0, b, 0), Vec3(a / 2, 0, 0), Vec3(0, 0, c));      // y = b
  add(Vec3(0, 0, 0), Vec3(0, b, 0), Vec3(0, 0, c));          // x = 0

  double total = 0.0;
  std::vector<double> cum;
  for (const auto& f : faces) {
    total += f.area;
    cum.push_back(total);
  }
  const Vec3 shift(-a / 2, -b / 2, -c / 2);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    std::size_t f = 0;
    while (f + 1 < faces.size() && pick > cum[f]) ++f;
    const double u = rng.uniform(), v = rng.uniform();
    cloud.push_back(faces[f].origin + u * faces[f].du + v * faces[f].dv + shift);
  }
  return cloud;
}

const char* shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Ellipsoid: return "ellipsoid";
    case ShapeKind::LBracket: return "lbracket";
  }
  return "?";
}

}  // namespace

ObjectModel make_synthetic_object(ShapeKind kind, const Vec3& extents,
                                  std::size_t n_points, std::uint64_t rng_seed,
                                  std::string id) {
  if (!(extents.minCoeff() > 0.0))
    fail(ErrorKind::InvalidArgument, "non-positive extent");
  if (n_points < 4) fail(ErrorKind::InvalidArgument, "n_points < 4");
  Rng rng(rng_seed);
  PointCloud cloud;
  switch (kind) {
    case ShapeKind::Box: cloud = sample_box(extents, n_points, rng); break;
    case ShapeKind::Ellipsoid: cloud = sample_ellipsoid(extents, n_points, rng); break;
    case ShapeKind::LBracket: cloud = sample_lbracket(extents, n_points, rng); break;
  }
  if (id.empty())
    id = std::string(shape_name(kind)) + "-" + std::to_string(n_points) + "-s" +
         std::to_string(rng_seed);
  return ObjectModel::from_cloud(std::move(id), std::move(cloud));
}

namespace {

// Farthest-pair sweep for big clouds: repeatedly hop to the farthest point
// from the current anchor set, seeded with the axis-extreme points.
double approx_diameter(const std::vector<Vec3>& pts) {
  std::vector<std::size_t> anchors;
  for (int axis = 0; axis < 3; ++axis) {
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i][axis] < pts[lo][axis]) lo = i;
      if (pts[i][axis] > pts[hi][axis]) hi = i;
    }
    anchors.push_back(lo);
    anchors.push_back(hi);
  }
  double best = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<std::size_t> next;
    for (const std::size_t a : anchors) {
      std::size_t far = a;
      double far_d = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (pts[i] - pts[a]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      best = std::max(best, std::sqrt(far_d));
      next.push_back(far);
    }
    anchors = next;
  }
  return best;
}

}  // namespace

CloudStats object_stats(const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorKind::EmptyCloud, "object_stats: empty cloud");
  CloudStats stats;
  stats.bounds.min_corner = stats.bounds.max_corner = cloud.positions[0];
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.positions) {
    stats.bounds.min_corner = stats.bounds.min_corner.cwiseMin(p);
    stats.bounds.max_corner = stats.bounds.max_corner.cwiseMax(p);
    sum += p;
  }
  stats.centroid = sum / static_cast<double>(cloud.size());

  const auto& pts = cloud.positions;
  if (pts.size() <= 5000) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        best = std::max(best, (pts[i] - pts[j]).squaredNorm());
    stats.diameter = std::sqrt(best);
  } else {
    stats.diameter = approx_diameter(pts);
  }
  return stats;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  if (!T.is_valid()) fail(ErrorKind::InvalidRotation, "invalid rotation matrix");
  PointCloud out;
  out.positions.reserve(cloud.size());
  out.colors = cloud.colors;
  for (const auto& p : cloud.positions) out.positions.push_back(T.apply(p));
  return out;
}

ObjectModel normalize_object(const ObjectModel& model) {
  if (!(model.diameter > 0.0)) fail(ErrorKind::ZeroDiameter, "zero diameter");
  PointCloud cloud;
  cloud.colors = model.cloud.colors;
  cloud.positions.reserve(model.cloud.size());
  for (const auto& p : model.cloud.positions)
    cloud.positions.push_back((p - model.centroid) * model.norm_scale);
  return ObjectModel::from_cloud(model.id, std::move(cloud));
}

KeypointSet denormalize_keypoints(const KeypointSet& kps, const ObjectModel& model) {
  KeypointSet out;
  out.coords.reserve(kps.coords.size());
  for (const auto& k : kps.coords)
    out.coords.push_back(k * model.diameter + model.centroid);
  return out;
}

KeypointSet normalize_keypoints(const KeypointSet& kps, const ObjectModel& model) {
  KeypointSet out;
  out.coords.reserve(kps.coords.size());
  for (const auto& k : kps.coords)
    out.coords.push_back((k - model.centroid) * model.norm_scale);
  return out;
}

}  // namespace keyopt
