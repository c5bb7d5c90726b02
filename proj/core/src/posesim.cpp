#include "keyopt/posesim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "keyopt/errors.hpp"

namespace keyopt {
namespace {

Vec3 random_unit(Rng& rng) {
  while (true) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Vec3 recover_radial(const PointCloud& cloud, const VoteField& field,
                    std::size_t j) {
  const std::size_t n = cloud.size();
  if (n < 4)
    fail(ErrorKind::DegenerateGeometry,
         "radial recovery needs at least 4 surface points");
  // sphere differences against point 0 give a linear system in the keypoint
  const Vec3& p0 = cloud.positions[0];
  const double r0 = field.scalar(j, 0);
  Eigen::MatrixXd a(n - 1, 3);
  Eigen::VectorXd b(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const Vec3& pi = cloud.positions[i];
    const double ri = field.scalar(j, i);
    a.row(i - 1) = 2.0 * (pi - p0).transpose();
    b(i - 1) = r0 * r0 - ri * ri + pi.squaredNorm() - p0.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(2) < 1e-10 * sv(0))
    fail(ErrorKind::DegenerateGeometry,
         "surface points are coplanar; keypoint " + std::to_string(j) +
             " is not recoverable from radial votes");
  return svd.solve(b);
}

Vec3 recover_offset(const PointCloud& cloud, const VoteField& field,
                    std::size_t j) {
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < cloud.size(); ++i)
    acc += cloud.positions[i] + field.vec(j, i);
  return acc / static_cast<double>(cloud.size());
}

Vec3 recover_vector(const PointCloud& cloud, const VoteField& field,
                    std::size_t j) {
  if (cloud.size() < 2)
    fail(ErrorKind::DegenerateGeometry,
         "ray intersection needs at least 2 surface points");
  Mat3 m = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& d = field.vec(j, i);
    const Mat3 proj = Mat3::Identity() - d * d.transpose();
    m += proj;
    rhs += proj * cloud.positions[i];
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  if (eig.eigenvalues()(0) < 1e-10 * eig.eigenvalues()(2))
    fail(ErrorKind::DegenerateGeometry,
         "all rays are parallel; keypoint " + std::to_string(j) +
             " is not recoverable from vector votes");
  return m.ldlt().solve(rhs);
}

}  // namespace

void VoteNoiseModel::validate() const {
  if (gaussian_std < 0.0)
    fail(ErrorKind::InvalidArgument, "noise std must be >= 0");
  if (outlier_rate < 0.0 || outlier_rate > 1.0)
    fail(ErrorKind::InvalidArgument, "outlier rate must lie in [0, 1]");
  if (outlier_spread < 0.0)
    fail(ErrorKind::InvalidArgument, "outlier spread must be >= 0");
}

VoteField perturb_votes(const VoteField& field, const VoteNoiseModel& noise) {
  noise.validate();
  VoteField out = field;
  if (noise.gaussian_std == 0.0 && noise.outlier_rate == 0.0) return out;
  Rng rng(noise.seed);
  for (std::size_t j = 0; j < field.n_keypoints; ++j)
    for (std::size_t i = 0; i < field.n_points; ++i) {
      const bool outlier =
          noise.outlier_rate > 0.0 && rng.uniform() < noise.outlier_rate;
      switch (field.scheme) {
        case VoteScheme::Radial: {
          double& v = out.scalar(j, i);
          if (outlier)
            v = rng.uniform(0.0, noise.outlier_spread);
          else
            v = std::max(0.0, v + rng.normal(0.0, noise.gaussian_std));
          break;
        }
        case VoteScheme::Offset: {
          Vec3& v = out.vec(j, i);
          if (outlier)
            v = Vec3(rng.uniform(-noise.outlier_spread, noise.outlier_spread),
                     rng.uniform(-noise.outlier_spread, noise.outlier_spread),
                     rng.uniform(-noise.outlier_spread, noise.outlier_spread));
          else
            v += Vec3(rng.normal(0.0, noise.gaussian_std),
                      rng.normal(0.0, noise.gaussian_std),
                      rng.normal(0.0, noise.gaussian_std));
          break;
        }
        case VoteScheme::Vector: {
          Vec3& v = out.vec(j, i);
          if (outlier) {
            v = random_unit(rng);
          } else {
            const Vec3 jittered =
                v + Vec3(rng.normal(0.0, noise.gaussian_std),
                         rng.normal(0.0, noise.gaussian_std),
                         rng.normal(0.0, noise.gaussian_std));
            const double n = jittered.norm();
            if (n > 1e-12) v = jittered / n;  // else keep the original
          }
          break;
        }
      }
    }
  return out;
}

KeypointSet recover_keypoints(const PointCloud& cloud, const VoteField& field) {
  if (cloud.size() != field.n_points)
    fail(ErrorKind::InvalidArgument,
         "vote field does not match the cloud size");
  KeypointSet out;
  out.coords.reserve(field.n_keypoints);
  for (std::size_t j = 0; j < field.n_keypoints; ++j) {
    switch (field.scheme) {
      case VoteScheme::Radial:
        out.coords.push_back(recover_radial(cloud, field, j));
        break;
      case VoteScheme::Offset:
        out.coords.push_back(recover_offset(cloud, field, j));
        break;
      case VoteScheme::Vector:
        out.coords.push_back(recover_vector(cloud, field, j));
        break;
    }
  }
  return out;
}

PoseEstimate horn_align(const KeypointSet& model_kps,
                        const KeypointSet& scene_kps) {
  const std::size_t n = model_kps.n_k();
  if (n != scene_kps.n_k() || n < 3)
    fail(ErrorKind::InvalidArgument,
         "alignment needs two equal keypoint sets of size >= 3");

  Vec3 cm = Vec3::Zero(), cs = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cm += model_kps.coords[i];
    cs += scene_kps.coords[i];
  }
  cm /= static_cast<double>(n);
  cs /= static_cast<double>(n);

  Mat3 cross = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 m = model_kps.coords[i] - cm;
    const Vec3 s = scene_kps.coords[i] - cs;
    cross += s * m.transpose();
    spread += m * m.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> shape(spread);
  if (shape.eigenvalues()(1) < 1e-10 * shape.eigenvalues()(2))
    fail(ErrorKind::DegenerateGeometry,
         "model keypoints are collinear; rotation is not determined");

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0
                ? -1.0
                : 1.0;
  PoseEstimate est;
  est.transform.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  est.transform.translation = cs - est.transform.rotation * cm;

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += (est.transform.apply(model_kps.coords[i]) - scene_kps.coords[i])
               .norm();
  est.residual = acc / static_cast<double>(n);
  return est;
}

double add_distance(const ObjectModel& model, const RigidTransform& t_est,
                    const RigidTransform& t_gt, bool symmetric) {
  const std::size_t n = model.cloud.size();
  if (n == 0) fail(ErrorKind::EmptyCloud, "distance metric needs model points");
  if (!symmetric) {
    double acc = 0.0;
    for (const Vec3& p : model.cloud.positions)
      acc += (t_est.apply(p) - t_gt.apply(p)).norm();
    return acc / static_cast<double>(n);
  }
  std::vector<Vec3> gt(n);
  for (std::size_t i = 0; i < n; ++i) gt[i] = t_gt.apply(model.cloud.positions[i]);
  double acc = 0.0;
  for (const Vec3& p : model.cloud.positions) {
    const Vec3 e = t_est.apply(p);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& g : gt) best = std::min(best, (e - g).squaredNorm());
    acc += std::sqrt(best);
  }
  return acc / static_cast<double>(n);
}

double add_auc(const std::vector<double>& distances, double diameter,
               double max_frac) {
  if (distances.empty())
    fail(ErrorKind::InvalidArgument, "AUC needs at least one distance");
  if (!(diameter > 0.0) || !(max_frac > 0.0))
    fail(ErrorKind::InvalidArgument, "AUC needs a positive threshold");
  const double tau = max_frac * diameter;
  double acc = 0.0;
  for (const double d : distances) acc += std::max(0.0, tau - d);
  return acc / (tau * static_cast<double>(distances.size()));
}

RigidTransform random_rigid_transform(Rng& rng, double translation_range) {
  // uniform rotation via the subgroup-algorithm quaternion construction
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(two_pi * u3),
                             a * std::sin(two_pi * u2),
                             a * std::cos(two_pi * u2),
                             b * std::sin(two_pi * u3));
  RigidTransform t;
  t.rotation = q.toRotationMatrix();
  t.translation = Vec3(rng.uniform(-translation_range, translation_range),
                       rng.uniform(-translation_range, translation_range),
                       rng.uniform(-translation_range, translation_range));
  return t;
}

double rotation_error_deg(const Mat3& a, const Mat3& b) {
  const double c = ((a * b.transpose()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

ExperimentReport run_experiment(const std::vector<ObjectModel>& objects,
                                const std::vector<KeypointMethod>& methods,
                                const ExperimentConfig& cfg) {
  if (objects.empty() || methods.empty())
    fail(ErrorKind::InvalidArgument,
         "experiment needs >= 1 object and >= 1 method");
  if (cfg.trials < 1)
    fail(ErrorKind::InvalidArgument, "experiment needs >= 1 trial");
  for (const KeypointMethod& m : methods) {
    const std::size_t expected = m.shared ? 1 : objects.size();
    if (m.per_object.size() != expected)
      fail(ErrorKind::InvalidArgument,
           "method '" + m.name + "' carries " +
               std::to_string(m.per_object.size()) +
               " keypoint sets, expected " + std::to_string(expected));
    for (const KeypointSet& k : m.per_object) k.validate();
  }

  ExperimentReport report;
  const std::size_t n_noise = cfg.noise_levels.size();
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const KeypointMethod& method = methods[mi];
    for (std::size_t ni = 0; ni < n_noise; ++ni) {
      const double noise_std = cfg.noise_levels[ni];
      std::vector<double> add_vals, ratio_vals, rot_vals;
      std::size_t failures = 0, total = 0;

      for (std::size_t oi = 0; oi < objects.size(); ++oi) {
        const ObjectModel& object = objects[oi];
        const KeypointSet& normalized_kps =
            method.shared ? method.per_object[0] : method.per_object[oi];
        const KeypointSet model_kps =
            denormalize_keypoints(normalized_kps, object);
        // vote-space noise: normalized units scaled to the object for the
        // distance-valued schemes, direction jitter left unscaled
        const double unit_scale =
            cfg.scheme == VoteScheme::Vector ? 1.0 : object.diameter;

        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
          const std::uint64_t stream =
              ((mi * n_noise + ni) * objects.size() + oi) * cfg.trials + trial;
          Rng rng(Rng::derive(cfg.seed, stream));

          const RigidTransform pose =
              random_rigid_transform(rng, cfg.translation_range);
          const PointCloud scene = apply_transform(object.cloud, pose);
          KeypointSet scene_gt;
          scene_gt.coords.reserve(model_kps.n_k());
          for (const Vec3& k : model_kps.coords)
            scene_gt.coords.push_back(pose.apply(k));

          TrialRecord rec;
          rec.method = method.name;
          rec.object = object.id;
          rec.noise_std = noise_std;
          rec.trial = trial;
          ++total;
          try {
            const VoteField exact = compute_votes(scene, scene_gt, cfg.scheme);
            VoteNoiseModel noise;
            noise.gaussian_std = noise_std * unit_scale;
            noise.outlier_rate = cfg.outlier_rate;
            noise.outlier_spread = cfg.outlier_spread * unit_scale;
            noise.seed = rng.next_u64();
            const VoteField noisy = perturb_votes(exact, noise);
            const KeypointSet recovered = recover_keypoints(scene, noisy);

            double kerr = 0.0;
            for (std::size_t j = 0; j < recovered.n_k(); ++j)
              kerr += (recovered.coords[j] - scene_gt.coords[j]).norm();
            rec.keypoint_err = kerr / static_cast<double>(recovered.n_k());

            const PoseEstimate est = horn_align(model_kps, recovered);
            rec.add = add_distance(object, est.transform, pose, cfg.symmetric);
            rec.add_ratio = rec.add / object.diameter;
            rec.rot_err_deg =
                rotation_error_deg(est.transform.rotation, pose.rotation);
            rec.trans_err = (est.transform.translation - pose.translation).norm();

            add_vals.push_back(rec.add);
            ratio_vals.push_back(rec.add_ratio);
            rot_vals.push_back(rec.rot_err_deg);
          } catch (const Error&) {
            rec.failed = true;
            ++failures;
            rec.add = rec.add_ratio = rec.rot_err_deg = rec.trans_err =
                rec.keypoint_err = std::numeric_limits<double>::quiet_NaN();
          }
          report.records.push_back(std::move(rec));
        }
      }

      MethodAggregate agg;
      agg.method = method.name;
      agg.noise_std = noise_std;
      agg.trials = total;
      agg.failures = failures;
      if (!add_vals.empty()) {
        double sa = 0.0, sr = 0.0;
        std::size_t hits = 0;
        for (std::size_t t = 0; t < add_vals.size(); ++t) {
          sa += add_vals[t];
          sr += rot_vals[t];
          if (ratio_vals[t] <= 0.1) ++hits;
        }
        agg.mean_add = sa / static_cast<double>(add_vals.size());
        agg.mean_rot_err_deg = sr / static_cast<double>(rot_vals.size());
        agg.accuracy = static_cast<double>(hits) /
                       static_cast<double>(add_vals.size());
        agg.auc = add_auc(ratio_vals, 1.0, 0.1);
      }
      report.aggregates.push_back(std::move(agg));
    }
  }
  return report;
}

}  // namespace keyopt
