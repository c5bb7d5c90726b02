#include "keyopt/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "keyopt/critic.hpp"
#include "keyopt/distances.hpp"
#include "keyopt/errors.hpp"
#include "keyopt/rng.hpp"

namespace keyopt {
namespace {

std::vector<std::size_t> stable_order(const std::vector<double>& xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  return idx;
}

double critic_difference(const CriticModel& m, const std::vector<double>& a,
                         const std::vector<double>& b) {
  double sa = 0.0, sb = 0.0;
  for (const double x : a) sa += m.forward(x);
  for (const double x : b) sb += m.forward(x);
  return sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
}

// One pairwise similarity value between two scalar sample sets.
double similarity_value(const LossConfig& cfg, const std::vector<double>& a,
                        const std::vector<double>& b, std::uint64_t stream) {
  switch (cfg.similarity) {
    case SimilarityKind::ExactW1:
      return wasserstein1_exact(a, b);
    case SimilarityKind::Critic: {
      const std::uint64_t seed = Rng::derive(cfg.seed, stream);
      CriticTraining tr = train_critic(a, b, cfg.critic_steps, cfg.critic_lr,
                                       cfg.critic_lambda, seed);
      return critic_difference(tr.model, a, b);
    }
    case SimilarityKind::KL:
    case SimilarityKind::JS:
    case SimilarityKind::CE: {
      double lo = std::min(*std::min_element(a.begin(), a.end()),
                           *std::min_element(b.begin(), b.end()));
      double hi = std::max(*std::max_element(a.begin(), a.end()),
                           *std::max_element(b.begin(), b.end()));
      if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
      }
      const Histogram ha = build_histogram(a, cfg.bins, lo, hi);
      const Histogram hb = build_histogram(b, cfg.bins, lo, hi);
      const DivergenceKind kind = cfg.similarity == SimilarityKind::KL
                                      ? DivergenceKind::KullbackLeibler
                                      : (cfg.similarity == SimilarityKind::JS
                                             ? DivergenceKind::JensenShannon
                                             : DivergenceKind::CrossEntropy);
      return divergence(ha, hb, kind);
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown similarity kind");
}

// Per-sample gradient of the scalarized vote with respect to the keypoint.
// For Offset votes this is the projection direction, constant per channel.
Vec3 sample_gradient(VoteScheme scheme, const Vec3& keypoint, const Vec3& point,
                     const Vec3& direction) {
  const Vec3 diff = keypoint - point;
  const double r = diff.norm();
  switch (scheme) {
    case VoteScheme::Radial:
      if (r < 1e-12) return Vec3::Zero();
      return diff / r;
    case VoteScheme::Offset:
      return direction;
    case VoteScheme::Vector: {
      const Vec3 v = diff / r;
      return (direction - v.dot(direction) * v) / r;
    }
  }
  return Vec3::Zero();
}

}  // namespace

const char* similarity_name(SimilarityKind kind) {
  switch (kind) {
    case SimilarityKind::ExactW1:
      return "exact_w1";
    case SimilarityKind::Critic:
      return "critic";
    case SimilarityKind::KL:
      return "kl";
    case SimilarityKind::JS:
      return "js";
    case SimilarityKind::CE:
      return "ce";
  }
  return "unknown";
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0))
    fail(ErrorKind::ConfigInvalid, "loss weights must lie in [0,1]");
  if (std::abs(alpha + beta - 1.0) > 1e-12)
    fail(ErrorKind::ConfigInvalid, "loss weights must sum to 1");
  if (!(gamma > 0.0))
    fail(ErrorKind::ConfigInvalid, "dispersion decay must be positive");
  if (bins < 1) fail(ErrorKind::ConfigInvalid, "histogram bins must be >= 1");
  if (scheme != VoteScheme::Radial && projections.empty())
    fail(ErrorKind::ConfigInvalid,
         "vector-valued votes need at least one projection direction");
  if (similarity == SimilarityKind::Critic) {
    if (critic_steps < 1)
      fail(ErrorKind::ConfigInvalid, "critic similarity needs >= 1 step");
    if (!(critic_lr > 0.0))
      fail(ErrorKind::ConfigInvalid, "critic learning rate must be positive");
    if (critic_lambda < 0.0)
      fail(ErrorKind::ConfigInvalid, "gradient penalty weight must be >= 0");
  }
}

double LossReport::similarity_sum() const {
  return std::accumulate(wass_pairs.begin(), wass_pairs.end(), 0.0);
}

double LossReport::dispersion_sum() const {
  return std::accumulate(dis_pairs.begin(), dis_pairs.end(), 0.0);
}

std::size_t pair_count(std::size_t n_keypoints) {
  return n_keypoints * (n_keypoints - 1) / 2;
}

std::pair<std::size_t, std::size_t> pair_from_index(std::size_t n_keypoints,
                                                    std::size_t pair) {
  for (std::size_t i = 0; i + 1 < n_keypoints; ++i) {
    const std::size_t in_row = n_keypoints - 1 - i;
    if (pair < in_row) return {i, i + 1 + pair};
    pair -= in_row;
  }
  fail(ErrorKind::InvalidArgument, "pair index out of range");
}

std::pair<double, std::vector<double>> dispersion_loss(const KeypointSet& k,
                                                       double gamma) {
  if (!(gamma > 0.0))
    fail(ErrorKind::InvalidArgument, "dispersion decay must be positive");
  const std::size_t n = k.n_k();
  std::vector<double> pairs;
  pairs.reserve(pair_count(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-gamma * (k.coords[i] - k.coords[j]).norm());
      pairs.push_back(v);
      total += v;
    }
  return {total, std::move(pairs)};
}

LossReport combined_loss(const KeypointSet& k,
                         const std::vector<ObjectModel>& objects,
                         const LossConfig& config) {
  config.validate();
  if (objects.empty())
    fail(ErrorKind::InvalidArgument, "combined loss needs at least one object");

  LossReport report;
  auto [dis_total, dis_pairs] = dispersion_loss(k, config.gamma);
  report.dis_pairs = std::move(dis_pairs);

  const std::size_t n = k.n_k();
  const std::size_t n_pairs = pair_count(n);
  report.wass_pairs.assign(n_pairs, 0.0);
  report.per_object_similarity.reserve(objects.size());

  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    const VoteField field = compute_votes(objects[oi].cloud, k, config.scheme);
    const ScalarChannels ch = scalar_channels(field, config.projections);
    double object_sum = 0.0;
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        double acc = 0.0;
        for (std::size_t c = 0; c < ch.n_channels; ++c) {
          const std::uint64_t stream = (oi * n_pairs + p) * ch.n_channels + c + 1;
          acc += similarity_value(config, ch.channel(i, c), ch.channel(j, c),
                                  stream);
        }
        const double val = acc / static_cast<double>(ch.n_channels);
        report.wass_pairs[p] += val;
        object_sum += val;
      }
    report.per_object_similarity.push_back(object_sum);
  }
  for (double& w : report.wass_pairs) w /= static_cast<double>(objects.size());

  report.total = config.alpha * report.similarity_sum() +
                 config.beta * report.dispersion_sum();
  return report;
}

std::pair<double, double> weight_schedule(std::size_t epoch,
                                          std::size_t swap_epoch) {
  return epoch < swap_epoch ? std::pair{0.7, 0.3} : std::pair{0.3, 0.7};
}

std::vector<Vec3> loss_gradient(const KeypointSet& k,
                                const std::vector<ObjectModel>& objects,
                                const LossConfig& config) {
  config.validate();
  k.validate();
  if (objects.empty())
    fail(ErrorKind::InvalidArgument, "loss gradient needs at least one object");
  if (config.similarity != SimilarityKind::ExactW1 &&
      config.similarity != SimilarityKind::Critic)
    fail(ErrorKind::InvalidArgument,
         "no analytic gradient for binned divergence similarities");

  const std::size_t n = k.n_k();
  std::vector<Vec3> grad(n, Vec3::Zero());

  // dispersion term: each pair pulls its endpoints together with weight
  // -gamma * exp(-gamma d); the minus sign makes the loss push them apart
  if (config.beta != 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec3 diff = k.coords[i] - k.coords[j];
        const double d = diff.norm();
        const Vec3 g =
            (-config.gamma * std::exp(-config.gamma * d) / d) * diff;
        grad[i] += config.beta * g;
        grad[j] -= config.beta * g;
      }
  }

  if (config.alpha == 0.0) return grad;

  const std::size_t n_pairs = pair_count(n);
  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    const PointCloud& cloud = objects[oi].cloud;
    const VoteField field = compute_votes(cloud, k, config.scheme);
    const ScalarChannels ch = scalar_channels(field, config.projections);
    const std::size_t n_s = cloud.size();
    const double w =
        config.alpha / static_cast<double>(objects.size() * ch.n_channels);

    // sorted orders per keypoint and channel, stable for deterministic ties
    std::vector<std::vector<std::size_t>> orders(n * ch.n_channels);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < ch.n_channels; ++c)
        orders[j * ch.n_channels + c] = stable_order(ch.channel(j, c));

    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        for (std::size_t c = 0; c < ch.n_channels; ++c) {
          const std::vector<double>& a = ch.channel(i, c);
          const std::vector<double>& b = ch.channel(j, c);
          const std::vector<std::size_t>& oa = orders[i * ch.n_channels + c];
          const std::vector<std::size_t>& ob = orders[j * ch.n_channels + c];
          const Vec3 dir = config.scheme == VoteScheme::Radial
                               ? Vec3::Zero()
                               : config.projections[c];
          if (config.similarity == SimilarityKind::ExactW1) {
            const double scale = w / static_cast<double>(n_s);
            for (std::size_t t = 0; t < n_s; ++t) {
              const double av = a[oa[t]], bv = b[ob[t]];
              if (av == bv) continue;
              const double sign = av > bv ? 1.0 : -1.0;
              grad[i] += scale * sign *
                         sample_gradient(config.scheme, k.coords[i],
                                         cloud.positions[oa[t]], dir);
              grad[j] -= scale * sign *
                         sample_gradient(config.scheme, k.coords[j],
                                         cloud.positions[ob[t]], dir);
            }
          } else {
            // critic similarity: train, freeze, differentiate the critic
            // difference through its input gradient
            const std::uint64_t stream =
                (oi * n_pairs + p) * ch.n_channels + c + 1;
            const std::uint64_t seed = Rng::derive(config.seed, stream);
            CriticTraining tr = train_critic(a, b, config.critic_steps,
                                             config.critic_lr,
                                             config.critic_lambda, seed);
            const double scale = w / static_cast<double>(n_s);
            for (std::size_t t = 0; t < n_s; ++t) {
              const double da = tr.model.forward_with_input_grad(a[t]).second;
              const double db = tr.model.forward_with_input_grad(b[t]).second;
              grad[i] += scale * da *
                         sample_gradient(config.scheme, k.coords[i],
                                         cloud.positions[t], dir);
              grad[j] -= scale * db *
                         sample_gradient(config.scheme, k.coords[j],
                                         cloud.positions[t], dir);
            }
          }
        }
      }
  }
  return grad;
}

}  // namespace keyopt
