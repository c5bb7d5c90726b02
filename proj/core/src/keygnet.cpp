#include "keyopt/keygnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "keyopt/errors.hpp"
#include "keyopt/rng.hpp"
#include "keyopt/tape.hpp"

namespace keyopt {
namespace {

constexpr double kSlope = 0.01;
constexpr double kNormEps = 1e-12;
constexpr double kOutScale = 0.75;

struct Layout {
  std::size_t f, h, nk;
  std::size_t w1, b1, g1, o1, w2, b2, g2, o2, w3, b3, total;
};

Layout layout_for(const EncoderConfig& a) {
  Layout L;
  L.f = a.use_color ? 6 : 3;
  L.h = a.hidden;
  L.nk = a.n_keypoints;
  std::size_t off = 0;
  L.w1 = off; off += L.h * 2 * L.f;
  L.b1 = off; off += L.h;
  L.g1 = off; off += L.h;
  L.o1 = off; off += L.h;
  L.w2 = off; off += L.h * 2 * L.h;
  L.b2 = off; off += L.h;
  L.g2 = off; off += L.h;
  L.o2 = off; off += L.h;
  L.w3 = off; off += 3 * L.nk * L.h;
  L.b3 = off; off += 3 * L.nk;
  L.total = off;
  return L;
}

// Brute-force nearest neighbors over arbitrary-dimension rows; returns lists
// ordered by (distance, index), self excluded.
std::vector<std::vector<std::size_t>> knn_rows(
    const std::vector<std::vector<double>>& rows, std::size_t k) {
  const std::size_t n = rows.size();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        const double d = rows[i][c] - rows[j][c];
        d2 += d * d;
      }
      cand.emplace_back(d2, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(k),
                      cand.end());
    out[i].reserve(k);
    for (std::size_t t = 0; t < k; ++t) out[i].push_back(cand[t].second);
  }
  return out;
}

// Max aggregation iterates neighbors in ascending index order, so equal
// values resolve to the lowest neighbor index.
std::vector<std::vector<std::size_t>> ascending(
    std::vector<std::vector<std::size_t>> lists) {
  for (auto& l : lists) std::sort(l.begin(), l.end());
  return lists;
}

template <class S>
void layer_norm(const std::vector<S>& p, std::size_t g_off, std::size_t o_off,
                std::vector<S>& h) {
  using namespace ad;
  const double inv_n = 1.0 / static_cast<double>(h.size());
  S mean = vsum(std::span<const S>(h)) * inv_n;
  for (auto& x : h) x = x - mean;
  S sigma = sqrtv(vsumsq(std::span<const S>(h), inv_n) + kNormEps);
  S inv = recip(sigma);
  for (std::size_t c = 0; c < h.size(); ++c)
    h[c] = h[c] * inv * p[g_off + c] + p[o_off + c];
}

template <class S>
std::vector<std::vector<S>> edge_conv(
    const std::vector<S>& p, std::size_t w_off, std::size_t b_off,
    std::size_t g_off, std::size_t o_off, std::size_t h_dim,
    const std::vector<std::vector<S>>& feats,
    const std::vector<std::vector<std::size_t>>& nbrs) {
  using namespace ad;
  const std::size_t n = feats.size();
  const std::size_t fin = feats[0].size();
  std::vector<std::vector<S>> out(n);
  std::vector<S> edge(2 * fin);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<S>& acc = out[i];
    acc.reserve(h_dim);
    bool first = true;
    for (const std::size_t j : nbrs[i]) {
      for (std::size_t c = 0; c < fin; ++c) {
        edge[c] = feats[i][c];
        edge[fin + c] = feats[j][c] - feats[i][c];
      }
      for (std::size_t u = 0; u < h_dim; ++u) {
        S a = vdot(std::span<const S>(p.data() + w_off + u * 2 * fin, 2 * fin),
                   std::span<const S>(edge)) +
              p[b_off + u];
        a = leaky(a, kSlope);
        if (first)
          acc.push_back(a);
        else
          acc[u] = maxv(acc[u], a);
      }
      first = false;
    }
    layer_norm(p, g_off, o_off, acc);
  }
  return out;
}

template <class S>
struct ForwardOut {
  std::vector<std::vector<S>> layer1, layer2;
  std::vector<S> pooled;
  std::vector<S> head;  // 3 * n_keypoints, already bounded
};

template <class S, class MakeConst>
ForwardOut<S> forward_core(const Layout& L, const EncoderConfig& arch,
                           const std::vector<S>& p, const PointCloud& cloud,
                           MakeConst make_const) {
  using namespace ad;
  const std::size_t n = cloud.size();
  const KnnGraph spatial = build_knn_graph(cloud, arch.k);

  std::vector<std::vector<S>> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    feats[i].reserve(L.f);
    for (int d = 0; d < 3; ++d) feats[i].push_back(make_const(cloud.positions[i][d]));
    if (arch.use_color)
      for (int d = 0; d < 3; ++d) feats[i].push_back(make_const(cloud.colors[i][d]));
  }

  ForwardOut<S> out;
  out.layer1 = edge_conv(p, L.w1, L.b1, L.g1, L.o1, L.h, feats,
                         ascending(spatial.neighbors));

  // dynamic graph: neighbors recomputed in feature space, selection treated
  // as constant for differentiation
  std::vector<std::vector<double>> rows(n, std::vector<double>(L.h));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < L.h; ++c) rows[i][c] = value(out.layer1[i][c]);
  out.layer2 = edge_conv(p, L.w2, L.b2, L.g2, L.o2, L.h, out.layer1,
                         ascending(knn_rows(rows, arch.k)));

  out.pooled = out.layer2[0];
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t c = 0; c < L.h; ++c)
      out.pooled[c] = maxv(out.pooled[c], out.layer2[i][c]);

  out.head.reserve(3 * L.nk);
  for (std::size_t t = 0; t < 3 * L.nk; ++t) {
    S y = vdot(std::span<const S>(p.data() + L.w3 + t * L.h, L.h),
               std::span<const S>(out.pooled)) +
          p[L.b3 + t];
    out.head.push_back(tanhv(y) * kOutScale);
  }
  return out;
}

KeypointSet keypoints_from_head(const std::vector<double>& head) {
  KeypointSet k;
  k.coords.resize(head.size() / 3);
  for (std::size_t j = 0; j < k.coords.size(); ++j)
    k.coords[j] = Vec3(head[3 * j], head[3 * j + 1], head[3 * j + 2]);
  return k;
}

// Combined loss recorded on the tape: exact pairwise W1 between scalarized
// vote channels plus the dispersion term. Mirrors combined_loss for one
// object with the ExactW1 similarity.
ad::TVar loss_on_tape(ad::Tape& tape, const std::vector<ad::TVar>& head,
                      const ObjectModel& object, double alpha, double beta,
                      VoteScheme scheme, const std::vector<Vec3>& projections,
                      double gamma) {
  using namespace ad;
  const std::size_t nk = head.size() / 3;
  const PointCloud& cloud = object.cloud;
  const std::size_t ns = cloud.size();

  const std::size_t n_channels = scheme == VoteScheme::Radial
                                     ? 1
                                     : projections.size();
  // channels[j * n_channels + c][i]
  std::vector<std::vector<TVar>> channels(nk * n_channels);
  for (std::size_t j = 0; j < nk; ++j) {
    const TVar kx = head[3 * j], ky = head[3 * j + 1], kz = head[3 * j + 2];
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec3& pt = cloud.positions[i];
      const TVar dx = kx - pt.x(), dy = ky - pt.y(), dz = kz - pt.z();
      switch (scheme) {
        case VoteScheme::Radial: {
          TVar r = sqrtv(dx * dx + dy * dy + dz * dz);
          channels[j * n_channels].push_back(r);
          break;
        }
        case VoteScheme::Offset: {
          for (std::size_t c = 0; c < n_channels; ++c) {
            const Vec3& d = projections[c];
            channels[j * n_channels + c].push_back(dx * d.x() + dy * d.y() +
                                                   dz * d.z());
          }
          break;
        }
        case VoteScheme::Vector: {
          TVar r = sqrtv(dx * dx + dy * dy + dz * dz);
          TVar inv = recip(r);
          for (std::size_t c = 0; c < n_channels; ++c) {
            const Vec3& d = projections[c];
            channels[j * n_channels + c].push_back(
                (dx * d.x() + dy * d.y() + dz * d.z()) * inv);
          }
          break;
        }
      }
    }
  }

  std::vector<std::size_t> order_a(ns), order_b(ns);
  std::vector<TVar> diffs(ns);
  std::vector<TVar> pair_terms;
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = i + 1; j < nk; ++j) {
      for (std::size_t c = 0; c < n_channels; ++c) {
        const auto& a = channels[i * n_channels + c];
        const auto& b = channels[j * n_channels + c];
        auto argsort = [&](const std::vector<TVar>& xs,
                           std::vector<std::size_t>& idx) {
          std::iota(idx.begin(), idx.end(), std::size_t{0});
          std::stable_sort(idx.begin(), idx.end(),
                           [&](std::size_t x, std::size_t y) {
                             return value(xs[x]) < value(xs[y]);
                           });
        };
        argsort(a, order_a);
        argsort(b, order_b);
        for (std::size_t t = 0; t < ns; ++t)
          diffs[t] = absv(a[order_a[t]] - b[order_b[t]]);
        pair_terms.push_back(
            vsum(std::span<const TVar>(diffs)) /
            static_cast<double>(ns * n_channels));
      }
    }

  TVar sim = pair_terms.empty() ? tape.constant(0.0)
                                : vsum(std::span<const TVar>(pair_terms));

  std::vector<TVar> disp_terms;
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = i + 1; j < nk; ++j) {
      TVar ddx = head[3 * i] - head[3 * j];
      TVar ddy = head[3 * i + 1] - head[3 * j + 1];
      TVar ddz = head[3 * i + 2] - head[3 * j + 2];
      TVar d = sqrtv(ddx * ddx + ddy * ddy + ddz * ddz);
      disp_terms.push_back(expv(d * -gamma));
    }
  TVar dis = disp_terms.empty() ? tape.constant(0.0)
                                : vsum(std::span<const TVar>(disp_terms));

  return sim * alpha + dis * beta;
}

}  // namespace

KnnGraph build_knn_graph(const PointCloud& cloud, std::size_t k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "neighbor count must be >= 1");
  if (k >= cloud.size())
    fail(ErrorKind::InvalidArgument,
         "neighbor count " + std::to_string(k) + " needs a cloud larger than " +
             std::to_string(k) + " points");
  std::vector<std::vector<double>> rows(cloud.size(), std::vector<double>(3));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (int d = 0; d < 3; ++d) rows[i][d] = cloud.positions[i][d];
  KnnGraph g;
  g.k = k;
  g.neighbors = knn_rows(rows, k);
  return g;
}

std::size_t GraphEncoder::param_count(const EncoderConfig& arch) {
  return layout_for(arch).total;
}

GraphEncoder GraphEncoder::random_init(const EncoderConfig& arch,
                                       std::uint64_t seed) {
  const Layout L = layout_for(arch);
  GraphEncoder enc;
  enc.arch = arch;
  enc.params.assign(L.total, 0.0);
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t count, double std) {
    for (std::size_t i = 0; i < count; ++i)
      enc.params[off + i] = rng.normal() * std;
  };
  fill(L.w1, L.h * 2 * L.f, 1.0 / std::sqrt(2.0 * static_cast<double>(L.f)));
  fill(L.w2, L.h * 2 * L.h, 1.0 / std::sqrt(2.0 * static_cast<double>(L.h)));
  fill(L.w3, 3 * L.nk * L.h, 1.0 / std::sqrt(static_cast<double>(L.h)));
  for (std::size_t i = 0; i < L.h; ++i) {
    enc.params[L.g1 + i] = 1.0;
    enc.params[L.g2 + i] = 1.0;
  }
  return enc;
}

KeypointSet GraphEncoder::forward(const PointCloud& cloud) const {
  const Layout L = layout_for(arch);
  auto out = forward_core<double>(L, arch, params, cloud,
                                  [](double v) { return v; });
  return keypoints_from_head(out.head);
}

EncoderTrace encoder_forward_trace(const GraphEncoder& enc,
                                   const PointCloud& cloud) {
  const Layout L = layout_for(enc.arch);
  auto out = forward_core<double>(L, enc.arch, enc.params, cloud,
                                  [](double v) { return v; });
  EncoderTrace trace;
  trace.layer1 = std::move(out.layer1);
  trace.layer2 = std::move(out.layer2);
  trace.pooled = std::move(out.pooled);
  trace.output = keypoints_from_head(out.head);
  return trace;
}

double encoder_learning_rate(const EncoderTrainConfig& cfg, std::size_t epoch) {
  // one multiplication per completed decay period; unlike pow this keeps
  // the decimal anchors (1e-3, 1e-4, 1e-5, ...) exact for decay 0.1
  double lr = cfg.lr0;
  for (std::size_t i = 0; i < epoch / cfg.decay_every; ++i) lr *= cfg.lr_decay;
  return lr;
}

std::pair<double, std::vector<double>> encoder_loss_gradient(
    const GraphEncoder& enc, const ObjectModel& object, double alpha,
    double beta, const EncoderTrainConfig& cfg) {
  if (cfg.similarity != SimilarityKind::ExactW1)
    fail(ErrorKind::InvalidArgument,
         "encoder training differentiates the exact-W1 similarity only");
  const Layout L = layout_for(enc.arch);
  ad::Tape tape;
  std::vector<ad::TVar> p(L.total);
  for (std::size_t i = 0; i < L.total; ++i) p[i] = tape.leaf(enc.params[i]);
  auto out = forward_core<ad::TVar>(
      L, enc.arch, p, object.cloud,
      [&](double v) { return tape.constant(v); });
  ad::TVar loss = loss_on_tape(tape, out.head, object, alpha, beta, cfg.scheme,
                               cfg.projections, cfg.gamma);
  const std::vector<double> adj = tape.gradient(loss);
  std::vector<double> grad(L.total);
  for (std::size_t i = 0; i < L.total; ++i) grad[i] = adj[p[i].idx];
  return {ad::value(loss), std::move(grad)};
}

EncoderTraining train_encoder(const std::vector<ObjectModel>& objects,
                              const EncoderConfig& arch,
                              const EncoderTrainConfig& cfg) {
  if (objects.empty())
    fail(ErrorKind::InvalidArgument, "encoder training needs >= 1 object");
  EncoderTraining out;
  out.encoder = GraphEncoder::random_init(arch, Rng::derive(cfg.seed, 0));
  out.loss_trace.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto [alpha, beta] = weight_schedule(epoch, cfg.schedule_swap);
    const double lr = encoder_learning_rate(cfg, epoch);
    double epoch_loss = 0.0;
    for (const ObjectModel& object : objects) {
      auto [lv, grad] = encoder_loss_gradient(out.encoder, object, alpha, beta,
                                              cfg);
      if (!std::isfinite(lv))
        fail(ErrorKind::NonFiniteValue,
             "encoder loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += lv;
      for (std::size_t i = 0; i < grad.size(); ++i)
        out.encoder.params[i] -= lr * grad[i];
    }
    out.loss_trace.push_back(epoch_loss / static_cast<double>(objects.size()));
  }
  return out;
}

}  // namespace keyopt
